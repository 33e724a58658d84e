#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
};

/// Shared handle to a dense row-major array. Copies alias the same storage;
/// use clone() for an independent copy. Rank-4 tensors are (N, C, H, W).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T(1)); }
  static Tensor scalar(T value) { return Tensor(Shape{1}, value); }

  bool defined() const noexcept { return static_cast<bool>(s_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data().size(); }

  std::span<const T> data() const;
  // Writable view. Reserved for parameter initialisation, optimizer updates
  // and running statistics; op outputs are treated as immutable.
  std::span<T> mutable_data();

  T item() const;
  T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  bool requires_grad() const;
  // Enabling allocates a zero gradient; disabling releases it.
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  Tensor clone() const;
  // Copy with a new shape of equal element count; not recorded on any tape.
  Tensor reshape(Shape shape) const;

  const void* id() const noexcept { return s_.get(); }
  TensorStorage<T>& storage() const;

 private:
  std::shared_ptr<TensorStorage<T>> s_;
};

/// Records differentiable operations in execution order so that backward()
/// can replay them in reverse.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Record {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::vector<Tensor<T>> inputs,
              Tensor<T> output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every record's backward rule once in
  // reverse order. Throws ShapeError if loss is not a single element.
  void backward(const Tensor<T>& loss);

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  void clear() noexcept { records_.clear(); }

  // Observer invoked with each record's index as backward visits it.
  void set_visit_hook(std::function<void(std::size_t)> hook) {
    visit_hook_ = std::move(hook);
  }

 private:
  std::vector<Record> records_;
  std::function<void(std::size_t)> visit_hook_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dpg
