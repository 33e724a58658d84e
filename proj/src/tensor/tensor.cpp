#include "dpg/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "dpg/tensor/errors.hpp"

namespace dpg {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4)
    throw ShapeError("tensor rank must be 1..4, got " +
                     std::to_string(shape.size()));
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (shape[i] == 0)
      throw ShapeError("tensor extent " + std::to_string(i) +
                       " is zero in " + shape_to_string(shape));
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) {
  check_shape(shape);
  s_ = std::make_shared<TensorStorage<T>>();
  s_->data.assign(shape_numel(shape), fill);
  s_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) {
  check_shape(shape);
  if (data.size() != shape_numel(shape))
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  s_ = std::make_shared<TensorStorage<T>>();
  s_->shape = std::move(shape);
  s_->data = std::move(data);
}

template <typename T>
TensorStorage<T>& Tensor<T>::storage() const {
  if (!s_) throw std::logic_error("access to undefined tensor");
  return *s_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return storage().shape;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(s));
  return s[axis];
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  return storage().data;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  return storage().data;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return data()[0];
}

template <typename T>
T Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h,
                std::size_t w) const {
  const auto& s = shape();
  if (s.size() != 4) throw ShapeError("at(n,c,h,w) needs a rank-4 tensor");
  return data()[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return storage().requires_grad;
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  auto& st = storage();
  st.requires_grad = on;
  if (on) {
    if (st.grad.size() != st.data.size()) st.grad.assign(st.data.size(), T(0));
  } else {
    st.grad.clear();
    st.grad.shrink_to_fit();
  }
  return *this;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  const auto& st = storage();
  return st.requires_grad && st.grad.size() == st.data.size();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return storage().grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return storage().grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (has_grad()) std::fill(storage().grad.begin(), storage().grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(shape(), std::vector<T>(data().begin(), data().end()));
  return out;
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != numel())
    throw ShapeError("cannot reshape " + shape_to_string(shape()) + " to " +
                     shape_to_string(new_shape));
  return Tensor(std::move(new_shape),
                std::vector<T>(data().begin(), data().end()));
}

template <typename T>
void Tape<T>::record(std::string_view op, std::vector<Tensor<T>> inputs,
                     Tensor<T> output, BackwardFn backward) {
  records_.push_back(
      Record{std::string(op), std::move(inputs), std::move(output),
             std::move(backward)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward requires a scalar loss, got " +
                     (loss.defined() ? shape_to_string(loss.shape())
                                     : std::string("undefined")));
  // Untracked loss: no recorded op reaches it, every leaf keeps its gradient.
  if (!loss.requires_grad()) return;
  Tensor<T> seed = loss;
  seed.mutable_grad()[0] += T(1);
  for (std::size_t i = records_.size(); i-- > 0;) {
    if (visit_hook_) visit_hook_(i);
    records_[i].backward();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace dpg
