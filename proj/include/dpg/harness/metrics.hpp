#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpg {

/// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> class_names);
  // Throws std::invalid_argument unless counts is square and matches the names.
  ConfusionMatrix(std::vector<std::string> class_names,
                  std::vector<std::vector<std::uint64_t>> counts);

  void add(int truth, int predicted);  // throws std::out_of_range

  std::size_t classes() const noexcept { return names_.size(); }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;
  std::vector<std::uint64_t> row_sums() const;
  // trace / total; throws std::domain_error when empty.
  double accuracy() const;
  const std::vector<std::string>& class_names() const noexcept { return names_; }

  // Header row "true\\pred,<names...>", then one row per true class.
  std::string to_csv() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

/// Two decimals, as in "58.68".
std::string format_percent(double accuracy);

/// Mean and sample standard deviation of the k best accuracies.
struct TopKSummary {
  std::size_t k = 0;
  double mean = 0;
  double stddev = 0;
  std::vector<double> selected;  // descending
};

// Throws std::invalid_argument if k is 0 or exceeds the number of runs.
TopKSummary aggregate_top_k(std::vector<double> accuracies, std::size_t k);

}  // namespace dpg
