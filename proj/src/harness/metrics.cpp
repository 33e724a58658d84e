#include "dpg/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace dpg {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {
  if (names_.empty()) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names,
                                 std::vector<std::vector<std::uint64_t>> counts)
    : ConfusionMatrix(std::move(class_names)) {
  if (counts.size() != classes())
    throw std::invalid_argument("confusion matrix: " + std::to_string(counts.size()) +
                                " rows for " + std::to_string(classes()) + " classes");
  for (std::size_t r = 0; r < classes(); ++r) {
    if (counts[r].size() != classes())
      throw std::invalid_argument("confusion matrix: row " + std::to_string(r) + " has " +
                                  std::to_string(counts[r].size()) + " cells");
    std::copy(counts[r].begin(), counts[r].end(), counts_.begin() + r * classes());
  }
}

void ConfusionMatrix::add(int truth, int predicted) {
  const auto k = static_cast<int>(classes());
  if (truth < 0 || truth >= k || predicted < 0 || predicted >= k)
    throw std::out_of_range("confusion matrix: label pair (" + std::to_string(truth) + ", " +
                            std::to_string(predicted) + ") outside " + std::to_string(k) +
                            " classes");
  ++counts_[static_cast<std::size_t>(truth) * classes() + static_cast<std::size_t>(predicted)];
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * classes() + predicted);
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t k = 0; k < classes(); ++k) t += at(k, k);
  return t;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::vector<std::uint64_t> ConfusionMatrix::row_sums() const {
  std::vector<std::uint64_t> r(classes(), 0);
  for (std::size_t i = 0; i < classes(); ++i)
    for (std::size_t j = 0; j < classes(); ++j) r[i] += at(i, j);
  return r;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  if (n == 0) throw std::domain_error("accuracy of an empty confusion matrix");
  return static_cast<double>(trace()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "true\\pred";
  for (const auto& n : names_) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < classes(); ++i) {
    out += names_[i];
    for (std::size_t j = 0; j < classes(); ++j) out += "," + std::to_string(at(i, j));
    out += "\n";
  }
  return out;
}

std::string format_percent(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", accuracy * 100.0);
  return buf;
}

TopKSummary aggregate_top_k(std::vector<double> accuracies, std::size_t k) {
  if (k == 0 || k > accuracies.size())
    throw std::invalid_argument("top-k: k=" + std::to_string(k) + " with " +
                                std::to_string(accuracies.size()) + " runs");
  std::sort(accuracies.begin(), accuracies.end(), std::greater<>());
  TopKSummary s;
  s.k = k;
  s.selected.assign(accuracies.begin(), accuracies.begin() + static_cast<std::ptrdiff_t>(k));
  for (double a : s.selected) s.mean += a;
  s.mean /= static_cast<double>(k);
  if (k > 1) {
    double ss = 0;
    for (double a : s.selected) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(k - 1));
  }
  return s;
}

}  // namespace dpg
