#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dpg/tensor/tensor.hpp"

namespace dpg {

/// Shapes of named intermediates in forward order; filled when a non-null
/// trace is passed to a forward call.
struct ForwardTrace {
  std::vector<std::pair<std::string, Shape>> stages;

  void record(std::string name, const Shape& shape) { stages.emplace_back(std::move(name), shape); }

  // Throws std::out_of_range if `name` was never recorded.
  const Shape& at(const std::string& name) const {
    for (const auto& [n, s] : stages)
      if (n == name) return s;
    throw std::out_of_range("no traced stage '" + name + "'");
  }
};

}  // namespace dpg
