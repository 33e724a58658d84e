#pragma once

#include <cstddef>
#include <cstdint>

#include "dpg/sardata/chip.hpp"

namespace dpg::sar {

inline constexpr int kMaxSynthClasses = 8;

/// Ship outline drawn into a synthetic chip, in pixel units.
struct ShipGeometry {
  double center_y = 0;
  double center_x = 0;
  double length = 0;  // major axis
  double width = 0;   // minor axis
  double angle = 0;   // radians, major axis vs. image x axis
};

/// Geometry sampled for (class_id, seed). Length grows with class_id; width
/// and orientation are nuisance variables.
ShipGeometry synth_geometry(int class_id, std::uint64_t seed, std::size_t size,
                            int num_classes);

/// Deterministic per (class_id, seed, size, num_classes). Sea clutter and
/// ship both carry unit-mean exponential intensity speckle with uniform phase.
/// Throws std::invalid_argument if class_id is outside [0, num_classes) or
/// num_classes is outside [1, kMaxSynthClasses].
ComplexChipPair synth_chip(int class_id, std::uint64_t seed, std::size_t size,
                           int num_classes = 6);

}  // namespace dpg::sar
