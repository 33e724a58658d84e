#include "dpg/sardata/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "dpg/tensor/param_store.hpp"

namespace dpg::sar {

namespace {

// Mean intensities (|S|^2) per region and polarisation.
constexpr double kSeaVV = 0.02;
constexpr double kSeaVH = 0.004;
constexpr double kShipVV = 1.0;
constexpr double kShipVH = 0.15;

void check_class(int class_id, int num_classes) {
  if (num_classes < 1 || num_classes > kMaxSynthClasses)
    throw std::invalid_argument("synth_chip: class count " + std::to_string(num_classes) +
                                " outside [1, " + std::to_string(kMaxSynthClasses) + "]");
  if (class_id < 0 || class_id >= num_classes)
    throw std::invalid_argument("synth_chip: class_id " + std::to_string(class_id) +
                                " outside [0, " + std::to_string(num_classes) + ")");
}

}  // namespace

ShipGeometry synth_geometry(int class_id, std::uint64_t seed, std::size_t size,
                            int num_classes) {
  check_class(class_id, num_classes);
  std::mt19937_64 rng(derive_seed(seed, "synth.geometry." + std::to_string(class_id)));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double s = static_cast<double>(size);
  const double frac =
      num_classes == 1 ? 0.4 : 0.16 + 0.56 * class_id / static_cast<double>(num_classes - 1);
  ShipGeometry g;
  g.length = s * frac * (1.0 + 0.06 * u(rng));
  g.width = std::max(2.0, g.length * (0.22 + 0.04 * u(rng)));
  g.angle = std::numbers::pi * 0.5 * (1.0 + u(rng));
  g.center_y = s * (0.5 + 0.08 * u(rng));
  g.center_x = s * (0.5 + 0.08 * u(rng));
  return g;
}

ComplexChipPair synth_chip(int class_id, std::uint64_t seed, std::size_t size, int num_classes) {
  if (size < 4) throw std::invalid_argument("synth_chip: size must be at least 4");
  const auto g = synth_geometry(class_id, seed, size, num_classes);
  std::mt19937_64 rng(derive_seed(seed, "synth.speckle." + std::to_string(class_id)));
  std::normal_distribution<float> n(0.0f, 1.0f);

  ComplexChipPair p;
  p.id = "synth-c" + std::to_string(class_id) + "-s" + std::to_string(seed);
  p.height = p.width = size;
  p.label = class_id;
  p.svh.resize(size * size);
  p.svv.resize(size * size);
  const double ca = std::cos(g.angle), sa = std::sin(g.angle);
  const double a = g.length / 2, b = g.width / 2;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = y + 0.5 - g.center_y, dx = x + 0.5 - g.center_x;
      const double along = dx * ca + dy * sa, across = -dx * sa + dy * ca;
      const bool ship = (along * along) / (a * a) + (across * across) / (b * b) <= 1.0;
      // sqrt(R/2) * (N + iN) has intensity ~ R * Exp(1).
      const auto draw = [&](double r) {
        const float k = static_cast<float>(std::sqrt(r / 2));
        const float re = n(rng), im = n(rng);
        return Complex(k * re, k * im);
      };
      const auto i = y * size + x;
      p.svh[i] = draw(ship ? kShipVH : kSeaVH);
      p.svv[i] = draw(ship ? kShipVV : kSeaVV);
    }
  }
  return p;
}

}  // namespace dpg::sar
