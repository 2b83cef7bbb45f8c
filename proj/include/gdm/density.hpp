#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdm/geometry.hpp"
#include "gdm/rng.hpp"

namespace gdm {

enum class DensityKind { uniform, cosine, gaussian, nodal };

/**
 * Nonnegative initial plant density on an interval [lower, upper], with
 * total mass `mass`:
 *   uniform   mass / L
 *   cosine    mass / L * (1 + amplitude cos(mode pi s)),  s = (x - lower) / L
 *   gaussian  exp(-(x - center)^2 / (2 width^2)), scaled to the mass on [lower, upper]
 *   nodal     piecewise-linear through equally spaced `values`, scaled to the mass
 */
struct InitialDensity {
  DensityKind kind = DensityKind::cosine;
  double lower = 0.0;
  double upper = 1.0;
  double mass = 1.0;
  double amplitude = 0.5;
  int mode = 1;
  double center = 0.5;
  double width = 0.1;
  std::vector<double> values;

  double length() const { return upper - lower; }

  void check() const {
    if (!(upper > lower)) throw std::invalid_argument("density: interval needs lower < upper");
    if (!(mass >= 0.0) || !std::isfinite(mass)) throw std::invalid_argument("density: mass must be nonnegative");
    switch (kind) {
      case DensityKind::uniform: break;
      case DensityKind::cosine:
        if (!(std::abs(amplitude) <= 1.0)) throw std::invalid_argument("density: cosine amplitude must lie in [-1, 1]");
        if (mode < 0) throw std::invalid_argument("density: cosine mode must be nonnegative");
        break;
      case DensityKind::gaussian:
        if (!(width > 0.0)) throw std::invalid_argument("density: gaussian width must be positive");
        break;
      case DensityKind::nodal:
        if (values.size() < 2) throw std::invalid_argument("density: nodal form needs at least two values");
        for (double v : values) {
          if (!(v >= 0.0)) throw std::invalid_argument("density: nodal values must be nonnegative");
        }
        break;
    }
  }

  /// Unnormalized shape; `operator()` rescales it to the requested mass.
  double shape(double x) const {
    const double s = (x - lower) / length();
    switch (kind) {
      case DensityKind::uniform: return 1.0;
      case DensityKind::cosine: return 1.0 + amplitude * std::cos(mode * std::numbers::pi * s);
      case DensityKind::gaussian: {
        const double z = (x - center) / width;
        return std::exp(-0.5 * z * z);
      }
      case DensityKind::nodal: {
        const double u = std::clamp(s, 0.0, 1.0) * static_cast<double>(values.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(u), values.size() - 2);
        const double w = u - static_cast<double>(i);
        return (1.0 - w) * values[i] + w * values[i + 1];
      }
    }
    return 0.0;
  }

  double shape_mass() const {
    const double L = length();
    switch (kind) {
      case DensityKind::uniform: return L;
      case DensityKind::cosine:
        if (mode == 0) return L * (1.0 + amplitude);
        return L;  // the cosine term integrates to zero for mode >= 1
      case DensityKind::gaussian: {
        const double r = std::sqrt(2.0) * width;
        return 0.5 * std::sqrt(std::numbers::pi) * r * (std::erf((upper - center) / r) - std::erf((lower - center) / r));
      }
      case DensityKind::nodal: {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) s += 0.5 * (values[i] + values[i + 1]);
        return s * L / static_cast<double>(values.size() - 1);
      }
    }
    return 1.0;
  }

  double operator()(double x) const {
    if (x < lower || x > upper) return 0.0;
    const double m = shape_mass();
    return m > 0.0 ? mass * shape(x) / m : 0.0;
  }

  double shape_max() const {
    switch (kind) {
      case DensityKind::uniform: return 1.0;
      case DensityKind::cosine: return 1.0 + std::abs(amplitude);
      case DensityKind::gaussian: return 1.0;
      case DensityKind::nodal: return *std::max_element(values.begin(), values.end());
    }
    return 1.0;
  }

  /// One draw from the normalized density by rejection against its maximum.
  double sample(RngStream& rng) const {
    const double top = shape_max();
    if (!(top > 0.0)) throw std::invalid_argument("density: cannot sample a zero density");
    for (;;) {
      const double x = lower + length() * rng.uniform();
      if (rng.uniform() * top < shape(x)) return x;
    }
  }

  std::vector<double> tabulate(std::size_t n) const {
    std::vector<double> v(n);
    const double h = length() / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = (*this)(i + 1 == n ? upper : lower + h * static_cast<double>(i));
    return v;
  }
};

inline std::vector<Point> sample_points(const InitialDensity& d, std::size_t count, RngStream& rng) {
  std::vector<Point> out(count);
  for (auto& p : out) p = Point{d.sample(rng), 0.0};
  return out;
}

}  // namespace gdm
