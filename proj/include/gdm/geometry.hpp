#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdm {

/// Maximum supported spatial dimension. Points in d=1 use only the first axis.
inline constexpr int kMaxDim = 2;

using Point = std::array<double, kMaxDim>;

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

enum class DomainKind { box, all_space };
enum class Boundary { reflect, kill, none };

/**
 * Spatial domain: either an axis-aligned box [lower, upper] or all of R^d.
 *
 * Invariants: lower[i] < upper[i] for each axis of a box, and
 * boundary == none exactly when kind == all_space.
 */
struct Domain {
  int dimension = 2;
  DomainKind kind = DomainKind::box;
  Point lower{0.0, 0.0};
  Point upper{1.0, 1.0};
  Boundary boundary = Boundary::reflect;

  static Domain box(int dim, Point lo, Point hi, Boundary bc) {
    return Domain{dim, DomainKind::box, lo, hi, bc};
  }
  static Domain interval(double lo, double hi, Boundary bc) {
    return Domain{1, DomainKind::box, {lo, 0.0}, {hi, 0.0}, bc};
  }
  static Domain all_space(int dim) {
    return Domain{dim, DomainKind::all_space, {0.0, 0.0}, {0.0, 0.0}, Boundary::none};
  }

  bool is_box() const { return kind == DomainKind::box; }

  bool contains(const Point& p) const {
    if (!is_box()) return true;
    for (int i = 0; i < dimension; ++i) {
      if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
    }
    return true;
  }

  double width(int axis) const { return upper[axis] - lower[axis]; }

  /// Euclidean diameter of the box; infinite for all-space.
  double diameter() const {
    if (!is_box()) return INFINITY;
    double s = 0.0;
    for (int i = 0; i < dimension; ++i) s += width(i) * width(i);
    return std::sqrt(s);
  }

  double volume() const {
    if (!is_box()) return INFINITY;
    double v = 1.0;
    for (int i = 0; i < dimension; ++i) v *= width(i);
    return v;
  }

  Point center() const {
    Point c{0.0, 0.0};
    if (is_box()) {
      for (int i = 0; i < dimension; ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    }
    return c;
  }
};

/// Fold a coordinate into [lo, hi] by repeated mirror reflection across the faces.
inline double fold_coordinate(double v, double lo, double hi) {
  if (v >= lo && v <= hi) return v;
  const double len = hi - lo;
  double r = std::fmod(v - lo, 2.0 * len);
  if (r < 0.0) r += 2.0 * len;
  if (r > len) r = 2.0 * len - r;
  return lo + r;
}

/**
 * Normal reflection into a box, realized by coordinatewise folding.
 * Points already inside are returned unchanged.
 */
inline Point reflect_into(const Domain& domain, const Point& p) {
  if (!domain.is_box()) throw std::invalid_argument("reflect_into requires a box domain");
  Point out = p;
  for (int i = 0; i < domain.dimension; ++i) {
    if (!std::isfinite(p[i])) throw std::domain_error("reflect_into: non-finite coordinate");
    out[i] = fold_coordinate(p[i], domain.lower[i], domain.upper[i]);
  }
  return out;
}

inline std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::reflect: return "reflect";
    case Boundary::kill: return "kill";
    case Boundary::none: return "none";
  }
  return "?";
}

}  // namespace gdm
