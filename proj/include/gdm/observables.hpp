#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gdm/geometry.hpp"

namespace gdm {

/// Population sizes N_p(t), N_s(t) along a trajectory; measures carry weight 1/K.
struct MomentSeries {
  std::vector<double> times;
  std::vector<std::size_t> plants;
  std::vector<std::size_t> seeds;
  double weight = 1.0;

  void push(double t, std::size_t np, std::size_t ns) {
    if (!times.empty() && !(t > times.back())) return;
    times.push_back(t);
    plants.push_back(np);
    seeds.push_back(ns);
  }
  std::size_t size() const { return times.size(); }
};

struct ExpectedCounts {
  double plants = 0.0;
  double seeds = 0.0;
};

/**
 * Expected plant and seed counts for constant maturation rate 1 started from
 * a single plant and no seeds. They solve
 *     P' = S,   S' = mu P - S,   P(0) = 1, S(0) = 0,
 * whose eigenvalues are (-1 +- sqrt(4 mu + 1)) / 2. With q = sqrt(4 mu + 1):
 *     E N_p = ((q + 1) e^{r+ t} + (q - 1) e^{r- t}) / (2q)
 *     E N_s = mu (e^{r+ t} - e^{r- t}) / q
 * The growing mode carries (q + 1); with (q - 1) there instead, E N_p'(0)
 * would be -1 rather than E N_s(0) = 0.
 */
inline ExpectedCounts closed_form_moments(double mu, double t) {
  if (!(mu >= 0.0)) throw std::domain_error("closed_form_moments: mu must be nonnegative");
  if (t == 0.0) return {1.0, 0.0};
  const double q = std::sqrt(4.0 * mu + 1.0);
  const double rp = 0.5 * (q - 1.0);
  const double rm = -0.5 * (q + 1.0);
  const double ep = std::exp(rp * t);
  const double em = std::exp(rm * t);
  return {((q + 1.0) * ep + (q - 1.0) * em) / (2.0 * q), mu * (ep - em) / q};
}

/// Time derivatives of closed_form_moments.
inline ExpectedCounts closed_form_rates(double mu, double t) {
  if (!(mu >= 0.0)) throw std::domain_error("closed_form_rates: mu must be nonnegative");
  const double q = std::sqrt(4.0 * mu + 1.0);
  const double rp = 0.5 * (q - 1.0);
  const double rm = -0.5 * (q + 1.0);
  const double ep = std::exp(rp * t);
  const double em = std::exp(rm * t);
  return {((q + 1.0) * rp * ep + (q - 1.0) * rm * em) / (2.0 * q), mu * (rp * ep - rm * em) / q};
}

/// Classical RK4 on the same 2x2 system; the last step is shortened to land on t.
inline ExpectedCounts ode_moment_oracle(double mu, double t, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("ode_moment_oracle: dt must be positive");
  double p = 1.0, s = 0.0;
  auto rhs = [mu](double pp, double ss) { return std::pair{ss, mu * pp - ss}; };
  double tau = 0.0;
  while (tau < t) {
    const double h = std::min(dt, t - tau);
    const auto [k1p, k1s] = rhs(p, s);
    const auto [k2p, k2s] = rhs(p + 0.5 * h * k1p, s + 0.5 * h * k1s);
    const auto [k3p, k3s] = rhs(p + 0.5 * h * k2p, s + 0.5 * h * k2s);
    const auto [k4p, k4s] = rhs(p + h * k3p, s + h * k3s);
    p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    s += h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
    tau = (h == dt) ? tau + h : t;
  }
  return {p, s};
}

// ---------------------------------------------------------------------------
// Kernel density intensity maps.

/// Regular 2D lattice of evaluation nodes: lower + i * spacing.
struct GridSpec2D {
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> spacing{1.0, 1.0};
  std::array<std::size_t, 2> count{2, 2};

  static GridSpec2D covering(const Domain& box, std::size_t nx, std::size_t ny) {
    GridSpec2D g;
    g.lower = {box.lower[0], box.lower[1]};
    g.count = {nx, ny};
    g.spacing = {box.width(0) / static_cast<double>(nx - 1), box.width(1) / static_cast<double>(ny - 1)};
    return g;
  }
  double node(int axis, std::size_t i) const { return lower[axis] + spacing[axis] * static_cast<double>(i); }
  double cell_area() const { return spacing[0] * spacing[1]; }
};

struct KdeGrid {
  GridSpec2D grid;
  std::vector<double> values;  // values[ix * ny + iy], points per unit area
  std::array<double, 2> bandwidth{0.0, 0.0};

  double at(std::size_t ix, std::size_t iy) const { return values[ix * grid.count[1] + iy]; }
};

/**
 * Gaussian product-kernel intensity estimate. Bandwidth per axis follows
 * Scott's rule: n^{-1/(d+4)} times the sample standard deviation. The
 * density estimate is scaled by n so the map integrates to the point count.
 */
inline KdeGrid kde_intensity(std::span<const Point> points, const GridSpec2D& grid) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("kde_intensity: need at least two points");
  std::array<double, 2> mean{0.0, 0.0}, sd{0.0, 0.0};
  for (const auto& p : points) {
    mean[0] += p[0];
    mean[1] += p[1];
  }
  for (int a = 0; a < 2; ++a) mean[a] /= static_cast<double>(n);
  for (const auto& p : points) {
    for (int a = 0; a < 2; ++a) sd[a] += (p[a] - mean[a]) * (p[a] - mean[a]);
  }
  for (int a = 0; a < 2; ++a) sd[a] = std::sqrt(sd[a] / static_cast<double>(n - 1));
  if (sd[0] == 0.0 && sd[1] == 0.0) throw std::invalid_argument("kde_intensity: all points identical");
  // A degenerate axis borrows the other axis' spread.
  for (int a = 0; a < 2; ++a) {
    if (sd[a] == 0.0) sd[a] = sd[1 - a];
  }
  const double factor = std::pow(static_cast<double>(n), -1.0 / 6.0);

  KdeGrid out;
  out.grid = grid;
  out.bandwidth = {factor * sd[0], factor * sd[1]};
  const std::size_t nx = grid.count[0], ny = grid.count[1];
  out.values.assign(nx * ny, 0.0);

  std::vector<double> wx(nx), wy(ny);
  const double norm = 1.0 / (2.0 * std::numbers::pi * out.bandwidth[0] * out.bandwidth[1]);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double z = (grid.node(0, i) - p[0]) / out.bandwidth[0];
      wx[i] = std::exp(-0.5 * z * z);
    }
    for (std::size_t j = 0; j < ny; ++j) {
      const double z = (grid.node(1, j) - p[1]) / out.bandwidth[1];
      wy[j] = std::exp(-0.5 * z * z);
    }
    for (std::size_t i = 0; i < nx; ++i) {
      if (wx[i] == 0.0) continue;
      double* row = out.values.data() + i * ny;
      const double a = wx[i] * norm;
      for (std::size_t j = 0; j < ny; ++j) row[j] += a * wy[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Histogram densities of empirical measures.

/// Cell-centred histogram lattice over [lower, upper] in d = 1 or 2.
struct HistogramGrid {
  int dimension = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{1.0, 1.0};
  std::array<std::size_t, 2> bins{10, 1};

  static HistogramGrid over(const Domain& box, std::size_t nx, std::size_t ny = 1) {
    HistogramGrid g;
    g.dimension = box.dimension;
    g.lower = {box.lower[0], box.dimension == 2 ? box.lower[1] : 0.0};
    g.upper = {box.upper[0], box.dimension == 2 ? box.upper[1] : 1.0};
    g.bins = {nx, box.dimension == 2 ? ny : 1};
    return g;
  }

  std::size_t cells() const { return bins[0] * bins[1]; }
  double width(int axis) const { return (upper[axis] - lower[axis]) / static_cast<double>(bins[axis]); }
  double cell_area() const { return dimension == 2 ? width(0) * width(1) : width(0); }

  bool operator==(const HistogramGrid& o) const {
    return dimension == o.dimension && lower == o.lower && upper == o.upper && bins == o.bins;
  }
};

struct HistogramDensity {
  HistogramGrid grid;
  std::vector<double> values;  // values[ix * bins[1] + iy]
};

/**
 * Piecewise-constant density of (1/K) * sum of Dirac masses: each cell holds
 * count / (K * cell area). Points on the upper faces fall in the last cell;
 * points outside the grid are dropped.
 */
inline HistogramDensity histogram_measure(std::span<const Point> points, const HistogramGrid& grid, double K) {
  HistogramDensity h{grid, std::vector<double>(grid.cells(), 0.0)};
  const double inc = 1.0 / (K * grid.cell_area());
  for (const auto& p : points) {
    std::array<std::size_t, 2> idx{0, 0};
    bool inside = true;
    for (int a = 0; a < grid.dimension; ++a) {
      if (p[a] < grid.lower[a] || p[a] > grid.upper[a]) {
        inside = false;
        break;
      }
      const auto k = static_cast<std::size_t>((p[a] - grid.lower[a]) / grid.width(a));
      idx[a] = std::min(k, grid.bins[a] - 1);
    }
    if (inside) h.values[idx[0] * grid.bins[1] + idx[1]] += inc;
  }
  return h;
}

inline double l1_distance(const HistogramDensity& a, const HistogramDensity& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size())
    throw std::invalid_argument("l1_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.cell_area();
}

}  // namespace gdm
