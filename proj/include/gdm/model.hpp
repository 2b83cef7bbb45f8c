#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gdm/geometry.hpp"

namespace gdm {

// ---------------------------------------------------------------------------
// Populations

/// Plant positions. Plants never move once established.
struct PlantPopulation {
  std::vector<Point> positions;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

/// A seed remembers where its parent plant stands (origin) and where it is now.
struct Seed {
  Point origin{};
  Point position{};
};

struct SeedPopulation {
  std::vector<Seed> seeds;

  std::size_t size() const { return seeds.size(); }
  bool empty() const { return seeds.empty(); }
};

// ---------------------------------------------------------------------------
// Counting distribution q of the group size.

enum class CountingKind { negative_binomial, poisson, fixed };

/**
 * Law of the number of seeds in a released group.
 *
 * The negative binomial is parameterized by mean and variance; its size
 * parameter is s = mean^2 / (variance - mean).
 */
struct CountingDistribution {
  CountingKind kind = CountingKind::negative_binomial;
  double mu1 = 1.0;      // mean
  double mu2 = 25.0;     // variance (negative binomial only)
  std::uint64_t n = 1;   // fixed size

  static CountingDistribution negative_binomial(double mean, double variance) {
    return {CountingKind::negative_binomial, mean, variance, 0};
  }
  static CountingDistribution poisson(double mean) { return {CountingKind::poisson, mean, mean, 0}; }
  static CountingDistribution fixed(std::uint64_t size) {
    return {CountingKind::fixed, static_cast<double>(size), 0.0, size};
  }

  double mean() const {
    return kind == CountingKind::fixed ? static_cast<double>(n) : mu1;
  }

  double variance() const {
    switch (kind) {
      case CountingKind::negative_binomial: return mu2;
      case CountingKind::poisson: return mu1;
      case CountingKind::fixed: return 0.0;
    }
    return 0.0;
  }

  /// Negative-binomial size parameter.
  double size() const { return mu1 * mu1 / (mu2 - mu1); }

  double pmf(std::uint64_t k) const {
    const double kd = static_cast<double>(k);
    switch (kind) {
      case CountingKind::negative_binomial: {
        const double s = size();
        const double p = mu1 / mu2;
        const double logq = std::lgamma(kd + s) - std::lgamma(s) - std::lgamma(kd + 1.0) +
                            s * std::log(p) + kd * std::log1p(-p);
        return std::exp(logq);
      }
      case CountingKind::poisson:
        if (mu1 == 0.0) return k == 0 ? 1.0 : 0.0;
        return std::exp(kd * std::log(mu1) - mu1 - std::lgamma(kd + 1.0));
      case CountingKind::fixed: return k == n ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------------------
// Dispersal kernel parameters (evaluation and sampling live in kernels.hpp).

enum class KernelKind { exponential, gaussian, power_law };
enum class KernelNormalization { renormalize, raw };

struct KernelSpec {
  KernelKind kind = KernelKind::exponential;
  double beta = 5.0;
  double a = 4.0;  // power-law exponent
};

// ---------------------------------------------------------------------------
// Maturation rate lambda(x, y), x = origin, y = current position.

enum class RateKind { constant, distance_proportional, tabulated };

struct MaturationRate {
  RateKind kind = RateKind::constant;
  double value = 1.0;  // constant level, or lambda0 for distance-proportional

  // Tabulated (d = 1): values[ix * y_nodes.size() + iy], bilinear, clamped
  // outside the node range. An empty x_nodes means lambda depends on y only
  // and values holds a single row.
  std::vector<double> x_nodes;
  std::vector<double> y_nodes;
  std::vector<double> values;

  static MaturationRate constant(double v) { return {RateKind::constant, v, {}, {}, {}}; }
  static MaturationRate distance_proportional(double lambda0) {
    return {RateKind::distance_proportional, lambda0, {}, {}, {}};
  }
  static MaturationRate tabulated(std::vector<double> xs, std::vector<double> ys,
                                  std::vector<double> vals) {
    return {RateKind::tabulated, 0.0, std::move(xs), std::move(ys), std::move(vals)};
  }
  static MaturationRate position_only(std::vector<double> ys, std::vector<double> vals) {
    return {RateKind::tabulated, 0.0, {}, std::move(ys), std::move(vals)};
  }

  bool depends_on_origin() const {
    switch (kind) {
      case RateKind::constant: return false;
      case RateKind::distance_proportional: return value != 0.0;
      case RateKind::tabulated: return !x_nodes.empty();
    }
    return true;
  }

  double operator()(const Point& x, const Point& y, int dim) const {
    switch (kind) {
      case RateKind::constant: return value;
      case RateKind::distance_proportional: return value * distance(x, y, dim);
      case RateKind::tabulated: return interpolate(x[0], y[0]);
    }
    return 0.0;
  }

  /// sup over the closed domain (infinite if unbounded).
  double bound(const Domain& domain) const {
    switch (kind) {
      case RateKind::constant: return value;
      case RateKind::distance_proportional:
        return value == 0.0 ? 0.0 : value * domain.diameter();
      case RateKind::tabulated:
        return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    }
    return INFINITY;
  }

 private:
  static void bracket(const std::vector<double>& nodes, double v, std::size_t& i0, double& w) {
    if (nodes.size() == 1 || v <= nodes.front()) {
      i0 = 0;
      w = 0.0;
      return;
    }
    if (v >= nodes.back()) {
      i0 = nodes.size() - 2;
      w = 1.0;
      return;
    }
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    i0 = static_cast<std::size_t>(it - nodes.begin()) - 1;
    w = (v - nodes[i0]) / (nodes[i0 + 1] - nodes[i0]);
  }

  double interpolate(double x, double y) const {
    const std::size_t ny = y_nodes.size();
    std::size_t jy = 0;
    double wy = 0.0;
    bracket(y_nodes, y, jy, wy);
    const std::size_t jy1 = ny > 1 ? jy + 1 : jy;
    auto row = [&](std::size_t ix) {
      return (1.0 - wy) * values[ix * ny + jy] + wy * values[ix * ny + jy1];
    };
    if (x_nodes.empty()) return row(0);
    std::size_t ix = 0;
    double wx = 0.0;
    bracket(x_nodes, x, ix, wx);
    const std::size_t ix1 = x_nodes.size() > 1 ? ix + 1 : ix;
    return (1.0 - wx) * row(ix) + wx * row(ix1);
  }
};

// ---------------------------------------------------------------------------
// Seed diffusion: dY = a(Y) dt + sigma(Y) dW.

struct DiffusionSpec {
  double sigma = 1.0;       // constant sigma (fast path)
  Point drift{0.0, 0.0};    // constant drift (fast path)
  std::function<Point(const Point&)> drift_fn;   // overrides `drift` when set
  std::function<double(const Point&)> sigma_fn;  // overrides `sigma` when set

  static DiffusionSpec brownian(double sigma) { return DiffusionSpec{sigma, {0.0, 0.0}, {}, {}}; }

  bool is_constant() const { return !drift_fn && !sigma_fn; }
  bool driftless() const { return !drift_fn && drift[0] == 0.0 && drift[1] == 0.0; }

  Point drift_at(const Point& y) const { return drift_fn ? drift_fn(y) : drift; }
  double sigma_at(const Point& y) const { return sigma_fn ? sigma_fn(y) : sigma; }

  /// sigma^2 / 2 for the constant-coefficient case.
  double diffusivity() const { return 0.5 * sigma * sigma; }
};

// ---------------------------------------------------------------------------

struct ModelParams {
  Domain domain = Domain::box(2, {-100.0, -100.0}, {100.0, 100.0}, Boundary::reflect);
  CountingDistribution counting = CountingDistribution::negative_binomial(1.0, 25.0);
  KernelSpec kernel{};
  MaturationRate rate = MaturationRate::distance_proportional(0.05);
  DiffusionSpec diffusion = DiffusionSpec::brownian(std::sqrt(5.0));
  double release_rate = 1.0;  // group releases per plant per unit time
  KernelNormalization kernel_normalization = KernelNormalization::renormalize;
};

/// The grouped-dispersal example on [-100,100]^2; kernels calibrated to mean displacement 10.
inline ModelParams example_params(KernelKind kernel = KernelKind::exponential) {
  ModelParams p;
  p.kernel.kind = kernel;
  switch (kernel) {
    case KernelKind::exponential: p.kernel.beta = 5.0; break;
    case KernelKind::gaussian: p.kernel.beta = 20.0 / std::sqrt(M_PI); break;
    case KernelKind::power_law:
      p.kernel.beta = 5.0;
      p.kernel.a = 4.0;
      break;
  }
  return p;
}

struct Violation {
  std::string item;     // which requirement is violated
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  bool mentions(const std::string& text) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) {
      return v.message.find(text) != std::string::npos || v.item.find(text) != std::string::npos;
    });
  }

  std::string summary() const {
    std::string s;
    for (const auto& v : violations) s += v.item + ": " + v.message + "\n";
    return s;
  }
};

namespace detail {
inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
}  // namespace detail

/**
 * Checks the domain invariants and every part of the well-posedness
 * assumption on the model parameters:
 *   1. the counting law has finite first and second moments,
 *   2. the dispersal kernel is a valid probability density,
 *   3. the maturation rate is nonnegative and uniformly bounded.
 * Returns all violations rather than stopping at the first.
 */
inline ValidationResult validate(const ModelParams& p) {
  ValidationResult r;
  auto fail = [&](std::string item, std::string msg) {
    r.violations.push_back({std::move(item), std::move(msg)});
  };

  const Domain& dom = p.domain;
  if (dom.dimension < 1 || dom.dimension > kMaxDim) {
    fail("domain", "dimension must be 1 or 2");
  } else if (dom.is_box()) {
    for (int i = 0; i < dom.dimension; ++i) {
      if (!(std::isfinite(dom.lower[i]) && std::isfinite(dom.upper[i]) && dom.lower[i] < dom.upper[i]))
        fail("domain", "box requires lower < upper on every axis");
    }
    if (dom.boundary == Boundary::none) fail("domain", "a box needs a reflect or kill boundary");
  } else if (dom.boundary != Boundary::none) {
    fail("domain", "all-space domain must use boundary 'none'");
  }

  const std::string a1 = "counting moments";
  const CountingDistribution& q = p.counting;
  switch (q.kind) {
    case CountingKind::negative_binomial:
      if (!(std::isfinite(q.mu1) && q.mu1 > 0.0)) fail(a1, "counting mean must be positive and finite");
      if (!std::isfinite(q.mu2)) fail(a1, "counting variance must be finite");
      else if (!(q.mu2 > q.mu1)) fail(a1, "counting variance must exceed mean");
      break;
    case CountingKind::poisson:
      if (!detail::finite_nonneg(q.mu1)) fail(a1, "poisson mean must be nonnegative and finite");
      break;
    case CountingKind::fixed: break;
  }

  const std::string a2 = "dispersal kernel";
  if (!(std::isfinite(p.kernel.beta) && p.kernel.beta > 0.0)) fail(a2, "kernel beta must be positive");
  if (p.kernel.kind == KernelKind::power_law) {
    if (!(std::isfinite(p.kernel.a) && p.kernel.a > 2.0)) fail(a2, "power-law exponent a must exceed 2");
  }

  const std::string a3 = "bounded rate";
  const MaturationRate& lam = p.rate;
  switch (lam.kind) {
    case RateKind::constant:
    case RateKind::distance_proportional:
      if (!std::isfinite(lam.value)) fail(a3, "rate parameter must be finite");
      else if (lam.value < 0.0) fail(a3, "λ must be nonnegative");
      break;
    case RateKind::tabulated: {
      if (dom.dimension != 1) fail(a3, "tabulated rates are supported in d = 1 only");
      const std::size_t rows = lam.x_nodes.empty() ? 1 : lam.x_nodes.size();
      if (lam.y_nodes.empty() || lam.values.size() != rows * lam.y_nodes.size())
        fail(a3, "tabulated rate has inconsistent node/value sizes");
      if (!std::is_sorted(lam.x_nodes.begin(), lam.x_nodes.end()) ||
          !std::is_sorted(lam.y_nodes.begin(), lam.y_nodes.end()))
        fail(a3, "tabulated rate nodes must be increasing");
      for (double v : lam.values) {
        if (!std::isfinite(v)) {
          fail(a3, "tabulated rate entries must be finite");
          break;
        }
        if (v < 0.0) {
          fail(a3, "λ must be nonnegative");
          break;
        }
      }
      break;
    }
  }
  if (r.ok() && !std::isfinite(lam.bound(dom))) fail(a3, "rate is unbounded on this domain");

  if (p.diffusion.is_constant() && !detail::finite_nonneg(p.diffusion.sigma))
    fail("diffusion", "sigma must be nonnegative");
  if (!std::isfinite(p.diffusion.drift[0]) || !std::isfinite(p.diffusion.drift[1]))
    fail("diffusion", "drift must be finite");
  if (!detail::finite_nonneg(p.release_rate)) fail("release rate", "release rate must be nonnegative");
  return r;
}

}  // namespace gdm
