#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "gdm/geometry.hpp"
#include "gdm/model.hpp"
#include "gdm/rng.hpp"

namespace gdm {

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Survival function of the dimensionless 2D power-law radius u = r / beta.
inline double power_law_survival_2d(double u, double a) {
  return std::pow(1.0 + u, 1.0 - a) * (1.0 + (a - 1.0) * u);
}

/// Exact quantile of the 2D power-law radius (dimensionless) by bracketed root finding.
inline double power_law_quantile_2d(double p, double a) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return INFINITY;
  const double target = 1.0 - p;
  auto g = [&](double u) { return power_law_survival_2d(u, a) - target; };
  double hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto [lo_r, hi_r] = boost::math::tools::toms748_solve(g, 0.0, hi, tol, iters);
  return 0.5 * (lo_r + hi_r);
}

/**
 * Tabulated inverse CDF of the 2D power-law radius on a uniform probability
 * grid, with monotone cubic (Fritsch-Carlson) interpolation. The first and the
 * last cell, where the quantile has sqrt and power singularities, are solved
 * exactly.
 */
class PowerLawInverseTable {
 public:
  static constexpr std::size_t kNodes = 4096;

  explicit PowerLawInverseTable(double a) : a_(a), u_(kNodes), m_(kNodes) {
    for (std::size_t i = 0; i < kNodes; ++i) u_[i] = power_law_quantile_2d(step() * i, a);
    std::vector<double> delta(kNodes - 1);
    for (std::size_t i = 0; i + 1 < kNodes; ++i) delta[i] = (u_[i + 1] - u_[i]) / step();
    m_[0] = delta[0];
    m_[kNodes - 1] = delta[kNodes - 2];
    for (std::size_t i = 1; i + 1 < kNodes; ++i) {
      m_[i] = (delta[i - 1] * delta[i] <= 0.0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    }
    for (std::size_t i = 0; i + 1 < kNodes; ++i) {
      if (delta[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double al = m_[i] / delta[i];
      const double be = m_[i + 1] / delta[i];
      const double s = al * al + be * be;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[i] = tau * al * delta[i];
        m_[i + 1] = tau * be * delta[i];
      }
    }
  }

  double a() const { return a_; }

  /// Dimensionless quantile u(p), p in [0, 1).
  double quantile(double p) const {
    const double pos = p / step();
    const auto i = static_cast<std::size_t>(pos);
    if (i == 0 || i >= kNodes - 1) return power_law_quantile_2d(p, a_);
    const double t = pos - static_cast<double>(i);
    const double h = step();
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * u_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
           (-2 * t3 + 3 * t2) * u_[i + 1] + (t3 - t2) * h * m_[i + 1];
  }

 private:
  static constexpr double step() { return 1.0 / static_cast<double>(kNodes); }

  double a_;
  std::vector<double> u_;
  std::vector<double> m_;
};

}  // namespace detail

/**
 * An isotropic dispersal kernel D(x, y) = k(|x - y|) in d = 1 or 2.
 *
 * Normalizing constants (raw mode, integrate to one over R^d):
 *   d = 2: exponential  e^{-r/b} / (2 pi b^2)
 *          gaussian     e^{-r^2/b^2} / (pi b^2)
 *          power-law    (a-1)(a-2) / (2 pi b^2) (1 + r/b)^{-a}
 *   d = 1: exponential  e^{-r/b} / (2 b)
 *          gaussian     e^{-r^2/b^2} / (sqrt(pi) b)
 *          power-law    (a-1) / (2 b) (1 + r/b)^{-a}
 * Immutable after construction; sampling takes a caller-owned stream.
 */
class DispersalKernel {
 public:
  DispersalKernel(KernelSpec spec, int dim) : spec_(spec), dim_(dim) {
    if (dim != 1 && dim != 2) throw KernelError("kernels are defined for d = 1 or 2");
    if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) throw KernelError("kernel beta must be positive");
    if (spec.kind == KernelKind::power_law) {
      if (!(spec.a > 2.0)) throw KernelError("power-law exponent a must exceed 2");
      if (dim == 2) table_ = std::make_shared<const detail::PowerLawInverseTable>(spec.a);
    }
  }

  const KernelSpec& spec() const { return spec_; }
  int dimension() const { return dim_; }
  double beta() const { return spec_.beta; }

  /// Raw density as a function of the distance r = |x - y|.
  double radial_density(double r) const {
    const double b = spec_.beta;
    const double a = spec_.a;
    const double u = r / b;
    constexpr double pi = std::numbers::pi;
    if (dim_ == 2) {
      switch (spec_.kind) {
        case KernelKind::exponential: return std::exp(-u) / (2.0 * pi * b * b);
        case KernelKind::gaussian: return std::exp(-u * u) / (pi * b * b);
        case KernelKind::power_law: return (a - 1.0) * (a - 2.0) / (2.0 * pi * b * b) * std::pow(1.0 + u, -a);
      }
    } else {
      switch (spec_.kind) {
        case KernelKind::exponential: return std::exp(-u) / (2.0 * b);
        case KernelKind::gaussian: return std::exp(-u * u) / (std::sqrt(pi) * b);
        case KernelKind::power_law: return (a - 1.0) / (2.0 * b) * std::pow(1.0 + u, -a);
      }
    }
    return 0.0;
  }

  /// CDF of the distance |Y - x| under the raw kernel.
  double radial_cdf(double r) const {
    if (r <= 0.0) return 0.0;
    if (!std::isfinite(r)) return 1.0;
    const double u = r / spec_.beta;
    const double a = spec_.a;
    if (dim_ == 2) {
      switch (spec_.kind) {
        case KernelKind::exponential: return -std::expm1(-u) - u * std::exp(-u);
        case KernelKind::gaussian: return -std::expm1(-u * u);
        case KernelKind::power_law: return 1.0 - detail::power_law_survival_2d(u, a);
      }
    } else {
      switch (spec_.kind) {
        case KernelKind::exponential: return -std::expm1(-u);
        case KernelKind::gaussian: return std::erf(u);
        case KernelKind::power_law: return 1.0 - std::pow(1.0 + u, 1.0 - a);
      }
    }
    return 0.0;
  }

  /// Density of the distance |Y - x| (derivative of radial_cdf).
  double radial_marginal_density(double r) const {
    if (r < 0.0) return 0.0;
    if (dim_ == 2) return 2.0 * std::numbers::pi * r * radial_density(r);
    return 2.0 * radial_density(r);
  }

  /// Closed-form mean of |Y - x|; infinite when it does not exist.
  double mean_displacement() const {
    const double b = spec_.beta;
    const double a = spec_.a;
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    if (dim_ == 2) {
      switch (spec_.kind) {
        case KernelKind::exponential: return 2.0 * b;
        case KernelKind::gaussian: return b * sqrt_pi / 2.0;
        case KernelKind::power_law: return a > 3.0 ? 2.0 * b / (a - 3.0) : INFINITY;
      }
    } else {
      switch (spec_.kind) {
        case KernelKind::exponential: return b;
        case KernelKind::gaussian: return b / sqrt_pi;
        case KernelKind::power_law: return b / (a - 2.0);
      }
    }
    return INFINITY;
  }

  double density(const Point& x, const Point& y) const {
    for (int i = 0; i < dim_; ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw KernelError("eval_density: non-finite input");
    }
    return radial_density(distance(x, y, dim_));
  }

  /**
   * Kernel mass of D(x, .) inside the domain (1 for all-space). In 2D this is
   * (1/2pi) * integral over directions of radial_cdf(distance to the box
   * boundary along that direction), integrated per sector between corners.
   */
  double domain_mass(const Point& x, const Domain& domain) const {
    if (!domain.is_box()) return 1.0;
    if (dim_ == 1) {
      const double right = domain.upper[0] - x[0];
      const double left = x[0] - domain.lower[0];
      auto signed_cdf = [&](double d) { return d >= 0.0 ? 0.5 * radial_cdf(d) : -0.5 * radial_cdf(-d); };
      return signed_cdf(right) + signed_cdf(left);
    }
    const double x0 = x[0], y0 = x[1];
    const double dr = domain.upper[0] - x0, dl = x0 - domain.lower[0];
    const double dt = domain.upper[1] - y0, db = y0 - domain.lower[1];
    if (dr < 0 || dl < 0 || dt < 0 || db < 0) {
      throw KernelError("domain_mass: source point outside the box");
    }
    auto ray = [&](double th) {
      const double c = std::cos(th), s = std::sin(th);
      double r = INFINITY;
      if (c > 0) r = std::min(r, dr / c);
      if (c < 0) r = std::min(r, -dl / c);
      if (s > 0) r = std::min(r, dt / s);
      if (s < 0) r = std::min(r, -db / s);
      return radial_cdf(r);
    };
    std::vector<double> cuts = {0.0,
                                std::atan2(dt, dr),
                                0.5 * std::numbers::pi,
                                std::numbers::pi - std::atan2(dt, dl),
                                std::numbers::pi,
                                std::numbers::pi + std::atan2(db, dl),
                                1.5 * std::numbers::pi,
                                2.0 * std::numbers::pi - std::atan2(db, dr),
                                2.0 * std::numbers::pi};
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0.0) continue;
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(ray, cuts[i], cuts[i + 1], 12, 1e-13);
    }
    return total / (2.0 * std::numbers::pi);
  }

  double density(const Point& x, const Point& y, const Domain& domain, KernelNormalization mode) const {
    const double raw = density(x, y);
    if (mode == KernelNormalization::raw || !domain.is_box()) return raw;
    if (!domain.contains(y)) return 0.0;
    return raw / domain_mass(x, domain);
  }

  /// Distance drawn from the radial marginal.
  double sample_radius(RngStream& rng) const {
    const double b = spec_.beta;
    const double a = spec_.a;
    if (dim_ == 2) {
      switch (spec_.kind) {
        case KernelKind::exponential: return b * (rng.exponential(1.0) + rng.exponential(1.0));
        case KernelKind::gaussian: return b * std::sqrt(rng.exponential(1.0));
        case KernelKind::power_law: return b * table_->quantile(rng.uniform());
      }
    } else {
      switch (spec_.kind) {
        case KernelKind::exponential: return b * rng.exponential(1.0);
        case KernelKind::gaussian: return b * std::abs(rng.normal()) / std::numbers::sqrt2;
        case KernelKind::power_law: return b * (std::pow(rng.uniform_open0(), -1.0 / (a - 1.0)) - 1.0);
      }
    }
    return 0.0;
  }

  /// Displacement vector from the raw kernel (no domain constraint).
  Point sample_offset(RngStream& rng) const {
    const double r = sample_radius(rng);
    if (dim_ == 1) return {rng.uniform() < 0.5 ? -r : r, 0.0};
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(th), r * std::sin(th)};
  }

  /**
   * Barycenter drawn from D(x, .) restricted to the domain, by rejection
   * against the box. Throws once `max_attempts` proposals have all landed
   * outside, which signals a kernel much wider than the domain.
   */
  Point sample(const Point& x, const Domain& domain, RngStream& rng, std::size_t max_attempts = 100000) const {
    for (std::size_t k = 0; k < max_attempts; ++k) {
      const Point off = sample_offset(rng);
      Point y{x[0] + off[0], dim_ == 2 ? x[1] + off[1] : 0.0};
      if (domain.contains(y)) return y;
    }
    throw KernelError("sample_displacement: rejection cap exceeded (kernel/domain mismatch)");
  }

  /// Dimensionless power-law quantile from the inverse table (d = 2 only).
  const detail::PowerLawInverseTable* power_law_table() const { return table_.get(); }

 private:
  KernelSpec spec_;
  int dim_;
  std::shared_ptr<const detail::PowerLawInverseTable> table_;
};

// ---------------------------------------------------------------------------
// Free-function interface.

inline double eval_density(const DispersalKernel& k, const Point& x, const Point& y) { return k.density(x, y); }

inline Point sample_displacement(const DispersalKernel& k, const Point& x, const Domain& domain, RngStream& rng,
                                 std::size_t max_attempts = 100000) {
  return k.sample(x, domain, rng, max_attempts);
}

/**
 * Kernel scale giving a prescribed mean dispersal distance m.
 * d = 2: exponential m/2, gaussian 2m/sqrt(pi), power-law m(a-3)/2 (a > 3).
 * d = 1: exponential m,   gaussian m sqrt(pi),  power-law m(a-2)   (a > 2).
 */
inline double calibrate_beta(KernelKind kind, double mean_displacement, int dim, double a = 4.0) {
  if (!(mean_displacement > 0.0) || !std::isfinite(mean_displacement))
    throw KernelError("calibrate_beta: target mean displacement must be positive");
  if (dim != 1 && dim != 2) throw KernelError("calibrate_beta: d must be 1 or 2");
  const double m = mean_displacement;
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  switch (kind) {
    case KernelKind::exponential: return dim == 2 ? m / 2.0 : m;
    case KernelKind::gaussian: return dim == 2 ? 2.0 * m / sqrt_pi : m * sqrt_pi;
    case KernelKind::power_law:
      if (dim == 2) {
        if (!(a > 3.0)) throw KernelError("calibrate_beta: power-law mean is infinite for a <= 3");
        return m * (a - 3.0) / 2.0;
      }
      if (!(a > 2.0)) throw KernelError("calibrate_beta: power-law mean is infinite for a <= 2");
      return m * (a - 2.0);
  }
  throw KernelError("calibrate_beta: unknown kernel");
}

/// Group size drawn from q. Negative binomial via its gamma-Poisson mixture.
inline std::uint64_t sample_count(const CountingDistribution& q, RngStream& rng) {
  switch (q.kind) {
    case CountingKind::fixed: return q.n;
    case CountingKind::poisson: return rng.poisson(q.mu1);
    case CountingKind::negative_binomial: {
      const double s = q.size();
      const double p = q.mu1 / q.mu2;
      const double intensity = rng.gamma(s, (1.0 - p) / p);
      return rng.poisson(intensity);
    }
  }
  return 0;
}

inline double eval_rate(const MaturationRate& rate, const Point& origin, const Point& position, int dim) {
  return rate(origin, position, dim);
}

}  // namespace gdm
