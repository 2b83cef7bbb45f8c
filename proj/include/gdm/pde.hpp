#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gdm/kernels.hpp"
#include "gdm/model.hpp"
#include "gdm/parallel.hpp"

namespace gdm {

class PdeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// dt violates the explicit-reaction stability condition dt * lambda_bar < 1.
class StabilityError : public PdeError {
 public:
  using PdeError::PdeError;
};

enum class BoundaryCondition { neumann, dirichlet };

inline std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::neumann ? "neumann" : "dirichlet"; }

/// Uniform nodes lower + i h, i = 0..n-1, with trapezoid weights.
struct Grid1D {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t n = 65;

  double h() const { return (upper - lower) / static_cast<double>(n - 1); }
  double node(std::size_t i) const { return i + 1 == n ? upper : lower + h() * static_cast<double>(i); }
  double weight(std::size_t i) const { return (i == 0 || i + 1 == n) ? 0.5 * h() : h(); }
  double length() const { return upper - lower; }

  std::vector<double> weights() const {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = weight(i);
    return w;
  }
};

namespace detail {

/**
 * Factored tridiagonal system I - r L for the second-difference operator L
 * (scaled by h^2) with mirror-ghost Neumann or pinned Dirichlet end rows.
 * For r >= 0 the matrix is a strictly diagonally dominant M-matrix, so
 * solves preserve nonnegativity.
 */
class TridiagonalFactor {
 public:
  TridiagonalFactor(std::size_t n, double r, BoundaryCondition bc) : n_(n), bc_(bc) {
    std::vector<double> lo(n, -r), di(n, 1.0 + 2.0 * r), up(n, -r);
    if (bc == BoundaryCondition::neumann) {
      up[0] = -2.0 * r;
      lo[n - 1] = -2.0 * r;
    } else {
      di[0] = 1.0;
      up[0] = 0.0;
      di[n - 1] = 1.0;
      lo[n - 1] = 0.0;
    }
    lo_ = lo;
    cp_.resize(n);
    inv_.resize(n);
    double denom = di[0];
    inv_[0] = 1.0 / denom;
    cp_[0] = up[0] * inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
      denom = di[i] - lo[i] * cp_[i - 1];
      if (!(std::abs(denom) > 0.0)) throw PdeError("singular tridiagonal system");
      inv_[i] = 1.0 / denom;
      cp_[i] = up[i] * inv_[i];
    }
  }

  /// Solves in place on x[0], x[stride], ..., x[(n-1) stride].
  void solve(double* x, std::size_t stride = 1) const {
    if (bc_ == BoundaryCondition::dirichlet) {
      x[0] = 0.0;
      x[(n_ - 1) * stride] = 0.0;
    }
    x[0] *= inv_[0];
    for (std::size_t i = 1; i < n_; ++i) x[i * stride] = (x[i * stride] - lo_[i] * x[(i - 1) * stride]) * inv_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) x[i * stride] -= cp_[i] * x[(i + 1) * stride];
  }

 private:
  std::size_t n_;
  BoundaryCondition bc_;
  std::vector<double> lo_, cp_, inv_;
};

/// out[i] = (L v)[i] / h^2 with the given boundary rows; Dirichlet rows are zero.
inline void apply_laplacian(const double* v, double* out, std::size_t n, double inv_h2, BoundaryCondition bc,
                            std::size_t stride = 1) {
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i] = (v[(i - 1) * stride] - 2.0 * v[i * stride] + v[(i + 1) * stride]) * inv_h2;
  if (bc == BoundaryCondition::neumann) {
    out[0] = 2.0 * (v[stride] - v[0]) * inv_h2;
    out[n - 1] = 2.0 * (v[(n - 2) * stride] - v[(n - 1) * stride]) * inv_h2;
  } else {
    out[0] = 0.0;
    out[n - 1] = 0.0;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full system on X = [lower, upper] (d = 1): f(t, x) and g(t, x, y).
//
//   f_t(x)    = int lambda(z, x) g(z, x) dz
//   g_t(x, y) = kappa g_yy - lambda(x, y) g + mu1 D(x, y) f(x) (+ eps g_xx)
//
// g is stored row-major: g[ix * n + iy], x the origin axis.

struct PdeCoefficients {
  Grid1D grid;
  BoundaryCondition bc = BoundaryCondition::neumann;
  double diffusivity = 0.5;  // kappa; sigma^2 / 2 for the seed diffusion
  double mu1 = 1.0;
  double theta = 1.0;        // 1: backward Euler diffusion, 0.5: Crank-Nicolson
  std::vector<double> lambda;  // lambda[ix * n + iy] = lambda(x_ix, y_iy)
  std::vector<double> D;       // D[ix * n + iy]

  std::size_t n() const { return grid.n; }
  double lambda_bar() const { return lambda.empty() ? 0.0 : *std::max_element(lambda.begin(), lambda.end()); }
};

/**
 * Tabulates lambda and D from model parameters on a 1D grid. With
 * renormalization each D row is scaled so its trapezoid sum over y is 1,
 * which makes the discrete mass balance exact.
 */
inline PdeCoefficients tabulate_coefficients(const ModelParams& params, const Grid1D& grid, BoundaryCondition bc,
                                             double diffusivity, double theta = 1.0) {
  if (grid.n < 3) throw PdeError("grid needs at least 3 nodes");
  if (!(grid.upper > grid.lower)) throw PdeError("grid requires lower < upper");
  const DispersalKernel kernel(params.kernel, 1);
  PdeCoefficients c;
  c.grid = grid;
  c.bc = bc;
  c.diffusivity = diffusivity;
  c.mu1 = params.counting.mean();
  c.theta = theta;
  const std::size_t n = grid.n;
  c.lambda.resize(n * n);
  c.D.resize(n * n);
  const auto w = grid.weights();
  for (std::size_t i = 0; i < n; ++i) {
    const Point x{grid.node(i), 0.0};
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Point y{grid.node(j), 0.0};
      c.lambda[i * n + j] = params.rate(x, y, 1);
      c.D[i * n + j] = kernel.density(x, y);
      mass += w[j] * c.D[i * n + j];
    }
    if (params.kernel_normalization == KernelNormalization::renormalize) {
      for (std::size_t j = 0; j < n; ++j) c.D[i * n + j] /= mass;
    }
  }
  return c;
}

struct PdeState {
  double t = 0.0;
  std::vector<double> f;  // n
  std::vector<double> g;  // n * n
};

inline double trapezoid_sum(const Grid1D& grid, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) s += grid.weight(i) * v[i];
  return s;
}

inline double trapezoid_sum_2d(const Grid1D& grid, const std::vector<double>& v) {
  const std::size_t n = grid.n;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += grid.weight(j) * v[i * n + j];
    s += grid.weight(i) * row;
  }
  return s;
}

class PdeSolver {
 public:
  explicit PdeSolver(PdeCoefficients c, std::size_t threads = 1) : c_(std::move(c)), threads_(threads) {
    const std::size_t n = c_.n();
    if (n < 3) throw PdeError("grid needs at least 3 nodes");
    if (c_.lambda.size() != n * n || c_.D.size() != n * n) throw PdeError("coefficient tables do not match the grid");
    if (!(c_.diffusivity >= 0.0)) throw PdeError("diffusivity must be nonnegative");
    if (!(c_.theta >= 0.0 && c_.theta <= 1.0)) throw PdeError("theta must lie in [0, 1]");
    for (double v : c_.lambda) {
      if (!(v >= 0.0)) throw PdeError("lambda must be nonnegative");
    }
    for (double v : c_.D) {
      if (!(v >= 0.0)) throw PdeError("D must be nonnegative");
    }
    w_ = c_.grid.weights();
  }

  const PdeCoefficients& coefficients() const { return c_; }
  const Grid1D& grid() const { return c_.grid; }
  std::size_t n() const { return c_.n(); }

  PdeState initial_state(std::vector<double> f0) const {
    if (f0.size() != n()) throw PdeError("f0 size does not match the grid");
    return PdeState{0.0, std::move(f0), std::vector<double>(n() * n(), 0.0)};
  }

  void check_dt(double dt) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PdeError("dt must be positive");
    const double lb = c_.lambda_bar();
    if (!(dt * lb < 1.0))
      throw StabilityError("dt * lambda_bar = " + std::to_string(dt * lb) +
                           " violates the stability condition dt * lambda_bar < 1");
  }

  /// q[x] = sum_z w_z lambda(z, x) g(z, x): the maturation flux into plants at x.
  std::vector<double> maturation_flux(const std::vector<double>& g) const {
    const std::size_t n = this->n();
    std::vector<double> q(n, 0.0);
    for (std::size_t z = 0; z < n; ++z) {
      const double wz = w_[z];
      const double* lam = &c_.lambda[z * n];
      const double* gz = &g[z * n];
      for (std::size_t x = 0; x < n; ++x) q[x] += wz * lam[x] * gz[x];
    }
    return q;
  }

  /**
   * One g step with the source driven by `f_src`: per x-row,
   *   (I - theta dt kappa L) g' = (I + (1-theta) dt kappa L) g + dt (-lambda g + mu1 D f_src)
   * followed, for eps > 0, by the x-sweep (I - dt eps L_x) g'' = g'.
   * Reaction and source use old-level values.
   */
  void advance_g(std::vector<double>& g, const std::vector<double>& f_src, double dt, double eps) const {
    const std::size_t n = this->n();
    const double h = c_.grid.h();
    const double inv_h2 = 1.0 / (h * h);
    const double th = c_.theta;
    const detail::TridiagonalFactor Ay(n, th * dt * c_.diffusivity * inv_h2, c_.bc);
    const bool explicit_part = th < 1.0 && c_.diffusivity > 0.0;
    parallel_for(n, threads_, [&](std::size_t ix) {
      double* row = &g[ix * n];
      const double* lam = &c_.lambda[ix * n];
      const double* D = &c_.D[ix * n];
      const double src = dt * c_.mu1 * f_src[ix];
      std::vector<double> lap;
      if (explicit_part) {
        lap.resize(n);
        detail::apply_laplacian(row, lap.data(), n, inv_h2, c_.bc);
      }
      for (std::size_t iy = 0; iy < n; ++iy) {
        double v = row[iy] * (1.0 - dt * lam[iy]) + src * D[iy];
        if (explicit_part) v += (1.0 - th) * dt * c_.diffusivity * lap[iy];
        row[iy] = v;
      }
      Ay.solve(row);
    });
    if (eps > 0.0) {
      // Neumann in x for the viscous regularization.
      const detail::TridiagonalFactor Ax(n, dt * eps * inv_h2, BoundaryCondition::neumann);
      parallel_for(n, threads_, [&](std::size_t iy) { Ax.solve(&g[iy], n); });
    }
  }

  /// Direct scheme: g advanced with f at the old level, then f += dt * flux(g_old).
  PdeState step_direct(const PdeState& s, double dt) const { return step_viscous(s, dt, 0.0); }

  PdeState step_viscous(const PdeState& s, double dt, double eps) const {
    check_dt(dt);
    if (!(eps >= 0.0)) throw PdeError("epsilon must be nonnegative");
    PdeState out;
    out.t = s.t + dt;
    const auto q = maturation_flux(s.g);
    out.f = s.f;
    for (std::size_t i = 0; i < n(); ++i) out.f[i] += dt * q[i];
    out.g = s.g;
    advance_g(out.g, s.f, dt, eps);
    return out;
  }

 private:
  PdeCoefficients c_;
  std::size_t threads_;
  std::vector<double> w_;
};

/// Number of uniform steps reaching T with step at most dt.
inline std::size_t step_count(double T, double dt) {
  if (!(T >= 0.0)) throw PdeError("final time must be nonnegative");
  if (!(dt > 0.0)) throw PdeError("dt must be positive");
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

/// Stored time levels of a solution, for weak residuals and monitors.
struct PdeTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> f;
  std::vector<std::vector<double>> g;

  void push(const PdeState& s) {
    times.push_back(s.t);
    f.push_back(s.f);
    g.push_back(s.g);
  }
};

/**
 * Advances `s` to time T with M = ceil(T/dt) equal steps, calling
 * observer(state, step index) at every level including the first.
 */
inline PdeState integrate(const PdeSolver& solver, PdeState s, double T, double dt, double eps,
                          const std::function<void(const PdeState&, std::size_t)>& observer = {}) {
  const std::size_t M = step_count(T - s.t, dt);
  const double h = M == 0 ? dt : (T - s.t) / static_cast<double>(M);
  const double t0 = s.t;
  if (observer) observer(s, 0);
  for (std::size_t k = 0; k < M; ++k) {
    s = solver.step_viscous(s, h, eps);
    s.t = k + 1 == M ? T : t0 + h * static_cast<double>(k + 1);
    if (observer) observer(s, k + 1);
  }
  return s;
}

/// g solving the frozen-source problem g_t = kappa g_yy - lambda g + mu1 D f0 (+ eps g_xx), g(0) = 0.
inline std::vector<double> frozen_source_g(const PdeSolver& solver, const std::vector<double>& f0, double T, double dt,
                                           double eps) {
  const std::size_t M = step_count(T, dt);
  const double h = M == 0 ? dt : T / static_cast<double>(M);
  solver.check_dt(h);
  std::vector<double> g(solver.n() * solver.n(), 0.0);
  for (std::size_t k = 0; k < M; ++k) solver.advance_g(g, f0, h, eps);
  return g;
}

// ---------------------------------------------------------------------------
// Picard iteration.

struct PicardOptions {
  std::size_t n_max = 100;
  double tol = 1e-10;
  double epsilon = 0.0;
  double monotone_tol = 1e-12;
};

struct PicardResult {
  PdeState final;
  std::size_t iterations = 0;        // f iterates built, counting f_0
  bool converged = false;
  bool monotone = true;
  double min_f_increment = 0.0;      // most negative f_{n+1} - f_n seen
  double min_g_increment = 0.0;      // most negative g_{n+1} - g_n seen
  std::vector<double> sup_differences;  // sup_t ||f_{n+1} - f_n||_2 per iteration
};

class PicardNonConvergence : public PdeError {
 public:
  PicardNonConvergence(const std::string& what, PicardResult r) : PdeError(what), result(std::move(r)) {}
  PicardResult result;
};

/**
 * Monotone Picard sequence. f_0(t) = f0 for all t; given f_n on the time
 * levels, g_{n+1} solves the linear seed problem driven by f_n, and
 * f_{n+1}(t_{k+1}) = f_{n+1}(t_k) + dt * flux(g_{n+1}(t_k)) with f_{n+1}(0) = f0,
 * the time-discrete form of the integral equation. The fixed point is the
 * direct scheme's solution. g_n and g_{n+1} are marched side by side so the
 * nodewise comparison needs no stored g trajectory.
 */
inline PicardResult picard_solve(const PdeSolver& solver, const std::vector<double>& f0, double T, double dt,
                                 const PicardOptions& opt = {}) {
  const std::size_t n = solver.n();
  if (f0.size() != n) throw PdeError("f0 size does not match the grid");
  const std::size_t M = step_count(T, dt);
  const double h = M == 0 ? dt : T / static_cast<double>(M);
  if (M > 0) solver.check_dt(h);
  const Grid1D& grid = solver.grid();

  using Traj = std::vector<std::vector<double>>;
  Traj F_cur(M + 1, f0);
  Traj F_prev;
  PicardResult res;
  res.iterations = 1;
  std::vector<double> g_new, g_old;

  while (true) {
    Traj F_next(M + 1);
    F_next[0] = f0;
    g_new.assign(n * n, 0.0);
    const bool have_prev = !F_prev.empty();
    g_old.assign(n * n, 0.0);
    for (std::size_t k = 0; k < M; ++k) {
      const auto q = solver.maturation_flux(g_new);
      F_next[k + 1] = F_next[k];
      for (std::size_t i = 0; i < n; ++i) F_next[k + 1][i] += h * q[i];
      solver.advance_g(g_new, F_cur[k], h, opt.epsilon);
      if (have_prev) solver.advance_g(g_old, F_prev[k], h, opt.epsilon);
      for (std::size_t i = 0; i < n * n; ++i)
        res.min_g_increment = std::min(res.min_g_increment, g_new[i] - g_old[i]);
    }
    ++res.iterations;
    double sup = 0.0;
    for (std::size_t k = 0; k <= M; ++k) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = F_next[k][i] - F_cur[k][i];
        res.min_f_increment = std::min(res.min_f_increment, d);
        s2 += grid.weight(i) * d * d;
      }
      sup = std::max(sup, std::sqrt(s2));
    }
    res.sup_differences.push_back(sup);
    F_prev = std::move(F_cur);
    F_cur = std::move(F_next);
    if (sup < opt.tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.n_max) break;
  }
  res.monotone = res.min_f_increment >= -opt.monotone_tol && res.min_g_increment >= -opt.monotone_tol;
  res.final = PdeState{T, F_cur[M], g_new};
  if (!res.converged)
    throw PicardNonConvergence("Picard iteration did not converge within " + std::to_string(opt.n_max) + " iterates",
                               res);
  return res;
}

// ---------------------------------------------------------------------------
// Reduced model for y-only maturation rates: gbar(t, y) = int g(t, x, y) dx.
//
//   gbar_t = kappa Lap gbar - lambda(y) gbar + mu1 int D(x, y) f(x) dx
//   f_t    = lambda(x) gbar(x)
//
// Supports X = [a, b]^d for d = 1, 2 on the same node set per axis.

struct ReducedCoefficients {
  int dimension = 1;
  Grid1D axis;
  BoundaryCondition bc = BoundaryCondition::neumann;
  double diffusivity = 0.5;
  double mu1 = 1.0;
  double theta = 1.0;
  std::vector<double> lambda;  // per node; index ix * n + iy in 2D

  std::size_t nodes() const { return dimension == 2 ? axis.n * axis.n : axis.n; }
};

struct ReducedState {
  double t = 0.0;
  std::vector<double> f;
  std::vector<double> gbar;
};

class ReducedSolver {
 public:
  /**
   * The kernel enters through the source only. In 2D the raw kernel is
   * tabulated once over index offsets, dropping offsets where it falls below
   * 1e-13 of its peak; the same truncated table defines the renormalizing
   * mass, so the discrete mass balance stays exact.
   */
  ReducedSolver(ReducedCoefficients c, const KernelSpec& kernel, KernelNormalization mode, std::size_t threads = 1)
      : c_(std::move(c)), threads_(threads) {
    if (c_.dimension != 1 && c_.dimension != 2) throw PdeError("reduced model supports d = 1 or 2");
    const std::size_t n = c_.axis.n;
    if (n < 3) throw PdeError("grid needs at least 3 nodes");
    if (c_.lambda.size() != c_.nodes()) throw PdeError("lambda table does not match the grid");
    for (double v : c_.lambda) {
      if (!(v >= 0.0)) throw PdeError("lambda must be nonnegative");
    }
    const DispersalKernel k(kernel, c_.dimension);
    const double h = c_.axis.h();
    w_ = c_.axis.weights();
    if (c_.dimension == 1) {
      D_.resize(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        const Point x{c_.axis.node(i), 0.0};
        double mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          D_[i * n + j] = k.density(x, Point{c_.axis.node(j), 0.0});
          mass += w_[j] * D_[i * n + j];
        }
        if (mode == KernelNormalization::renormalize) {
          for (std::size_t j = 0; j < n; ++j) D_[i * n + j] /= mass;
        }
      }
    } else {
      const double peak = k.density(Point{0.0, 0.0}, Point{0.0, 0.0});
      const auto N = static_cast<long>(n);
      for (long di = -(N - 1); di <= N - 1; ++di) {
        for (long dj = -(N - 1); dj <= N - 1; ++dj) {
          const double v = k.density(Point{0.0, 0.0}, Point{h * static_cast<double>(di), h * static_cast<double>(dj)});
          if (v >= 1e-13 * peak) offsets_.push_back({di, dj, v});
        }
      }
      mass_.assign(n * n, 1.0);
      if (mode == KernelNormalization::renormalize) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            double m = 0.0;
            for (const auto& o : offsets_) {
              const long a = static_cast<long>(i) + o.di, b = static_cast<long>(j) + o.dj;
              if (a < 0 || b < 0 || a >= N || b >= N) continue;
              m += w_[static_cast<std::size_t>(a)] * w_[static_cast<std::size_t>(b)] * o.value;
            }
            mass_[i * n + j] = m;
          }
        }
      }
    }
  }

  const ReducedCoefficients& coefficients() const { return c_; }
  std::size_t nodes() const { return c_.nodes(); }

  ReducedState initial_state(std::vector<double> f0) const {
    if (f0.size() != nodes()) throw PdeError("f0 size does not match the grid");
    return ReducedState{0.0, std::move(f0), std::vector<double>(nodes(), 0.0)};
  }

  /// Quadrature weight of node k (product weights in 2D).
  double weight(std::size_t k) const {
    if (c_.dimension == 1) return w_[k];
    const std::size_t n = c_.axis.n;
    return w_[k / n] * w_[k % n];
  }

  double total(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += weight(k) * v[k];
    return s;
  }

  /// S(y) = sum_x w_x D(x, y) f(x).
  std::vector<double> source(const std::vector<double>& f) const {
    const std::size_t n = c_.axis.n;
    std::vector<double> S(nodes(), 0.0);
    if (c_.dimension == 1) {
      for (std::size_t i = 0; i < n; ++i) {
        const double a = w_[i] * f[i];
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) S[j] += a * D_[i * n + j];
      }
      return S;
    }
    const auto N = static_cast<long>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double a = w_[i] * w_[j] * f[i * n + j] / mass_[i * n + j];
        if (a == 0.0) continue;
        for (const auto& o : offsets_) {
          const long p = static_cast<long>(i) + o.di, q = static_cast<long>(j) + o.dj;
          if (p < 0 || q < 0 || p >= N || q >= N) continue;
          S[static_cast<std::size_t>(p) * n + static_cast<std::size_t>(q)] += a * o.value;
        }
      }
    }
    return S;
  }

  ReducedState reduced_step(const ReducedState& s, double dt) const {
    if (!(dt > 0.0)) throw PdeError("dt must be positive");
    const double lb = *std::max_element(c_.lambda.begin(), c_.lambda.end());
    if (!(dt * lb < 1.0)) throw StabilityError("dt * lambda_bar violates the stability condition dt * lambda_bar < 1");
    const std::size_t n = c_.axis.n;
    const double h = c_.axis.h();
    const double inv_h2 = 1.0 / (h * h);
    const double th = c_.theta;
    ReducedState out;
    out.t = s.t + dt;
    out.f = s.f;
    for (std::size_t k = 0; k < nodes(); ++k) out.f[k] += dt * c_.lambda[k] * s.gbar[k];

    const auto S = source(s.f);
    std::vector<double> g(nodes());
    for (std::size_t k = 0; k < nodes(); ++k) g[k] = s.gbar[k] * (1.0 - dt * c_.lambda[k]) + dt * c_.mu1 * S[k];

    const detail::TridiagonalFactor A(n, th * dt * c_.diffusivity * inv_h2, c_.bc);
    const bool explicit_part = th < 1.0 && c_.diffusivity > 0.0;
    const double ex = (1.0 - th) * dt * c_.diffusivity;
    if (c_.dimension == 1) {
      if (explicit_part) {
        std::vector<double> lap(n);
        detail::apply_laplacian(s.gbar.data(), lap.data(), n, inv_h2, c_.bc);
        for (std::size_t k = 0; k < n; ++k) g[k] += ex * lap[k];
      }
      A.solve(g.data());
    } else {
      // Lie splitting: sweep along the second axis, then the first.
      parallel_for(n, threads_, [&](std::size_t i) {
        double* row = &g[i * n];
        if (explicit_part) {
          std::vector<double> lap(n);
          detail::apply_laplacian(&s.gbar[i * n], lap.data(), n, inv_h2, c_.bc);
          for (std::size_t j = 0; j < n; ++j) row[j] += ex * lap[j];
        }
        A.solve(row);
      });
      parallel_for(n, threads_, [&](std::size_t j) {
        if (explicit_part) {
          std::vector<double> col(n), lap(n);
          for (std::size_t i = 0; i < n; ++i) col[i] = g[i * n + j];
          detail::apply_laplacian(col.data(), lap.data(), n, inv_h2, c_.bc);
          for (std::size_t i = 0; i < n; ++i) g[i * n + j] += ex * lap[i];
        }
        A.solve(&g[j], n);
      });
    }
    out.gbar = std::move(g);
    return out;
  }

 private:
  struct Offset {
    long di, dj;
    double value;
  };
  ReducedCoefficients c_;
  std::size_t threads_;
  std::vector<double> w_;
  std::vector<double> D_;        // 1D: full table
  std::vector<Offset> offsets_;  // 2D: truncated raw kernel
  std::vector<double> mass_;     // 2D: renormalizing mass per source node
};

/// Reduced-model coefficients from model parameters; the rate must not depend on the origin.
inline ReducedCoefficients reduced_coefficients(const ModelParams& params, const Grid1D& axis, int dimension,
                                                BoundaryCondition bc, double diffusivity, double theta = 1.0) {
  if (params.rate.depends_on_origin())
    throw PdeError("reduced model requires a maturation rate depending on the seed position only");
  ReducedCoefficients c;
  c.dimension = dimension;
  c.axis = axis;
  c.bc = bc;
  c.diffusivity = diffusivity;
  c.mu1 = params.counting.mean();
  c.theta = theta;
  const std::size_t n = axis.n;
  c.lambda.resize(c.nodes());
  const Point origin{axis.lower, axis.lower};
  if (dimension == 1) {
    for (std::size_t j = 0; j < n; ++j) c.lambda[j] = params.rate(origin, Point{axis.node(j), 0.0}, 1);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c.lambda[i * n + j] = params.rate(origin, Point{axis.node(i), axis.node(j)}, 2);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Norms and a priori bounds.

struct NormConstants {
  double C0 = 0.0;  // lambda_bar * C1 / 2
  double C1 = 0.0;  // mu1 * sqrt(sup_x int D(x, y)^2 dy)
  double lambda_bar = 0.0;
  double f0_l2 = 0.0;
};

struct NormRecord {
  double t = 0.0;
  double l2_f = 0.0, l2_g = 0.0;
  double h1_f = 0.0, h1_g = 0.0;
  double bound_f = 0.0, bound_g = 0.0;
  bool violated = false;
};

inline double l2_norm(const Grid1D& grid, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) s += grid.weight(i) * f[i] * f[i];
  return std::sqrt(s);
}

inline double l2_norm_2d(const Grid1D& grid, const std::vector<double>& g) {
  const std::size_t n = grid.n;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s += grid.weight(i) * grid.weight(j) * g[i * n + j] * g[i * n + j];
  return std::sqrt(s);
}

/// Discrete H1 norm: L2 plus forward-difference gradient on cells.
inline double h1_norm(const Grid1D& grid, const std::vector<double>& f) {
  const double h = grid.h();
  double grad = 0.0;
  for (std::size_t i = 0; i + 1 < grid.n; ++i) {
    const double d = (f[i + 1] - f[i]) / h;
    grad += h * d * d;
  }
  const double l2 = l2_norm(grid, f);
  return std::sqrt(l2 * l2 + grad);
}

inline double h1_norm_2d(const Grid1D& grid, const std::vector<double>& g) {
  const std::size_t n = grid.n;
  const double h = grid.h();
  double grad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j + 1 < n) {
        const double d = (g[i * n + j + 1] - g[i * n + j]) / h;
        grad += grid.weight(i) * h * d * d;
      }
      if (i + 1 < n) {
        const double d = (g[(i + 1) * n + j] - g[i * n + j]) / h;
        grad += h * grid.weight(j) * d * d;
      }
    }
  }
  const double l2 = l2_norm_2d(grid, g);
  return std::sqrt(l2 * l2 + grad);
}

/**
 * Growth bounds ||f||(t) <= ||f0|| e^{C0 t^2} and
 * ||g||(t) <= C1 ||f0|| int_0^t e^{C0 s^2} ds. The f bound uses
 * ||int lambda g dz||_x <= lambda_bar |X|^{1/2} ||g||, so it needs |X| <= 1.
 */
class NormMonitor {
 public:
  NormMonitor(const PdeCoefficients& c, const std::vector<double>& f0, double tolerance = 1e-12)
      : grid_(c.grid), tol_(tolerance) {
    const std::size_t n = c.n();
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += grid_.weight(j) * c.D[i * n + j] * c.D[i * n + j];
      sup = std::max(sup, s);
    }
    k_.C1 = c.mu1 * std::sqrt(sup);
    k_.lambda_bar = c.lambda_bar();
    k_.C0 = 0.5 * k_.lambda_bar * k_.C1;
    k_.f0_l2 = l2_norm(grid_, f0);
    if (grid_.length() > 1.0 + 1e-12) domain_ok_ = false;
  }

  const NormConstants& constants() const { return k_; }
  const std::vector<NormRecord>& records() const { return records_; }
  /// False when |X| > 1, where the f bound is not guaranteed.
  bool bound_applicable() const { return domain_ok_; }
  bool any_violation() const {
    return std::any_of(records_.begin(), records_.end(), [](const NormRecord& r) { return r.violated; });
  }

  double bound_f(double t) const { return k_.f0_l2 * std::exp(k_.C0 * t * t); }
  double bound_g(double t) const {
    if (t <= 0.0) return 0.0;
    const double C0 = k_.C0;
    const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [C0](double s) { return std::exp(C0 * s * s); }, 0.0, t, 10, 1e-14);
    return k_.C1 * k_.f0_l2 * I;
  }

  const NormRecord& record(const PdeState& s) {
    NormRecord r;
    r.t = s.t;
    r.l2_f = l2_norm(grid_, s.f);
    r.l2_g = l2_norm_2d(grid_, s.g);
    r.h1_f = h1_norm(grid_, s.f);
    r.h1_g = h1_norm_2d(grid_, s.g);
    r.bound_f = bound_f(s.t);
    r.bound_g = bound_g(s.t);
    const double slack_f = tol_ * std::max(1.0, r.bound_f);
    const double slack_g = tol_ * std::max(1.0, r.bound_g);
    r.violated = r.l2_f > r.bound_f + slack_f || r.l2_g > r.bound_g + slack_g;
    records_.push_back(r);
    return records_.back();
  }

 private:
  Grid1D grid_;
  double tol_;
  NormConstants k_;
  bool domain_ok_ = true;
  std::vector<NormRecord> records_;
};

inline NormRecord monitor_norms(NormMonitor& monitor, const PdeState& s) { return monitor.record(s); }

// ---------------------------------------------------------------------------
// Weak-form residuals.

/**
 * Test function phi(y) on the grid interval with its first and second
 * derivatives in physical units.
 */
struct TestFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
};

/// Constants, cosine modes and a cubic for Neumann; sine modes for Dirichlet.
inline std::vector<TestFunction> standard_test_functions(const Grid1D& grid, BoundaryCondition bc, int modes = 2) {
  const double a = grid.lower, L = grid.length();
  const double pi = std::numbers::pi;
  std::vector<TestFunction> out;
  if (bc == BoundaryCondition::neumann) {
    out.push_back({"one", [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }});
    for (int k = 1; k <= modes; ++k) {
      const double w = k * pi / L;
      out.push_back({"cos" + std::to_string(k), [=](double y) { return std::cos(w * (y - a)); },
                     [=](double y) { return -w * std::sin(w * (y - a)); },
                     [=](double y) { return -w * w * std::cos(w * (y - a)); }});
    }
    out.push_back({"cubic",
                   [=](double y) {
                     const double s = (y - a) / L;
                     return 3 * s * s - 2 * s * s * s;
                   },
                   [=](double y) {
                     const double s = (y - a) / L;
                     return (6 * s - 6 * s * s) / L;
                   },
                   [=](double y) {
                     const double s = (y - a) / L;
                     return (6 - 12 * s) / (L * L);
                   }});
  } else {
    for (int k = 1; k <= modes + 1; ++k) {
      const double w = k * pi / L;
      out.push_back({"sin" + std::to_string(k), [=](double y) { return std::sin(w * (y - a)); },
                     [=](double y) { return w * std::cos(w * (y - a)); },
                     [=](double y) { return -w * w * std::sin(w * (y - a)); }});
    }
  }
  return out;
}

struct WeakResidual {
  std::string name;
  double plant = 0.0;  // signed LHS - RHS of the plant equation at the final time
  double seed = 0.0;   // signed LHS - RHS of the seed equation at the final time
  double max_abs() const { return std::max(std::abs(plant), std::abs(seed)); }
};

/**
 * Weak forms at the last stored time T, with psi(x, y) = phi(y):
 *   <f(T), phi> - <f(0), phi> = int_0^T int int lambda(z, y) g(z, y) phi(y) dz dy ds
 *   <g(T), psi> - <g(0), psi> = int_0^T [<g, kappa phi''> - <lambda g, phi>
 *                                         + mu1 int f(x) int D(x, y) phi(y) dy dx] ds
 * Space integrals use trapezoid weights, time integrals the trapezoid rule
 * over the stored levels. The second derivative is applied analytically,
 * so phi must satisfy the seed boundary condition.
 */
inline std::vector<WeakResidual> weak_residual(const PdeCoefficients& c, const PdeTrajectory& traj,
                                               const std::vector<TestFunction>& tests) {
  const std::size_t n = c.n();
  const Grid1D& grid = c.grid;
  if (traj.times.empty()) throw PdeError("weak_residual: empty trajectory");
  for (const auto& tf : tests) {
    const double a = grid.lower, b = grid.upper;
    const double scale = 1e-9 * std::max(1.0, std::abs(tf.first(0.5 * (a + b))) + std::abs(tf.value(0.5 * (a + b))));
    const bool ok = c.bc == BoundaryCondition::neumann
                        ? std::abs(tf.first(a)) <= scale && std::abs(tf.first(b)) <= scale
                        : std::abs(tf.value(a)) <= scale && std::abs(tf.value(b)) <= scale;
    if (!ok) throw PdeError("test function '" + tf.name + "' violates the " + to_string(c.bc) + " boundary condition");
  }
  const auto w = grid.weights();
  std::vector<WeakResidual> out;
  for (const auto& tf : tests) {
    std::vector<double> phi(n), phi2(n);
    for (std::size_t j = 0; j < n; ++j) {
      phi[j] = tf.value(grid.node(j));
      phi2[j] = tf.second(grid.node(j));
    }
    // D phi integrated over y, per origin x.
    std::vector<double> Dphi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) Dphi[i] += w[j] * c.D[i * n + j] * phi[j];

    auto plant_rate = [&](std::size_t k) {
      const auto& g = traj.g[k];
      double s = 0.0;
      for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y) s += w[z] * w[y] * c.lambda[z * n + y] * g[z * n + y] * phi[y];
      return s;
    };
    auto seed_rate = [&](std::size_t k) {
      const auto& g = traj.g[k];
      const auto& f = traj.f[k];
      double s = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < n; ++y)
          row += w[y] * g[x * n + y] * (c.diffusivity * phi2[y] - c.lambda[x * n + y] * phi[y]);
        s += w[x] * (row + c.mu1 * f[x] * Dphi[x]);
      }
      return s;
    };
    auto pair = [&](const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t y = 0; y < n; ++y) s += w[y] * v[y] * phi[y];
      return s;
    };
    auto pair2 = [&](const std::vector<double>& g) {
      double s = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) s += w[x] * w[y] * g[x * n + y] * phi[y];
      return s;
    };

    double ip = 0.0, is = 0.0;
    double prev_p = plant_rate(0), prev_s = seed_rate(0);
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
      const double dt = traj.times[k] - traj.times[k - 1];
      const double cp = plant_rate(k), cs = seed_rate(k);
      ip += 0.5 * dt * (prev_p + cp);
      is += 0.5 * dt * (prev_s + cs);
      prev_p = cp;
      prev_s = cs;
    }
    const std::size_t last = traj.times.size() - 1;
    WeakResidual r;
    r.name = tf.name;
    r.plant = pair(traj.f[last]) - pair(traj.f[0]) - ip;
    r.seed = pair2(traj.g[last]) - pair2(traj.g[0]) - is;
    out.push_back(r);
  }
  return out;
}

}  // namespace gdm
