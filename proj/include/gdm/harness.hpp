#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdm/defaults.hpp"
#include "gdm/density.hpp"
#include "gdm/model.hpp"
#include "gdm/observables.hpp"
#include "gdm/parallel.hpp"
#include "gdm/pde.hpp"
#include "gdm/rng.hpp"
#include "gdm/simulator.hpp"

namespace gdm {

using Json = nlohmann::ordered_json;

struct CriterionResult {
  int id = 0;  // acceptance criterion number
  std::string name;
  bool pass = false;
  std::string detail;
};

/**
 * Outcome of one validation study. `metrics` holds everything needed to
 * audit the verdicts; `runtime_seconds` is the only field that varies
 * between identical reruns.
 */
struct StudyReport {
  std::string study;
  std::uint64_t master_seed = 0;
  Json parameters = Json::object();
  Json metrics = Json::object();
  std::vector<CriterionResult> criteria;
  double runtime_seconds = 0.0;

  bool pass() const {
    return !criteria.empty() && std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
  }

  Json to_json(bool include_timing = true) const {
    Json j;
    j["study"] = study;
    j["master_seed"] = master_seed;
    j["defaults_version"] = defaults::kVersion;
    j["parameters"] = parameters;
    j["metrics"] = metrics;
    Json cs = Json::array();
    for (const auto& c : criteria)
      cs.push_back({{"criterion", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["criteria"] = cs;
    j["pass"] = pass();
    if (include_timing) j["runtime_seconds"] = runtime_seconds;
    return j;
  }

  std::string summary() const {
    std::ostringstream os;
    os << "study " << study << " (seed " << master_seed << "): " << (pass() ? "PASS" : "FAIL") << "\n";
    for (const auto& c : criteria)
      os << "  [" << (c.pass ? "PASS" : "FAIL") << "] criterion " << c.id << " " << c.name << ": " << c.detail << "\n";
    return os.str();
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct MeanSe {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  const auto n = static_cast<double>(v.size());
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.se = r.sd / std::sqrt(n);
  return r;
}

/// Independent stream per (case, replica): cases never share streams.
inline RngStream replica_stream(std::uint64_t seed, std::uint64_t case_index, std::uint64_t replica) {
  return RngStream(seed, (case_index << 32) + replica);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Moment oracle agreement (criterion 1) and Monte Carlo moments (criterion 2).

inline CriterionResult check_moment_oracle() {
  double worst = 0.0;
  for (double mu : {0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0, 3.0}) {
      const auto a = closed_form_moments(mu, t);
      const auto b = ode_moment_oracle(mu, t, defaults::moment_oracle_dt);
      worst = std::max({worst, std::abs(a.plants - b.plants), std::abs(a.seeds - b.seeds)});
    }
  }
  const auto at0 = closed_form_moments(1.0, 0.0);
  const double slope0 = closed_form_rates(1.0, 0.0).plants;
  const bool pass = worst <= defaults::moment_oracle_tol && at0.plants == 1.0 && at0.seeds == 0.0 && slope0 == 0.0;
  return {1, "moment oracle agreement", pass,
          "max |closed form - RK4| = " + detail::num(worst) + ", E N_p(0) = " + detail::num(at0.plants) +
              ", E N_s(0) = " + detail::num(at0.seeds) + ", E N_p'(0) = " + detail::num(slope0)};
}

struct MomentStudyConfig {
  std::size_t replicas = defaults::moment_replicas;
  CountingDistribution counting = CountingDistribution::negative_binomial(1.0, 25.0);
  std::vector<double> checkpoints{defaults::moment_checkpoints.begin(), defaults::moment_checkpoints.end()};
  KernelSpec kernel{};
  double sigma2 = 5.0;
  double dt_max = 0.1;
  EventScheme scheme = EventScheme::thinning;
  double se_factor = defaults::moment_se_factor;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

/// Model used by the moment study: all of R^2, constant maturation rate 1, start (delta_0, 0).
inline ModelParams moment_study_params(const MomentStudyConfig& c) {
  ModelParams p;
  p.domain = Domain::all_space(2);
  p.counting = c.counting;
  p.kernel = c.kernel;
  p.rate = MaturationRate::constant(1.0);
  p.diffusion = DiffusionSpec::brownian(std::sqrt(c.sigma2));
  return p;
}

inline StudyReport moment_validation(const MomentStudyConfig& c) {
  detail::Stopwatch clock;
  StudyReport rep;
  rep.study = "moments";
  rep.master_seed = c.seed;
  const double mu = c.counting.mean();
  rep.parameters = {{"replicas", c.replicas}, {"mu1", mu}, {"checkpoints", c.checkpoints},
                    {"scheme", c.scheme == EventScheme::thinning ? "thinning" : "algorithm1"}};

  std::vector<double> times = c.checkpoints;
  std::sort(times.begin(), times.end());
  const double T = times.empty() ? 0.0 : times.back();
  SimConfig sc;
  sc.params = moment_study_params(c);
  sc.t_max = T;
  sc.dt_max = c.dt_max;
  sc.scheme = c.scheme;
  sc.record_times = times;
  sc.store_snapshots = false;
  sc.record_events = false;
  const Simulator sim(sc);

  const std::size_t m = times.size();
  std::vector<double> np(c.replicas * m), ns(c.replicas * m);
  parallel_for(c.replicas, c.threads, [&](std::size_t r) {
    auto tr = sim.run(SimState::single_plant({0.0, 0.0}, detail::replica_stream(c.seed, 0, r)));
    const auto& ms = tr.moments;
    for (std::size_t k = 0; k < m; ++k) {
      // The series is recorded at every checkpoint; look up the row at or before it.
      const auto it = std::upper_bound(ms.times.begin(), ms.times.end(), times[k]);
      const auto row = static_cast<std::size_t>(it - ms.times.begin()) - 1;
      np[r * m + k] = static_cast<double>(ms.plants[row]);
      ns[r * m + k] = static_cast<double>(ms.seeds[row]);
    }
  });

  bool all_ok = true;
  Json rows = Json::array();
  std::string detail_text;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> a(c.replicas), b(c.replicas);
    for (std::size_t r = 0; r < c.replicas; ++r) {
      a[r] = np[r * m + k];
      b[r] = ns[r * m + k];
    }
    const auto sp = detail::mean_se(a), ss = detail::mean_se(b);
    const auto oracle = ode_moment_oracle(mu, times[k], defaults::moment_oracle_dt);
    const double dp = std::abs(sp.mean - oracle.plants), ds = std::abs(ss.mean - oracle.seeds);
    // A zero standard error (e.g. mu1 = 0) demands exact agreement.
    const bool ok = dp <= c.se_factor * sp.se + 1e-12 && ds <= c.se_factor * ss.se + 1e-12;
    all_ok = all_ok && ok;
    rows.push_back({{"t", times[k]},
                    {"mean_N_p", sp.mean}, {"se_N_p", sp.se}, {"oracle_N_p", oracle.plants},
                    {"mean_N_s", ss.mean}, {"se_N_s", ss.se}, {"oracle_N_s", oracle.seeds},
                    {"pass", ok}});
    detail_text += "t=" + detail::num(times[k]) + ": N_p " + detail::num(sp.mean) + " vs " + detail::num(oracle.plants) +
                   " (" + detail::num(dp / std::max(sp.se, 1e-300)) + " SE); ";
  }
  rep.metrics["checkpoints"] = rows;
  rep.criteria.push_back(check_moment_oracle());
  rep.criteria.push_back({2, "Monte Carlo vs oracle", all_ok && m > 0, detail_text});
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// PDE setups shared by the deterministic studies.

/**
 * One-dimensional PDE problem: model coefficients tabulated on `nodes`
 * points of the model's interval, plus time stepping and initial density.
 */
struct PdeSetup {
  ModelParams params;
  std::size_t nodes = 64;
  BoundaryCondition bc = BoundaryCondition::neumann;
  double diffusivity = 0.005;
  double theta = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  InitialDensity f0;

  Grid1D grid() const { return Grid1D{params.domain.lower[0], params.domain.upper[0], nodes}; }
  PdeCoefficients coefficients() const { return tabulate_coefficients(params, grid(), bc, diffusivity, theta); }
  std::vector<double> initial_f() const { return f0.tabulate(nodes); }
};

/**
 * Reference run on X = [0, 1]: the example ingredients rescaled to the unit
 * interval. Exponential kernel (beta 0.1, renormalized), negative binomial
 * groups (mean 1, variance 25), lambda = 10 |y - x|, diffusivity 0.005,
 * f0 = 1 + 0.5 cos(pi x). |X| = 1 keeps the a priori f bound valid.
 */
inline PdeSetup reference_pde_setup(std::size_t nodes = defaults::picard_nodes) {
  PdeSetup s;
  s.params.domain = Domain::interval(0.0, 1.0, Boundary::reflect);
  s.params.counting = CountingDistribution::negative_binomial(1.0, 25.0);
  s.params.kernel = KernelSpec{KernelKind::exponential, 0.1, 4.0};
  s.params.rate = MaturationRate::distance_proportional(10.0);
  s.params.diffusion = DiffusionSpec::brownian(0.1);
  s.nodes = nodes;
  s.diffusivity = s.params.diffusion.diffusivity();
  s.f0 = InitialDensity{};
  s.f0.kind = DensityKind::cosine;
  s.f0.lower = 0.0;
  s.f0.upper = 1.0;
  s.f0.mass = 1.0;
  s.f0.amplitude = 0.5;
  return s;
}

struct DirectRunSummary {
  PdeState final;
  double min_value = 0.0;        // smallest f or g entry over all levels
  double min_f_increment = 0.0;  // smallest f(t+dt) - f(t)
  double min_g_increment = 0.0;
  NormMonitor monitor;
  std::size_t steps = 0;
};

/// Direct scheme to T, tracking nonnegativity, monotonicity in time and the norm bounds at every level.
inline DirectRunSummary run_direct_monitored(const PdeSolver& solver, const std::vector<double>& f0, double T,
                                             double dt, double eps = 0.0) {
  DirectRunSummary out{PdeState{}, 0.0, 0.0, 0.0, NormMonitor(solver.coefficients(), f0, defaults::norm_bound_rel_slack),
                       0};
  PdeState prev;
  bool have_prev = false;
  out.final = integrate(solver, solver.initial_state(f0), T, dt, eps, [&](const PdeState& s, std::size_t k) {
    for (double v : s.f) out.min_value = std::min(out.min_value, v);
    for (double v : s.g) out.min_value = std::min(out.min_value, v);
    if (have_prev) {
      for (std::size_t i = 0; i < s.f.size(); ++i) out.min_f_increment = std::min(out.min_f_increment, s.f[i] - prev.f[i]);
      for (std::size_t i = 0; i < s.g.size(); ++i) out.min_g_increment = std::min(out.min_g_increment, s.g[i] - prev.g[i]);
    }
    out.monitor.record(s);
    prev = s;
    have_prev = true;
    out.steps = k;
  });
  return out;
}

inline double linf_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Picard vs direct (criterion 6) on the reference run, which also carries
// the monotonicity/nonnegativity (4) and norm-bound (5) checks.

struct PicardStudyConfig {
  PdeSetup setup = reference_pde_setup();
  PicardOptions picard{defaults::picard_n_max, defaults::picard_iteration_tol, 0.0, defaults::picard_monotone_tol};
  double linf_tol = defaults::picard_linf_tol;
  std::size_t threads = 1;
};

inline StudyReport picard_vs_direct(const PicardStudyConfig& c) {
  detail::Stopwatch clock;
  StudyReport rep;
  rep.study = "picard";
  const auto& s = c.setup;
  rep.parameters = {{"nodes", s.nodes}, {"dt", s.dt}, {"T", s.T}, {"bc", to_string(s.bc)},
                    {"diffusivity", s.diffusivity}, {"picard_tol", c.picard.tol}, {"n_max", c.picard.n_max}};
  const PdeSolver solver(s.coefficients(), c.threads);
  const auto f0 = s.initial_f();

  auto direct = run_direct_monitored(solver, f0, s.T, s.dt);
  const bool nonneg = direct.min_value >= -defaults::nonnegativity_tol;
  const bool mono = direct.min_f_increment >= -defaults::monotonicity_tol &&
                    direct.min_g_increment >= -defaults::monotonicity_tol;
  rep.criteria.push_back({4, "monotonicity and nonnegativity", nonneg && mono,
                          "min value " + detail::num(direct.min_value) + ", min df " +
                              detail::num(direct.min_f_increment) + ", min dg " + detail::num(direct.min_g_increment)});

  const auto& k = direct.monitor.constants();
  double worst_f = 0.0, worst_g = 0.0;
  for (const auto& r : direct.monitor.records()) {
    worst_f = std::max(worst_f, r.l2_f / r.bound_f);
    if (r.bound_g > 0.0) worst_g = std::max(worst_g, r.l2_g / r.bound_g);
  }
  rep.criteria.push_back({5, "norm bounds", !direct.monitor.any_violation() && direct.monitor.bound_applicable(),
                          "C0 = " + detail::num(k.C0) + ", C1 = " + detail::num(k.C1) + ", max ||f||/bound " +
                              detail::num(worst_f) + ", max ||g||/bound " + detail::num(worst_g)});
  rep.metrics["norm_constants"] = {{"C0", k.C0}, {"C1", k.C1}, {"lambda_bar", k.lambda_bar}, {"f0_l2", k.f0_l2}};
  rep.metrics["direct"] = {{"steps", direct.steps},
                           {"min_value", direct.min_value},
                           {"min_f_increment", direct.min_f_increment},
                           {"min_g_increment", direct.min_g_increment},
                           {"max_l2_f_over_bound", worst_f},
                           {"max_l2_g_over_bound", worst_g}};

  PicardResult pr;
  bool converged = true;
  try {
    pr = picard_solve(solver, f0, s.T, s.dt, c.picard);
  } catch (const PicardNonConvergence& e) {
    pr = e.result;
    converged = false;
  }
  const double df = linf_difference(pr.final.f, direct.final.f);
  const double dg = linf_difference(pr.final.g, direct.final.g);
  double l2 = 0.0;
  {
    std::vector<double> d(pr.final.g.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = pr.final.g[i] - direct.final.g[i];
    l2 = l2_norm_2d(solver.grid(), d);
  }
  rep.metrics["picard"] = {{"iterations", pr.iterations},
                           {"converged", converged},
                           {"linf_f", df},
                           {"linf_g", dg},
                           {"l2_g", l2},
                           {"min_f_increment", pr.min_f_increment},
                           {"min_g_increment", pr.min_g_increment},
                           {"sup_differences", pr.sup_differences}};
  rep.criteria.push_back({6, "Picard/direct cross-validation",
                          converged && pr.monotone && std::max(df, dg) < c.linf_tol,
                          "L-inf |f| " + detail::num(df) + ", |g| " + detail::num(dg) + " after " +
                              std::to_string(pr.iterations) + " iterates; monotone " + (pr.monotone ? "yes" : "no")});
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Viscous limit (criterion 8).

enum class G1Mode { viscous, ultra_parabolic };

struct EpsilonStudyConfig {
  PdeSetup setup = reference_pde_setup();
  std::vector<double> epsilons{defaults::epsilons.begin(), defaults::epsilons.end()};
  /// g1 is the frozen-f0 solution; `viscous` uses the same eps stepper as g_eps.
  G1Mode g1_mode = G1Mode::viscous;
  double g1_tol = defaults::g1_lower_bound_tol;
  std::size_t threads = 1;
};

inline StudyReport epsilon_study(const EpsilonStudyConfig& c) {
  detail::Stopwatch clock;
  StudyReport rep;
  rep.study = "epsilon";
  const auto& s = c.setup;
  rep.parameters = {{"nodes", s.nodes}, {"dt", s.dt}, {"T", s.T}, {"epsilons", c.epsilons},
                    {"g1", c.g1_mode == G1Mode::viscous ? "viscous" : "ultra_parabolic"}};
  const PdeSolver solver(s.coefficients(), c.threads);
  const auto f0 = s.initial_f();
  const auto g0 = integrate(solver, solver.initial_state(f0), s.T, s.dt, 0.0).g;

  std::vector<double> errors;
  double worst_g1 = std::numeric_limits<double>::infinity();
  Json rows = Json::array();
  for (double eps : c.epsilons) {
    const auto ge = integrate(solver, solver.initial_state(f0), s.T, s.dt, eps).g;
    std::vector<double> d(ge.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = ge[i] - g0[i];
    errors.push_back(l2_norm_2d(solver.grid(), d));
    const auto g1 = frozen_source_g(solver, f0, s.T, s.dt, c.g1_mode == G1Mode::viscous ? eps : 0.0);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ge.size(); ++i) m = std::min(m, ge[i] - g1[i]);
    worst_g1 = std::min(worst_g1, m);
    rows.push_back({{"epsilon", eps}, {"l2_error", errors.back()}, {"min_g_eps_minus_g1", m}});
  }
  rep.metrics["cases"] = rows;
  bool decreasing = errors.size() >= 2;
  for (std::size_t i = 1; i < errors.size(); ++i) decreasing = decreasing && errors[i] < errors[i - 1];
  std::string seq;
  for (double e : errors) seq += detail::num(e) + " ";
  rep.criteria.push_back({8, "viscous limit", decreasing && worst_g1 >= -c.g1_tol,
                          "||g_eps - g_0|| = " + seq + "; min(g_eps - g1) = " + detail::num(worst_g1)});
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Scaling limit (criterion 7).

struct ScalingStudyConfig {
  std::vector<std::size_t> K{defaults::scaling_K.begin(), defaults::scaling_K.end()};
  std::size_t replicas = defaults::scaling_replicas;
  double T = 1.0;
  std::size_t bins = defaults::scaling_bins;
  std::size_t pde_nodes = defaults::scaling_pde_nodes;
  double pde_dt = 1e-3;
  double l1_threshold = defaults::scaling_l1_threshold;
  double variance_ratio = defaults::scaling_variance_ratio;
  double dt_max = 0.05;
  ModelParams params = default_params();
  InitialDensity f0 = default_f0();
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  /// [0, 1] with reflection, Poisson(1) groups, exponential kernel beta 0.1, lambda = 1, sigma = 0.2.
  static ModelParams default_params() {
    ModelParams p;
    p.domain = Domain::interval(0.0, 1.0, Boundary::reflect);
    p.counting = CountingDistribution::poisson(1.0);
    p.kernel = KernelSpec{KernelKind::exponential, 0.1, 4.0};
    p.rate = MaturationRate::constant(1.0);
    p.diffusion = DiffusionSpec::brownian(0.2);
    return p;
  }
  static InitialDensity default_f0() {
    InitialDensity d;
    d.kind = DensityKind::cosine;
    d.amplitude = 0.5;
    return d;
  }
};

/// Cell averages of the piecewise-linear nodal function over equal bins; needs (nodes - 1) divisible by bins.
inline HistogramDensity cell_averages(const Grid1D& grid, const std::vector<double>& v, std::size_t bins) {
  if ((grid.n - 1) % bins != 0) throw std::invalid_argument("cell_averages: bins must divide the node intervals");
  const std::size_t per = (grid.n - 1) / bins;
  HistogramDensity h{HistogramGrid::over(Domain::interval(grid.lower, grid.upper, Boundary::reflect), bins),
                     std::vector<double>(bins, 0.0)};
  for (std::size_t b = 0; b < bins; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t i = b * per + k;
      s += 0.5 * (v[i] + v[i + 1]);
    }
    h.values[b] = s / static_cast<double>(per);
  }
  return h;
}

inline StudyReport scaling_convergence(const ScalingStudyConfig& c) {
  detail::Stopwatch clock;
  StudyReport rep;
  rep.study = "scaling";
  rep.master_seed = c.seed;
  rep.parameters = {{"K", c.K}, {"replicas", c.replicas}, {"T", c.T}, {"bins", c.bins},
                    {"pde_nodes", c.pde_nodes}, {"pde_dt", c.pde_dt}, {"l1_threshold", c.l1_threshold}};
  if (c.params.domain.dimension != 1 || !c.params.domain.is_box())
    throw std::invalid_argument("scaling study needs a 1D interval domain");

  // Deterministic limit.
  const Grid1D grid{c.params.domain.lower[0], c.params.domain.upper[0], c.pde_nodes};
  const auto bc = c.params.domain.boundary == Boundary::kill ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
  const PdeSolver solver(tabulate_coefficients(c.params, grid, bc, c.params.diffusion.diffusivity()), c.threads);
  InitialDensity f0 = c.f0;
  f0.lower = grid.lower;
  f0.upper = grid.upper;
  const auto f0_nodes = f0.tabulate(grid.n);
  const auto limit = integrate(solver, solver.initial_state(f0_nodes), c.T, c.pde_dt, 0.0);
  const auto ref_T = cell_averages(grid, limit.f, c.bins);
  const auto ref_0 = cell_averages(grid, f0_nodes, c.bins);
  const auto hgrid = ref_T.grid;

  SimConfig sc;
  sc.params = c.params;
  sc.t_max = c.T;
  sc.dt_max = c.dt_max;
  sc.store_snapshots = false;
  sc.record_events = false;
  const Simulator sim(sc);

  std::vector<double> l1_means, varK;
  Json cases = Json::array();
  for (std::size_t ci = 0; ci < c.K.size(); ++ci) {
    const std::size_t K = c.K[ci];
    const auto count = static_cast<std::size_t>(std::llround(static_cast<double>(K) * f0.mass));
    std::vector<double> l1(c.replicas), l1_0(c.replicas), mass(c.replicas);
    parallel_for(c.replicas, c.threads, [&](std::size_t r) {
      RngStream rng = detail::replica_stream(c.seed, ci, r);
      PlantPopulation plants{sample_points(f0, count, rng)};
      const auto h0 = histogram_measure(plants.positions, hgrid, static_cast<double>(K));
      l1_0[r] = l1_distance(h0, ref_0);
      auto st = SimState::initial(std::move(plants), SeedPopulation{}, rng, K);
      const auto tr = sim.run(std::move(st));
      const auto& P = tr.final_state.plants.positions;
      l1[r] = l1_distance(histogram_measure(P, hgrid, static_cast<double>(K)), ref_T);
      mass[r] = static_cast<double>(P.size()) / static_cast<double>(K);
    });
    const auto m1 = detail::mean_se(l1), m0 = detail::mean_se(l1_0), mm = detail::mean_se(mass);
    l1_means.push_back(m1.mean);
    varK.push_back(mm.sd * mm.sd * static_cast<double>(K));
    cases.push_back({{"K", K},
                     {"mean_l1", m1.mean},
                     {"se_l1", m1.se},
                     {"baseline_l1_t0", m0.mean},
                     {"mean_mass", mm.mean},
                     {"var_mass_times_K", varK.back()}});
  }
  rep.metrics["cases"] = cases;
  rep.metrics["pde_mass_T"] = trapezoid_sum(grid, limit.f);

  bool decreasing = l1_means.size() >= 2;
  for (std::size_t i = 1; i < l1_means.size(); ++i) decreasing = decreasing && l1_means[i] < l1_means[i - 1];
  const bool below = !l1_means.empty() && l1_means.back() < c.l1_threshold;
  const double vmax = varK.empty() ? 0.0 : *std::max_element(varK.begin(), varK.end());
  const double vmin = varK.empty() ? 0.0 : *std::min_element(varK.begin(), varK.end());
  const bool var_ok = vmin > 0.0 && vmax / vmin <= c.variance_ratio;
  std::string seq, vseq;
  for (double v : l1_means) seq += detail::num(v) + " ";
  for (double v : varK) vseq += detail::num(v) + " ";
  rep.criteria.push_back({7, "scaling limit", decreasing && below && var_ok,
                          "mean L1 = " + seq + "(threshold " + detail::num(c.l1_threshold) + "); Var*K = " + vseq});
  rep.runtime_seconds = clock.seconds();
  return rep;
}

}  // namespace gdm
