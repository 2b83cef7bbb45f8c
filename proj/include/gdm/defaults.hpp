#pragma once

#include <array>
#include <cstddef>

// Tolerances and study sizes used by the validation harness and the
// acceptance runner. Each entry names the acceptance criterion it serves.
// Changing a value here changes what "pass" means; keep the history in git.

namespace gdm::defaults {

inline constexpr int kVersion = 1;

// 1: closed-form moments vs RK4 oracle.
inline constexpr double moment_oracle_tol = 1e-8;
inline constexpr double moment_oracle_dt = 1e-4;

// 2: Monte Carlo moments vs oracle.
inline constexpr std::size_t moment_replicas = 10000;
inline constexpr double moment_se_factor = 4.0;
inline constexpr std::array<double, 3> moment_checkpoints{1.0, 2.0, 3.0};

// 3: reduced-model mass closure.
inline constexpr std::size_t reduced_nodes = 128;
inline constexpr double reduced_mass_rel_tol = 1e-3;

// 4: nonnegativity and monotonicity in time of the reference run.
inline constexpr double nonnegativity_tol = 1e-10;
inline constexpr double monotonicity_tol = 1e-10;

// 5: a priori norm bounds, relative slack for rounding.
inline constexpr double norm_bound_rel_slack = 1e-12;

// 6: Picard vs direct.
inline constexpr std::size_t picard_nodes = 64;
inline constexpr double picard_linf_tol = 1e-4;
inline constexpr double picard_iteration_tol = 1e-10;
inline constexpr std::size_t picard_n_max = 200;
inline constexpr double picard_monotone_tol = 1e-12;

// 7: scaling limit.
inline constexpr std::array<std::size_t, 3> scaling_K{100, 400, 1600};
inline constexpr std::size_t scaling_replicas = 200;
inline constexpr std::size_t scaling_bins = 20;
inline constexpr std::size_t scaling_pde_nodes = 201;
inline constexpr double scaling_l1_threshold = 0.25;
inline constexpr double scaling_variance_ratio = 2.0;

// 8: viscous limit.
inline constexpr std::array<double, 3> epsilons{1e-1, 1e-2, 1e-3};
inline constexpr double g1_lower_bound_tol = 1e-8;

// 9: patchy-pattern smoke test.
inline constexpr std::size_t plant_target = 2000;
inline constexpr std::size_t kde_nodes = 101;

// 10: heat eigenmode decay.
inline constexpr double eigenmode_rel_tol = 1e-3;

}  // namespace gdm::defaults
