// gdm: command-line driver for simulations, PDE runs and validation studies.
//
//   gdm simulate --config FILE --seed N --out DIR [--threads N] [--force]
//   gdm pde      --config FILE --out DIR [--threads N] [--force]
//   gdm study NAME [--config FILE] --seed N --out DIR [--threads N] [--force]
//
// Exit codes: 0 success, 1 runtime failure or failed study, 2 invalid input,
// 3 Picard non-convergence.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdm/config.hpp"
#include "gdm/io.hpp"
#include "gdm/parallel.hpp"

namespace fs = std::filesystem;
using gdm::io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kBadInput = 2;
constexpr int kNoConvergence = 3;

struct Options {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::size_t> threads;
  bool force = false;
  std::string study;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gdm::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Shared run plumbing: output directory, config text and the manifest.
class Run {
 public:
  Run(std::string command, const Options& o) : opt_(o) {
    manifest_.command = std::move(command);
    manifest_.tool_version = GDM_VERSION;
    manifest_.master_seed = o.seed;
    manifest_.start_time = utc_now();
    if (!o.config.empty()) {
      text_ = read_text(o.config);
      root_ = gdm::parse_config_text(text_, o.config);
      gdm::check_root_keys(root_);
    } else {
      root_ = Json::object();
    }
    manifest_.config_hash = "fnv1a64:" + gdm::io::hex64(gdm::io::fnv1a64(text_));
    dir_ = o.out;
    if (fs::exists(dir_ / "manifest.json") && !o.force)
      throw gdm::ConfigError(dir_.string() + " already holds a run manifest; pass --force to overwrite");
    fs::create_directories(dir_);
  }

  const Json& root() const { return root_; }
  std::size_t threads() const { return gdm::resolve_threads(opt_.threads); }
  Json& extra() { return manifest_.extra; }

  void save(const std::string& rel, const std::string& content) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    gdm::io::atomic_write(p, content);
    manifest_.outputs.push_back(rel);
  }
  void save_json(const std::string& rel, const Json& j) { save(rel, j.dump(2) + "\n"); }

  void finish() {
    manifest_.end_time = utc_now();
    gdm::io::write_json(dir_ / "manifest.json", manifest_.to_json());
  }

 private:
  Options opt_;
  std::string text_;
  Json root_;
  fs::path dir_;
  gdm::io::RunManifest manifest_;
};

std::string numbered(const std::string& stem, std::size_t k, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", k);
  return stem + "_" + buf + ext;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o) {
  if (o.config.empty()) throw gdm::ConfigError("simulate needs --config");
  Run run("simulate", o);
  auto setup = gdm::simulation_from_root(run.root());
  const int dim = setup.config.params.domain.dimension;

  if (setup.density) {
    gdm::RngStream init_rng(o.seed, 1);
    setup.plants.positions = gdm::sample_points(*setup.density, setup.density_count, init_rng);
  }
  const gdm::Simulator sim(setup.config);
  auto state = gdm::SimState::initial(std::move(setup.plants), std::move(setup.seeds), gdm::RngStream(o.seed, 0),
                                      setup.config.K);
  const auto tr = sim.run(std::move(state));

  run.save("moments.csv", gdm::io::moments_csv(tr.moments));
  if (setup.config.record_events) run.save("events.csv", gdm::io::events_csv(tr.events, dim));
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
    run.save("snapshots/" + numbered("snapshot", k, ".json"), gdm::io::snapshot_json(tr.snapshots[k], dim).dump() + "\n");

  const auto& plants = tr.final_state.plants.positions;
  if (setup.kde) {
    const auto grid = gdm::GridSpec2D::covering(setup.config.params.domain, setup.kde->nx, setup.kde->ny);
    const auto kde = gdm::kde_intensity(plants, grid);
    run.save("kde.csv", gdm::io::matrix_csv(kde.values, grid.count[0], grid.count[1]));
    run.save_json("kde.json", gdm::io::kde_sidecar(kde, plants.size()));
  }

  const auto& c = tr.final_state.counters;
  Json summary{{"stop", gdm::to_string(tr.stop)},
               {"t_final", tr.final_state.t},
               {"plants", plants.size()},
               {"seeds", tr.final_state.seeds.size()},
               {"releases", c.releases},
               {"maturations", c.maturations},
               {"kills", c.kills},
               {"seeds_released", c.seeds_released}};
  run.extra()["result"] = summary;
  run.finish();
  std::cout << "simulate: stopped on " << gdm::to_string(tr.stop) << " at t = " << tr.final_state.t << " with "
            << plants.size() << " plants and " << tr.final_state.seeds.size() << " seeds\n";
  return kOk;
}

// ---------------------------------------------------------------------------

std::string f_csv(const gdm::Grid1D& grid, const std::vector<double>& f) {
  gdm::io::Csv csv({"x", "f"});
  for (std::size_t i = 0; i < grid.n; ++i) {
    csv.cell(grid.node(i)).cell(f[i]);
    csv.end_row();
  }
  return csv.str();
}

std::size_t snapshot_stride(const gdm::PdeRunConfig& r, std::size_t steps) {
  if (!r.snapshot_every || steps == 0) return steps == 0 ? 1 : steps;
  const double h = r.setup.T / static_cast<double>(steps);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(*r.snapshot_every / h)));
}

int pde_full(Run& run, const gdm::PdeRunConfig& r) {
  const auto& s = r.setup;
  const gdm::PdeSolver solver(s.coefficients(), run.threads());
  const auto f0 = s.initial_f();
  const auto grid = solver.grid();
  const std::size_t n = grid.n;

  if (r.scheme == gdm::PdeScheme::picard) {
    const auto res = gdm::picard_solve(solver, f0, s.T, s.dt, r.picard);
    gdm::NormMonitor mon(solver.coefficients(), f0);
    mon.record(res.final);
    run.save("f_final.csv", f_csv(grid, res.final.f));
    run.save("g_final.csv", gdm::io::matrix_csv(res.final.g, n, n));
    run.save("norms.csv", gdm::io::norms_csv(mon.records()));
    run.extra()["result"] = {{"scheme", "picard"},
                             {"iterations", res.iterations},
                             {"converged", res.converged},
                             {"monotone", res.monotone},
                             {"sup_differences", res.sup_differences}};
    run.finish();
    std::cout << "pde: Picard converged after " << res.iterations << " iterates\n";
    return kOk;
  }

  const double eps = r.scheme == gdm::PdeScheme::viscous ? r.epsilon : 0.0;
  const std::size_t steps = gdm::step_count(s.T, s.dt);
  solver.check_dt(steps == 0 ? s.dt : s.T / static_cast<double>(steps));
  const std::size_t stride = snapshot_stride(r, steps);
  gdm::NormMonitor mon(solver.coefficients(), f0);
  Json times = Json::array();
  std::size_t snap = 0;
  const auto last = gdm::integrate(solver, solver.initial_state(f0), s.T, s.dt, eps,
                                   [&](const gdm::PdeState& st, std::size_t k) {
                                     mon.record(st);
                                     if (k % stride == 0 || k == steps) {
                                       run.save("snapshots/" + numbered("f", snap, ".csv"), f_csv(grid, st.f));
                                       run.save("snapshots/" + numbered("g", snap, ".csv"), gdm::io::matrix_csv(st.g, n, n));
                                       times.push_back(st.t);
                                       ++snap;
                                     }
                                   });
  run.save("norms.csv", gdm::io::norms_csv(mon.records()));
  run.extra()["result"] = {{"scheme", gdm::to_string(r.scheme)},
                           {"epsilon", eps},
                           {"steps", steps},
                           {"snapshot_times", times},
                           {"mass_f", gdm::trapezoid_sum(grid, last.f)},
                           {"mass_g", gdm::trapezoid_sum_2d(grid, last.g)},
                           {"norm_bound_applicable", mon.bound_applicable()},
                           {"norm_bound_violated", mon.any_violation()}};
  run.finish();
  std::cout << "pde: " << gdm::to_string(r.scheme) << " scheme, " << steps << " steps to T = " << s.T << "\n";
  return kOk;
}

int pde_reduced(Run& run, const gdm::PdeRunConfig& r) {
  const auto& s = r.setup;
  const int d = r.reduced_dimension;
  const auto axis = s.grid();
  const gdm::ReducedSolver solver(gdm::reduced_coefficients(s.params, axis, d, s.bc, s.diffusivity, s.theta),
                                  s.params.kernel, s.params.kernel_normalization, run.threads());
  const std::size_t n = axis.n;
  auto f1 = s.initial_f();
  std::vector<double> f0 = f1;
  if (d == 2) {
    // Product initial density with the same total mass as the 1D profile.
    const double m = s.f0.mass > 0.0 ? s.f0.mass : 1.0;
    f0.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) f0[i * n + j] = f1[i] * f1[j] / m;
  }
  const std::size_t steps = gdm::step_count(s.T, s.dt);
  const double h = steps == 0 ? s.dt : s.T / static_cast<double>(steps);
  const std::size_t stride = snapshot_stride(r, steps);

  auto write = [&](const gdm::ReducedState& st, std::size_t snap) {
    if (d == 1) {
      gdm::io::Csv csv({"x", "f", "gbar"});
      for (std::size_t i = 0; i < n; ++i) {
        csv.cell(axis.node(i)).cell(st.f[i]).cell(st.gbar[i]);
        csv.end_row();
      }
      run.save("snapshots/" + numbered("state", snap, ".csv"), csv.str());
    } else {
      run.save("snapshots/" + numbered("f", snap, ".csv"), gdm::io::matrix_csv(st.f, n, n));
      run.save("snapshots/" + numbered("gbar", snap, ".csv"), gdm::io::matrix_csv(st.gbar, n, n));
    }
  };

  gdm::io::Csv mass({"t", "mass_f", "mass_gbar"});
  auto st = solver.initial_state(f0);
  std::size_t snap = 0;
  for (std::size_t k = 0;; ++k) {
    mass.cell(st.t).cell(solver.total(st.f)).cell(solver.total(st.gbar));
    mass.end_row();
    if (k % stride == 0 || k == steps) write(st, snap++);
    if (k == steps) break;
    st = solver.reduced_step(st, h);
    if (k + 1 == steps) st.t = s.T;
  }
  run.save("mass.csv", mass.str());
  run.extra()["result"] = {{"scheme", "reduced"}, {"dimension", d}, {"steps", steps},
                           {"mass_f", solver.total(st.f)}, {"mass_gbar", solver.total(st.gbar)}};
  run.finish();
  std::cout << "pde: reduced " << d << "D model, " << steps << " steps to T = " << s.T << "\n";
  return kOk;
}

int cmd_pde(const Options& o) {
  Run run("pde", o);
  const auto r = gdm::pde_from_root(run.root());
  return r.scheme == gdm::PdeScheme::reduced ? pde_reduced(run, r) : pde_full(run, r);
}

// ---------------------------------------------------------------------------

int cmd_study(const Options& o) {
  static const std::vector<std::string> known{"moments", "scaling", "epsilon", "picard"};
  if (std::find(known.begin(), known.end(), o.study) == known.end())
    throw gdm::ConfigError("unknown study '" + o.study + "' (expected moments, scaling, epsilon or picard)");
  Run run("study " + o.study, o);
  const auto& root = run.root();
  const std::size_t threads = run.threads();
  gdm::StudyReport rep;
  if (o.study == "moments") {
    auto c = gdm::moment_study_from_root(root);
    c.seed = o.seed;
    c.threads = threads;
    rep = gdm::moment_validation(c);
  } else if (o.study == "scaling") {
    auto c = gdm::scaling_study_from_root(root);
    c.seed = o.seed;
    c.threads = threads;
    rep = gdm::scaling_convergence(c);
  } else if (o.study == "epsilon") {
    auto c = gdm::epsilon_study_from_root(root);
    c.threads = threads;
    rep = gdm::epsilon_study(c);
    rep.master_seed = o.seed;
  } else {
    auto c = gdm::picard_study_from_root(root);
    c.threads = threads;
    rep = gdm::picard_vs_direct(c);
    rep.master_seed = o.seed;
  }
  run.save_json("report.json", rep.to_json());
  run.save("summary.txt", rep.summary());
  run.extra()["result"] = {{"study", o.study}, {"pass", rep.pass()}};
  run.finish();
  std::cout << rep.summary();
  return rep.pass() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grouped seed dispersal: simulation, PDE and validation studies"};
  app.set_version_flag("--version", std::string(GDM_VERSION));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool seed) {
    sub->add_option("--config", o.config, "JSON configuration file");
    if (seed) sub->add_option("--seed", o.seed, "master seed (u64)");
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--threads", o.threads, "worker threads (default: GDM_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_flag("--force", o.force, "overwrite an existing run in --out");
  };
  auto* sim = app.add_subcommand("simulate", "run the individual-based model");
  common(sim, true);
  auto* pde = app.add_subcommand("pde", "solve the deterministic limit");
  common(pde, true);
  auto* study = app.add_subcommand("study", "run a validation study");
  study->add_option("name", o.study, "moments | scaling | epsilon | picard")->required();
  common(study, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*pde) return cmd_pde(o);
    return cmd_study(o);
  } catch (const gdm::ConfigError& e) {
    std::cerr << "gdm: " << e.what() << "\n";
    return kBadInput;
  } catch (const gdm::PicardNonConvergence& e) {
    std::cerr << "gdm: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const gdm::StabilityError& e) {
    std::cerr << "gdm: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "gdm: " << e.what() << "\n";
    return kFailure;
  }
}
