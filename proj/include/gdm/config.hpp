#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdm/density.hpp"
#include "gdm/harness.hpp"
#include "gdm/kernels.hpp"
#include "gdm/model.hpp"
#include "gdm/pde.hpp"
#include "gdm/simulator.hpp"

namespace gdm {

/// Invalid or malformed configuration. Parse errors carry a 1-based line and column.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

inline Json parse_config_text(const std::string& text, const std::string& source = "<config>") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON: " + e.what(),
                      line, col);
  }
}

inline Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

namespace detail {

/// Checked view of one JSON object; errors name the full key path.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + ": " + msg);
  }
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
        fail(it.key(), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const Json& at(const char* key) const { return j_.at(key); }
  Section sub(const char* key) const { return Section(j_.at(key), where(key)); }

  double number(const char* key) const {
    if (!has(key)) fail(key, "required number is missing");
    const Json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  double number(const char* key, double def) const { return has(key) ? number(key) : def; }

  std::uint64_t count(const char* key) const {
    if (!has(key)) fail(key, "required integer is missing");
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const char* key, std::uint64_t def) const { return has(key) ? count(key) : def; }

  bool flag(const char* key, bool def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_string()) fail(key, "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// A point: an array of `dim` numbers, or a bare number when dim == 1.
  Point point(const char* key, int dim) const {
    const Json& v = j_.at(key);
    Point p{0.0, 0.0};
    if (dim == 1 && v.is_number()) {
      p[0] = v.get<double>();
      return p;
    }
    const auto xs = numbers(key);
    if (xs.size() != static_cast<std::size_t>(dim)) fail(key, "expected " + std::to_string(dim) + " coordinates");
    for (int i = 0; i < dim; ++i) p[i] = xs[static_cast<std::size_t>(i)];
    return p;
  }

  template <class E>
  E choice(const char* key, std::initializer_list<std::pair<const char*, E>> options, E def) const {
    if (!has(key)) return def;
    const std::string s = text(key, "");
    for (const auto& [name, value] : options) {
      if (s == name) return value;
    }
    std::string list;
    for (const auto& o : options) list += std::string(list.empty() ? "" : ", ") + o.first;
    fail(key, "unknown value '" + s + "' (expected one of: " + list + ")");
  }

  const Json& json() const { return j_; }

 private:
  const Json& j_;
  std::string path_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Model.

inline Domain domain_from_json(const detail::Section& s) {
  s.allow({"dimension", "kind", "lower", "upper", "boundary"});
  const int dim = static_cast<int>(s.count("dimension", 2));
  if (dim < 1 || dim > 2) s.fail("dimension", "must be 1 or 2");
  const auto kind = s.choice<DomainKind>("kind", {{"box", DomainKind::box}, {"all_space", DomainKind::all_space}},
                                         DomainKind::box);
  if (kind == DomainKind::all_space) {
    if (s.has("boundary") && s.text("boundary", "") != "none") s.fail("boundary", "all-space domain has no boundary");
    return Domain::all_space(dim);
  }
  Point lo = dim == 2 ? Point{-100.0, -100.0} : Point{0.0, 0.0};
  Point hi = dim == 2 ? Point{100.0, 100.0} : Point{1.0, 0.0};
  if (s.has("lower")) lo = s.point("lower", dim);
  if (s.has("upper")) hi = s.point("upper", dim);
  const auto bc = s.choice<Boundary>("boundary", {{"reflect", Boundary::reflect}, {"kill", Boundary::kill}},
                                     Boundary::reflect);
  return Domain::box(dim, lo, hi, bc);
}

inline CountingDistribution counting_from_json(const detail::Section& s) {
  s.allow({"kind", "mean", "variance", "n"});
  const std::string kind = s.text("kind", "negative_binomial");
  if (kind == "negative_binomial") return CountingDistribution::negative_binomial(s.number("mean", 1.0), s.number("variance", 25.0));
  if (kind == "poisson") return CountingDistribution::poisson(s.number("mean", 1.0));
  if (kind == "fixed") return CountingDistribution::fixed(s.count("n"));
  s.fail("kind", "unknown counting distribution '" + kind + "'");
}

inline KernelSpec kernel_from_json(const detail::Section& s, int dim) {
  s.allow({"kind", "beta", "a", "mean_displacement"});
  KernelSpec k;
  k.kind = s.choice<KernelKind>("kind",
                                {{"exponential", KernelKind::exponential},
                                 {"gaussian", KernelKind::gaussian},
                                 {"power_law", KernelKind::power_law}},
                                KernelKind::exponential);
  k.a = s.number("a", 4.0);
  if (s.has("beta") && s.has("mean_displacement")) s.fail("beta", "give either beta or mean_displacement, not both");
  if (s.has("mean_displacement")) {
    try {
      k.beta = calibrate_beta(k.kind, s.number("mean_displacement"), dim, k.a);
    } catch (const KernelError& e) {
      s.fail("mean_displacement", e.what());
    }
  } else if (s.has("beta")) {
    k.beta = s.number("beta");
  } else {
    k.beta = example_params(k.kind).kernel.beta;
  }
  return k;
}

inline MaturationRate rate_from_json(const detail::Section& s) {
  s.allow({"kind", "value", "lambda0", "x", "y", "values"});
  const std::string kind = s.text("kind", "distance_proportional");
  if (kind == "constant") return MaturationRate::constant(s.number("value"));
  if (kind == "distance_proportional") return MaturationRate::distance_proportional(s.number("lambda0", 0.05));
  if (kind == "position_only") return MaturationRate::position_only(s.numbers("y"), s.numbers("values"));
  if (kind == "tabulated") return MaturationRate::tabulated(s.numbers("x"), s.numbers("y"), s.numbers("values"));
  s.fail("kind", "unknown rate kind '" + kind + "'");
}

inline DiffusionSpec diffusion_from_json(const detail::Section& s, int dim) {
  s.allow({"sigma", "sigma2", "drift"});
  if (s.has("sigma") && s.has("sigma2")) s.fail("sigma", "give either sigma or sigma2, not both");
  double sigma = std::sqrt(5.0);
  if (s.has("sigma")) sigma = s.number("sigma");
  if (s.has("sigma2")) {
    const double v = s.number("sigma2");
    if (v < 0.0) s.fail("sigma2", "must be nonnegative");
    sigma = std::sqrt(v);
  }
  DiffusionSpec d = DiffusionSpec::brownian(sigma);
  if (s.has("drift")) d.drift = s.point("drift", dim);
  return d;
}

/// Model parameters; absent entries take the example_params() values.
inline ModelParams model_from_json(const detail::Section& s) {
  s.allow({"domain", "counting", "kernel", "kernel_normalization", "rate", "diffusion", "release_rate"});
  ModelParams p;
  if (s.has("domain")) p.domain = domain_from_json(s.sub("domain"));
  if (s.has("counting")) p.counting = counting_from_json(s.sub("counting"));
  p.kernel = s.has("kernel") ? kernel_from_json(s.sub("kernel"), p.domain.dimension) : example_params().kernel;
  p.kernel_normalization = s.choice<KernelNormalization>(
      "kernel_normalization", {{"renormalize", KernelNormalization::renormalize}, {"raw", KernelNormalization::raw}},
      KernelNormalization::renormalize);
  if (s.has("rate")) p.rate = rate_from_json(s.sub("rate"));
  if (s.has("diffusion")) p.diffusion = diffusion_from_json(s.sub("diffusion"), p.domain.dimension);
  p.release_rate = s.number("release_rate", 1.0);
  const auto v = validate(p);
  if (!v.ok()) throw ConfigError(s.where("") + ": invalid model:\n" + v.summary());
  return p;
}

inline ModelParams model_from_root(const Json& root) {
  if (!root.contains("model")) return example_params();
  return model_from_json(detail::Section(root.at("model"), "model"));
}

inline InitialDensity density_from_json(const detail::Section& s, double lower, double upper) {
  s.allow({"kind", "mass", "amplitude", "mode", "center", "width", "values"});
  InitialDensity d;
  d.lower = lower;
  d.upper = upper;
  d.kind = s.choice<DensityKind>("kind",
                                 {{"uniform", DensityKind::uniform},
                                  {"cosine", DensityKind::cosine},
                                  {"gaussian", DensityKind::gaussian},
                                  {"nodal", DensityKind::nodal}},
                                 DensityKind::cosine);
  d.mass = s.number("mass", 1.0);
  d.amplitude = s.number("amplitude", 0.5);
  d.mode = static_cast<int>(s.count("mode", 1));
  d.center = s.number("center", 0.5 * (lower + upper));
  d.width = s.number("width", 0.1 * (upper - lower));
  if (s.has("values")) d.values = s.numbers("values");
  try {
    d.check();
  } catch (const std::invalid_argument& e) {
    s.fail("", e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Simulation.

struct KdeRequest {
  std::size_t nx = defaults::kde_nodes;
  std::size_t ny = defaults::kde_nodes;
};

struct SimulationSetup {
  SimConfig config;
  PlantPopulation plants;
  SeedPopulation seeds;
  // Initial plants drawn from a density (1D); sampled with the run seed.
  std::optional<InitialDensity> density;
  std::size_t density_count = 0;
  std::optional<KdeRequest> kde;
};

inline SimulationSetup simulation_from_root(const Json& root) {
  SimulationSetup out;
  out.config.params = model_from_root(root);
  const Domain& dom = out.config.params.domain;
  const int dim = dom.dimension;
  if (!root.contains("simulation")) throw ConfigError("simulation: section is required");
  const detail::Section s(root.at("simulation"), "simulation");
  s.allow({"K", "t_max", "plant_target", "dt_max", "scheme", "snapshot_every", "record_times", "store_snapshots",
           "record_events", "max_rejection_attempts", "initial", "kde"});
  SimConfig& c = out.config;
  c.K = s.count("K", 1);
  if (s.has("t_max")) c.t_max = s.number("t_max");
  if (s.has("plant_target")) c.plant_target = s.count("plant_target");
  c.dt_max = s.number("dt_max", 0.1);
  c.scheme = s.choice<EventScheme>("scheme", {{"thinning", EventScheme::thinning}, {"algorithm1", EventScheme::algorithm1}},
                                   EventScheme::thinning);
  if (s.has("snapshot_every")) c.snapshot_every = s.number("snapshot_every");
  if (s.has("record_times")) c.record_times = s.numbers("record_times");
  c.store_snapshots = s.flag("store_snapshots", true);
  c.record_events = s.flag("record_events", true);
  c.max_rejection_attempts = s.count("max_rejection_attempts", 100000);
  const auto v = validate(c);
  if (!v.ok()) throw ConfigError("simulation: invalid configuration:\n" + v.summary());

  if (s.has("initial")) {
    const auto in = s.sub("initial");
    in.allow({"plants", "seeds", "density", "count"});
    if (in.has("plants")) {
      const Json& arr = in.at("plants");
      if (!arr.is_array()) in.fail("plants", "expected an array of points");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const Json wrap{{"p", arr[i]}};
        out.plants.positions.push_back(detail::Section(wrap, in.where("plants") + "[" + std::to_string(i) + "]").point("p", dim));
      }
    }
    if (in.has("seeds")) {
      const Json& arr = in.at("seeds");
      if (!arr.is_array()) in.fail("seeds", "expected an array of {origin, position}");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const detail::Section e(arr[i], in.where("seeds") + "[" + std::to_string(i) + "]");
        e.allow({"origin", "position"});
        out.seeds.seeds.push_back(Seed{e.point("origin", dim), e.point("position", dim)});
      }
    }
    if (in.has("density")) {
      if (dim != 1 || !dom.is_box()) in.fail("density", "sampled initial plants need a 1D interval domain");
      if (!in.has("count")) in.fail("count", "required with 'density'");
      if (in.has("plants")) in.fail("density", "give either plants or density, not both");
      out.density = density_from_json(in.sub("density"), dom.lower[0], dom.upper[0]);
      out.density_count = in.count("count");
    }
  } else {
    out.plants.positions.push_back(dom.is_box() ? dom.center() : Point{0.0, 0.0});
  }
  for (const auto& p : out.plants.positions) {
    if (!dom.contains(p)) s.fail("initial", "initial plant outside the domain");
  }
  for (const auto& sd : out.seeds.seeds) {
    if (!dom.contains(sd.position)) s.fail("initial", "initial seed outside the domain");
  }
  if (s.has("kde")) {
    const Json& k = s.at("kde");
    if (k.is_boolean()) {
      if (k.get<bool>()) out.kde = KdeRequest{};
    } else {
      const auto ks = s.sub("kde");
      ks.allow({"nx", "ny"});
      out.kde = KdeRequest{ks.count("nx", defaults::kde_nodes), ks.count("ny", defaults::kde_nodes)};
      if (out.kde->nx < 2 || out.kde->ny < 2) ks.fail("", "KDE grid needs at least 2 nodes per axis");
    }
    if (out.kde && (dim != 2 || !dom.is_box())) s.fail("kde", "KDE maps need a 2D box domain");
  }
  return out;
}

// ---------------------------------------------------------------------------
// PDE runs.

enum class PdeScheme { direct, viscous, picard, reduced };

inline std::string to_string(PdeScheme s) {
  switch (s) {
    case PdeScheme::direct: return "direct";
    case PdeScheme::viscous: return "viscous";
    case PdeScheme::picard: return "picard";
    case PdeScheme::reduced: return "reduced";
  }
  return "?";
}

struct PdeRunConfig {
  PdeSetup setup = reference_pde_setup();
  PdeScheme scheme = PdeScheme::direct;
  double epsilon = 0.0;
  int reduced_dimension = 1;
  std::optional<double> snapshot_every;
  PicardOptions picard{defaults::picard_n_max, defaults::picard_iteration_tol, 0.0, defaults::picard_monotone_tol};
};

/**
 * PDE setup: the model (1D interval) provides lambda, D, mu1 and sigma; the
 * "pde" section provides the grid, time stepping and f0. Without a "model"
 * section the reference problem on [0, 1] is used.
 */
inline PdeRunConfig pde_from_root(const Json& root) {
  PdeRunConfig r;
  if (root.contains("model")) {
    r.setup.params = model_from_root(root);
    const Domain& d = r.setup.params.domain;
    if (d.dimension != 1 || !d.is_box()) throw ConfigError("model.domain: the PDE solver needs a 1D interval domain");
    r.setup.diffusivity = r.setup.params.diffusion.diffusivity();
    r.setup.bc = d.boundary == Boundary::kill ? BoundaryCondition::dirichlet : BoundaryCondition::neumann;
    r.setup.f0.lower = d.lower[0];
    r.setup.f0.upper = d.upper[0];
  }
  if (!root.contains("pde")) return r;
  const detail::Section s(root.at("pde"), "pde");
  s.allow({"nodes", "nx", "ny", "dt", "T", "epsilon", "bc", "scheme", "theta", "diffusivity", "snapshot_every",
           "reduced_dimension", "f0", "picard"});
  PdeSetup& p = r.setup;
  if (s.has("nodes")) p.nodes = s.count("nodes");
  if (s.has("nx")) p.nodes = s.count("nx");
  if (s.has("ny") && s.count("ny") != p.nodes) s.fail("ny", "x and y grids share the interval, so ny must equal nx");
  if (p.nodes < 3) s.fail("nodes", "at least 3 nodes are required");
  p.dt = s.number("dt", p.dt);
  if (!(p.dt > 0.0)) s.fail("dt", "must be positive");
  p.T = s.number("T", p.T);
  if (!(p.T >= 0.0)) s.fail("T", "must be nonnegative");
  p.theta = s.number("theta", p.theta);
  if (!(p.theta >= 0.0 && p.theta <= 1.0)) s.fail("theta", "must lie in [0, 1]");
  p.diffusivity = s.number("diffusivity", p.diffusivity);
  if (!(p.diffusivity >= 0.0)) s.fail("diffusivity", "must be nonnegative");
  p.bc = s.choice<BoundaryCondition>("bc", {{"neumann", BoundaryCondition::neumann}, {"dirichlet", BoundaryCondition::dirichlet}},
                                     p.bc);
  r.scheme = s.choice<PdeScheme>("scheme",
                                 {{"direct", PdeScheme::direct},
                                  {"viscous", PdeScheme::viscous},
                                  {"picard", PdeScheme::picard},
                                  {"reduced", PdeScheme::reduced}},
                                 PdeScheme::direct);
  r.epsilon = s.number("epsilon", 0.0);
  if (!(r.epsilon >= 0.0)) s.fail("epsilon", "must be nonnegative");
  if (s.has("snapshot_every")) {
    r.snapshot_every = s.number("snapshot_every");
    if (!(*r.snapshot_every > 0.0)) s.fail("snapshot_every", "must be positive");
  }
  r.reduced_dimension = static_cast<int>(s.count("reduced_dimension", 1));
  if (r.reduced_dimension != 1 && r.reduced_dimension != 2) s.fail("reduced_dimension", "must be 1 or 2");
  if (s.has("f0")) p.f0 = density_from_json(s.sub("f0"), p.f0.lower, p.f0.upper);
  if (s.has("picard")) {
    const auto ps = s.sub("picard");
    ps.allow({"n_max", "tol"});
    r.picard.n_max = ps.count("n_max", r.picard.n_max);
    r.picard.tol = ps.number("tol", r.picard.tol);
  }
  r.picard.epsilon = r.scheme == PdeScheme::picard ? r.epsilon : 0.0;
  const double lb = p.params.rate.bound(p.params.domain);
  if (!(p.dt * lb < 1.0))
    s.fail("dt", "stability condition dt * lambda_bar < 1 violated (dt = " + std::to_string(p.dt) +
                     ", lambda_bar = " + std::to_string(lb) + ")");
  if (r.scheme == PdeScheme::reduced && p.params.rate.depends_on_origin())
    s.fail("scheme", "the reduced model needs a maturation rate depending on the seed position only");
  return r;
}

// ---------------------------------------------------------------------------
// Studies.

inline const Json* study_section(const Json& root, const char* name) {
  if (!root.contains("study")) return nullptr;
  const Json& st = root.at("study");
  if (!st.is_object()) throw ConfigError("study: expected an object");
  if (st.contains(name)) return &st.at(name);
  return nullptr;
}

inline MomentStudyConfig moment_study_from_root(const Json& root) {
  MomentStudyConfig c;
  if (root.contains("model")) {
    const auto p = model_from_root(root);
    c.counting = p.counting;
    c.kernel = p.kernel;
    c.sigma2 = p.diffusion.sigma * p.diffusion.sigma;
  }
  if (const Json* j = study_section(root, "moments")) {
    const detail::Section s(*j, "study.moments");
    s.allow({"replicas", "checkpoints", "scheme", "dt_max", "se_factor"});
    c.replicas = s.count("replicas", c.replicas);
    if (c.replicas < 2) s.fail("replicas", "at least 2 replicas are needed for a standard error");
    if (s.has("checkpoints")) c.checkpoints = s.numbers("checkpoints");
    for (double t : c.checkpoints) {
      if (!(t >= 0.0)) s.fail("checkpoints", "times must be nonnegative");
    }
    c.scheme = s.choice<EventScheme>("scheme", {{"thinning", EventScheme::thinning}, {"algorithm1", EventScheme::algorithm1}},
                                     c.scheme);
    c.dt_max = s.number("dt_max", c.dt_max);
    c.se_factor = s.number("se_factor", c.se_factor);
  }
  return c;
}

inline ScalingStudyConfig scaling_study_from_root(const Json& root) {
  ScalingStudyConfig c;
  if (root.contains("model")) {
    c.params = model_from_root(root);
    if (c.params.domain.dimension != 1 || !c.params.domain.is_box())
      throw ConfigError("model.domain: the scaling study needs a 1D interval domain");
    if (c.params.rate.depends_on_origin())
      throw ConfigError("model.rate: the scaling study needs a constant or position-only rate");
  }
  c.f0.lower = c.params.domain.lower[0];
  c.f0.upper = c.params.domain.upper[0];
  if (const Json* j = study_section(root, "scaling")) {
    const detail::Section s(*j, "study.scaling");
    s.allow({"K", "replicas", "T", "bins", "pde_nodes", "pde_dt", "l1_threshold", "variance_ratio", "dt_max", "f0"});
    if (s.has("K")) {
      c.K.clear();
      for (double k : s.numbers("K")) {
        if (!(k >= 1.0) || k != std::floor(k)) s.fail("K", "entries must be positive integers");
        c.K.push_back(static_cast<std::size_t>(k));
      }
    }
    c.replicas = s.count("replicas", c.replicas);
    if (c.replicas < 2) s.fail("replicas", "at least 2 replicas are needed for a variance");
    c.T = s.number("T", c.T);
    c.bins = s.count("bins", c.bins);
    c.pde_nodes = s.count("pde_nodes", c.pde_nodes);
    if (c.bins == 0 || c.pde_nodes < 3 || (c.pde_nodes - 1) % c.bins != 0)
      s.fail("bins", "bins must divide pde_nodes - 1");
    c.pde_dt = s.number("pde_dt", c.pde_dt);
    c.l1_threshold = s.number("l1_threshold", c.l1_threshold);
    c.variance_ratio = s.number("variance_ratio", c.variance_ratio);
    c.dt_max = s.number("dt_max", c.dt_max);
    if (s.has("f0")) c.f0 = density_from_json(s.sub("f0"), c.f0.lower, c.f0.upper);
  }
  return c;
}

inline EpsilonStudyConfig epsilon_study_from_root(const Json& root) {
  EpsilonStudyConfig c;
  c.setup = pde_from_root(root).setup;
  if (const Json* j = study_section(root, "epsilon")) {
    const detail::Section s(*j, "study.epsilon");
    s.allow({"epsilons", "g1", "g1_tol"});
    if (s.has("epsilons")) c.epsilons = s.numbers("epsilons");
    c.g1_mode = s.choice<G1Mode>("g1", {{"viscous", G1Mode::viscous}, {"ultra_parabolic", G1Mode::ultra_parabolic}},
                                 c.g1_mode);
    c.g1_tol = s.number("g1_tol", c.g1_tol);
  }
  return c;
}

inline PicardStudyConfig picard_study_from_root(const Json& root) {
  PicardStudyConfig c;
  const auto r = pde_from_root(root);
  c.setup = r.setup;
  c.picard = r.picard;
  if (const Json* j = study_section(root, "picard")) {
    const detail::Section s(*j, "study.picard");
    s.allow({"linf_tol"});
    c.linf_tol = s.number("linf_tol", c.linf_tol);
  }
  return c;
}

inline void check_root_keys(const Json& root) {
  detail::Section(root, "").allow({"model", "simulation", "pde", "study", "description"});
}

}  // namespace gdm
