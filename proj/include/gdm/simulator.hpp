#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gdm/geometry.hpp"
#include "gdm/kernels.hpp"
#include "gdm/model.hpp"
#include "gdm/observables.hpp"
#include "gdm/rng.hpp"

namespace gdm {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind { release, maturation, kill };

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::release: return "release";
    case EventKind::maturation: return "maturation";
    case EventKind::kill: return "kill";
  }
  return "?";
}

/**
 * One state change. `index` is a plant index for releases and a seed index
 * for maturations and kills, valid in the state just before the event.
 * `x` is the plant (or seed origin) position; `y` the barycenter (release)
 * or the seed position (maturation, kill).
 */
struct Event {
  EventKind kind = EventKind::release;
  double time = 0.0;
  std::size_t index = 0;
  std::uint64_t kappa = 0;
  Point x{};
  Point y{};
};

struct Counters {
  std::uint64_t releases = 0;
  std::uint64_t maturations = 0;
  std::uint64_t kills = 0;
  std::uint64_t seeds_released = 0;
  // Thinning bookkeeping: candidate maturations tried, and the sum of their
  // acceptance probabilities lambda / lambda_bar.
  std::uint64_t candidates = 0;
  double acceptance_sum = 0.0;
};

/**
 * Simulation state. Each seed carries its own clock: its position is exact
 * at `seed_clock[i]`, which may lag behind `t`. Diffusion is only
 * integrated when a seed's position is needed, which is equivalent in law
 * to moving every seed at every event because the seeds are independent.
 */
struct SimState {
  double t = 0.0;
  PlantPopulation plants;
  SeedPopulation seeds;
  std::vector<double> seed_clock;
  RngStream rng{0, 0};
  Counters counters;
  std::uint64_t K = 1;
  std::size_t initial_plants = 0;
  std::size_t initial_seeds = 0;

  static SimState initial(PlantPopulation plants, SeedPopulation seeds, RngStream rng, std::uint64_t K = 1,
                          double t0 = 0.0) {
    SimState s;
    s.t = t0;
    s.initial_plants = plants.size();
    s.initial_seeds = seeds.size();
    s.plants = std::move(plants);
    s.seeds = std::move(seeds);
    s.seed_clock.assign(s.seeds.size(), t0);
    s.rng = rng;
    s.K = K;
    return s;
  }

  /// A single plant at `where` and no seeds.
  static SimState single_plant(const Point& where, RngStream rng) {
    return initial(PlantPopulation{{where}}, SeedPopulation{}, rng);
  }

  double weight() const { return 1.0 / static_cast<double>(K); }
};

inline bool counting_identity_holds(const SimState& s) {
  const auto& c = s.counters;
  return s.plants.size() == s.initial_plants + c.maturations &&
         s.seeds.size() + c.maturations + c.kills == s.initial_seeds + c.seeds_released &&
         s.seed_clock.size() == s.seeds.size();
}

enum class EventScheme { algorithm1, thinning };

struct SimConfig {
  ModelParams params;
  std::uint64_t K = 1;
  std::optional<double> t_max;
  std::optional<std::size_t> plant_target;
  double dt_max = 0.1;
  EventScheme scheme = EventScheme::thinning;
  std::optional<double> snapshot_every;
  std::vector<double> record_times;  // extra snapshot/moment times, any order
  bool store_snapshots = true;
  bool record_events = true;
  std::size_t max_rejection_attempts = 100000;
};

inline ValidationResult validate(const SimConfig& c) {
  ValidationResult r = validate(c.params);
  if (c.K == 0) r.violations.push_back({"simulation", "K must be a positive integer"});
  if (!(c.dt_max > 0.0) || !std::isfinite(c.dt_max))
    r.violations.push_back({"simulation", "dt_max must be positive"});
  if (!c.t_max && !c.plant_target) r.violations.push_back({"simulation", "a stop rule (t_max or plant_target) is required"});
  if (c.t_max && !(*c.t_max >= 0.0)) r.violations.push_back({"simulation", "t_max must be nonnegative"});
  if (c.snapshot_every && !(*c.snapshot_every > 0.0))
    r.violations.push_back({"simulation", "snapshot cadence must be positive"});
  return r;
}

// ---------------------------------------------------------------------------
// Seed motion.

/**
 * Advances one position by `dt` with Euler-Maruyama substeps of length at
 * most dt_max. Returns the elapsed time at which the path left a killing
 * domain, or nullopt if the seed survived.
 */
inline std::optional<double> advance_position(Point& y, double dt, const DiffusionSpec& diff, const Domain& domain,
                                              double dt_max, RngStream& rng) {
  if (!(dt > 0.0)) return std::nullopt;
  const int dim = domain.dimension;
  const auto n = static_cast<std::size_t>(std::ceil(dt / dt_max));
  const double h = dt / static_cast<double>(n);
  const double sqrt_h = std::sqrt(h);
  const bool constant = diff.is_constant();
  for (std::size_t k = 0; k < n; ++k) {
    const Point a = constant ? diff.drift : diff.drift_at(y);
    const double s = constant ? diff.sigma : diff.sigma_at(y);
    for (int i = 0; i < dim; ++i) y[i] += a[i] * h + s * sqrt_h * rng.normal();
    for (int i = 0; i < dim; ++i) {
      if (!std::isfinite(y[i])) throw SimulationError("diffuse: non-finite seed position (diffusion blow-up)");
    }
    if (domain.is_box() && !domain.contains(y)) {
      if (domain.boundary == Boundary::kill) return h * static_cast<double>(k + 1);
      y = reflect_into(domain, y);
    }
  }
  return std::nullopt;
}

struct DiffuseResult {
  std::vector<std::size_t> killed;  // indices before removal, ascending
};

/// Moves every seed by `dt` and removes the killed ones, keeping the order of survivors.
inline DiffuseResult diffuse(SeedPopulation& seeds, double dt, const DiffusionSpec& diff, const Domain& domain,
                             double dt_max, RngStream& rng) {
  if (!(dt >= 0.0)) throw std::invalid_argument("diffuse: dt must be nonnegative");
  DiffuseResult res;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < seeds.seeds.size(); ++i) {
    Seed s = seeds.seeds[i];
    if (advance_position(s.position, dt, diff, domain, dt_max, rng)) {
      res.killed.push_back(i);
    } else {
      seeds.seeds[keep++] = s;
    }
  }
  seeds.seeds.resize(keep);
  return res;
}

// ---------------------------------------------------------------------------

struct Snapshot {
  double t = 0.0;
  PlantPopulation plants;
  SeedPopulation seeds;
};

enum class StopReason { t_max, plant_target, absorbed };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::t_max: return "t_max";
    case StopReason::plant_target: return "plant_target";
    case StopReason::absorbed: return "absorbed";
  }
  return "?";
}

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<Event> events;
  MomentSeries moments;
  SimState final_state;
  StopReason stop = StopReason::t_max;
};

/// Outcome of one call to the thinning sampler.
struct ThinningDraw {
  enum class Status { event, horizon, absorbed } status = Status::event;
  Event event;
  std::vector<Event> kills;  // seeds found dead while drawing
};

/**
 * Event-driven simulator of the grouped dispersal dynamics.
 *
 * Two schemes share the release/maturation rules:
 *  - algorithm1 draws the next event from the total rate with maturation
 *    rates frozen at current positions, then moves all seeds over the wait.
 *  - thinning (default) proposes maturations at the constant rate lambda_bar
 *    per seed and accepts with lambda(x, y(t)) / lambda_bar, which is exact for
 *    position-dependent rates.
 */
class Simulator {
 public:
  explicit Simulator(SimConfig config)
      : cfg_(std::move(config)), kernel_(cfg_.params.kernel, cfg_.params.domain.dimension) {
    const auto v = validate(cfg_);
    if (!v.ok()) throw std::invalid_argument("invalid simulation config:\n" + v.summary());
    lambda_bar_ = cfg_.params.rate.bound(cfg_.params.domain);
  }

  const SimConfig& config() const { return cfg_; }
  const DispersalKernel& kernel() const { return kernel_; }
  double rate_bound() const { return lambda_bar_; }

  double rate_of(const Seed& s) const { return cfg_.params.rate(s.origin, s.position, dim()); }

  /**
   * Frozen-rate draw: wait ~ Exp(R) with R = rho N_p + sum_i lambda_i, then
   * a release from a uniform plant with probability rho N_p / R, otherwise a
   * maturation of seed i with probability lambda_i / R. Seeds must be synced
   * to state.t. Returns nullopt when R = 0.
   */
  std::optional<std::pair<double, Event>> next_event_algorithm1(SimState& s) const {
    const double release_total = cfg_.params.release_rate * static_cast<double>(s.plants.size());
    std::vector<double> rates(s.seeds.size());
    double lam_total = 0.0;
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      rates[i] = rate_of(s.seeds.seeds[i]);
      lam_total += rates[i];
    }
    const double R = release_total + lam_total;
    if (!(R > 0.0)) return std::nullopt;
    const double wait = s.rng.exponential(R);
    const double theta = s.rng.uniform() * R;
    Event e;
    e.time = s.t + wait;
    if (theta < release_total) {
      e.kind = EventKind::release;
      e.index = std::min(static_cast<std::size_t>(theta / cfg_.params.release_rate), s.plants.size() - 1);
      e.x = s.plants.positions[e.index];
      return std::pair{wait, e};
    }
    double acc = release_total;
    std::size_t pick = s.seeds.size();
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      if (rates[i] <= 0.0) continue;
      pick = i;
      acc += rates[i];
      if (theta < acc) break;
    }
    if (pick == s.seeds.size()) throw SimulationError("algorithm1: no seed with positive rate selected");
    e.kind = EventKind::maturation;
    e.index = pick;
    e.x = s.seeds.seeds[pick].origin;
    e.y = s.seeds.seeds[pick].position;
    return std::pair{wait, e};
  }

  /**
   * Thinning draw up to `horizon`. Candidate events arrive at rate
   * rho N_p + lambda_bar N_s. A seed candidate is first brought to the
   * candidate time; if its path was killed on the way it is removed and the
   * draw continues. If no event happens before `horizon`, state.t is set to
   * the horizon and status is `horizon`.
   */
  ThinningDraw next_event_thinning(SimState& s, double horizon) const {
    ThinningDraw out;
    const double rho = cfg_.params.release_rate;
    for (;;) {
      const double release_total = rho * static_cast<double>(s.plants.size());
      const double R = release_total + lambda_bar_ * static_cast<double>(s.seeds.size());
      if (!(R > 0.0)) {
        out.status = std::isfinite(horizon) ? ThinningDraw::Status::horizon : ThinningDraw::Status::absorbed;
        if (std::isfinite(horizon)) s.t = horizon;
        return out;
      }
      const double wait = s.rng.exponential(R);
      if (s.t + wait > horizon) {
        s.t = horizon;
        out.status = ThinningDraw::Status::horizon;
        return out;
      }
      s.t += wait;
      const double theta = s.rng.uniform() * R;
      if (theta < release_total) {
        Event e;
        e.kind = EventKind::release;
        e.time = s.t;
        e.index = std::min(static_cast<std::size_t>(theta / rho), s.plants.size() - 1);
        e.x = s.plants.positions[e.index];
        out.event = e;
        return out;
      }
      const std::size_t i = s.rng.uniform_index(s.seeds.size());
      if (auto kill = sync_seed(s, i, s.t)) {
        out.kills.push_back(*kill);
        remove_seed_swap(s, i);
        ++s.counters.kills;
        continue;
      }
      const Seed& seed = s.seeds.seeds[i];
      const double p = rate_of(seed) / lambda_bar_;
      ++s.counters.candidates;
      s.counters.acceptance_sum += p;
      if (s.rng.uniform() < p) {
        Event e;
        e.kind = EventKind::maturation;
        e.time = s.t;
        e.index = i;
        e.x = seed.origin;
        e.y = seed.position;
        out.event = e;
        return out;
      }
    }
  }

  /**
   * Applies a release or maturation. A release samples kappa ~ q and the
   * barycenter y ~ D(x, .), then adds kappa seeds with origin x, all at y.
   * A maturation turns the seed into a plant at its position; the seed slot
   * is filled by the last seed.
   */
  void apply_event(SimState& s, Event& e) const {
    switch (e.kind) {
      case EventKind::release: {
        if (e.index >= s.plants.size()) throw SimulationError("apply_event: plant index out of range");
        const Point x = s.plants.positions[e.index];
        e.x = x;
        e.kappa = sample_count(cfg_.params.counting, s.rng);
        e.y = kernel_.sample(x, cfg_.params.domain, s.rng, cfg_.max_rejection_attempts);
        for (std::uint64_t k = 0; k < e.kappa; ++k) {
          s.seeds.seeds.push_back(Seed{x, e.y});
          s.seed_clock.push_back(s.t);
        }
        ++s.counters.releases;
        s.counters.seeds_released += e.kappa;
        break;
      }
      case EventKind::maturation: {
        if (e.index >= s.seeds.size()) throw SimulationError("apply_event: seed index out of range");
        s.plants.positions.push_back(s.seeds.seeds[e.index].position);
        remove_seed_swap(s, e.index);
        ++s.counters.maturations;
        break;
      }
      case EventKind::kill: throw SimulationError("apply_event: kill events are applied by diffusion");
    }
  }

  /// Brings every seed to time `t`, removing killed seeds (order preserved) and returning their kill events.
  std::vector<Event> sync_all(SimState& s, double t) const {
    std::vector<Event> kills;
    std::size_t keep = 0;
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      if (auto k = sync_seed(s, i, t)) {
        k->index = i;
        kills.push_back(*k);
        continue;
      }
      s.seeds.seeds[keep] = s.seeds.seeds[i];
      s.seed_clock[keep] = s.seed_clock[i];
      ++keep;
    }
    s.seeds.seeds.resize(keep);
    s.seed_clock.resize(keep);
    s.counters.kills += kills.size();
    return kills;
  }

  /**
   * Runs until the stop rule fires. Snapshots and moment rows are taken at
   * t0, at every multiple of the snapshot cadence, and at the final time.
   */
  Trajectory run(SimState state) const {
    Trajectory tr;
    tr.moments.weight = state.weight();
    const double t0 = state.t;
    const double t_end = cfg_.t_max ? *cfg_.t_max : std::numeric_limits<double>::infinity();
    const double every = cfg_.snapshot_every ? *cfg_.snapshot_every : 0.0;
    std::uint64_t next_k = 1;
    std::vector<double> extra = cfg_.record_times;
    std::sort(extra.begin(), extra.end());
    std::size_t next_extra = 0;
    while (next_extra < extra.size() && extra[next_extra] <= t0) ++next_extra;
    auto next_snapshot = [&] {
      const double periodic =
          every > 0.0 ? t0 + every * static_cast<double>(next_k) : std::numeric_limits<double>::infinity();
      return next_extra < extra.size() ? std::min(periodic, extra[next_extra]) : periodic;
    };
    auto advance_schedule = [&] {
      const double t = state.t;
      while (every > 0.0 && t0 + every * static_cast<double>(next_k) <= t) ++next_k;
      while (next_extra < extra.size() && extra[next_extra] <= t) ++next_extra;
    };
    auto log_kills = [&](std::vector<Event>& kills) {
      if (cfg_.record_events) tr.events.insert(tr.events.end(), kills.begin(), kills.end());
    };
    auto record = [&](double t) {
      auto kills = sync_all(state, t);
      log_kills(kills);
      tr.moments.push(t, state.plants.size(), state.seeds.size());
      if (cfg_.store_snapshots && (tr.snapshots.empty() || t > tr.snapshots.back().t))
        tr.snapshots.push_back({t, state.plants, state.seeds});
    };
    auto target_reached = [&] { return cfg_.plant_target && state.plants.size() >= *cfg_.plant_target; };

    record(state.t);
    for (;;) {
      if (target_reached()) {
        tr.stop = StopReason::plant_target;
        break;
      }
      if (state.t >= t_end) {
        tr.stop = StopReason::t_max;
        break;
      }
      const double horizon = std::min(next_snapshot(), t_end);

      if (cfg_.scheme == EventScheme::thinning) {
        ThinningDraw d = next_event_thinning(state, horizon);
        log_kills(d.kills);
        if (d.status == ThinningDraw::Status::absorbed) {
          tr.stop = StopReason::absorbed;
          break;
        }
        if (d.status == ThinningDraw::Status::horizon) {
          if (state.t >= next_snapshot()) {
            record(state.t);
            advance_schedule();
          }
          continue;
        }
        apply_event(state, d.event);
        if (cfg_.record_events) tr.events.push_back(d.event);
        check_identity(state);
        continue;
      }

      // algorithm1: seeds are always synced to state.t here.
      auto draw = next_event_algorithm1(state);
      const double t_next = draw ? state.t + draw->first : std::numeric_limits<double>::infinity();
      if (t_next > horizon) {
        if (!std::isfinite(horizon)) {
          tr.stop = StopReason::absorbed;
          break;
        }
        state.t = horizon;
        auto kills = sync_all(state, horizon);
        log_kills(kills);
        if (state.t >= next_snapshot()) {
          record(state.t);
          advance_schedule();
        }
        continue;
      }
      // Memorylessness lets the draw be discarded at the horizon; below it,
      // move seeds over the wait first and apply the event at its time.
      Event e = draw->second;
      state.t = t_next;
      auto kills = sync_all(state, t_next);
      log_kills(kills);
      if (e.kind == EventKind::maturation) {
        const auto it = std::lower_bound(kills.begin(), kills.end(), e.index,
                                         [](const Event& k, std::size_t idx) { return k.index < idx; });
        if (it != kills.end() && it->index == e.index) continue;  // the chosen seed died during the wait
        e.index -= static_cast<std::size_t>(it - kills.begin());
        e.y = state.seeds.seeds[e.index].position;
      }
      apply_event(state, e);
      if (cfg_.record_events) tr.events.push_back(e);
      check_identity(state);
    }
    record(state.t);
    tr.final_state = std::move(state);
    return tr;
  }

 private:
  int dim() const { return cfg_.params.domain.dimension; }

  /// Moves seed i from its clock to `t`; returns a kill event if the path left a killing domain.
  std::optional<Event> sync_seed(SimState& s, std::size_t i, double t) const {
    const double c = s.seed_clock[i];
    if (!(t > c)) return std::nullopt;
    Seed& seed = s.seeds.seeds[i];
    const auto hit = advance_position(seed.position, t - c, cfg_.params.diffusion, cfg_.params.domain, cfg_.dt_max,
                                      s.rng);
    if (hit) {
      Event k;
      k.kind = EventKind::kill;
      k.time = c + *hit;
      k.index = i;
      k.x = seed.origin;
      k.y = seed.position;
      return k;
    }
    s.seed_clock[i] = t;
    return std::nullopt;
  }

  static void remove_seed_swap(SimState& s, std::size_t i) {
    s.seeds.seeds[i] = s.seeds.seeds.back();
    s.seeds.seeds.pop_back();
    s.seed_clock[i] = s.seed_clock.back();
    s.seed_clock.pop_back();
  }

  static void check_identity([[maybe_unused]] const SimState& s) {
#ifndef NDEBUG
    if (!counting_identity_holds(s)) throw SimulationError("counting identity violated");
#endif
  }

  SimConfig cfg_;
  DispersalKernel kernel_;
  double lambda_bar_ = 0.0;
};

/// Free-function form of Simulator::run.
inline Trajectory run(const SimConfig& config, SimState initial) { return Simulator(config).run(std::move(initial)); }

}  // namespace gdm
