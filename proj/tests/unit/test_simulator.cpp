#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "gdm/simulator.hpp"

using namespace gdm;

namespace {

// Asymptotic Kolmogorov-Smirnov critical value at level alpha.
double ks_c(double alpha) { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

struct Stats {
  double mean, se;
};

Stats stats(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double v = 0.0;
  for (double e : x) v += (e - m) * (e - m);
  return {m, std::sqrt(v / (n - 1.0) / n)};
}

SimConfig free_config(double lambda, double t_max) {
  SimConfig c;
  c.params.domain = Domain::all_space(2);
  c.params.rate = MaturationRate::constant(lambda);
  c.t_max = t_max;
  c.store_snapshots = false;
  return c;
}

}  // namespace

TEST(NextEvent, SinglePlantReleaseWaitIsExpOne) {
  const Simulator sim(free_config(1.0, 1.0));
  const std::size_t n = 100000;
  std::vector<double> w1(n), w2(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto s = SimState::single_plant({0.0, 0.0}, RngStream(7, r));
    const auto a = sim.next_event_algorithm1(s);
    ASSERT_TRUE(a);
    ASSERT_EQ(a->second.kind, EventKind::release);
    w1[r] = a->first;
    auto s2 = SimState::single_plant({0.0, 0.0}, RngStream(8, r));
    const auto d = sim.next_event_thinning(s2, std::numeric_limits<double>::infinity());
    ASSERT_EQ(d.status, ThinningDraw::Status::event);
    ASSERT_EQ(d.event.kind, EventKind::release);
    w2[r] = d.event.time;
  }
  for (const auto& w : {w1, w2}) {
    const auto s = stats(w);
    EXPECT_LE(std::abs(s.mean - 1.0), 4.0 * s.se);
  }
}

TEST(NextEvent, SeedAtDistanceTenMaturesAtRateHalf) {
  SimConfig c;  // example domain and distance-proportional rate 0.05
  c.params.diffusion = DiffusionSpec::brownian(0.0);
  c.t_max = 1.0;
  const Simulator sim(c);
  const std::size_t n = 100000;
  std::vector<double> w1(n), w2(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto make = [&](std::uint64_t seed) {
      return SimState::initial(PlantPopulation{}, SeedPopulation{{Seed{{0.0, 0.0}, {6.0, 8.0}}}}, RngStream(seed, r));
    };
    auto s1 = make(1);
    const auto a = sim.next_event_algorithm1(s1);
    ASSERT_TRUE(a);
    ASSERT_EQ(a->second.kind, EventKind::maturation);
    w1[r] = a->first;
    auto s2 = make(2);
    const auto d = sim.next_event_thinning(s2, std::numeric_limits<double>::infinity());
    ASSERT_EQ(d.event.kind, EventKind::maturation);
    w2[r] = d.event.time;
  }
  for (const auto& w : {w1, w2}) {
    const auto s = stats(w);
    EXPECT_LE(std::abs(s.mean - 2.0), 4.0 * s.se);
  }
}

TEST(NextEvent, EmptyStateIsFinished) {
  const Simulator sim(free_config(1.0, 1.0));
  auto s = SimState::initial({}, {}, RngStream(1, 1));
  EXPECT_FALSE(sim.next_event_algorithm1(s));
  EXPECT_EQ(sim.next_event_thinning(s, std::numeric_limits<double>::infinity()).status, ThinningDraw::Status::absorbed);
  auto c = free_config(1.0, 1.0);
  c.t_max.reset();
  c.plant_target = 10;
  const auto tr = Simulator(c).run(SimState::initial({}, {}, RngStream(1, 2)));
  EXPECT_EQ(tr.stop, StopReason::absorbed);
  EXPECT_TRUE(tr.events.empty());
}

TEST(ApplyEvent, MaturationOfOnlySeed) {
  const Simulator sim(free_config(1.0, 1.0));
  auto s = SimState::initial({}, SeedPopulation{{Seed{{0.0, 0.0}, {1.0, 2.0}}}}, RngStream(1, 0));
  Event e;
  e.kind = EventKind::maturation;
  e.index = 0;
  sim.apply_event(s, e);
  EXPECT_EQ(s.seeds.size(), 0u);
  ASSERT_EQ(s.plants.size(), 1u);
  EXPECT_EQ(s.plants.positions[0][0], 1.0);
  EXPECT_EQ(s.plants.positions[0][1], 2.0);
  EXPECT_TRUE(counting_identity_holds(s));
}

TEST(ApplyEvent, ReleaseGroupSharesBarycenter) {
  auto c = free_config(1.0, 1.0);
  c.params.counting = CountingDistribution::fixed(3);
  const Simulator sim(c);
  auto s = SimState::single_plant({2.0, -1.0}, RngStream(4, 0));
  Event e;
  e.kind = EventKind::release;
  sim.apply_event(s, e);
  ASSERT_EQ(s.seeds.size(), 3u);
  EXPECT_EQ(e.kappa, 3u);
  for (const auto& sd : s.seeds.seeds) {
    EXPECT_EQ(sd.origin[0], 2.0);
    EXPECT_EQ(sd.origin[1], -1.0);
    EXPECT_EQ(sd.position[0], s.seeds.seeds[0].position[0]);
    EXPECT_EQ(sd.position[1], s.seeds.seeds[0].position[1]);
  }
  EXPECT_EQ(s.counters.seeds_released, 3u);
  EXPECT_TRUE(counting_identity_holds(s));
}

TEST(ApplyEvent, EmptyGroupChangesOnlyCounters) {
  auto c = free_config(1.0, 1.0);
  c.params.counting = CountingDistribution::fixed(0);
  const Simulator sim(c);
  auto s = SimState::single_plant({0.0, 0.0}, RngStream(4, 1));
  Event e;
  e.kind = EventKind::release;
  sim.apply_event(s, e);
  EXPECT_EQ(s.seeds.size(), 0u);
  EXPECT_EQ(s.plants.size(), 1u);
  EXPECT_EQ(s.counters.releases, 1u);
  EXPECT_THROW(
      [&] {
        Event k;
        k.kind = EventKind::kill;
        sim.apply_event(s, k);
      }(),
      SimulationError);
}

TEST(Diffuse, ZeroNoiseZeroDriftIsStatic) {
  SeedPopulation p{{Seed{{0.0, 0.0}, {1.0, 2.0}}, Seed{{0.0, 0.0}, {-3.0, 4.0}}}};
  const auto before = p.seeds;
  RngStream rng(1, 1);
  diffuse(p, 5.0, DiffusionSpec::brownian(0.0), Domain::all_space(2), 0.1, rng);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p.seeds[i].position[0], before[i].position[0]);
    EXPECT_EQ(p.seeds[i].position[1], before[i].position[1]);
  }
}

TEST(Diffuse, FreeVariancePerAxis) {
  const std::size_t n = 100000;
  SeedPopulation p;
  p.seeds.assign(n, Seed{{0.0, 0.0}, {0.0, 0.0}});
  RngStream rng(9, 9);
  diffuse(p, 1.0, DiffusionSpec::brownian(std::sqrt(5.0)), Domain::all_space(2), 0.1, rng);
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = p.seeds[i].position[axis] * p.seeds[i].position[axis];
    const auto s = stats(sq);
    EXPECT_LE(std::abs(s.mean - 5.0), 4.0 * s.se);
  }
}

TEST(Diffuse, ReflectedLongTimeIsUniform) {
  const std::size_t n = 100000;
  SeedPopulation p;
  p.seeds.assign(n, Seed{{0.2, 0.0}, {0.2, 0.0}});
  RngStream rng(3, 4);
  const auto box = Domain::interval(0.0, 1.0, Boundary::reflect);
  diffuse(p, 10.0, DiffusionSpec::brownian(1.0), box, 0.1, rng);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = p.seeds[i].position[0];
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(x[i] - static_cast<double>(i) / n), std::abs(x[i] - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, ks_c(1e-3) / std::sqrt(static_cast<double>(n)));
}

TEST(Diffuse, KillingRemovesInOrder) {
  SeedPopulation p;
  for (int i = 0; i < 1000; ++i) p.seeds.push_back(Seed{{static_cast<double>(i), 0.0}, {0.5, 0.5}});
  RngStream rng(5, 5);
  const auto box = Domain::box(2, {0.0, 0.0}, {1.0, 1.0}, Boundary::kill);
  const auto res = diffuse(p, 1.0, DiffusionSpec::brownian(0.3), box, 0.01, rng);
  EXPECT_GT(res.killed.size(), 0u);
  EXPECT_EQ(res.killed.size() + p.size(), 1000u);
  EXPECT_TRUE(std::is_sorted(res.killed.begin(), res.killed.end()));
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LT(p.seeds[i - 1].origin[0], p.seeds[i].origin[0]);
  for (const auto& s : p.seeds) EXPECT_TRUE(box.contains(s.position));
}

TEST(Run, ConstantRateSchemesAgree) {
  auto c = free_config(1.0, 2.0);
  c.record_events = false;
  c.params.counting = CountingDistribution::negative_binomial(1.0, 25.0);
  auto c2 = c;
  c2.scheme = EventScheme::algorithm1;
  const Simulator thin(c), alg(c2);
  const std::size_t n = 10000;
  std::vector<double> a(n), b(n);
  double cand = 0.0, acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto t1 = thin.run(SimState::single_plant({0.0, 0.0}, RngStream(100, r)));
    a[r] = static_cast<double>(t1.final_state.plants.size());
    cand += static_cast<double>(t1.final_state.counters.candidates);
    acc += t1.final_state.counters.acceptance_sum;
    b[r] = static_cast<double>(alg.run(SimState::single_plant({0.0, 0.0}, RngStream(200, r))).final_state.plants.size());
  }
  EXPECT_EQ(acc, cand);  // acceptance probability is exactly 1
  const double crit = ks_c(1e-3) * std::sqrt(2.0 / static_cast<double>(n));
  EXPECT_LT(ks_two_sample(a, b), crit);
}

TEST(Run, ZeroRateNeverMatures) {
  auto c = free_config(0.0, 5.0);
  const auto tr = Simulator(c).run(SimState::single_plant({0.0, 0.0}, RngStream(3, 3)));
  EXPECT_EQ(tr.final_state.counters.maturations, 0u);
  EXPECT_EQ(tr.final_state.plants.size(), 1u);
  EXPECT_GT(tr.final_state.counters.releases, 0u);
  for (const auto& e : tr.events) EXPECT_NE(e.kind, EventKind::maturation);
}

TEST(Run, NoReleaseNoSeedsIsConstant) {
  auto c = free_config(1.0, 3.0);
  c.params.release_rate = 0.0;
  c.snapshot_every = 1.0;
  c.store_snapshots = true;
  const auto tr = Simulator(c).run(SimState::initial(PlantPopulation{{{1.0, 1.0}, {2.0, 2.0}}}, {}, RngStream(1, 1)));
  EXPECT_TRUE(tr.events.empty());
  EXPECT_EQ(tr.stop, StopReason::t_max);
  ASSERT_EQ(tr.snapshots.size(), 4u);
  for (const auto& s : tr.snapshots) {
    ASSERT_EQ(s.plants.size(), 2u);
    EXPECT_EQ(s.plants.positions[1][0], 2.0);
  }
}

TEST(Run, RecordingSchedule) {
  auto c = free_config(1.0, 1.0);
  c.snapshot_every = 0.25;
  c.record_times = {0.6, 0.1};
  const auto tr = Simulator(c).run(SimState::single_plant({0.0, 0.0}, RngStream(2, 2)));
  const std::vector<double> want{0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 1.0};
  ASSERT_EQ(tr.moments.times.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(tr.moments.times[i], want[i], 1e-12);
}

TEST(Run, PatchyExampleReachesTarget) {
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    for (auto bc : {Boundary::reflect, Boundary::kill}) {
      SimConfig c;
      c.params = example_params(kind);
      c.params.domain.boundary = bc;
      c.plant_target = 2000;
      c.store_snapshots = false;
      const auto tr = Simulator(c).run(SimState::single_plant({0.0, 0.0}, RngStream(11, 0)));
      EXPECT_EQ(tr.stop, StopReason::plant_target);
      EXPECT_GE(tr.final_state.plants.size(), 2000u);
      EXPECT_TRUE(counting_identity_holds(tr.final_state));
      for (const auto& p : tr.final_state.plants.positions) ASSERT_TRUE(c.params.domain.contains(p));
    }
  }
}

TEST(Run, SameSeedSameEvents) {
  SimConfig c;
  c.params = example_params(KernelKind::power_law);
  c.params.domain.boundary = Boundary::kill;
  c.plant_target = 300;
  for (auto scheme : {EventScheme::thinning, EventScheme::algorithm1}) {
    c.scheme = scheme;
    const Simulator sim(c);
    const auto a = sim.run(SimState::single_plant({0.0, 0.0}, RngStream(77, 1)));
    const auto b = sim.run(SimState::single_plant({0.0, 0.0}, RngStream(77, 1)));
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      ASSERT_EQ(a.events[i].kind, b.events[i].kind);
      ASSERT_EQ(a.events[i].time, b.events[i].time);
      ASSERT_EQ(a.events[i].index, b.events[i].index);
      ASSERT_EQ(a.events[i].y[0], b.events[i].y[0]);
      ASSERT_EQ(a.events[i].y[1], b.events[i].y[1]);
    }
  }
}

TEST(Run, KillingBoxKeepsIdentityBothSchemes) {
  SimConfig c;
  c.params.domain = Domain::box(2, {-10.0, -10.0}, {10.0, 10.0}, Boundary::kill);
  c.params.kernel = {KernelKind::exponential, 1.0, 4.0};
  c.params.rate = MaturationRate::distance_proportional(0.05);
  c.params.counting = CountingDistribution::poisson(4.0);
  c.t_max = 6.0;
  for (auto scheme : {EventScheme::thinning, EventScheme::algorithm1}) {
    c.scheme = scheme;
    const auto tr = Simulator(c).run(SimState::single_plant({0.0, 0.0}, RngStream(5, 0)));
    const auto& s = tr.final_state;
    EXPECT_TRUE(counting_identity_holds(s));
    EXPECT_GT(s.counters.kills, 0u);
    std::size_t logged = 0;
    for (const auto& e : tr.events) logged += e.kind == EventKind::kill;
    EXPECT_EQ(logged, s.counters.kills);
    for (const auto& sd : s.seeds.seeds) EXPECT_TRUE(c.params.domain.contains(sd.position));
  }
}

TEST(Run, ThinningAcceptanceMatchesTimeAverageRate) {
  SimConfig c;
  c.params = example_params();
  c.plant_target = 1000;
  c.snapshot_every = 0.05;
  c.record_events = false;
  const Simulator sim(c);
  const auto tr = sim.run(SimState::single_plant({0.0, 0.0}, RngStream(31, 0)));
  const auto& k = tr.final_state.counters;
  ASSERT_GT(k.candidates, 1000u);
  const double acceptance = k.acceptance_sum / static_cast<double>(k.candidates);

  // Accepted candidates are Bernoulli(lambda / lambda_bar) given the path.
  const double matured = static_cast<double>(k.maturations);
  EXPECT_LE(std::abs(matured - k.acceptance_sum), 4.0 * std::sqrt(k.acceptance_sum));

  // Candidates arrive uniformly in seed-time, so their mean acceptance is the
  // seed-time average of lambda / lambda_bar, sampled here on the snapshot grid.
  double lam = 0.0, count = 0.0;
  for (const auto& s : tr.snapshots) {
    for (const auto& sd : s.seeds.seeds) lam += sim.rate_of(sd);
    count += static_cast<double>(s.seeds.size());
  }
  const double time_avg = lam / count / sim.rate_bound();
  EXPECT_NEAR(acceptance, time_avg, 0.05 * time_avg);
}

TEST(Config, ValidationErrors) {
  SimConfig c;
  EXPECT_TRUE(validate(c).mentions("stop rule"));
  c.t_max = 1.0;
  c.K = 0;
  EXPECT_TRUE(validate(c).mentions("K must"));
  c.K = 1;
  c.dt_max = 0.0;
  EXPECT_FALSE(validate(c).ok());
  EXPECT_THROW(Simulator{c}, std::invalid_argument);
}
