#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gdm/kernels.hpp"

using namespace gdm;

namespace {

constexpr double pi = std::numbers::pi;

// Midpoint rule over a box; independent of the sector quadrature in domain_mass.
double grid_mass(const DispersalKernel& k, const Point& x, const Domain& box, std::size_t n) {
  const double hx = box.width(0) / static_cast<double>(n), hy = box.width(1) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      s += k.density(x, Point{box.lower[0] + (i + 0.5) * hx, box.lower[1] + (j + 0.5) * hy});
  return s * hx * hy;
}

// Radial integral of the raw density over the whole space, by substitution r = u/(1-u).
double total_mass(const DispersalKernel& k) {
  const std::size_t n = 200000;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (i + 0.5) / static_cast<double>(n);
    const double r = u / (1.0 - u);
    const double jac = 1.0 / ((1.0 - u) * (1.0 - u));
    const double shell = k.dimension() == 2 ? 2.0 * pi * r : 2.0;
    s += shell * k.radial_density(r) * jac;
  }
  return s / static_cast<double>(n);
}

double empirical_mean_check(const DispersalKernel& k, std::uint64_t seed, double target) {
  RngStream rng(seed, 0);
  const std::size_t n = 100000;
  double s = 0.0, s2 = 0.0;
  const auto all = Domain::all_space(k.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    const Point y = k.sample(Point{0.0, 0.0}, all, rng);
    const double r = std::hypot(y[0], y[1]);
    s += r;
    s2 += r * r;
  }
  const double m = s / n;
  const double se = std::sqrt((s2 / n - m * m) / n);
  return std::abs(m - target) / se;  // in standard errors
}

}  // namespace

TEST(KernelDensity, PeakValues) {
  const DispersalKernel e({KernelKind::exponential, 5.0, 4.0}, 2);
  EXPECT_NEAR(e.density(Point{1.0, 2.0}, Point{1.0, 2.0}), 1.0 / (50.0 * pi), 1e-15);
  EXPECT_NEAR(e.density(Point{0.0, 0.0}, Point{0.0, 0.0}), 6.366197723675814e-3, 1e-15);
  const DispersalKernel p({KernelKind::power_law, 5.0, 4.0}, 2);
  EXPECT_NEAR(p.density(Point{0.0, 0.0}, Point{0.0, 0.0}), 3.0 / (25.0 * pi), 1e-15);
  EXPECT_NEAR(p.density(Point{0.0, 0.0}, Point{0.0, 0.0}), 3.819718634205488e-2, 1e-15);
}

TEST(KernelDensity, DecaysToZero) {
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    for (int d : {1, 2}) {
      const DispersalKernel k({kind, 5.0, 4.0}, d);
      EXPECT_LT(k.density(Point{0.0, 0.0}, Point{1e6, 0.0}), 1e-15);
      EXPECT_GT(k.density(Point{0.0, 0.0}, Point{1.0, 0.0}), 0.0);
    }
  }
}

TEST(KernelDensity, RawDensityIntegratesToOne) {
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    for (int d : {1, 2}) {
      const DispersalKernel k({kind, 1.0, 4.0}, d);
      EXPECT_NEAR(total_mass(k), 1.0, 1e-6) << "kind " << static_cast<int>(kind) << " d " << d;
    }
  }
}

TEST(KernelDensity, RejectsNonFinite) {
  const DispersalKernel k({KernelKind::exponential, 5.0, 4.0}, 2);
  EXPECT_THROW(k.density(Point{NAN, 0.0}, Point{0.0, 0.0}), KernelError);
}

TEST(KernelDensity, InvalidSpec) {
  EXPECT_THROW(DispersalKernel({KernelKind::exponential, 0.0, 4.0}, 2), KernelError);
  EXPECT_THROW(DispersalKernel({KernelKind::power_law, 1.0, 2.0}, 2), KernelError);
  EXPECT_THROW(DispersalKernel({KernelKind::gaussian, 1.0, 4.0}, 3), KernelError);
}

TEST(DomainMass, OneDimensionalClosedForm) {
  const DispersalKernel k({KernelKind::exponential, 0.2, 4.0}, 1);
  const auto d = Domain::interval(0.0, 1.0, Boundary::reflect);
  EXPECT_NEAR(k.domain_mass(Point{0.5, 0.0}, d), 1.0 - std::exp(-2.5), 1e-14);
  EXPECT_NEAR(k.domain_mass(Point{0.0, 0.0}, d), 0.5 * (1.0 - std::exp(-5.0)), 1e-14);
}

TEST(DomainMass, CornerOfWideBoxIsAQuarter) {
  const auto box = Domain::box(2, {0.0, 0.0}, {1.0, 1.0}, Boundary::reflect);
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian}) {
    const DispersalKernel k({kind, 0.01, 4.0}, 2);
    EXPECT_NEAR(k.domain_mass(Point{0.0, 0.0}, box), 0.25, 1e-12);
    EXPECT_NEAR(k.domain_mass(Point{0.5, 0.0}, box), 0.5, 1e-12);
    EXPECT_NEAR(k.domain_mass(Point{0.5, 0.5}, box), 1.0, 1e-12);
  }
}

TEST(DomainMass, AgreesWithGridIntegration) {
  const auto box = Domain::box(2, {-100.0, -100.0}, {100.0, 100.0}, Boundary::reflect);
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    const DispersalKernel k(example_params(kind).kernel, 2);
    for (const Point x : {Point{90.0, -95.0}, Point{0.0, 99.0}, Point{-100.0, -100.0}}) {
      EXPECT_NEAR(k.domain_mass(x, box), grid_mass(k, x, box, 2000), 2e-4);
    }
  }
}

TEST(DomainMass, RenormalizedDensityIntegratesToOne) {
  const auto box = Domain::box(2, {0.0, 0.0}, {1.0, 1.0}, Boundary::reflect);
  const DispersalKernel k({KernelKind::gaussian, 0.3, 4.0}, 2);
  const Point x{0.1, 0.8};
  const double mass = k.domain_mass(x, box);
  EXPECT_NEAR(mass, grid_mass(k, x, box, 1000), 1e-5);
  const Point y{0.4, 0.4};
  EXPECT_DOUBLE_EQ(k.density(x, y, box, KernelNormalization::renormalize), k.density(x, y) / mass);
  EXPECT_DOUBLE_EQ(k.density(x, y, box, KernelNormalization::raw), k.density(x, y));
  EXPECT_EQ(k.density(x, Point{1.5, 0.5}, box, KernelNormalization::renormalize), 0.0);
}

TEST(Sampling, MeanDisplacementTen) {
  // Each kernel at its calibrated scale has mean displacement 10 in the plane.
  EXPECT_LE(empirical_mean_check(DispersalKernel({KernelKind::exponential, 5.0, 4.0}, 2), 11, 10.0), 4.0);
  const double bg = calibrate_beta(KernelKind::gaussian, 10.0, 2);
  EXPECT_LE(empirical_mean_check(DispersalKernel({KernelKind::gaussian, bg, 4.0}, 2), 12, 10.0), 4.0);
  EXPECT_LE(empirical_mean_check(DispersalKernel({KernelKind::power_law, 5.0, 4.0}, 2), 13, 10.0), 4.0);
}

TEST(Sampling, ClosedFormMeans) {
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    for (int d : {1, 2}) {
      const DispersalKernel k({kind, 2.0, 5.0}, d);
      EXPECT_LE(empirical_mean_check(k, 20 + d, k.mean_displacement()), 4.0);
    }
  }
}

TEST(Sampling, PowerLawQuantileInvertsCdf) {
  const DispersalKernel k({KernelKind::power_law, 1.0, 4.0}, 2);
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9}) {
    const double u = k.power_law_table()->quantile(p);
    EXPECT_NEAR(k.radial_cdf(u), p, 1e-9 * std::max(1.0, p / (1.0 - p)));
  }
}

TEST(Sampling, RestrictedToDomain) {
  const auto box = Domain::box(2, {0.0, 0.0}, {1.0, 1.0}, Boundary::kill);
  const DispersalKernel k({KernelKind::exponential, 0.5, 4.0}, 2);
  RngStream rng(3, 1);
  for (int i = 0; i < 10000; ++i) ASSERT_TRUE(box.contains(sample_displacement(k, Point{0.0, 0.0}, box, rng)));
}

TEST(Sampling, RejectionCap) {
  const auto box = Domain::box(2, {0.0, 0.0}, {1e-9, 1e-9}, Boundary::kill);
  const DispersalKernel k({KernelKind::exponential, 1e3, 4.0}, 2);
  RngStream rng(3, 2);
  EXPECT_THROW(k.sample(Point{0.0, 0.0}, box, rng, 100), KernelError);
}

TEST(Calibrate, Examples) {
  EXPECT_DOUBLE_EQ(calibrate_beta(KernelKind::exponential, 10.0, 2), 5.0);
  EXPECT_DOUBLE_EQ(calibrate_beta(KernelKind::power_law, 10.0, 2, 4.0), 5.0);
  EXPECT_NEAR(calibrate_beta(KernelKind::gaussian, 10.0, 2), 20.0 / std::sqrt(pi), 1e-12);
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    EXPECT_THROW(calibrate_beta(kind, 0.0, 2), KernelError);
    for (int d : {1, 2}) {
      const double b = calibrate_beta(kind, 3.0, d, 5.0);
      EXPECT_NEAR(DispersalKernel({kind, b, 5.0}, d).mean_displacement(), 3.0, 1e-12);
    }
  }
  EXPECT_THROW(calibrate_beta(KernelKind::power_law, 10.0, 2, 3.0), KernelError);
}

TEST(Calibrate, ExampleParamsHaveMeanTen) {
  for (auto kind : {KernelKind::exponential, KernelKind::gaussian, KernelKind::power_law}) {
    EXPECT_NEAR(DispersalKernel(example_params(kind).kernel, 2).mean_displacement(), 10.0, 1e-12);
  }
}
