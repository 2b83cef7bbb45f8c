#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace gdm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * A reproducible random stream identified by (master seed, stream index).
 *
 * Equal (seed, index) pairs yield bit-identical sequences on every platform:
 * the engine and all distributions come from Boost.Random, whose algorithms are
 * fixed in the headers. Streams are not thread-safe; every concurrent task owns
 * its own index.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : seed_(master_seed), index_(stream_index) {
    std::uint64_t s = master_seed;
    const std::uint64_t a = splitmix64(s);
    s = a ^ (stream_index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    engine_.seed(splitmix64(s));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }

  double exponential(double rate) { return -std::log(uniform_open0()) / rate; }

  double gamma(double shape, double scale) {
    return boost::random::gamma_distribution<double>{shape, scale}(engine_);
  }

  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    return boost::random::poisson_distribution<std::uint64_t, double>{mean}(engine_);
  }

  /// Uniform index in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  boost::random::mt19937_64 engine_;
};

}  // namespace gdm
