// Deterministic random number generation for the event-driven simulator.
//
// Replications use independent streams derived from (master_seed, replication
// index) with a splitmix64 mixer, so ensembles are reproducible bit-for-bit
// regardless of scheduling and replication order. All samplers are written
// out explicitly (no std:: distributions) so results do not depend on the
// standard library implementation.
#ifndef VIRALTL_RNG_HPP
#define VIRALTL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace vtl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64 per the reference recommendation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Independent stream for one replication of an ensemble.
  static Rng for_replication(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t sm = master_seed;
    std::uint64_t a = splitmix64(sm);
    sm = a ^ (index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    return Rng(splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Exponential holding time with the given rate.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Bernoulli(prob).
  bool bernoulli(double prob) { return uniform() < prob; }

  // Poisson(mean) by Knuth's product method; the means in this model are
  // batch means m*eta, small enough that the O(mean) loop is never a concern.
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  // Geometric on {0,1,2,...} with continuation probability p:
  // P(X = k) = (1-p) p^k. Inverse transform.
  long geometric(double p_continue) {
    if (p_continue <= 0.0) return 0;
    return static_cast<long>(std::floor(std::log(uniform_pos()) / std::log(p_continue)));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace vtl

#endif
