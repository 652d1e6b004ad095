// Seeded RNG with named sub-streams so independent components (data order,
// parameter init, per-agent environments) stay decorrelated and reproducible.

#pragma once

#include <cstdint>
#include <random>

namespace fwm {

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Derive an independent stream; splitmix64 mixing keeps streams apart even
  // for adjacent (seed, id) pairs.
  static Rng stream(uint64_t seed, uint64_t id) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  // Uniform integer in [0, bound).
  uint64_t uniform(uint64_t bound) {
    std::uniform_int_distribution<uint64_t> d(0, bound - 1);
    return d(gen_);
  }

  double uniform_real(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> d(mean, stddev);
    return d(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// Source of bounded uniform integer draws. graph sampling is written against
// this interface so tests can record and replay the exact draw sequence.
struct DrawSource {
  virtual ~DrawSource() = default;
  virtual uint64_t uniform(uint64_t bound) = 0;
};

class RngDrawSource final : public DrawSource {
 public:
  explicit RngDrawSource(Rng& rng) : rng_(rng) {}
  uint64_t uniform(uint64_t bound) override { return rng_.uniform(bound); }

 private:
  Rng& rng_;
};

}  // namespace fwm
