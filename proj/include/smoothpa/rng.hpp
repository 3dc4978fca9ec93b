#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace smoothpa {

// SplitMix64 finalizer; used for stable seed derivation.
std::uint64_t mix64(std::uint64_t x);

// Folds a list of words into one seed. Order matters.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

// Portable random source. The engine is std::mt19937_64 (fully specified by
// the standard); every distribution on top of it is implemented here so that
// streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  void reseed(std::uint64_t seed) { engine_.seed(seed); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 bits of precision.
  double uniform01();

  // Uniform on {0,...,n-1}; n >= 1. Unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t uniform_index(std::uint64_t n);

  int bit() { return static_cast<int>(engine_() >> 63); }

  int bernoulli(double p) { return uniform01() < p ? 1 : 0; }

  // Inversion below mean 30, PTRS transformed rejection (Hormann 1993) above.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t poisson_inversion(double mean);
  std::uint64_t poisson_ptrs(double mean);

  std::mt19937_64 engine_;
};

}  // namespace smoothpa
