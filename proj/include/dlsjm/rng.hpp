// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dlsjm {

// Deterministic random draws on top of mt19937_64. std::*_distribution is
// implementation-defined, so the transforms are pinned here (Box-Muller,
// Marsaglia-Tsang) to keep chains byte-reproducible for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal();
  double normal(double mean, double sd);

  // Gamma(shape, scale 1), shape > 0.
  double gamma(double shape);

  // Inverse-gamma(shape, scale): X with 1/X ~ Gamma(shape, 1/scale).
  double inverse_gamma(double shape, double scale);

  // Uniform integer in [0, bound), bound >= 1. Rejection-free modulo is fine
  // here: bound is tiny relative to 2^64 in every use.
  std::uint64_t integer(std::uint64_t bound);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n);

  // Child-seed derivation (splitmix64 over the tuple) for parallel work units.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dlsjm
