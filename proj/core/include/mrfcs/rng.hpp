#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrfcs {

// Deterministic random stream: mt19937_64 raw bits with the distributions
// coded out explicitly, so identical seeds reproduce identical draws on any
// platform. Experiment metadata records the seed of every stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n), by rejection.
  std::uint64_t uniform_below(std::uint64_t n);

  // [0, 1) with 53-bit resolution.
  double uniform01();

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian();

  // Child seed for a named substream of a master seed.
  static std::uint64_t derive(std::uint64_t master, std::string_view stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mrfcs
