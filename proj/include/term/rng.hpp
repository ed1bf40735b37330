#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace term {

// Seeded pseudo-random source with platform-independent output.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The std:: distributions are not (libstdc++ and libc++ differ), so
// every transform below is written out explicitly.
//
// Stream splitting: a named component of an experiment (e.g. "features",
// "noise", "minibatch") gets its own engine seeded with
//     splitmix64(seed ^ fnv1a64(component))
// so adding draws to one component never shifts another component's stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng stream(std::uint64_t seed, std::string_view component);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via the Marsaglia polar method (second variate cached).
  double normal();
  double normal(double mean, double stddev);

  // Standard Gumbel(0, 1).
  double gumbel();

  // Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);

  // k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace term
