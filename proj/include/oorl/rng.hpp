#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace oorl {

// Derives a well-mixed 64-bit seed from a root seed and a stream offset.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t offset);

// Named, seedable pseudorandom stream. Identical seeds give identical
// streams; the transforms below are implemented here rather than through
// <random> distributions so the bit stream does not depend on the standard
// library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::string name = "rng");

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t uniform_int(std::size_t n);
  // Standard normal via Box-Muller.
  double normal();

  std::uint64_t seed() const { return seed_; }
  const std::string& name() const { return name_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::string name_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace oorl
