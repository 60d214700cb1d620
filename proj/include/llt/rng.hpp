#pragma once

#include <cstdint>
#include <random>

namespace llt {

// Mersenne-Twister stream keyed by (seed, stream). Replicas take
// split(replica_index), so their draws do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  Rng split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  std::uint64_t poisson(double mean);
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace llt
