#pragma once

#include <cstdint>
#include <random>

#include "wishart/errors.hpp"

namespace wishart {

// Seeded substream: identical (seed, stream) values reproduce identical draws.
// Parallel Monte Carlo assigns one stream per replication index.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream & 0xffffffffu),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    eng_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::mt19937_64& engine() { return eng_; }

  double normal() { return normal_(eng_); }

  double uniform() { return uniform_(eng_); }

  double gamma(double shape, double scale) {
    if (shape < 0.0) throw Error("RngStream::gamma: negative shape");
    if (shape == 0.0) return 0.0;
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }

  double chi_square(double k) { return gamma(0.5 * k, 2.0); }

 private:
  std::uint64_t seed_, stream_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace wishart
