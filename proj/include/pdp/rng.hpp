#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace pdp {

// Seeded random source. std::mt19937_64 produces the same stream on every
// platform, but the standard <random> distributions do not, so all sampling
// goes through the explicit routines below. Runs with equal seeds are then
// byte-reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn proportionally to the (nonnegative) weights; the tail index
  // absorbs any floating-point slack in the cumulative walk.
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: zero mass");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return int(i);
    }
    return int(weights.size()) - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdp
