#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace flower {

/// A single pseudo-random stream. Thin wrapper over mt19937_64 with the
/// handful of draws the sampler needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Stream derived from a master seed, a stream name and an index. Distinct
  /// (name, index) pairs give statistically independent streams.
  static Rng derive(std::uint64_t master, std::string_view name, std::uint64_t index = 0);

  double uniform();           // [0, 1)
  double uniform_open();      // (0, 1)
  double normal();
  double gamma(double shape);  // unit scale
  /// log of a Gamma(shape, 1) draw; stable for very small shapes.
  double log_gamma_draw(double shape);
  bool bernoulli(double p);
  int uniform_int(int n);  // {0, ..., n-1}

  /// Index drawn proportionally to exp(log_weights - max).
  int categorical_log(std::span<const double> log_weights);
  /// Index drawn proportionally to nonnegative weights.
  int categorical(std::span<const double> weights);

  /// Dirichlet draw; small concentrations are handled in log space and the
  /// result is floored at the smallest normal double.
  std::vector<double> dirichlet(std::span<const double> concentration);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace flower
