#include "flower/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flower {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::derive(std::uint64_t master, std::string_view name, std::uint64_t index) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  Rng r;
  r.engine_.seed(seq);
  return r;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  double u;
  do {
    u = uniform();
  } while (u == 0.0);
  return u;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(engine_);
}

double Rng::log_gamma_draw(double shape) {
  if (shape >= 1.0) return std::log(gamma(shape));
  // G(a) = G(a+1) * U^(1/a)
  return std::log(gamma(shape + 1.0)) + std::log(uniform_open()) / shape;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::uniform_int(int n) {
  std::uniform_int_distribution<int> dist(0, n - 1);
  return dist(engine_);
}

int Rng::categorical_log(std::span<const double> log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - mx);
  double u = uniform() * total;
  const int n = static_cast<int>(log_weights.size());
  for (int k = 0; k < n; ++k) {
    u -= std::exp(log_weights[k] - mx);
    if (u < 0.0) return k;
  }
  // rounding: return the last index with positive weight
  for (int k = n - 1; k >= 0; --k)
    if (std::isfinite(log_weights[k])) return k;
  return n - 1;
}

int Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform() * total;
  const int n = static_cast<int>(weights.size());
  for (int k = 0; k < n; ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  for (int k = n - 1; k >= 0; --k)
    if (weights[k] > 0.0) return k;
  return n - 1;
}

std::vector<double> Rng::dirichlet(std::span<const double> concentration) {
  std::vector<double> logs(concentration.size());
  for (std::size_t k = 0; k < concentration.size(); ++k) logs[k] = log_gamma_draw(concentration[k]);
  const double mx = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& l : logs) {
    l = std::exp(l - mx);
    total += l;
  }
  constexpr double floor = std::numeric_limits<double>::min();
  double renorm = 0.0;
  for (double& l : logs) {
    l = std::max(l / total, floor);
    renorm += l;
  }
  for (double& l : logs) l /= renorm;
  return logs;
}

}  // namespace flower
