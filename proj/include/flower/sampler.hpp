#pragma once

#include <functional>
#include <vector>

#include "flower/dataset.hpp"
#include "flower/draws.hpp"
#include "flower/hyperparameters.hpp"
#include "flower/mixture.hpp"
#include "flower/rng.hpp"
#include "flower/state.hpp"

namespace flower {

/// Receives retained draws as they are produced (e.g. the chain store writer).
class DrawSink {
 public:
  virtual ~DrawSink() = default;
  virtual void begin(const ModelInfo& info) = 0;
  virtual void write(const Draw& draw) = 0;
  virtual void end(const AcceptanceSummary& summary) = 0;
};

/// Which update blocks run each iteration. Everything is on for real fits;
/// tests switch blocks off to isolate parts of the chain.
struct UpdateBlocks {
  bool z = true;
  bool lambda0 = true;
  bool alpha = true;
  bool phi = true;
  bool atoms = true;
  bool partitions = true;
  bool copula = true;
};

/// The full MCMC sampler for one chain.
///
/// Per iteration, in order: allocations z, lambda0 per coordinate, alpha and
/// phi, atoms, the joint (s_h, s_star) move for every (coordinate, covariate),
/// one s_star Gibbs sweep per coordinate, latent scores followed by the b and
/// theta grid updates, and proposal adaptation during burn-in.
class Sampler {
 public:
  /// Validates the data and hyperparameters, resolves m0/s0 from the data when
  /// unset and builds the initial state.
  Sampler(const Dataset& data, Hyperparameters hp);

  /// Runs one iteration; `iter` is 1-based.
  void iterate(int iter);
  /// Runs the configured schedule. `on_iteration` is called after every iteration.
  PosteriorDraws run(DrawSink* sink = nullptr, const std::function<void(int, const Sampler&)>& on_iteration = {});

  Draw snapshot(int iter) const;
  AcceptanceSummary acceptance() const;
  /// Zeroes every acceptance counter (used when burn-in ends).
  void reset_counters();

  const Dataset& data() const { return data_; }
  Dataset& mutable_data() { return data_; }
  const Hyperparameters& hp() const { return hp_; }
  ChainState& state() { return state_; }
  const ChainState& state() const { return state_; }
  UpdateBlocks blocks;

  /// Throws std::logic_error when the state violates an invariant.
  void check_invariants() const;

 private:
  void coordinate_marginal_block(int l);
  void coordinate_partition_block(int l);
  void copula_block();
  template <typename F>
  void for_each_coordinate(F&& f);

  Dataset data_;
  Hyperparameters hp_;
  ChainState state_;
  KernelTable kernels_;
  std::vector<Rng> z_rng_, lambda_rng_, partition_rng_;
  Rng hyper_rng_, atom_rng_, copula_rng_;
};

/// Default initial state for `data` under `hp` (m0/s0 must be resolved).
ChainState initial_state(const Dataset& data, const Hyperparameters& hp);

/// Fills m0 and s0 from the pooled responses when they are NaN.
Hyperparameters resolve_hyperparameters(const Dataset& data, Hyperparameters hp);

}  // namespace flower
