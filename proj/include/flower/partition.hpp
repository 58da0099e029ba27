#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace flower {

class Rng;

/// |HB_1(s)| for a vector of length d_h: 1 + d_h (d_h - 1).
int hamming_ball_size(int d_h);

/// Uniform draw from the radius-1 Hamming ball around `s`, whose entries take
/// values in {0, ..., d_h - 1}. The result is labeled (not canonicalized).
std::vector<int> hamming_ball_propose(std::span<const int> s, Rng& rng);

/// Relabels by order of first appearance. Returns the number of distinct labels.
int canonicalize(std::vector<int>& labels);
bool is_canonical(std::span<const int> labels);

/// Quantities the partition moves condition on, for one coordinate.
struct CollapsedWeights {
  std::span<const double> alpha_lambda0;  // alpha * lambda_0(k), k = 0..K-1
  double phi = 1.0;
  double phi_star = 1.0;

  double alpha() const;  // sum of alpha_lambda0
};

/// Two-layer partition state of one response coordinate together with the
/// count tables the collapsed updates need.
///
/// The second-layer tensor is stored flat in row-major order (last covariate
/// fastest) and always holds exactly prod_h K_h cells, where K_h is the number
/// of occupied first-layer clusters of covariate h.
class FlowerTensor {
 public:
  FlowerTensor() = default;
  /// Single-cluster initial state: every s_h constant, one tensor cell in cluster 0.
  FlowerTensor(std::vector<int> levels, int K, int K_star);

  /// Recomputes unit cells and every count table from the data.
  void attach(const Eigen::MatrixXi& c, std::span<const int> z);
  /// Replaces the partition state. `s` must be canonical and `s_star` must
  /// match the implied shape. Counts are rebuilt from the data.
  void set_state(std::vector<std::vector<int>> s, std::vector<int> s_star, const Eigen::MatrixXi& c,
                 std::span<const int> z);

  int p() const { return static_cast<int>(levels_.size()); }
  int K() const { return K_; }
  int K_star() const { return K_star_; }
  int n() const { return static_cast<int>(unit_cell_.size()); }
  const std::vector<int>& levels() const { return levels_; }
  const std::vector<std::vector<int>>& s() const { return s_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<int>& s_star() const { return s_star_; }
  int volume() const { return static_cast<int>(s_star_.size()); }
  /// Allocated second-layer cells (tensor entries and per-cell count vectors).
  std::size_t storage_cells() const;

  /// Tensor cell and second-layer cluster of a covariate combination (0-based levels).
  int cell_of(std::span<const int> combo) const;
  int cluster_of(std::span<const int> combo) const { return s_star_[cell_of(combo)]; }
  int unit_cell(int i) const { return unit_cell_[i]; }
  int unit_cluster(int i) const { return s_star_[unit_cell_[i]]; }

  int cluster_count(int kstar, int k) const { return cluster_counts_[kstar * K_ + k]; }
  int cluster_total(int kstar) const { return cluster_totals_[kstar]; }
  std::span<const int> cluster_row(int kstar) const {
    return std::span<const int>(cluster_counts_).subspan(static_cast<std::size_t>(kstar) * K_, K_);
  }
  int cell_count(int cell, int k) const { return cell_counts_[cell * K_ + k]; }
  int cell_total(int cell) const { return cell_totals_[cell]; }
  int m_star(int kstar) const { return m_star_[kstar]; }
  /// m_h(q): number of levels of covariate h in first-layer cluster q.
  std::vector<int> label_counts(int h) const;

  /// Leave-one-out bookkeeping for the allocation update.
  void remove_unit(int i, int k);
  void add_unit(int i, int k);

  /// Collapsed log target of (s_h, s_star) up to terms constant in both.
  double log_target(int h, const CollapsedWeights& w) const;

  /// Trans-dimensional move on (s_h, s_star). Returns true when accepted.
  bool joint_update_s(int h, const Eigen::MatrixXi& c, std::span<const int> z, const CollapsedWeights& w, Rng& rng);
  /// Normalized log full conditional of s_star(cell) over the K_star labels.
  std::vector<double> s_star_log_conditional(int cell, const CollapsedWeights& w) const;
  void gibbs_update_cell(int cell, const CollapsedWeights& w, Rng& rng);
  /// One lexicographic sweep over all tensor cells.
  void gibbs_sweep(const CollapsedWeights& w, Rng& rng);

  /// Throws std::logic_error when any count table disagrees with a recount.
  void check_invariants(const Eigen::MatrixXi& c, std::span<const int> z) const;

  std::uint64_t joint_accepted = 0;
  std::uint64_t joint_proposed = 0;

 private:
  void rebuild(const Eigen::MatrixXi& c, std::span<const int> z);
  void move_cell_counts(int cell, int from_cluster, int to_cluster);
  double cluster_log_likelihood(std::span<const int> counts, std::span<const int> totals,
                                const CollapsedWeights& w) const;

  std::vector<int> levels_;
  int K_ = 1;
  int K_star_ = 1;
  std::vector<std::vector<int>> s_;  // canonical first-layer labels
  std::vector<int> shape_;           // K_h
  std::vector<int> strides_;
  std::vector<int> s_star_;          // cluster of each cell
  std::vector<int> m_star_;          // K_star occupancy counts
  std::vector<int> cell_counts_;     // volume x K
  std::vector<int> cell_totals_;     // volume
  std::vector<int> cluster_counts_;  // K_star x K
  std::vector<int> cluster_totals_;  // K_star
  std::vector<int> unit_cell_;       // n
};

}  // namespace flower
