#include "flower/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/mixture.hpp"
#include "flower/simgen.hpp"

namespace flower {

Eigen::VectorXd DensityGrid::points() const {
  if (size < 2) throw ParameterError("density grid needs at least two points");
  if (!(upper > lower)) throw ParameterError("density grid needs lower < upper");
  Eigen::VectorXd out(size);
  for (int g = 0; g < size; ++g) out[g] = point(g);
  out[size - 1] = upper;
  return out;
}

double DensityEstimate::mass() const { return values.sum() * std::pow(grid.delta(), dims); }

namespace {

void require_draws(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw ParameterError("no posterior draws");
}

void require_coordinate(const PosteriorDraws& draws, int l) {
  if (l < 0 || l >= draws.info.d) throw ParameterError("response coordinate out of range");
}

void require_combo(const ModelInfo& info, const std::vector<int>& combo) {
  if (static_cast<int>(combo.size()) != info.p) throw ParameterError("covariate combination has the wrong length");
  for (int h = 0; h < info.p; ++h)
    if (combo[h] < 0 || combo[h] >= info.levels[h]) throw ParameterError("unknown covariate level code");
}

/// Kernel densities (K x G) of one draw at the given points; zero outside [A, B].
Eigen::MatrixXd kernel_pdfs(const Draw& dr, const Eigen::VectorXd& x, double A, double B) {
  const KernelTable kt(Atoms{dr.mu, dr.sigma2}, A, B);
  Eigen::MatrixXd out(kt.size(), x.size());
  for (int g = 0; g < x.size(); ++g) {
    const bool inside = x[g] >= A && x[g] <= B;
    for (int k = 0; k < kt.size(); ++k) out(k, g) = inside ? std::exp(kt.log_pdf(k, x[g])) : 0.0;
  }
  return out;
}

Eigen::MatrixXd kernel_cdfs(const Draw& dr, const Eigen::VectorXd& x, double A, double B) {
  const KernelTable kt(Atoms{dr.mu, dr.sigma2}, A, B);
  Eigen::MatrixXd out(kt.size(), x.size());
  for (int g = 0; g < x.size(); ++g) {
    const double xc = std::clamp(x[g], A, B);
    for (int k = 0; k < kt.size(); ++k) out(k, g) = kt.cdf(k, xc);
  }
  return out;
}

/// Second-layer cluster of every listed combination under one draw.
std::vector<int> clusters_of(const CoordinateDraw& cd, const std::vector<long long>& combos,
                             const std::vector<int>& levels) {
  std::vector<int> out;
  out.reserve(combos.size());
  for (long long c : combos) out.push_back(cd.cluster_of(decode_combination(c, levels)));
  return out;
}

/// Posterior-mean conditional marginals of coordinate l at `x` for the listed
/// combinations (rows follow `combos`).
Eigen::MatrixXd marginal_rows(const PosteriorDraws& draws, int l, const Eigen::VectorXd& x,
                              const std::vector<long long>& combos) {
  require_draws(draws);
  require_coordinate(draws, l);
  const ModelInfo& info = draws.info;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(combos.size()), x.size());
  for (const Draw& dr : draws.draws) {
    const CoordinateDraw& cd = dr.coords[l];
    const Eigen::MatrixXd cluster_pdf = cd.lambda_hat * kernel_pdfs(dr, x, info.lower, info.upper);
    const std::vector<int> ks = clusters_of(cd, combos, info.levels);
    for (std::size_t r = 0; r < combos.size(); ++r) out.row(r) += cluster_pdf.row(ks[r]);
  }
  return out / static_cast<double>(draws.size());
}

/// Joint density of the coordinates in L for one draw, given each
/// coordinate's second-layer cluster. Values are row-major over the grid^|L|.
Eigen::VectorXd joint_for_clusters(const Draw& dr, const std::vector<int>& L, const std::vector<int>& clusters,
                                   const Eigen::VectorXd& x, double A, double B) {
  const int m = static_cast<int>(L.size());
  const Eigen::Index G = x.size();
  const Eigen::MatrixXd pdf = kernel_pdfs(dr, x, A, B);
  // Where both marginal CDFs reach 0 or 1 the copula density is unbounded, so
  // the scores of the two edge points are taken half a grid step inside.
  Eigen::VectorXd xs = x;
  if (G > 1) {
    xs[0] += 0.5 * (x[1] - x[0]);
    xs[G - 1] -= 0.5 * (x[G - 1] - x[G - 2]);
  }
  const Eigen::MatrixXd cdf = kernel_cdfs(dr, xs, A, B);
  Eigen::MatrixXd f(m, G), y(m, G);
  for (int j = 0; j < m; ++j) {
    const Eigen::RowVectorXd w = dr.coords[L[j]].lambda_hat.row(clusters[j]);
    f.row(j) = w * pdf;
    const Eigen::RowVectorXd F = w * cdf;
    for (Eigen::Index g = 0; g < G; ++g) y(j, g) = clamped_normal_score(F[g]);
  }
  Eigen::MatrixXd RLL(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) RLL(a, b) = dr.R(L[a], L[b]);
  const Eigen::LLT<Eigen::MatrixXd> llt(RLL);
  if (llt.info() != Eigen::Success) throw DomainError("draw correlation block is not positive definite");
  const Eigen::MatrixXd Q = llt.solve(Eigen::MatrixXd::Identity(m, m)) - Eigen::MatrixXd::Identity(m, m);
  double logdet = 0.0;
  for (int a = 0; a < m; ++a) logdet += 2.0 * std::log(llt.matrixL()(a, a));

  Eigen::Index total = 1;
  for (int j = 0; j < m; ++j) total *= G;
  Eigen::VectorXd out(total);
  std::vector<Eigen::Index> idx(m, 0);
  Eigen::VectorXd yv(m);
  for (Eigen::Index t = 0; t < total; ++t) {
    double prod = 1.0;
    for (int j = 0; j < m; ++j) {
      prod *= f(j, idx[j]);
      yv[j] = y(j, idx[j]);
    }
    out[t] = prod == 0.0 ? 0.0 : prod * std::exp(-0.5 * logdet - 0.5 * yv.dot(Q * yv));
    for (int j = m - 1; j >= 0; --j) {
      if (++idx[j] < G) break;
      idx[j] = 0;
    }
  }
  return out;
}

void require_subset(const ModelInfo& info, const std::vector<int>& L) {
  if (L.size() < 2) throw ParameterError("joint density needs at least two coordinates");
  for (std::size_t a = 0; a < L.size(); ++a) {
    if (L[a] < 0 || L[a] >= info.d) throw ParameterError("response coordinate out of range");
    for (std::size_t b = 0; b < a; ++b)
      if (L[a] == L[b]) throw ParameterError("joint density coordinates must be distinct");
  }
}

DensityEstimate make_estimate(const DensityGrid& grid, int dims, Eigen::VectorXd values) {
  DensityEstimate e;
  e.grid = grid;
  e.dims = dims;
  e.values = std::move(values);
  return e;
}

}  // namespace

DensityEstimate cond_marginal_density(const PosteriorDraws& draws, int l, const std::vector<int>& combo,
                                      const DensityGrid& grid) {
  require_combo(draws.info, combo);
  const Eigen::MatrixXd rows =
      marginal_rows(draws, l, grid.points(), {encode_combination(combo, draws.info.levels)});
  return make_estimate(grid, 1, rows.row(0).transpose());
}

Eigen::MatrixXd cond_marginal_all(const PosteriorDraws& draws, int l, const DensityGrid& grid) {
  std::vector<long long> combos(combination_count(draws.info.levels));
  std::iota(combos.begin(), combos.end(), 0LL);
  return marginal_rows(draws, l, grid.points(), combos);
}

DensityEstimate cond_joint_density(const PosteriorDraws& draws, const std::vector<int>& L,
                                   const std::vector<int>& combo, const DensityGrid& grid) {
  require_draws(draws);
  require_subset(draws.info, L);
  require_combo(draws.info, combo);
  const Eigen::VectorXd x = grid.points();
  Eigen::VectorXd acc;
  for (const Draw& dr : draws.draws) {
    std::vector<int> clusters;
    for (int l : L) clusters.push_back(dr.coords[l].cluster_of(combo));
    Eigen::VectorXd v = joint_for_clusters(dr, L, clusters, x, draws.info.lower, draws.info.upper);
    if (acc.size() == 0) acc = std::move(v); else acc += v;
  }
  return make_estimate(grid, static_cast<int>(L.size()), acc / static_cast<double>(draws.size()));
}

std::vector<std::pair<long long, double>> combination_weights(const ModelInfo& info) {
  std::vector<std::pair<long long, double>> out;
  long long total = 0;
  for (const auto& [c, n] : info.combination_counts) total += n;
  if (total == 0) throw ParameterError("no observed covariate combinations");
  for (const auto& [c, n] : info.combination_counts) out.emplace_back(c, static_cast<double>(n) / total);
  return out;
}

DensityEstimate uncond_density(const PosteriorDraws& draws, int l, const DensityGrid& grid) {
  require_draws(draws);
  require_coordinate(draws, l);
  const ModelInfo& info = draws.info;
  const auto weights = combination_weights(info);
  const Eigen::VectorXd x = grid.points();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
  for (const Draw& dr : draws.draws) {
    const CoordinateDraw& cd = dr.coords[l];
    Eigen::RowVectorXd cw = Eigen::RowVectorXd::Zero(cd.lambda_hat.rows());
    for (const auto& [c, w] : weights) cw[cd.cluster_of(decode_combination(c, info.levels))] += w;
    acc += ((cw * cd.lambda_hat) * kernel_pdfs(dr, x, info.lower, info.upper)).transpose();
  }
  return make_estimate(grid, 1, acc / static_cast<double>(draws.size()));
}

DensityEstimate uncond_joint_density(const PosteriorDraws& draws, const std::vector<int>& L, const DensityGrid& grid) {
  require_draws(draws);
  require_subset(draws.info, L);
  const ModelInfo& info = draws.info;
  const auto weights = combination_weights(info);
  const Eigen::VectorXd x = grid.points();
  Eigen::VectorXd acc;
  for (const Draw& dr : draws.draws) {
    std::map<std::vector<int>, double> by_clusters;
    for (const auto& [c, w] : weights) {
      const std::vector<int> combo = decode_combination(c, info.levels);
      std::vector<int> clusters;
      for (int l : L) clusters.push_back(dr.coords[l].cluster_of(combo));
      by_clusters[clusters] += w;
    }
    for (const auto& [clusters, w] : by_clusters) {
      Eigen::VectorXd v = w * joint_for_clusters(dr, L, clusters, x, info.lower, info.upper);
      if (acc.size() == 0) acc = std::move(v); else acc += v;
    }
  }
  return make_estimate(grid, static_cast<int>(L.size()), acc / static_cast<double>(draws.size()));
}

CoordinatePartition make_partition(const std::vector<std::vector<int>>& s, const std::vector<int>& shape,
                                   const std::vector<int>& s_star, const std::vector<int>& levels) {
  const int p = static_cast<int>(levels.size());
  if (static_cast<int>(s.size()) != p || static_cast<int>(shape.size()) != p)
    throw ParameterError("partition does not match the covariate count");
  CoordinatePartition out;
  out.s = s;
  std::vector<std::vector<int>> relabel(p);
  for (int h = 0; h < p; ++h) {
    if (static_cast<int>(s[h].size()) != levels[h]) throw ParameterError("partition vector has the wrong length");
    relabel[h].assign(shape[h], -1);
    int next = 0;
    for (int& v : out.s[h]) {
      if (v < 0 || v >= shape[h]) throw ParameterError("partition label outside its shape");
      if (relabel[h][v] < 0) relabel[h][v] = next++;
      v = relabel[h][v];
    }
    out.shape.push_back(next);
  }
  long long volume = 1;
  for (int k : shape) volume *= k;
  if (static_cast<long long>(s_star.size()) != volume) throw ParameterError("second-layer tensor has the wrong size");

  // Re-index the tensor on the canonical first layer, dropping unused cells.
  long long new_volume = 1;
  for (int k : out.shape) new_volume *= k;
  out.s_star.assign(new_volume, -1);
  for (long long cell = 0; cell < volume; ++cell) {
    const std::vector<int> idx = decode_combination(cell, shape);
    std::vector<int> nidx(p);
    bool used = true;
    for (int h = 0; h < p && used; ++h) {
      nidx[h] = relabel[h][idx[h]];
      used = nidx[h] >= 0;
    }
    if (used) out.s_star[encode_combination(nidx, out.shape)] = s_star[cell];
  }
  canonicalize(out.s_star);

  const long long ncombo = combination_count(levels);
  out.combinations.resize(ncombo);
  for (long long c = 0; c < ncombo; ++c) {
    const std::vector<int> combo = decode_combination(c, levels);
    std::vector<int> cell(p);
    for (int h = 0; h < p; ++h) cell[h] = out.s[h][combo[h]];
    out.combinations[c] = out.s_star[encode_combination(cell, out.shape)];
  }
  return out;
}

std::vector<CoordinatePartition> map_partitions(const PosteriorDraws& draws) {
  require_draws(draws);
  const ModelInfo& info = draws.info;
  std::vector<CoordinatePartition> out;
  for (int l = 0; l < info.d; ++l) {
    std::map<std::vector<int>, std::pair<int, int>> freq;  // key -> (count, first draw)
    std::vector<int> best_key;
    int best_count = 0, best_first = 0;
    for (std::size_t b = 0; b < draws.size(); ++b) {
      const CoordinateDraw& cd = draws.draws[b].coords[l];
      const CoordinatePartition cp = make_partition(cd.s, cd.shape, cd.s_star, info.levels);
      std::vector<int> key;
      for (const auto& sh : cp.s) {
        key.insert(key.end(), sh.begin(), sh.end());
        key.push_back(-1);
      }
      key.insert(key.end(), cp.s_star.begin(), cp.s_star.end());
      auto [it, fresh] = freq.try_emplace(key, 0, static_cast<int>(b));
      ++it->second.first;
      const int count = it->second.first, first = it->second.second;
      if (count > best_count || (count == best_count && first < best_first)) {
        best_count = count;
        best_first = first;
        best_key = key;
      }
    }
    const CoordinateDraw& cd = draws.draws[best_first].coords[l];
    CoordinatePartition cp = make_partition(cd.s, cd.shape, cd.s_star, info.levels);
    cp.frequency = best_count;
    cp.first_draw = best_first;
    out.push_back(std::move(cp));
  }
  return out;
}

DensityEstimate cluster_conditional_density(const PosteriorDraws& draws, int l, int kstar,
                                            const CoordinatePartition& reference, const DensityGrid& grid) {
  std::vector<long long> members;
  for (std::size_t c = 0; c < reference.combinations.size(); ++c)
    if (reference.combinations[c] == kstar) members.push_back(static_cast<long long>(c));
  if (members.empty()) throw ParameterError("cluster is empty under the reference configuration");
  if (static_cast<long long>(reference.combinations.size()) != combination_count(draws.info.levels))
    throw ParameterError("reference partition does not match the model's covariates");
  const Eigen::MatrixXd rows = marginal_rows(draws, l, grid.points(), members);
  return make_estimate(grid, 1, rows.colwise().mean().transpose());
}

double ise(const Eigen::VectorXd& f_true, const Eigen::VectorXd& f_hat, double delta) {
  if (f_true.size() != f_hat.size()) throw ParameterError("ise: grids differ in size");
  return (f_true - f_hat).squaredNorm() * delta;
}

double ise(const DensityEstimate& f_true, const DensityEstimate& f_hat) {
  const DensityGrid &a = f_true.grid, &b = f_hat.grid;
  if (a.size != b.size || a.lower != b.lower || a.upper != b.upper || f_true.dims != f_hat.dims)
    throw ParameterError("ise: estimates are on different grids");
  return ise(f_true.values, f_hat.values, std::pow(a.delta(), f_true.dims));
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ParameterError("ari: partitions cover different item sets");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, long long> table;
  std::map<int, long long> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto pairs = [](double m) { return 0.5 * m * (m - 1.0); };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, m] : table) index += pairs(static_cast<double>(m));
  for (const auto& [k, m] : ra) sa += pairs(static_cast<double>(m));
  for (const auto& [k, m] : rb) sb += pairs(static_cast<double>(m));
  const double expected = sa * sb / pairs(n);
  const double top = 0.5 * (sa + sb);
  if (top == expected) return index == top ? 1.0 : 0.0;
  return (index - expected) / (top - expected);
}

Eigen::MatrixXd correlation_estimate(const PosteriorDraws& draws) {
  require_draws(draws);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(draws.draws[0].R.rows(), draws.draws[0].R.cols());
  for (const Draw& dr : draws.draws) mean += dr.R;
  mean /= static_cast<double>(draws.size());
  const Eigen::VectorXd inv = mean.diagonal().array().rsqrt();
  Eigen::MatrixXd out = inv.asDiagonal() * mean * inv.asDiagonal();
  out = 0.5 * (out + out.transpose());
  out.diagonal().setOnes();
  return out;
}

PosteriorDraws truth_as_draws(const TrueModel& truth) {
  truth.validate();
  PosteriorDraws out;
  ModelInfo& info = out.info;
  info.d = truth.d();
  info.p = truth.p();
  info.levels = truth.levels;
  info.lower = truth.lower;
  info.upper = truth.upper;
  info.response_names = truth.response_names;
  info.covariate_names = truth.covariate_names;
  info.rescale.assign(info.d, Rescale{});
  for (long long c = 0; c < combination_count(truth.levels); ++c) info.combination_counts[c] = 1;
  info.n = static_cast<int>(info.combination_counts.size());

  // Coordinate-specific atoms are stacked into one atom list; each
  // coordinate's weights are zero outside its own block.
  int total = 0;
  for (const auto& tc : truth.coords) total += static_cast<int>(tc.mu.size());
  info.K = total;
  Draw dr;
  dr.mu.resize(total);
  dr.sigma2.resize(total);
  int offset = 0;
  for (const auto& tc : truth.coords) {
    const int K = static_cast<int>(tc.mu.size());
    dr.mu.segment(offset, K) = tc.mu;
    dr.sigma2.segment(offset, K) = tc.sigma2;
    CoordinateDraw cd;
    cd.s = tc.s;
    cd.shape = tc.shape;
    cd.s_star = tc.s_star;
    cd.lambda_hat = Eigen::MatrixXd::Zero(tc.clusters(), total);
    cd.lambda_hat.middleCols(offset, K) = tc.lambda;
    info.K_star = std::max(info.K_star, tc.clusters());
    dr.coords.push_back(std::move(cd));
    offset += K;
  }
  dr.R = truth.R;
  out.draws.push_back(std::move(dr));
  return out;
}

Score score_fit(const TrueModel& truth, const PosteriorDraws& draws, int grid_size) {
  require_draws(draws);
  truth.validate();
  const ModelInfo& info = draws.info;
  if (info.d != truth.d() || info.levels != truth.levels)
    throw ParameterError("fit and truth disagree on responses or covariate levels");
  const DensityGrid grid{truth.lower, truth.upper, grid_size};
  const Eigen::VectorXd x = grid.points();
  const long long ncombo = combination_count(truth.levels);
  std::vector<long long> combos(ncombo);
  std::iota(combos.begin(), combos.end(), 0LL);

  Score sc;
  sc.ise.resize(info.d, ncombo);
  const std::vector<CoordinatePartition> map = map_partitions(draws);
  for (int l = 0; l < info.d; ++l) {
    // Truth lives on its own support; the fit is evaluated at the same
    // original-scale points mapped into model units.
    const Rescale& rs = info.rescale.empty() ? Rescale{} : info.rescale[l];
    Eigen::VectorXd xm(x.size());
    for (Eigen::Index g = 0; g < x.size(); ++g) xm[g] = rs.to_model(x[g], info.lower, info.upper);
    const Eigen::MatrixXd fhat = marginal_rows(draws, l, xm, combos) / rs.jacobian(info.lower, info.upper);
    for (long long c = 0; c < ncombo; ++c) {
      const std::vector<int> combo = decode_combination(c, truth.levels);
      Eigen::VectorXd ftrue(x.size());
      for (Eigen::Index g = 0; g < x.size(); ++g) ftrue[g] = truth.density(l, combo, x[g]);
      sc.ise(l, c) = ise(ftrue, fhat.row(c).transpose(), grid.delta());
    }
    const TrueCoordinate& tc = truth.coords[l];
    const CoordinatePartition tp = make_partition(tc.s, tc.shape, tc.s_star, truth.levels);
    sc.ari.push_back(ari(tp.combinations, map[l].combinations));
    std::vector<bool> single;
    for (int h = 0; h < info.p; ++h) single.push_back(map[l].shape[h] == 1);
    sc.single_cluster.push_back(std::move(single));
  }
  sc.ise_sum = sc.ise.sum();
  sc.ise_mean = sc.ise.mean();
  sc.ari_mean = std::accumulate(sc.ari.begin(), sc.ari.end(), 0.0) / static_cast<double>(sc.ari.size());
  sc.R_hat = correlation_estimate(draws);
  if (sc.R_hat.rows() == truth.R.rows()) sc.R_max_abs_error = (sc.R_hat - truth.R).cwiseAbs().maxCoeff();
  return sc;
}

}  // namespace flower
