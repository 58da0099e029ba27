#include "flower/simgen.hpp"

#include <cmath>
#include <map>

#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/partition.hpp"
#include "flower/rng.hpp"
#include "json.hpp"

namespace flower {

using json = nlohmann::json;

int TrueCoordinate::cluster_of(const std::vector<int>& combo) const {
  int cell = 0;
  for (std::size_t h = 0; h < s.size(); ++h) cell = cell * shape[h] + s[h][combo[h]];
  return s_star[cell];
}

void TrueModel::validate() const {
  if (!(lower < upper)) throw ParameterError("true model: support must satisfy A < B");
  if (R.rows() != d() || R.cols() != d()) throw ParameterError("true model: R must be d x d");
  for (int a = 0; a < d(); ++a) {
    if (std::fabs(R(a, a) - 1.0) > 1e-9) throw ParameterError("true model: R must have a unit diagonal");
    for (int b = 0; b < d(); ++b)
      if (std::fabs(R(a, b) - R(b, a)) > 1e-12) throw ParameterError("true model: R must be symmetric");
  }
  if (d() > 0 && Eigen::LLT<Eigen::MatrixXd>(R).info() != Eigen::Success)
    throw ParameterError("true model: R must be positive definite");
  for (const TrueCoordinate& tc : coords) {
    if (static_cast<int>(tc.s.size()) != p()) throw ParameterError("true model: wrong number of partitions");
    long long volume = 1;
    for (int h = 0; h < p(); ++h) {
      if (static_cast<int>(tc.s[h].size()) != levels[h]) throw ParameterError("true model: partition length");
      if (!is_canonical(tc.s[h])) throw ParameterError("true model: partitions must be canonical");
      const int K_h = *std::max_element(tc.s[h].begin(), tc.s[h].end()) + 1;
      if (tc.shape[h] != K_h) throw ParameterError("true model: shape does not match partitions");
      volume *= K_h;
    }
    if (static_cast<long long>(tc.s_star.size()) != volume) throw ParameterError("true model: tensor volume");
    for (int v : tc.s_star)
      if (v < 0 || v >= tc.clusters()) throw ParameterError("true model: second-layer label out of range");
    if (tc.lambda.cols() != tc.mu.size() || tc.mu.size() != tc.sigma2.size() || tc.mu.size() == 0)
      throw ParameterError("true model: atoms and weights disagree");
    for (int r = 0; r < tc.lambda.rows(); ++r) {
      if ((tc.lambda.row(r).array() < 0.0).any() || std::fabs(tc.lambda.row(r).sum() - 1.0) > 1e-8)
        throw ParameterError("true model: weight rows must be simplices");
    }
    for (int k = 0; k < tc.sigma2.size(); ++k)
      if (!(tc.sigma2[k] > 0.0)) throw ParameterError("true model: atom variances must be positive");
  }
}

double TrueModel::density(int l, const std::vector<int>& combo, double x) const {
  const TrueCoordinate& tc = coords[l];
  const int ks = tc.cluster_of(combo);
  double out = 0.0;
  for (int k = 0; k < tc.mu.size(); ++k)
    if (tc.lambda(ks, k) > 0.0) out += tc.lambda(ks, k) * tn_pdf(x, {tc.mu[k], tc.sigma2[k], lower, upper});
  return out;
}

double TrueModel::cdf(int l, const std::vector<int>& combo, double x) const {
  const TrueCoordinate& tc = coords[l];
  const int ks = tc.cluster_of(combo);
  double out = 0.0;
  for (int k = 0; k < tc.mu.size(); ++k)
    if (tc.lambda(ks, k) > 0.0) out += tc.lambda(ks, k) * tn_cdf(x, {tc.mu[k], tc.sigma2[k], lower, upper});
  return std::clamp(out, 0.0, 1.0);
}

double TrueModel::quantile(int l, const std::vector<int>& combo, double u) const {
  const TrueCoordinate& tc = coords[l];
  const int ks = tc.cluster_of(combo);
  std::vector<TruncatedNormal> kernels;
  std::vector<double> w;
  for (int k = 0; k < tc.mu.size(); ++k)
    if (tc.lambda(ks, k) > 0.0) {
      kernels.emplace_back(tc.mu[k], tc.sigma2[k], lower, upper);
      w.push_back(tc.lambda(ks, k));
    }
  auto F = [&](double x) {
    double out = 0.0;
    for (std::size_t j = 0; j < kernels.size(); ++j) out += w[j] * kernels[j].cdf(x);
    return out;
  };
  double lo = lower, hi = upper;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (F(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXi sample_uniform_covariates(const std::vector<int>& levels, int n, Rng& rng) {
  Eigen::MatrixXi c(static_cast<int>(levels.size()), n);
  for (int i = 0; i < n; ++i)
    for (std::size_t h = 0; h < levels.size(); ++h) c(static_cast<int>(h), i) = rng.uniform_int(levels[h]);
  return c;
}

Dataset sample_dataset(const TrueModel& model, const Eigen::MatrixXi& covariates, Rng& rng) {
  model.validate();
  const int d = model.d(), p = model.p(), n = static_cast<int>(covariates.cols());
  if (covariates.rows() != p) throw DataError("covariate matrix has the wrong number of rows");
  for (int h = 0; h < p; ++h)
    for (int i = 0; i < n; ++i)
      if (covariates(h, i) < 0 || covariates(h, i) >= model.levels[h])
        throw DataError("covariate code out of range at unit " + std::to_string(i + 1));

  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(model.R).matrixL();
  Dataset out;
  out.x.resize(d, n);
  out.c = covariates;
  out.levels = model.levels;
  out.response_names = model.response_names;
  out.covariate_names = model.covariate_names;
  Eigen::VectorXd e(d);
  std::vector<int> combo(p);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < d; ++l) e[l] = rng.normal();
    const Eigen::VectorXd xd = L * e;
    for (int h = 0; h < p; ++h) combo[h] = covariates(h, i);
    for (int l = 0; l < d; ++l) out.x(l, i) = model.quantile(l, combo, std_normal_cdf(xd[l]));
  }
  out.fill_defaults();
  return out;
}

TrueModel scenario1_model(Rng& rng) {
  TrueModel m;
  m.levels = {6, 2, 4, 5, 3};
  m.lower = 0.0;
  m.upper = 10.0;
  m.R.resize(3, 3);
  m.R << 1.0, 0.7, 0.49, 0.7, 1.0, 0.7, 0.49, 0.7, 1.0;
  const double mu[3][4] = {{1, 2, 3, 5}, {1, 2, 4, 5}, {2, 3, 4, 5}};
  // s_(h) rows for each coordinate, 0-based labels
  const std::vector<std::vector<std::vector<int>>> s = {
      {{0, 0, 0, 1, 1, 1}, {0, 1}, {0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0}},
      {{0, 0, 0, 0, 0, 0}, {0, 1}, {0, 0, 0, 0}, {0, 1, 1, 1, 2}, {0, 0, 0}},
      {{0, 0, 0, 0, 0, 0}, {0, 0}, {0, 0, 1, 1}, {0, 0, 0, 0, 0}, {0, 0, 0}},
  };
  const int K = 4;
  const std::vector<double> conc(K, 2.0 / K);
  for (int l = 0; l < 3; ++l) {
    TrueCoordinate tc;
    tc.s = s[l];
    int volume = 1;
    for (const auto& sh : tc.s) {
      tc.shape.push_back(*std::max_element(sh.begin(), sh.end()) + 1);
      volume *= tc.shape.back();
    }
    tc.s_star.resize(volume);
    for (int v = 0; v < volume; ++v) tc.s_star[v] = v;
    tc.lambda.resize(volume, K);
    for (int v = 0; v < volume; ++v) {
      const std::vector<double> w = rng.dirichlet(conc);
      for (int k = 0; k < K; ++k) tc.lambda(v, k) = w[k];
    }
    tc.mu.resize(K);
    tc.sigma2.resize(K);
    for (int k = 0; k < K; ++k) {
      tc.mu[k] = mu[l][k];
      tc.sigma2[k] = 0.75 * 0.75;
    }
    m.coords.push_back(std::move(tc));
  }
  m.response_names = {"y1", "y2", "y3"};
  m.covariate_names = {"c1", "c2", "c3", "c4", "c5"};
  m.validate();
  return m;
}

SimulatedData scenario1(int n, Rng& rng) {
  if (n < 0) throw ParameterError("scenario1: n must be nonnegative");
  SimulatedData out;
  out.model = scenario1_model(rng);
  const Eigen::MatrixXi c = sample_uniform_covariates(out.model.levels, n, rng);
  out.data = sample_dataset(out.model, c, rng);
  return out;
}

Eigen::MatrixXd scenario2_correlation() {
  Eigen::MatrixXd R(6, 6);
  R << 1.00, 0.18, 0.08, 0.06, 0.23, 0.14,  //
      0.18, 1.00, 0.12, 0.10, 0.36, 0.24,   //
      0.08, 0.12, 1.00, -0.07, -0.01, -0.21,  //
      0.06, 0.10, -0.07, 1.00, 0.37, 0.29,  //
      0.23, 0.36, -0.01, 0.37, 1.00, 0.41,  //
      0.14, 0.24, -0.21, 0.29, 0.41, 1.00;
  return R;
}

namespace {

struct CoordinateRecipe {
  std::vector<std::vector<int>> s;           // sex, age, race, income
  std::vector<std::vector<double>> effects;  // per covariate, per first-layer cluster
  double base;
};

// Skewed unimodal shape: three kernels to the right of the cluster centre.
constexpr double kShapeOffset[3] = {0.0, 1.0, 2.2};
constexpr double kShapeWeight[3] = {0.55, 0.30, 0.15};
constexpr double kShapeSd[3] = {0.7, 0.9, 1.2};

TrueCoordinate build_additive_coordinate(const CoordinateRecipe& r) {
  TrueCoordinate tc;
  tc.s = r.s;
  int volume = 1;
  for (const auto& sh : tc.s) {
    tc.shape.push_back(*std::max_element(sh.begin(), sh.end()) + 1);
    volume *= tc.shape.back();
  }
  // centre of every aggregated cell, identical centres share a cluster
  std::map<long long, int> cluster_of_centre;
  std::vector<double> centres;
  tc.s_star.resize(volume);
  for (int cell = 0; cell < volume; ++cell) {
    int rest = cell;
    double centre = r.base;
    for (int h = static_cast<int>(tc.shape.size()) - 1; h >= 0; --h) {
      centre += r.effects[h][rest % tc.shape[h]];
      rest /= tc.shape[h];
    }
    const long long key = std::llround(centre * 1e6);
    auto it = cluster_of_centre.find(key);
    if (it == cluster_of_centre.end()) {
      it = cluster_of_centre.emplace(key, static_cast<int>(centres.size())).first;
      centres.push_back(centre);
    }
    tc.s_star[cell] = it->second;
  }
  const int clusters = static_cast<int>(centres.size());
  const int K = 3 * clusters;
  tc.mu.resize(K);
  tc.sigma2.resize(K);
  tc.lambda = Eigen::MatrixXd::Zero(clusters, K);
  for (int c = 0; c < clusters; ++c)
    for (int j = 0; j < 3; ++j) {
      tc.mu[3 * c + j] = centres[c] + kShapeOffset[j];
      tc.sigma2[3 * c + j] = kShapeSd[j] * kShapeSd[j];
      tc.lambda(c, 3 * c + j) = kShapeWeight[j];
    }
  return tc;
}

}  // namespace

TrueModel nhanes_like_model(int d) {
  if (d < 1 || d > 6) throw ParameterError("nhanes_like_model: d must lie in 1..6");
  const std::vector<int> all_sex = {0, 0}, by_sex = {0, 1};
  const std::vector<int> all_race = {0, 0, 0, 0, 0, 0}, all_income = {0, 0, 0, 0, 0, 0};
  const double step = 0.8;
  std::vector<CoordinateRecipe> recipes = {
      // total vegetables: age in 4 groups; Asian / Other Hispanic / rest
      {{all_sex, {0, 1, 2, 3, 3, 3, 3}, {0, 1, 1, 1, 2, 1}, all_income},
       {{0}, {0, step, 2 * step, 3 * step}, {0, step, 2 * step}, {0}},
       2.5},
      // total protein: sex; age in 5 groups
      {{by_sex, {0, 1, 2, 3, 3, 3, 4}, all_race, all_income},
       {{0, step}, {0, step, 2 * step, 3 * step, step}, {0}, {0}},
       2.5},
      // fatty acids: age {[1,2), 20+}, [2,10), [10,20); White / not; income reported / missing
      {{all_sex, {0, 1, 2, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 1}},
       {{0}, {0, step, 2 * step}, {0, step}, {0, step}},
       2.5},
      // refined grains: sex; age in 5 groups
      {{by_sex, {0, 1, 2, 3, 2, 2, 4}, all_race, all_income},
       {{0, step}, {0, step, 2 * step, 3 * step, step}, {0}, {0}},
       2.5},
      // sodium: sex; age in 4 groups
      {{by_sex, {0, 1, 2, 3, 2, 2, 2}, all_race, all_income},
       {{0, step}, {0, step, 2 * step, 3 * step}, {0}, {0}},
       2.5},
      // saturated fat: sex; age in 4 groups; Asian / not
      {{by_sex, {0, 0, 1, 2, 2, 3, 3}, {0, 1, 1, 1, 1, 1}, all_income},
       {{0, step}, {0, step, 2 * step, 3 * step}, {0, step}, {0}},
       2.0},
  };
  // race coding: Asian, Black, Mexican American, Other, Other Hispanic, White.
  TrueModel m;
  m.levels = {2, 7, 6, 6};
  m.lower = 0.0;
  m.upper = 10.0;
  m.R = scenario2_correlation().topLeftCorner(d, d);
  const std::vector<std::string> names = {"vegetables", "protein",  "fatty_acids",
                                          "refined_grains", "sodium", "saturated_fat"};
  for (int l = 0; l < d; ++l) {
    m.coords.push_back(build_additive_coordinate(recipes[l]));
    m.response_names.push_back(names[l]);
  }
  m.covariate_names = {"sex", "age", "race", "income"};
  m.validate();
  return m;
}

SimulatedData scenario2(TrueModel artifact, const Eigen::MatrixXi& covariates, int n, Rng& rng) {
  if (artifact.d() < 1 || artifact.d() > 6)
    throw ParameterError("scenario2: the artifact must have between 1 and 6 coordinates");
  artifact.R = scenario2_correlation().topLeftCorner(artifact.d(), artifact.d());
  SimulatedData out;
  const Eigen::MatrixXi c =
      covariates.size() > 0 ? covariates : sample_uniform_covariates(artifact.levels, n, rng);
  out.data = sample_dataset(artifact, c, rng);
  out.model = std::move(artifact);
  return out;
}

std::string true_model_to_json(const TrueModel& m) {
  json j;
  j["schema"] = "flower-truth/1";
  j["levels"] = m.levels;
  j["support"] = {m.lower, m.upper};
  json R = json::array();
  for (int a = 0; a < m.R.rows(); ++a) {
    json row = json::array();
    for (int b = 0; b < m.R.cols(); ++b) row.push_back(m.R(a, b));
    R.push_back(row);
  }
  j["R"] = R;
  j["response_names"] = m.response_names;
  j["covariate_names"] = m.covariate_names;
  json coords = json::array();
  for (const TrueCoordinate& tc : m.coords) {
    json c;
    json s = json::array();
    for (const auto& sh : tc.s) {
      json row = json::array();
      for (int v : sh) row.push_back(v + 1);
      s.push_back(row);
    }
    c["s"] = s;
    json ss = json::array();
    for (int v : tc.s_star) ss.push_back(v + 1);
    c["s_star"] = ss;
    json lam = json::array();
    for (int r = 0; r < tc.lambda.rows(); ++r) {
      json row = json::array();
      for (int k = 0; k < tc.lambda.cols(); ++k) row.push_back(tc.lambda(r, k));
      lam.push_back(row);
    }
    c["lambda"] = lam;
    c["mu"] = std::vector<double>(tc.mu.data(), tc.mu.data() + tc.mu.size());
    c["sigma2"] = std::vector<double>(tc.sigma2.data(), tc.sigma2.data() + tc.sigma2.size());
    coords.push_back(c);
  }
  j["coordinates"] = coords;
  return j.dump(1);
}

TrueModel true_model_from_json(const std::string& text) {
  TrueModel m;
  try {
    const json j = json::parse(text);
    if (j.value("schema", std::string()) != "flower-truth/1") throw IoError("unrecognized truth schema");
    m.levels = j.at("levels").get<std::vector<int>>();
    m.lower = j.at("support").at(0).get<double>();
    m.upper = j.at("support").at(1).get<double>();
    const auto& R = j.at("R");
    const int d = static_cast<int>(R.size());
    m.R.resize(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m.R(a, b) = R.at(a).at(b).get<double>();
    if (j.contains("response_names")) m.response_names = j["response_names"].get<std::vector<std::string>>();
    if (j.contains("covariate_names")) m.covariate_names = j["covariate_names"].get<std::vector<std::string>>();
    for (const auto& c : j.at("coordinates")) {
      TrueCoordinate tc;
      for (const auto& row : c.at("s")) {
        std::vector<int> sh = row.get<std::vector<int>>();
        for (int& v : sh) --v;
        tc.shape.push_back(sh.empty() ? 0 : *std::max_element(sh.begin(), sh.end()) + 1);
        tc.s.push_back(std::move(sh));
      }
      tc.s_star = c.at("s_star").get<std::vector<int>>();
      for (int& v : tc.s_star) --v;
      const auto& lam = c.at("lambda");
      const int rows = static_cast<int>(lam.size());
      const int cols = rows > 0 ? static_cast<int>(lam.at(0).size()) : 0;
      tc.lambda.resize(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int k = 0; k < cols; ++k) tc.lambda(r, k) = lam.at(r).at(k).get<double>();
      const std::vector<double> mu = c.at("mu").get<std::vector<double>>();
      const std::vector<double> s2 = c.at("sigma2").get<std::vector<double>>();
      tc.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
      tc.sigma2 = Eigen::Map<const Eigen::VectorXd>(s2.data(), static_cast<Eigen::Index>(s2.size()));
      m.coords.push_back(std::move(tc));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed truth file: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace flower
