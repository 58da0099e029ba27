#include "flower/chain_store.hpp"

#include <cmath>
#include <limits>

#include "flower/error.hpp"

namespace flower {

using json = nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd to_mat(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw IoError("ragged matrix in chain store");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<int> shift(std::vector<int> v, int by) {
  for (int& x : v) x += by;
  return v;
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double null_to_nan(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

}  // namespace

json hyperparameters_to_json(const Hyperparameters& hp) {
  return json{{"K", hp.K},
              {"K_star", hp.K_star},
              {"support", {hp.lower, hp.upper}},
              {"a_alpha", hp.a_alpha},
              {"b_alpha", hp.b_alpha},
              {"a_phi", hp.a_phi},
              {"b_phi", hp.b_phi},
              {"alpha0", hp.alpha0},
              {"phi_star", hp.phi_star},
              {"a_sigma", hp.a_sigma},
              {"b_sigma", hp.b_sigma},
              {"m0", nan_to_null(hp.m0)},
              {"s0", nan_to_null(hp.s0)},
              {"sigma2_mu", hp.sigma2_mu},
              {"sigma2_sigma", hp.sigma2_sigma},
              {"sigma2_alpha", hp.sigma2_alpha},
              {"sigma2_phi", hp.sigma2_phi},
              {"adapt_every", hp.adapt_every},
              {"target_accept", hp.target_accept},
              {"grid_b", hp.grid_b},
              {"grid_theta", hp.grid_theta},
              {"latent", to_string(hp.latent)},
              {"iterations", hp.iterations},
              {"burnin", hp.burnin},
              {"thin", hp.thin},
              {"seed", hp.seed},
              {"threads", hp.threads}};
}

Hyperparameters hyperparameters_from_json(const json& j) {
  Hyperparameters hp;
  hp.K = j.at("K").get<int>();
  hp.K_star = j.at("K_star").get<int>();
  hp.lower = j.at("support").at(0).get<double>();
  hp.upper = j.at("support").at(1).get<double>();
  hp.a_alpha = j.at("a_alpha").get<double>();
  hp.b_alpha = j.at("b_alpha").get<double>();
  hp.a_phi = j.at("a_phi").get<double>();
  hp.b_phi = j.at("b_phi").get<double>();
  hp.alpha0 = j.at("alpha0").get<double>();
  hp.phi_star = j.at("phi_star").get<double>();
  hp.a_sigma = j.at("a_sigma").get<double>();
  hp.b_sigma = j.at("b_sigma").get<double>();
  hp.m0 = null_to_nan(j.at("m0"));
  hp.s0 = null_to_nan(j.at("s0"));
  hp.sigma2_mu = j.at("sigma2_mu").get<double>();
  hp.sigma2_sigma = j.at("sigma2_sigma").get<double>();
  hp.sigma2_alpha = j.at("sigma2_alpha").get<double>();
  hp.sigma2_phi = j.at("sigma2_phi").get<double>();
  hp.adapt_every = j.at("adapt_every").get<int>();
  hp.target_accept = j.at("target_accept").get<double>();
  hp.grid_b = j.at("grid_b").get<int>();
  hp.grid_theta = j.at("grid_theta").get<int>();
  hp.latent = latent_transform_from_string(j.at("latent").get<std::string>());
  hp.iterations = j.at("iterations").get<int>();
  hp.burnin = j.at("burnin").get<int>();
  hp.thin = j.at("thin").get<int>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.threads = j.at("threads").get<int>();
  return hp;
}

json model_info_to_json(const ModelInfo& info) {
  json rescale = json::array();
  for (const Rescale& r : info.rescale) rescale.push_back({{"min", r.min}, {"max", r.max}, {"identity", r.identity}});
  json counts = json::array();
  for (const auto& [c, n] : info.combination_counts)
    counts.push_back({{"combination", shift(decode_combination(c, info.levels), 1)}, {"count", n}});
  return json{{"d", info.d},
              {"p", info.p},
              {"K", info.K},
              {"K_star", info.K_star},
              {"levels", info.levels},
              {"support", {info.lower, info.upper}},
              {"n", info.n},
              {"hyperparameters", hyperparameters_to_json(info.hp)},
              {"response_names", info.response_names},
              {"covariate_names", info.covariate_names},
              {"level_labels", info.level_labels},
              {"rescale", rescale},
              {"combination_counts", counts}};
}

ModelInfo model_info_from_json(const json& j) {
  ModelInfo info;
  info.d = j.at("d").get<int>();
  info.p = j.at("p").get<int>();
  info.K = j.at("K").get<int>();
  info.K_star = j.at("K_star").get<int>();
  info.levels = j.at("levels").get<std::vector<int>>();
  info.lower = j.at("support").at(0).get<double>();
  info.upper = j.at("support").at(1).get<double>();
  info.n = j.at("n").get<int>();
  info.hp = hyperparameters_from_json(j.at("hyperparameters"));
  info.response_names = j.at("response_names").get<std::vector<std::string>>();
  info.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  info.level_labels = j.at("level_labels").get<std::vector<std::vector<std::string>>>();
  for (const json& r : j.at("rescale"))
    info.rescale.push_back(Rescale{r.at("min").get<double>(), r.at("max").get<double>(), r.at("identity").get<bool>()});
  for (const json& c : j.at("combination_counts"))
    info.combination_counts[encode_combination(shift(c.at("combination").get<std::vector<int>>(), -1), info.levels)] =
        c.at("count").get<int>();
  if (static_cast<int>(info.levels.size()) != info.p) throw IoError("chain store header: levels do not match p");
  return info;
}

json draw_to_json(const Draw& dr) {
  json coords = json::array();
  for (const CoordinateDraw& cd : dr.coords) {
    json s = json::array();
    for (const auto& sh : cd.s) s.push_back(shift(sh, 1));
    coords.push_back({{"s", s},
                      {"shape", cd.shape},
                      {"s_star", shift(cd.s_star, 1)},
                      {"lambda0", cd.lambda0},
                      {"lambda_hat", mat(cd.lambda_hat)},
                      {"eta_hat", cd.eta_hat},
                      {"eta_star_hat", cd.eta_star_hat}});
  }
  return json{{"type", "draw"},
              {"iteration", dr.iteration},
              {"coords", coords},
              {"mu", vec(dr.mu)},
              {"sigma2", vec(dr.sigma2)},
              {"alpha", dr.alpha},
              {"phi", dr.phi},
              {"b_idx", dr.b_idx},
              {"theta_idx", dr.theta_idx},
              {"b", vec(dr.b)},
              {"theta", vec(dr.theta)},
              {"R", mat(dr.R)}};
}

Draw draw_from_json(const json& j) {
  Draw dr;
  dr.iteration = j.at("iteration").get<int>();
  for (const json& c : j.at("coords")) {
    CoordinateDraw cd;
    for (const json& sh : c.at("s")) cd.s.push_back(shift(sh.get<std::vector<int>>(), -1));
    cd.shape = c.at("shape").get<std::vector<int>>();
    cd.s_star = shift(c.at("s_star").get<std::vector<int>>(), -1);
    cd.lambda0 = c.at("lambda0").get<std::vector<double>>();
    cd.lambda_hat = to_mat(c.at("lambda_hat"));
    cd.eta_hat = c.at("eta_hat").get<std::vector<std::vector<double>>>();
    cd.eta_star_hat = c.at("eta_star_hat").get<std::vector<double>>();
    dr.coords.push_back(std::move(cd));
  }
  dr.mu = to_vec(j.at("mu"));
  dr.sigma2 = to_vec(j.at("sigma2"));
  dr.alpha = j.at("alpha").get<double>();
  dr.phi = j.at("phi").get<double>();
  dr.b_idx = j.at("b_idx").get<std::vector<int>>();
  dr.theta_idx = j.at("theta_idx").get<std::vector<int>>();
  dr.b = to_vec(j.at("b"));
  dr.theta = to_vec(j.at("theta"));
  dr.R = to_mat(j.at("R"));
  return dr;
}

json acceptance_to_json(const AcceptanceSummary& a) {
  return json{{"alpha", a.alpha},   {"phi", a.phi},   {"mu", a.mu},
              {"sigma2", a.sigma2}, {"b", a.b},       {"theta", a.theta},
              {"joint_s", a.joint_s}, {"final_var_alpha", a.final_var_alpha}, {"final_var_phi", a.final_var_phi}};
}

AcceptanceSummary acceptance_from_json(const json& j) {
  AcceptanceSummary a;
  a.alpha = j.at("alpha").get<double>();
  a.phi = j.at("phi").get<double>();
  a.mu = j.at("mu").get<double>();
  a.sigma2 = j.at("sigma2").get<double>();
  a.b = j.at("b").get<double>();
  a.theta = j.at("theta").get<double>();
  a.joint_s = j.at("joint_s").get<std::vector<double>>();
  a.final_var_alpha = j.at("final_var_alpha").get<double>();
  a.final_var_phi = j.at("final_var_phi").get<double>();
  return a;
}

NdjsonDrawWriter::NdjsonDrawWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void NdjsonDrawWriter::emit(const json& record) {
  out_ << record.dump() << '\n';
  if (!out_) throw IoError("write to '" + path_ + "' failed");
}

void NdjsonDrawWriter::begin(const ModelInfo& info) {
  json header = model_info_to_json(info);
  header["type"] = "header";
  header["schema"] = kDrawsSchema;
  emit(header);
}

void NdjsonDrawWriter::write(const Draw& draw) { emit(draw_to_json(draw)); }

void NdjsonDrawWriter::end(const AcceptanceSummary& summary) {
  json rec = acceptance_to_json(summary);
  rec["type"] = "summary";
  emit(rec);
  out_.flush();
}

PosteriorDraws read_draws(std::istream& in) {
  PosteriorDraws out;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "header") {
        if (rec.value("schema", "") != kDrawsSchema) throw IoError("unsupported chain store schema");
        out.info = model_info_from_json(rec);
        have_header = true;
      } else if (type == "draw") {
        if (!have_header) throw IoError("draw record before the header");
        out.draws.push_back(draw_from_json(rec));
        if (static_cast<int>(out.draws.back().coords.size()) != out.info.d)
          throw IoError("draw record has the wrong number of coordinates");
      } else if (type == "summary") {
        out.acceptance = acceptance_from_json(rec);
      } else {
        throw IoError("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw IoError("chain store line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw IoError("chain store has no header record");
  return out;
}

PosteriorDraws read_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_draws(in);
}

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  NdjsonDrawWriter w(path);
  w.begin(draws.info);
  for (const Draw& d : draws.draws) w.write(d);
  w.end(draws.acceptance);
}

}  // namespace flower
