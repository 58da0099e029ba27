#include "flower/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "flower/chain_store.hpp"
#include "flower/config.hpp"
#include "flower/error.hpp"
#include "flower/estimators.hpp"
#include "flower/ingest.hpp"
#include "flower/rng.hpp"
#include "flower/sampler.hpp"
#include "flower/simgen.hpp"

namespace flower::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad flag values detected after CLI11 parsing; reported with the usage exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

bool parse_index(const std::string& s, int& out) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) return false;
  out = std::stoi(s);
  return true;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrueModel load_truth(const std::string& path) {
  try {
    return true_model_from_json(read_text(path));
  } catch (const json::exception& e) {
    throw IoError("'" + path + "' is not a valid truth file: " + e.what());
  }
}

/// Chain store or, when the file holds a single truth JSON document, the
/// truth viewed as a one-draw chain.
PosteriorDraws load_fit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  json head = json::parse(first, nullptr, false);
  if (!head.is_discarded() && head.is_object() && head.value("type", "") == "header") return read_draws(path);
  return truth_as_draws(load_truth(path));
}

/// Accepts "2", "l=2", "ℓ=2" or a response name; returns the 0-based coordinate.
int parse_coordinate(std::string spec, const ModelInfo& info) {
  if (const auto eq = spec.find('='); eq != std::string::npos) spec = spec.substr(eq + 1);
  int idx = 0;
  if (parse_index(spec, idx)) {
    if (idx < 1 || idx > info.d)
      throw UsageError("coordinate " + spec + " is out of range 1.." + std::to_string(info.d));
    return idx - 1;
  }
  const auto it = std::find(info.response_names.begin(), info.response_names.end(), spec);
  if (it == info.response_names.end()) throw UsageError("unknown response '" + spec + "'");
  return static_cast<int>(it - info.response_names.begin());
}

std::string covariate_name(const ModelInfo& info, int h) {
  return h < static_cast<int>(info.covariate_names.size()) ? info.covariate_names[h] : "c" + std::to_string(h + 1);
}

std::string level_label(const ModelInfo& info, int h, int code) {
  if (h < static_cast<int>(info.level_labels.size()) && code < static_cast<int>(info.level_labels[h].size()))
    return info.level_labels[h][code];
  return std::to_string(code + 1);
}

/// "sex=F,age=[1,2)" -> 0-based levels. Commas only separate assignments
/// when followed by a known covariate name and '=', so labels may contain commas.
std::vector<int> parse_combo(const std::string& spec, const ModelInfo& info) {
  std::vector<std::string> names;
  for (int h = 0; h < info.p; ++h) names.push_back(covariate_name(info, h));
  auto starts_assignment = [&](std::size_t pos) {
    for (const auto& n : names)
      if (spec.compare(pos, n.size() + 1, n + "=") == 0) return true;
    return false;
  };
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (spec[i] == ',' && starts_assignment(i + 1)) {
      parts.push_back(spec.substr(start, i - start));
      start = i + 1;
    }
  parts.push_back(spec.substr(start));

  std::vector<int> combo(info.p, -1);
  for (const auto& part : parts) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw UsageError("combination entry '" + part + "' is not name=label");
    const std::string name = part.substr(0, eq), value = part.substr(eq + 1);
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw UsageError("unknown covariate '" + name + "'");
    const int h = static_cast<int>(it - names.begin());
    int code = -1;
    for (int k = 0; k < info.levels[h]; ++k)
      if (level_label(info, h, k) == value) code = k;
    int idx = 0;
    if (code < 0 && parse_index(value, idx) && idx >= 1 && idx <= info.levels[h]) code = idx - 1;
    if (code < 0) throw UsageError("covariate '" + name + "' has no level '" + value + "'");
    combo[h] = code;
  }
  std::string missing;
  for (int h = 0; h < info.p; ++h)
    if (combo[h] < 0) missing += (missing.empty() ? "" : ", ") + names[h];
  if (!missing.empty()) throw UsageError("the combination does not set: " + missing);
  return combo;
}

std::string combo_tag(const std::vector<int>& combo) {
  std::string tag;
  for (std::size_t h = 0; h < combo.size(); ++h) tag += (h ? "-" : "") + std::to_string(combo[h] + 1);
  return tag.empty() ? "all" : tag;
}

Rescale rescale_of(const ModelInfo& info, int l) {
  return l < static_cast<int>(info.rescale.size()) ? info.rescale[l] : Rescale{};
}

/// Grid columns on the model scale followed by the original units.
void write_density_csv(const std::string& path, const DensityEstimate& f, const std::vector<int>& L,
                       const ModelInfo& info) {
  std::ofstream out = open_out(path);
  const int dims = static_cast<int>(L.size());
  const int G = f.grid.size;
  auto suffix = [&](int j) { return dims == 1 ? std::string() : std::to_string(j + 1); };
  for (int j = 0; j < dims; ++j) out << "x" << suffix(j) << "_model,";
  out << "density_model";
  for (int j = 0; j < dims; ++j) out << ",x" << suffix(j) << "_original";
  out << ",density_original\n";
  double jac = 1.0;
  for (int l : L) jac *= rescale_of(info, l).jacobian(info.lower, info.upper);
  std::vector<int> g(dims, 0);
  for (Eigen::Index r = 0; r < f.values.size(); ++r) {
    long long rem = r;
    for (int j = dims - 1; j >= 0; --j) {
      g[j] = static_cast<int>(rem % G);
      rem /= G;
    }
    for (int j = 0; j < dims; ++j) out << fmt(f.grid.point(g[j])) << ',';
    out << fmt(f.values[r]);
    for (int j = 0; j < dims; ++j) out << ',' << fmt(rescale_of(info, L[j]).to_original(f.grid.point(g[j]), info.lower, info.upper));
    out << ',' << fmt(f.values[r] / jac) << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

json partitions_json(const PosteriorDraws& draws) {
  const ModelInfo& info = draws.info;
  const auto map = map_partitions(draws);
  json coords = json::array();
  for (int l = 0; l < info.d; ++l) {
    const CoordinatePartition& cp = map[l];
    json covs = json::array();
    for (int h = 0; h < info.p; ++h) {
      std::vector<std::vector<std::string>> groups(cp.shape[h]);
      for (int k = 0; k < info.levels[h]; ++k) groups[cp.s[h][k]].push_back(level_label(info, h, k));
      json g = json::array();
      for (const auto& grp : groups)
        if (!grp.empty()) g.push_back(grp);
      covs.push_back({{"name", covariate_name(info, h)}, {"groups", g}});
    }
    std::vector<int> s_star1, comb1;
    for (int v : cp.s_star) s_star1.push_back(v + 1);
    for (int v : cp.combinations) comb1.push_back(v + 1);
    const int clusters = cp.combinations.empty() ? 0 : *std::max_element(cp.combinations.begin(), cp.combinations.end()) + 1;
    coords.push_back({{"response", l < static_cast<int>(info.response_names.size()) ? info.response_names[l] : std::to_string(l + 1)},
                      {"frequency", cp.frequency},
                      {"draws", draws.size()},
                      {"covariates", covs},
                      {"shape", cp.shape},
                      {"s_star", s_star1},
                      {"clusters", clusters},
                      {"combination_clusters", comb1}});
  }
  return {{"levels", info.levels}, {"coordinates", coords}};
}

json score_json(const Score& sc, int grid) {
  json ise = json::array();
  for (int l = 0; l < sc.ise.rows(); ++l) {
    json row = json::array();
    for (int c = 0; c < sc.ise.cols(); ++c) row.push_back(sc.ise(l, c));
    ise.push_back(row);
  }
  json R = json::array();
  for (int a = 0; a < sc.R_hat.rows(); ++a) {
    json row = json::array();
    for (int b = 0; b < sc.R_hat.cols(); ++b) row.push_back(sc.R_hat(a, b));
    R.push_back(row);
  }
  json single = json::array();
  for (const auto& v : sc.single_cluster) single.push_back(std::vector<bool>(v.begin(), v.end()));
  return {{"grid", grid},
          {"ise_mean", sc.ise_mean},
          {"ise_sum", sc.ise_sum},
          {"ari", sc.ari},
          {"ari_mean", sc.ari_mean},
          {"single_cluster", single},
          {"R_hat", R},
          {"R_max_abs_error", sc.R_max_abs_error},
          {"ise", ise}};
}

Eigen::MatrixXi read_covariate_codes(const std::string& path, const TrueModel& model) {
  const CsvTable t = read_csv(path);
  Eigen::MatrixXi c(model.p(), static_cast<int>(t.rows.size()));
  for (int h = 0; h < model.p(); ++h) {
    const std::string name =
        h < static_cast<int>(model.covariate_names.size()) ? model.covariate_names[h] : "c" + std::to_string(h + 1);
    const int col = t.column(name);
    for (int i = 0; i < c.cols(); ++i) {
      int code = 0;
      if (!parse_index(t.rows[i][col], code) || code < 1 || code > model.levels[h])
        throw DataError("covariate '" + name + "' row " + std::to_string(i + 1) + ": expected a code in 1.." +
                        std::to_string(model.levels[h]));
      c(h, i) = code - 1;
    }
  }
  return c;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string config, data, out, support, rescale, latent;
  std::vector<std::string> responses, covariates;
  std::uint64_t seed = 0;
  int iterations = 0, burnin = -1, thin = 0, threads = 0;
  bool quiet = false;
};

int cmd_fit(const FitArgs& a, const Context& ctx) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.data.empty()) cfg.data_path = a.data;
  if (!a.responses.empty()) cfg.responses = a.responses;
  if (!a.covariates.empty()) cfg.covariates = a.covariates;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (!a.rescale.empty()) cfg.rescale = rescale_mode_from_string(a.rescale);
  if (!a.latent.empty()) cfg.hp.latent = latent_transform_from_string(a.latent);
  if (!a.support.empty()) {
    const auto ab = split(a.support, ',');
    try {
      if (ab.size() != 2) throw std::invalid_argument("");
      cfg.hp.lower = std::stod(ab[0]);
      cfg.hp.upper = std::stod(ab[1]);
    } catch (const std::logic_error&) {
      throw UsageError("--support expects A,B");
    }
  }
  cfg.hp.seed = a.seed;
  if (a.iterations > 0) cfg.hp.iterations = a.iterations;
  if (a.burnin >= 0) cfg.hp.burnin = a.burnin;
  if (a.thin > 0) cfg.hp.thin = a.thin;
  if (a.threads > 0) {
    cfg.hp.threads = a.threads;
  } else if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    int t = 0;
    if (!parse_index(env, t) || t < 1) throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
    cfg.hp.threads = t;
  }
  if (cfg.data_path.empty()) throw UsageError("no data file: set data.path in the config or pass --data");
  if (cfg.responses.empty()) throw UsageError("no response columns: set data.responses or pass --response");

  const Dataset data = ingest_csv(cfg.data_path, cfg.ingest_options());
  Sampler sampler(data, cfg.hp);
  ensure_dir(cfg.output_dir);
  {
    // The copy next to the draws must stay valid wherever it is re-read from.
    RunConfig resolved = cfg;
    resolved.data_path = fs::absolute(cfg.data_path).lexically_normal().string();
    std::ofstream f = open_out((fs::path(cfg.output_dir) / "config.toml").string());
    f << config_to_toml(resolved);
  }
  const std::string draws_path = (fs::path(cfg.output_dir) / "draws.ndjson").string();
  NdjsonDrawWriter writer(draws_path);

  const int total = cfg.hp.iterations;
  const int every = std::max(1, total / 20);
  const auto t0 = std::chrono::steady_clock::now();
  auto progress = [&](int iter, const Sampler&) {
    if (a.quiet || (iter % every != 0 && iter != total)) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.err << "iteration " << iter << "/" << total << (iter <= cfg.hp.burnin ? " (burn-in)" : "") << "  "
            << static_cast<int>(secs) << " s\n";
  };
  const PosteriorDraws draws = sampler.run(&writer, progress);
  ctx.out << "wrote " << draws.size() << " draws to " << draws_path << "\n";
  return kOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string draws, out = ".", marginal, combo, joint;
  int grid = 300;
  bool uncond = false, partitions = false, correlation = false;
};

int cmd_estimate(const EstimateArgs& a, const Context& ctx) {
  const PosteriorDraws draws = load_fit(a.draws);
  if (draws.draws.empty()) throw DataError("'" + a.draws + "' contains no draws");
  const ModelInfo& info = draws.info;
  if (a.grid < 2) throw UsageError("--grid must be at least 2");
  const DensityGrid grid{info.lower, info.upper, a.grid};
  ensure_dir(a.out);
  const bool any = !a.marginal.empty() || !a.joint.empty() || a.partitions || a.correlation;

  if (!a.marginal.empty() || !a.joint.empty()) {
    std::vector<int> L;
    if (!a.marginal.empty()) {
      L.push_back(parse_coordinate(a.marginal, info));
    } else {
      for (const auto& s : split(a.joint, ',')) L.push_back(parse_coordinate(s, info));
      if (L.size() < 2) throw UsageError("--joint needs at least two coordinates");
      if (std::set<int>(L.begin(), L.end()).size() != L.size()) throw UsageError("--joint coordinates must differ");
      if (std::pow(static_cast<double>(a.grid), static_cast<double>(L.size())) > 1e7)
        throw UsageError("joint grid too large; lower --grid");
    }
    if (a.uncond == !a.combo.empty()) throw UsageError("give exactly one of --combo and --uncond");
    std::vector<int> combo;
    DensityEstimate f;
    if (a.uncond) {
      f = L.size() == 1 ? uncond_density(draws, L[0], grid) : uncond_joint_density(draws, L, grid);
    } else {
      combo = parse_combo(a.combo, info);
      f = L.size() == 1 ? cond_marginal_density(draws, L[0], combo, grid) : cond_joint_density(draws, L, combo, grid);
    }
    std::string coords;
    for (std::size_t j = 0; j < L.size(); ++j) coords += (j ? "x" : "") + std::to_string(L[j] + 1);
    const std::string path = (fs::path(a.out) / ("density_" + coords + "_" + combo_tag(combo) + ".csv")).string();
    write_density_csv(path, f, L, info);
    ctx.out << "wrote " << path << "\n";
  }
  if (a.partitions || !any) {
    const std::string path = (fs::path(a.out) / "partitions.json").string();
    std::ofstream f = open_out(path);
    f << partitions_json(draws).dump(2) << '\n';
    ctx.out << "wrote " << path << "\n";
  }
  if (a.correlation || !any) {
    const Eigen::MatrixXd R = correlation_estimate(draws);
    const std::string path = (fs::path(a.out) / "R.csv").string();
    std::ofstream f = open_out(path);
    auto name = [&](int l) {
      return l < static_cast<int>(info.response_names.size()) ? info.response_names[l] : std::to_string(l + 1);
    };
    f << "response";
    for (int l = 0; l < info.d; ++l) f << ',' << name(l);
    f << '\n';
    for (int r = 0; r < info.d; ++r) {
      f << name(r);
      for (int c = 0; c < info.d; ++c) f << ',' << fmt(R(r, c));
      f << '\n';
    }
    ctx.out << "wrote " << path << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario, out = ".", covariates, truth;
  int n = 0, d = 6;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, const Context& ctx) {
  Rng rng(a.seed);
  SimulatedData sim;
  auto covariates_for = [&](const TrueModel& m, int default_n) {
    if (a.covariates.empty()) {
      return sample_uniform_covariates(m.levels, a.n > 0 ? a.n : default_n, rng);
    }
    Eigen::MatrixXi c = read_covariate_codes(a.covariates, m);
    if (a.n > 0 && a.n != c.cols())
      throw UsageError("--n " + std::to_string(a.n) + " disagrees with the " + std::to_string(c.cols()) +
                       " rows of '" + a.covariates + "'");
    return c;
  };
  if (a.scenario == "1") {
    if (!a.covariates.empty() || !a.truth.empty()) throw UsageError("scenario 1 takes neither --covariates nor --truth");
    sim = scenario1(a.n > 0 ? a.n : 1000, rng);
  } else if (a.scenario == "2") {
    if (a.d < 1 || a.d > 6) throw UsageError("--d must lie in 1..6");
    TrueModel artifact = a.truth.empty() ? nhanes_like_model(a.d) : load_truth(a.truth);
    const Eigen::MatrixXi c = covariates_for(artifact, 6307);
    sim = scenario2(std::move(artifact), c, static_cast<int>(c.cols()), rng);
  } else if (a.scenario == "custom") {
    if (a.truth.empty()) throw UsageError("--scenario custom requires --truth");
    sim.model = load_truth(a.truth);
    sim.model.validate();
    sim.data = sample_dataset(sim.model, covariates_for(sim.model, 1000), rng);
  } else {
    throw UsageError("--scenario must be 1, 2 or custom");
  }
  ensure_dir(a.out);
  const std::string data_path = (fs::path(a.out) / "data.csv").string();
  const std::string truth_path = (fs::path(a.out) / "truth.json").string();
  write_dataset_csv(data_path, sim.data, sim.model.lower, sim.model.upper);
  std::ofstream t = open_out(truth_path);
  t << true_model_to_json(sim.model) << '\n';
  ctx.out << "wrote " << data_path << " (" << sim.data.n() << " rows) and " << truth_path << "\n";
  return kOk;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string truth, fit, out = ".";
  int grid = 300;
};

int cmd_score(const ScoreArgs& a, const Context& ctx) {
  const TrueModel truth = load_truth(a.truth);
  const PosteriorDraws fit = load_fit(a.fit);
  if (fit.draws.empty()) throw DataError("'" + a.fit + "' contains no draws");
  const Score sc = score_fit(truth, fit, a.grid);
  ensure_dir(a.out);
  const std::string path = (fs::path(a.out) / "score.json").string();
  std::ofstream f = open_out(path);
  f << score_json(sc, a.grid).dump(2) << '\n';
  ctx.out << "ise_mean " << fmt(sc.ise_mean) << "\nise_sum " << fmt(sc.ise_sum) << "\nari_mean " << fmt(sc.ari_mean)
          << "\nR_max_abs_error " << fmt(sc.R_max_abs_error) << "\nwrote " << path << "\n";
  return kOk;
}

// ---------------------------------------------------------------- summary

struct SummaryArgs {
  std::string draws, trace;
  bool as_json = false;
};

int cmd_summary(const SummaryArgs& a, const Context& ctx) {
  const PosteriorDraws pd = load_fit(a.draws);
  const ModelInfo& info = pd.info;
  const AcceptanceSummary& acc = pd.acceptance;
  json coords = json::array();
  for (int l = 0; l < info.d; ++l) {
    double mean = 0.0;
    int lo = 0, hi = 0;
    std::vector<double> kh(info.p, 0.0);
    for (std::size_t t = 0; t < pd.size(); ++t) {
      const CoordinateDraw& cd = pd.draws[t].coords[l];
      const int k = cd.occupied_clusters();
      mean += k;
      lo = t ? std::min(lo, k) : k;
      hi = t ? std::max(hi, k) : k;
      for (int h = 0; h < info.p; ++h)
        kh[h] += static_cast<double>(std::set<int>(cd.s[h].begin(), cd.s[h].end()).size());
    }
    const double m = pd.size() ? static_cast<double>(pd.size()) : 1.0;
    for (double& v : kh) v /= m;
    coords.push_back({{"response", l < static_cast<int>(info.response_names.size()) ? info.response_names[l] : std::to_string(l + 1)},
                      {"clusters_mean", mean / m},
                      {"clusters_min", lo},
                      {"clusters_max", hi},
                      {"covariate_groups_mean", kh},
                      {"joint_s_accept", l < static_cast<int>(acc.joint_s.size()) ? acc.joint_s[l] : 0.0}});
  }
  const json report = {{"draws", pd.size()},
                       {"first_iteration", pd.size() ? pd.draws.front().iteration : 0},
                       {"last_iteration", pd.size() ? pd.draws.back().iteration : 0},
                       {"acceptance", acceptance_to_json(acc)},
                       {"coordinates", coords}};
  if (a.as_json) {
    ctx.out << report.dump(2) << '\n';
  } else {
    ctx.out << "draws " << pd.size() << " (iterations " << report["first_iteration"] << ".." << report["last_iteration"]
            << ")\nacceptance alpha " << fmt(acc.alpha) << "  phi " << fmt(acc.phi) << "  mu " << fmt(acc.mu)
            << "  sigma2 " << fmt(acc.sigma2) << "  b " << fmt(acc.b) << "  theta " << fmt(acc.theta) << '\n';
    for (const auto& c : coords)
      ctx.out << c["response"].get<std::string>() << ": clusters mean " << fmt(c["clusters_mean"].get<double>())
              << " range " << c["clusters_min"] << ".." << c["clusters_max"] << "  joint move acceptance "
              << fmt(c["joint_s_accept"].get<double>()) << '\n';
  }
  if (!a.trace.empty()) {
    std::ofstream f = open_out(a.trace);
    f << "iteration,alpha,phi";
    for (const auto& c : coords) f << ",clusters_" << c["response"].get<std::string>();
    f << '\n';
    for (const Draw& d : pd.draws) {
      f << d.iteration << ',' << fmt(d.alpha) << ',' << fmt(d.phi);
      for (const auto& cd : d.coords) f << ',' << cd.occupied_clusters();
      f << '\n';
    }
  }
  return kOk;
}

int fail(const Context& ctx, bool as_json, const char* kind, const std::string& message, int code) {
  if (as_json)
    ctx.err << json{{"error", kind}, {"message", message}}.dump() << '\n';
  else
    ctx.err << "error: " << message << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Context ctx{out, err};
  const bool error_json = std::find(args.begin(), args.end(), "--error-json") != args.end();

  CLI::App app{"Bayesian density regression with categorical covariates", "flower"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--error-json", "Report failures as a JSON object on stderr");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Run the sampler and store retained draws");
  fit->add_option("--config", fa.config, "TOML run configuration")->check(CLI::ExistingFile);
  fit->add_option("--seed", fa.seed, "Master random seed")->required();
  fit->add_option("--data", fa.data, "Input CSV (overrides data.path)");
  fit->add_option("--response", fa.responses, "Response columns")->delimiter(',');
  fit->add_option("--covariate", fa.covariates, "Covariate columns")->delimiter(',');
  fit->add_option("--support", fa.support, "Common support A,B");
  fit->add_option("--rescale", fa.rescale, "minmax or none");
  fit->add_option("--latent", fa.latent, "Latent score transform: mixture or component");
  fit->add_option("--out", fa.out, "Output directory (overrides output.dir)");
  fit->add_option("--iterations", fa.iterations, "Total iterations");
  fit->add_option("--burnin", fa.burnin, "Burn-in iterations");
  fit->add_option("--thin", fa.thin, "Thinning interval");
  fit->add_option("--threads", fa.threads, std::string("Worker threads (default: $") + kThreadsEnv + " or config)");
  fit->add_flag("--quiet", fa.quiet, "No progress output");

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Density grids, MAP partitions and correlation from a chain store");
  est->add_option("--draws", ea.draws, "Chain store (draws.ndjson)")->required()->check(CLI::ExistingFile);
  est->add_option("--out", ea.out, "Output directory");
  est->add_option("--grid", ea.grid, "Grid points per coordinate");
  est->add_option("--marginal", ea.marginal, "Coordinate (index, l=index or response name)");
  est->add_option("--joint", ea.joint, "Comma-separated coordinates for a joint density");
  est->add_option("--combo", ea.combo, "Covariate combination, e.g. sex=F,age=2");
  est->add_flag("--uncond", ea.uncond, "Average over the observed covariate distribution");
  est->add_flag("--partitions", ea.partitions, "Write partitions.json");
  est->add_flag("--correlation", ea.correlation, "Write R.csv");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset and its true model");
  sim->add_option("--scenario", sa.scenario, "1, 2 or custom")->required();
  sim->add_option("--seed", sa.seed, "Random seed")->required();
  sim->add_option("--n", sa.n, "Sample size (1000, or 6307 for scenario 2)");
  sim->add_option("--d", sa.d, "Responses kept in scenario 2");
  sim->add_option("--covariates", sa.covariates, "CSV of 1-based covariate codes to condition on")
      ->check(CLI::ExistingFile);
  sim->add_option("--truth", sa.truth, "Truth JSON to sample from")->check(CLI::ExistingFile);
  sim->add_option("--out", sa.out, "Output directory");

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "ISE, ARI and correlation error of a fit against a known truth");
  score->add_option("--truth", sc.truth, "Truth JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--fit,--draws", sc.fit, "Chain store or truth JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--grid", sc.grid, "Grid points");
  score->add_option("--out", sc.out, "Output directory");

  SummaryArgs su;
  auto* summary = app.add_subcommand("summary", "Acceptance rates and cluster-count traces");
  summary->add_option("--draws", su.draws, "Chain store")->required()->check(CLI::ExistingFile);
  summary->add_option("--trace", su.trace, "Write a per-draw trace CSV");
  summary->add_flag("--json", su.as_json, "Machine-readable report");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    const std::string hint = error_json ? "" : "\nRun with --help for usage.";
    return fail(ctx, error_json, "usage", e.what() + hint, kUsage);
  }

  try {
    if (*fit) return cmd_fit(fa, ctx);
    if (*est) return cmd_estimate(ea, ctx);
    if (*sim) return cmd_simulate(sa, ctx);
    if (*score) return cmd_score(sc, ctx);
    if (*summary) return cmd_summary(su, ctx);
    return fail(ctx, error_json, "usage", "no subcommand", kUsage);
  } catch (const UsageError& e) {
    return fail(ctx, error_json, "usage", e.what(), kUsage);
  } catch (const DataError& e) {
    return fail(ctx, error_json, "data", e.what(), kData);
  } catch (const ParameterError& e) {
    return fail(ctx, error_json, "data", e.what(), kData);
  } catch (const DomainError& e) {
    return fail(ctx, error_json, "data", e.what(), kData);
  } catch (const IoError& e) {
    return fail(ctx, error_json, "io", e.what(), kIo);
  } catch (const ConfigError& e) {
    return fail(ctx, error_json, "config", e.what(), kConfig);
  } catch (const std::exception& e) {
    return fail(ctx, error_json, "other", e.what(), kOther);
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace flower::cli
