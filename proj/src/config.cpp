#include "flower/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "toml.hpp"

#include "flower/error.hpp"

namespace flower {

namespace {

namespace fs = std::filesystem;

std::string where(const toml::node& n) {
  const auto& src = n.source();
  return src.begin.line ? " (line " + std::to_string(src.begin.line) + ")" : "";
}

double as_double(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError("'" + key + "' must be a number" + where(n));
}

long long as_int(const toml::node& n, const std::string& key) {
  if (n.is_integer()) return *n.value<long long>();
  throw ConfigError("'" + key + "' must be an integer" + where(n));
}

int as_count(const toml::node& n, const std::string& key) {
  const long long v = as_int(n, key);
  if (v < 0 || v > 2'000'000'000) throw ConfigError("'" + key + "' is out of range" + where(n));
  return static_cast<int>(v);
}

std::string as_string(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError("'" + key + "' must be a string" + where(n));
}

std::vector<std::string> as_strings(const toml::node& n, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError("'" + key + "' must be an array of strings" + where(n));
  std::vector<std::string> out;
  for (const auto& e : *arr) out.push_back(as_string(e, key));
  return out;
}

using Handler = std::function<void(const toml::node&)>;

void apply_section(const toml::table& table, const std::string& section, const std::map<std::string, Handler>& keys) {
  for (const auto& [k, v] : table) {
    const std::string key(k.str());
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + section + "." + key + "'" + where(v));
    it->second(v);
  }
}

}  // namespace

IngestOptions RunConfig::ingest_options() const {
  IngestOptions o;
  o.responses = responses;
  o.covariates = covariates;
  o.lower = hp.lower;
  o.upper = hp.upper;
  o.rescale = rescale;
  return o;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError("TOML syntax error at line " + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }

  RunConfig cfg;
  Hyperparameters& hp = cfg.hp;
  bool have_version = false;

  auto section = [](const toml::node& n, const std::string& name) -> const toml::table& {
    if (const auto* t = n.as_table()) return *t;
    throw ConfigError("'" + name + "' must be a table" + where(n));
  };

  for (const auto& [k, v] : root) {
    const std::string name(k.str());
    if (name == "schema_version") {
      if (as_int(v, name) != kConfigSchemaVersion)
        throw ConfigError("unsupported schema_version; this build reads version " +
                          std::to_string(kConfigSchemaVersion));
      have_version = true;
    } else if (name == "data") {
      apply_section(section(v, name), name,
                    {{"path", [&](const toml::node& n) { cfg.data_path = as_string(n, "data.path"); }},
                     {"responses", [&](const toml::node& n) { cfg.responses = as_strings(n, "data.responses"); }},
                     {"covariates", [&](const toml::node& n) { cfg.covariates = as_strings(n, "data.covariates"); }},
                     {"support",
                      [&](const toml::node& n) {
                        const auto* arr = n.as_array();
                        if (!arr || arr->size() != 2) throw ConfigError("'data.support' must be [A, B]" + where(n));
                        hp.lower = as_double(*arr->get(0), "data.support");
                        hp.upper = as_double(*arr->get(1), "data.support");
                      }},
                     {"rescale", [&](const toml::node& n) {
                        cfg.rescale = rescale_mode_from_string(as_string(n, "data.rescale"));
                      }}});
    } else if (name == "model") {
      auto num = [&](double& field, const char* key) {
        return Handler([&field, key](const toml::node& n) { field = as_double(n, std::string("model.") + key); });
      };
      auto cnt = [&](int& field, const char* key) {
        return Handler([&field, key](const toml::node& n) { field = as_count(n, std::string("model.") + key); });
      };
      apply_section(section(v, name), name,
                    {{"K", cnt(hp.K, "K")},
                     {"K_star", cnt(hp.K_star, "K_star")},
                     {"a_alpha", num(hp.a_alpha, "a_alpha")},
                     {"b_alpha", num(hp.b_alpha, "b_alpha")},
                     {"a_phi", num(hp.a_phi, "a_phi")},
                     {"b_phi", num(hp.b_phi, "b_phi")},
                     {"alpha0", num(hp.alpha0, "alpha0")},
                     {"phi_star", num(hp.phi_star, "phi_star")},
                     {"a_sigma", num(hp.a_sigma, "a_sigma")},
                     {"b_sigma", num(hp.b_sigma, "b_sigma")},
                     {"m0", num(hp.m0, "m0")},
                     {"s0", num(hp.s0, "s0")},
                     {"grid_b", cnt(hp.grid_b, "grid_b")},
                     {"grid_theta", cnt(hp.grid_theta, "grid_theta")},
                     {"latent", [&](const toml::node& n) {
                        try {
                          hp.latent = latent_transform_from_string(as_string(n, "model.latent"));
                        } catch (const ConfigError& e) {
                          throw ConfigError(std::string(e.what()) + where(n));
                        }
                      }}});
    } else if (name == "mcmc") {
      auto num = [&](double& field, const char* key) {
        return Handler([&field, key](const toml::node& n) { field = as_double(n, std::string("mcmc.") + key); });
      };
      auto cnt = [&](int& field, const char* key) {
        return Handler([&field, key](const toml::node& n) { field = as_count(n, std::string("mcmc.") + key); });
      };
      apply_section(section(v, name), name,
                    {{"iterations", cnt(hp.iterations, "iterations")},
                     {"burnin", cnt(hp.burnin, "burnin")},
                     {"thin", cnt(hp.thin, "thin")},
                     {"seed",
                      [&](const toml::node& n) {
                        const long long s = as_int(n, "mcmc.seed");
                        if (s < 0) throw ConfigError("'mcmc.seed' must be non-negative" + where(n));
                        hp.seed = static_cast<std::uint64_t>(s);
                      }},
                     {"threads", cnt(hp.threads, "threads")},
                     {"sigma2_mu", num(hp.sigma2_mu, "sigma2_mu")},
                     {"sigma2_sigma", num(hp.sigma2_sigma, "sigma2_sigma")},
                     {"sigma2_alpha", num(hp.sigma2_alpha, "sigma2_alpha")},
                     {"sigma2_phi", num(hp.sigma2_phi, "sigma2_phi")},
                     {"adapt_every", cnt(hp.adapt_every, "adapt_every")},
                     {"target_accept", num(hp.target_accept, "target_accept")}});
    } else if (name == "output") {
      apply_section(section(v, name), name,
                    {{"dir", [&](const toml::node& n) { cfg.output_dir = as_string(n, "output.dir"); }}});
    } else {
      throw ConfigError("unknown key '" + name + "'" + where(v));
    }
  }
  if (!have_version) throw ConfigError("schema_version is required");
  if (!cfg.data_path.empty() && !base_dir.empty() && fs::path(cfg.data_path).is_relative())
    cfg.data_path = (fs::path(base_dir) / cfg.data_path).lexically_normal().string();
  // Level counts are unknown until the data is read; only the level-free invariants are checked here.
  Hyperparameters check = hp;
  check.K_star = 1;
  check.validate({});
  if (hp.K_star < 1) throw ConfigError("K_star must be at least 1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

std::string config_to_toml(const RunConfig& cfg) {
  const Hyperparameters& hp = cfg.hp;
  toml::array responses, covariates;
  for (const auto& r : cfg.responses) responses.push_back(r);
  for (const auto& c : cfg.covariates) covariates.push_back(c);

  toml::table model{{"K", hp.K},
                    {"K_star", hp.K_star},
                    {"a_alpha", hp.a_alpha},
                    {"b_alpha", hp.b_alpha},
                    {"a_phi", hp.a_phi},
                    {"b_phi", hp.b_phi},
                    {"alpha0", hp.alpha0},
                    {"phi_star", hp.phi_star},
                    {"a_sigma", hp.a_sigma},
                    {"b_sigma", hp.b_sigma},
                    {"grid_b", hp.grid_b},
                    {"grid_theta", hp.grid_theta},
                    {"latent", to_string(hp.latent)}};
  if (!std::isnan(hp.m0)) model.insert("m0", hp.m0);
  if (!std::isnan(hp.s0)) model.insert("s0", hp.s0);

  toml::table root{
      {"schema_version", kConfigSchemaVersion},
      {"data", toml::table{{"path", cfg.data_path},
                           {"responses", responses},
                           {"covariates", covariates},
                           {"support", toml::array{hp.lower, hp.upper}},
                           {"rescale", cfg.rescale == RescaleMode::minmax ? "minmax" : "none"}}},
      {"model", model},
      {"mcmc", toml::table{{"iterations", hp.iterations},
                           {"burnin", hp.burnin},
                           {"thin", hp.thin},
                           {"seed", static_cast<long long>(hp.seed)},
                           {"threads", hp.threads},
                           {"sigma2_mu", hp.sigma2_mu},
                           {"sigma2_sigma", hp.sigma2_sigma},
                           {"sigma2_alpha", hp.sigma2_alpha},
                           {"sigma2_phi", hp.sigma2_phi},
                           {"adapt_every", hp.adapt_every},
                           {"target_accept", hp.target_accept}}},
      {"output", toml::table{{"dir", cfg.output_dir}}}};
  std::ostringstream os;
  os << toml::toml_formatter(root, toml::toml_formatter::default_flags & ~toml::format_flags::indentation) << '\n';
  return os.str();
}

}  // namespace flower
