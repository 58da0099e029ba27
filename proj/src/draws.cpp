#include "flower/draws.hpp"

#include <set>

#include "flower/error.hpp"

namespace flower {

int CoordinateDraw::cluster_of(const std::vector<int>& combo) const {
  if (combo.size() != s.size()) throw ParameterError("cluster_of: combination has the wrong length");
  int cell = 0;
  for (std::size_t h = 0; h < s.size(); ++h) {
    if (combo[h] < 0 || combo[h] >= static_cast<int>(s[h].size()))
      throw ParameterError("cluster_of: covariate level out of range");
    cell = cell * shape[h] + s[h][combo[h]];
  }
  return s_star[cell];
}

int CoordinateDraw::occupied_clusters() const { return static_cast<int>(std::set<int>(s_star.begin(), s_star.end()).size()); }

ModelInfo ModelInfo::from(const Dataset& data, const Hyperparameters& hp) {
  ModelInfo info;
  info.d = data.d();
  info.p = data.p();
  info.K = hp.K;
  info.K_star = hp.K_star;
  info.levels = data.levels;
  info.lower = hp.lower;
  info.upper = hp.upper;
  info.n = data.n();
  info.hp = hp;
  Dataset copy = data;
  copy.fill_defaults();
  info.response_names = copy.response_names;
  info.covariate_names = copy.covariate_names;
  info.level_labels = copy.level_labels;
  info.rescale = copy.rescale;
  std::vector<int> combo(data.p());
  for (int i = 0; i < data.n(); ++i) {
    for (int h = 0; h < data.p(); ++h) combo[h] = data.c(h, i);
    ++info.combination_counts[encode_combination(combo, data.levels)];
  }
  return info;
}

}  // namespace flower
