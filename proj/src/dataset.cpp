#include "flower/dataset.hpp"

#include <cmath>
#include <string>

#include "flower/error.hpp"

namespace flower {

void Dataset::fill_defaults() {
  if (static_cast<int>(response_names.size()) != d()) {
    response_names.clear();
    for (int l = 0; l < d(); ++l) response_names.push_back("y" + std::to_string(l + 1));
  }
  if (static_cast<int>(covariate_names.size()) != p()) {
    covariate_names.clear();
    for (int h = 0; h < p(); ++h) covariate_names.push_back("c" + std::to_string(h + 1));
  }
  if (static_cast<int>(level_labels.size()) != p()) level_labels.assign(p(), {});
  for (int h = 0; h < p(); ++h) {
    if (static_cast<int>(level_labels[h].size()) != levels[h]) {
      level_labels[h].clear();
      for (int q = 0; q < levels[h]; ++q) level_labels[h].push_back(std::to_string(q + 1));
    }
  }
  if (static_cast<int>(rescale.size()) != d()) rescale.assign(d(), Rescale{});
}

void Dataset::validate(double A, double B) const {
  if (c.rows() != p()) throw DataError("covariate matrix has " + std::to_string(c.rows()) + " rows, expected " +
                                       std::to_string(p()));
  if (p() > 0 && c.cols() != x.cols()) throw DataError("responses and covariates disagree on the number of units");
  for (int l = 0; l < d(); ++l)
    for (int i = 0; i < n(); ++i) {
      const double v = x(l, i);
      if (!std::isfinite(v))
        throw DataError("non-finite response at unit " + std::to_string(i + 1) + ", coordinate " +
                        std::to_string(l + 1));
      if (v < A || v > B)
        throw DataError("response at unit " + std::to_string(i + 1) + " lies outside the support");
    }
  for (int h = 0; h < p(); ++h) {
    if (levels[h] < 1) throw DataError("covariate " + std::to_string(h + 1) + " has no levels");
    for (int i = 0; i < n(); ++i)
      if (c(h, i) < 0 || c(h, i) >= levels[h])
        throw DataError("covariate " + std::to_string(h + 1) + " code out of range at unit " + std::to_string(i + 1));
  }
}

long long combination_count(const std::vector<int>& levels) {
  long long v = 1;
  for (int d : levels) v *= d;
  return v;
}

std::vector<int> decode_combination(long long index, const std::vector<int>& levels) {
  std::vector<int> combo(levels.size());
  for (int h = static_cast<int>(levels.size()) - 1; h >= 0; --h) {
    combo[h] = static_cast<int>(index % levels[h]);
    index /= levels[h];
  }
  return combo;
}

long long encode_combination(const std::vector<int>& combo, const std::vector<int>& levels) {
  long long index = 0;
  for (std::size_t h = 0; h < levels.size(); ++h) index = index * levels[h] + combo[h];
  return index;
}

}  // namespace flower
