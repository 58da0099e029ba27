#pragma once

#include <Eigen/Dense>
#include <vector>

namespace flower {

/// Kernel parameters shared by every response coordinate.
struct Atoms {
  Eigen::VectorXd mu;      // in [A, B]
  Eigen::VectorXd sigma2;  // > 0

  int size() const { return static_cast<int>(mu.size()); }
};

/// Component allocations z, one row of n labels per response coordinate.
using Allocations = std::vector<std::vector<int>>;

}  // namespace flower
