#pragma once

#include <vector>

#include <Eigen/Dense>

namespace jointtree {

struct Assignment {
  std::vector<int> row_to_col;  // -1 when the row is unassigned
  double total = 0.0;
};

// Maximum-weight one-to-one assignment between rows and columns of a
// (possibly rectangular) weight matrix, by the Hungarian method.
Assignment max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace jointtree
