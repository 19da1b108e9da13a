// Minimum-cost bipartite assignment (Kuhn-Munkres with potentials) and
// Murty's ranked k-best enumeration on top of it.
#pragma once

#include <Eigen/Core>

#include <vector>

namespace ftk {

// Entries at or above half this sentinel are treated as forbidden pairs.
inline constexpr double kUnassignable = 1e9;

// Optimal row -> column map minimizing total cost. Rectangular inputs are
// supported; when there are more rows than columns the surplus rows come
// back unassigned (-1).
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

// The m lowest-cost complete assignments (every row assigned, no forbidden
// pair) in nondecreasing cost order. Requires rows <= cols. Returns fewer
// than m when fewer feasible assignments exist.
std::vector<Assignment> murty_kbest(const Eigen::MatrixXd& cost, int m);

}  // namespace ftk
