#include "ftk/assignment.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace ftk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kuhn-Munkres with row/column potentials; requires rows <= cols and assigns
// every row. O(rows^2 * cols).
std::vector<int> solve_rect(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows <= cols) return solve_rect(cost);

  // Surplus rows absorb zero-cost dummy columns and report as unassigned.
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(rows, rows);
  padded.leftCols(cols) = cost;
  std::vector<int> sol = solve_rect(padded);
  for (int& c : sol) {
    if (c >= cols) c = -1;
  }
  return sol;
}

namespace {

struct MurtyNode {
  std::vector<std::pair<int, int>> forced;
  std::vector<std::pair<int, int>> forbidden;
  Assignment solution;
};

struct NodeOrder {
  bool operator()(const MurtyNode& a, const MurtyNode& b) const {
    return a.solution.cost > b.solution.cost;
  }
};

// Solves the subproblem obtained by locking the forced pairs and banning the
// forbidden ones. Returns false when no complete feasible assignment exists.
bool solve_node(const Eigen::MatrixXd& cost, MurtyNode& node) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());

  std::vector<char> row_taken(rows, 0), col_taken(cols, 0);
  for (const auto& [r, c] : node.forced) {
    row_taken[r] = 1;
    col_taken[c] = 1;
  }
  std::vector<int> free_rows, free_cols;
  for (int r = 0; r < rows; ++r) {
    if (!row_taken[r]) free_rows.push_back(r);
  }
  for (int c = 0; c < cols; ++c) {
    if (!col_taken[c]) free_cols.push_back(c);
  }

  node.solution.row_to_col.assign(rows, -1);
  node.solution.cost = 0.0;
  for (const auto& [r, c] : node.forced) {
    node.solution.row_to_col[r] = c;
    node.solution.cost += cost(r, c);
  }
  if (free_rows.empty()) return true;

  Eigen::MatrixXd sub(free_rows.size(), free_cols.size());
  for (std::size_t i = 0; i < free_rows.size(); ++i) {
    for (std::size_t j = 0; j < free_cols.size(); ++j) {
      sub(i, j) = cost(free_rows[i], free_cols[j]);
    }
  }
  for (const auto& [r, c] : node.forbidden) {
    if (row_taken[r] || col_taken[c]) continue;
    const auto ri = std::lower_bound(free_rows.begin(), free_rows.end(), r) - free_rows.begin();
    const auto ci = std::lower_bound(free_cols.begin(), free_cols.end(), c) - free_cols.begin();
    sub(ri, ci) = kUnassignable;
  }

  const std::vector<int> sol = solve_rect(sub);
  for (std::size_t i = 0; i < free_rows.size(); ++i) {
    const int cj = sol[i];
    const double c = sub(i, cj);
    if (c >= 0.5 * kUnassignable) return false;
    node.solution.row_to_col[free_rows[i]] = free_cols[cj];
    node.solution.cost += c;
  }
  return true;
}

}  // namespace

std::vector<Assignment> murty_kbest(const Eigen::MatrixXd& cost, int m) {
  if (m < 1) throw std::invalid_argument("murty_kbest: m must be positive");
  if (cost.rows() > cost.cols()) {
    throw std::invalid_argument("murty_kbest: requires rows <= cols");
  }
  std::vector<Assignment> results;
  if (cost.rows() == 0) return results;

  std::priority_queue<MurtyNode, std::vector<MurtyNode>, NodeOrder> queue;
  MurtyNode root;
  if (solve_node(cost, root)) queue.push(std::move(root));

  while (!queue.empty() && static_cast<int>(results.size()) < m) {
    MurtyNode node = queue.top();
    queue.pop();
    results.push_back(node.solution);

    // Partition the remaining solution space around the free pairs.
    std::vector<char> is_forced_row(cost.rows(), 0);
    for (const auto& [r, c] : node.forced) is_forced_row[r] = 1;
    std::vector<std::pair<int, int>> free_pairs;
    for (int r = 0; r < cost.rows(); ++r) {
      if (!is_forced_row[r]) free_pairs.emplace_back(r, node.solution.row_to_col[r]);
    }

    std::vector<std::pair<int, int>> forced = node.forced;
    for (const auto& pair : free_pairs) {
      MurtyNode child;
      child.forced = forced;
      child.forbidden = node.forbidden;
      child.forbidden.push_back(pair);
      if (solve_node(cost, child)) queue.push(std::move(child));
      forced.push_back(pair);
    }
  }
  return results;
}

}  // namespace ftk
