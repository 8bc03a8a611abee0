#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace coalmatch {

// max c'x  s.t.  A x = b,  0 <= x <= upper.
//
// Columns are held either as one dense matrix (small problems) or as sparse
// (row, coefficient) lists; assignment programs have N * 2^N columns with a
// handful of nonzeros each, so the sparse form is what makes N > 10 viable.
class BoundedLp {
public:
  using SparseColumn = std::vector<std::pair<int, double>>;

  static BoundedLp dense(Eigen::MatrixXd columns, Eigen::VectorXd objective,
                         Eigen::VectorXd upper, Eigen::VectorXd rhs);
  static BoundedLp sparse(int n_rows, std::vector<SparseColumn> columns,
                          Eigen::VectorXd objective, Eigen::VectorXd upper,
                          Eigen::VectorXd rhs);

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }
  bool is_dense() const { return is_dense_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }

  double column_dot(int j, const Eigen::VectorXd& y) const;
  void add_column_to(int j, double scale, Eigen::VectorXd& out) const;
  Eigen::VectorXd column(int j) const;

private:
  int n_rows_ = 0;
  int n_cols_ = 0;
  bool is_dense_ = true;
  Eigen::MatrixXd dense_;
  std::vector<SparseColumn> sparse_;
  Eigen::VectorXd objective_;
  Eigen::VectorXd upper_;
  Eigen::VectorXd rhs_;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  bool bland_engaged = false;  // cycling guard kicked in at least once
};

// Revised simplex with bounded variables. Pricing is Dantzig's rule with a
// switch to Bland's rule after a run of degenerate pivots. The basis is
// refactorized every iteration (the basis here is tiny: one row per
// constraint, 2N rows for an N-firm market).
//
// `initial_basis`, when given, must name `rows()` variables whose basic
// solution (all other variables at lower bound) is feasible; otherwise a
// phase-1 with artificials runs first. Throws SolverError on infeasible,
// unbounded, or stalled problems.
SimplexResult simplex_maximize(const BoundedLp& lp,
                               std::optional<std::vector<int>> initial_basis = std::nullopt);

}  // namespace coalmatch
