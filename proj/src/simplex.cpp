#include "coalmatch/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coalmatch/errors.hpp"

namespace coalmatch {

namespace {

constexpr double kEnterTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr double kRatioTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr int kDegenerateRunLimit = 64;

enum class VarState : unsigned char { Lower, Upper, Basic };

}  // namespace

BoundedLp BoundedLp::dense(Eigen::MatrixXd columns, Eigen::VectorXd objective,
                           Eigen::VectorXd upper, Eigen::VectorXd rhs) {
  BoundedLp lp;
  lp.n_rows_ = static_cast<int>(columns.rows());
  lp.n_cols_ = static_cast<int>(columns.cols());
  lp.is_dense_ = true;
  lp.dense_ = std::move(columns);
  lp.objective_ = std::move(objective);
  lp.upper_ = std::move(upper);
  lp.rhs_ = std::move(rhs);
  return lp;
}

BoundedLp BoundedLp::sparse(int n_rows, std::vector<SparseColumn> columns,
                            Eigen::VectorXd objective, Eigen::VectorXd upper,
                            Eigen::VectorXd rhs) {
  BoundedLp lp;
  lp.n_rows_ = n_rows;
  lp.n_cols_ = static_cast<int>(columns.size());
  lp.is_dense_ = false;
  lp.sparse_ = std::move(columns);
  lp.objective_ = std::move(objective);
  lp.upper_ = std::move(upper);
  lp.rhs_ = std::move(rhs);
  return lp;
}

double BoundedLp::column_dot(int j, const Eigen::VectorXd& y) const {
  if (is_dense_) return dense_.col(j).dot(y);
  double acc = 0.0;
  for (const auto& [row, coef] : sparse_[j]) acc += coef * y(row);
  return acc;
}

void BoundedLp::add_column_to(int j, double scale, Eigen::VectorXd& out) const {
  if (is_dense_) {
    out += scale * dense_.col(j);
    return;
  }
  for (const auto& [row, coef] : sparse_[j]) out(row) += scale * coef;
}

Eigen::VectorXd BoundedLp::column(int j) const {
  if (is_dense_) return dense_.col(j);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_rows_);
  for (const auto& [row, coef] : sparse_[j]) out(row) += coef;
  return out;
}

namespace {

// Working state over the LP extended with m artificial columns (indices
// n..n+m-1); artificials are unit columns used only by phase 1.
class SimplexWorker {
public:
  SimplexWorker(const BoundedLp& lp) : lp_(lp), m_(lp.rows()), n_(lp.cols()) {
    state_.assign(n_ + m_, VarState::Lower);
    art_sign_.assign(m_, 1.0);
    art_upper_.assign(m_, 0.0);
  }

  SimplexResult run(std::optional<std::vector<int>> initial_basis) {
    bool need_phase1 = true;
    if (initial_basis) {
      basis_ = std::move(*initial_basis);
      if (static_cast<int>(basis_.size()) != m_)
        throw solver_error("initial basis size mismatch");
      for (int v : basis_) state_[v] = VarState::Basic;
      if (basic_solution_feasible()) need_phase1 = false;
      else {
        for (int v : basis_) state_[v] = VarState::Lower;
        basis_.clear();
      }
    }

    if (need_phase1) phase1();

    phase1_ = false;
    iterate();

    SimplexResult result;
    result.x = current_x();
    result.objective = lp_.objective().dot(result.x.head(n_));
    result.x.conservativeResize(n_);
    result.iterations = iterations_;
    result.bland_engaged = bland_engaged_;
    verify_feasible(result.x);
    return result;
  }

private:
  void phase1() {
    basis_.resize(m_);
    const Eigen::VectorXd& b = lp_.rhs();
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      state_[n_ + i] = VarState::Basic;
      art_sign_[i] = b(i) >= 0 ? 1.0 : -1.0;
      art_upper_[i] = std::numeric_limits<double>::infinity();
    }
    phase1_ = true;
    iterate();
    double infeasibility = 0.0;
    Eigen::VectorXd x = current_x();
    for (int i = 0; i < m_; ++i) infeasibility += x(n_ + i);
    if (infeasibility > kFeasTol)
      throw solver_error("infeasible: phase-1 residual " + std::to_string(infeasibility));
    // Any artificial still basic sits at zero; freeze it there.
    for (int i = 0; i < m_; ++i) art_upper_[i] = 0.0;
  }

  double cost(int j) const {
    if (phase1_) return j >= n_ ? -1.0 : 0.0;
    return j >= n_ ? 0.0 : lp_.objective()(j);
  }

  double upper(int j) const { return j >= n_ ? art_upper_[j - n_] : lp_.upper()(j); }

  double column_dot(int j, const Eigen::VectorXd& y) const {
    if (j >= n_) return art_sign_[j - n_] * y(j - n_);
    return lp_.column_dot(j, y);
  }

  Eigen::VectorXd column(int j) const {
    if (j >= n_) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(m_);
      c(j - n_) = art_sign_[j - n_];
      return c;
    }
    return lp_.column(j);
  }

  // b minus the contribution of nonbasic-at-upper variables.
  Eigen::VectorXd effective_rhs() const {
    Eigen::VectorXd rhs = lp_.rhs();
    for (int j = 0; j < n_; ++j)
      if (state_[j] == VarState::Upper) lp_.add_column_to(j, -lp_.upper()(j), rhs);
    return rhs;
  }

  Eigen::MatrixXd basis_matrix() const {
    Eigen::MatrixXd B(m_, m_);
    for (int k = 0; k < m_; ++k) B.col(k) = column(basis_[k]);
    return B;
  }

  Eigen::VectorXd basic_values(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) const {
    return lu.solve(effective_rhs());
  }

  bool basic_solution_feasible() {
    Eigen::MatrixXd B = basis_matrix();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd xb = basic_values(lu);
    if (!xb.allFinite()) return false;
    for (int k = 0; k < m_; ++k) {
      if (xb(k) < -kFeasTol || xb(k) > upper(basis_[k]) + kFeasTol) return false;
    }
    return true;
  }

  Eigen::VectorXd current_x() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_ + m_);
    for (int j = 0; j < n_; ++j)
      if (state_[j] == VarState::Upper) x(j) = lp_.upper()(j);
    Eigen::MatrixXd B = basis_matrix();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd xb = basic_values(lu);
    for (int k = 0; k < m_; ++k) x(basis_[k]) = std::max(0.0, xb(k));
    return x;
  }

  void iterate() {
    int degenerate_run = 0;
    bool bland = false;
    const long max_iterations = 2000L + 50L * (n_ + m_);
    for (;;) {
      if (++iterations_ > max_iterations)
        throw solver_error("iteration limit exceeded (" + std::to_string(max_iterations) + ")");

      Eigen::MatrixXd B = basis_matrix();
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
      Eigen::PartialPivLU<Eigen::MatrixXd> luT(B.transpose());
      Eigen::VectorXd cb(m_);
      for (int k = 0; k < m_; ++k) cb(k) = cost(basis_[k]);
      Eigen::VectorXd y = luT.solve(cb);

      // Pricing. Entering candidates: at-lower with positive reduced cost or
      // at-upper with negative reduced cost. Dantzig picks the worst
      // violation, Bland the first.
      int entering = -1;
      double best = kEnterTol;
      int limit = phase1_ ? n_ + m_ : n_;
      for (int j = 0; j < limit; ++j) {
        VarState s = state_[j];
        if (s == VarState::Basic) continue;
        double d = cost(j) - column_dot(j, y);
        double violation = s == VarState::Lower ? d : -d;
        if (violation <= kEnterTol) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (violation > best) {
          best = violation;
          entering = j;
        }
      }
      if (entering == -1) return;  // optimal

      double dir = state_[entering] == VarState::Lower ? 1.0 : -1.0;
      Eigen::VectorXd w = lu.solve(column(entering));
      Eigen::VectorXd xb = basic_values(lu);

      // Ratio test: step t along the entering direction until the entering
      // variable flips bound or a basic variable hits one of its bounds.
      double t_limit = upper(entering);
      int leaving = -1;       // index into basis_
      bool leaves_at_upper = false;
      double best_pivot = 0.0;
      for (int k = 0; k < m_; ++k) {
        double wk = dir * w(k);
        double t;
        bool hits_upper;
        if (wk > kPivotTol) {
          t = xb(k) / wk;
          hits_upper = false;
        } else if (wk < -kPivotTol) {
          double uk = upper(basis_[k]);
          if (std::isinf(uk)) continue;
          t = (uk - xb(k)) / (-wk);
          hits_upper = true;
        } else {
          continue;
        }
        t = std::max(t, 0.0);
        bool better;
        if (t < t_limit - kRatioTol) better = true;
        else if (t > t_limit + kRatioTol) better = false;
        else if (leaving == -1) better = true;
        else if (bland) better = basis_[k] < basis_[leaving];
        else better = std::abs(w(k)) > best_pivot;
        if (better) {
          t_limit = std::min(t_limit, t);
          leaving = k;
          leaves_at_upper = hits_upper;
          best_pivot = std::abs(w(k));
        }
      }

      if (std::isinf(t_limit)) throw solver_error("unbounded direction encountered");

      if (t_limit <= kRatioTol) ++degenerate_run;
      else degenerate_run = 0;
      if (degenerate_run > kDegenerateRunLimit && !bland) {
        bland = true;
        bland_engaged_ = true;
      }

      if (leaving == -1) {
        // Bound-to-bound flip of the entering variable.
        state_[entering] =
            state_[entering] == VarState::Lower ? VarState::Upper : VarState::Lower;
        continue;
      }

      int out_var = basis_[leaving];
      state_[out_var] = leaves_at_upper ? VarState::Upper : VarState::Lower;
      basis_[leaving] = entering;
      state_[entering] = VarState::Basic;
    }
  }

  void verify_feasible(const Eigen::VectorXd& x) const {
    Eigen::VectorXd residual = -lp_.rhs();
    for (int j = 0; j < n_; ++j)
      if (x(j) != 0.0) lp_.add_column_to(j, x(j), residual);
    double scale = 1.0 + lp_.rhs().cwiseAbs().maxCoeff();
    if (residual.cwiseAbs().maxCoeff() > kFeasTol * scale)
      throw solver_error("solution violates equality constraints by " +
                         std::to_string(residual.cwiseAbs().maxCoeff()));
  }

  const BoundedLp& lp_;
  int m_;
  int n_;
  bool phase1_ = false;
  bool bland_engaged_ = false;
  long iterations_ = 0;
  std::vector<int> basis_;
  std::vector<VarState> state_;
  std::vector<double> art_sign_;
  std::vector<double> art_upper_;
};

}  // namespace

SimplexResult simplex_maximize(const BoundedLp& lp,
                               std::optional<std::vector<int>> initial_basis) {
  SimplexWorker worker(lp);
  return worker.run(std::move(initial_basis));
}

}  // namespace coalmatch
