#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "coalmatch/inequalities.hpp"
#include "coalmatch/market.hpp"

namespace coalmatch {

// Differential-evolution search configuration. `bounds` follows the free
// parameter layout [beta components..., delta, gamma]; when empty every
// parameter gets [-20, 20].
struct DEConfig {
  int population = 100;
  int generations = 50;
  double weight = 0.8;     // F
  double crossover = 0.9;  // CR
  int restarts = 100;
  std::uint64_t seed = 0;
  std::vector<std::array<double, 2>> bounds;
  int threads = 0;

  std::array<double, 2> bound(int index) const {
    if (index < static_cast<int>(bounds.size())) return bounds[index];
    return {-20.0, 20.0};
  }
};

// beta0 is always frozen at +1; delta may additionally be calibrated.
struct Calibration {
  std::optional<double> delta;
};

// Identifies one free parameter of theta.
struct ParamRef {
  enum class Kind { Beta, Delta, Gamma };
  Kind kind = Kind::Gamma;
  int beta_index = 0;

  static ParamRef beta(int index) { return {Kind::Beta, index}; }
  static ParamRef delta() { return {Kind::Delta, 0}; }
  static ParamRef gamma() { return {Kind::Gamma, 0}; }
};

struct EstimateResult {
  Theta theta_hat;
  ScoreResult score;
  std::vector<double> restart_best;                   // best count per restart
  std::vector<std::array<double, 2>> maximizer_bounds;  // per free parameter, when scanned
  std::optional<double> delta_calibrated;
};

// Best-found maximizer of the rank objective over `restarts` independent DE
// searches; equal-score maximizers tie-break to the smallest Euclidean norm
// of the free components.
EstimateResult point_estimate(const InequalitySet& ineqs, const DEConfig& config,
                              const Calibration& calib = {});

// Smallest integer delta on the grid attaining the grid-maximum score when
// the remaining parameters are re-estimated with delta frozen.
double calibrate_delta(const InequalitySet& ineqs, const std::vector<int>& grid,
                       const DEConfig& config);

// One-dimensional profile scan around theta_hat: [LB, UB] per free parameter
// are the extreme grid points attaining score(theta_hat); theta_hat's own
// component is always part of the scan, so the bounds bracket it.
std::vector<std::array<double, 2>> maximizer_bounds(const InequalitySet& ineqs,
                                                    const Theta& theta_hat,
                                                    const DEConfig& config,
                                                    const Calibration& calib = {},
                                                    int grid_points = 601);

struct SurfaceAxis {
  ParamRef param;
  Eigen::VectorXd grid;
};

struct Surface {
  std::vector<SurfaceAxis> axes;  // one or two
  Eigen::MatrixXd counts;         // axes[0].grid.size() x (axes[1] or 1)
  double pair_normalizer = 0.0;   // 2 / (N (N-1))
};

// Pure objective evaluation over a 1-D or 2-D grid, other parameters frozen
// at `base`.
Surface objective_surface(const InequalitySet& ineqs, const Theta& base,
                          std::vector<SurfaceAxis> axes, int threads = 0);

// Free-parameter layout helpers shared by the estimator, inference, and
// surface plumbing.
int free_dim(const InequalitySet& ineqs, const Calibration& calib);
Theta theta_from_free(const Eigen::VectorXd& free, int n_beta, const Calibration& calib);
Eigen::VectorXd free_from_theta(const Theta& theta, const Calibration& calib);

}  // namespace coalmatch
