#include "coalmatch/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "coalmatch/de.hpp"
#include "coalmatch/errors.hpp"
#include "coalmatch/parallel.hpp"

namespace coalmatch {

int free_dim(const InequalitySet& ineqs, const Calibration& calib) {
  int n_beta = ineqs.theta_dim() - 3;
  return n_beta + (calib.delta ? 1 : 2);
}

Theta theta_from_free(const Eigen::VectorXd& free, int n_beta, const Calibration& calib) {
  Theta theta;
  theta.beta0 = 1.0;
  theta.beta = free.head(n_beta);
  if (calib.delta) {
    theta.delta = *calib.delta;
    theta.gamma = free(n_beta);
  } else {
    theta.delta = free(n_beta);
    theta.gamma = free(n_beta + 1);
  }
  return theta;
}

Eigen::VectorXd free_from_theta(const Theta& theta, const Calibration& calib) {
  int n_beta = static_cast<int>(theta.beta.size());
  Eigen::VectorXd free(n_beta + (calib.delta ? 1 : 2));
  free.head(n_beta) = theta.beta;
  if (calib.delta) {
    free(n_beta) = theta.gamma;
  } else {
    free(n_beta) = theta.delta;
    free(n_beta + 1) = theta.gamma;
  }
  return free;
}

namespace {

// Bounds in the free layout; DEConfig bounds are stored over the full
// [beta..., delta, gamma] list and the delta slot drops out when calibrated.
void free_bounds(const InequalitySet& ineqs, const DEConfig& config, const Calibration& calib,
                 Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  int n_beta = ineqs.theta_dim() - 3;
  int dim = free_dim(ineqs, calib);
  lo.resize(dim);
  hi.resize(dim);
  int out = 0;
  for (int full = 0; full < n_beta + 2; ++full) {
    if (calib.delta && full == n_beta) continue;  // delta frozen
    auto b = config.bound(full);
    lo(out) = b[0];
    hi(out) = b[1];
    ++out;
  }
}

}  // namespace

EstimateResult point_estimate(const InequalitySet& ineqs, const DEConfig& config,
                              const Calibration& calib) {
  if (ineqs.empty())
    throw empty_inequality_set("point estimation needs a non-empty inequality set");
  const int n_beta = ineqs.theta_dim() - 3;
  const int restarts = std::max(1, config.restarts);

  Eigen::MatrixXd z = ineqs.z_matrix();
  auto objective = [&](const Eigen::VectorXd& free) {
    Theta theta = theta_from_free(free, n_beta, calib);
    return static_cast<double>(score_count(z, theta.stacked()));
  };

  Eigen::VectorXd lo, hi;
  free_bounds(ineqs, config, calib, lo, hi);

  std::vector<DeResult> runs(restarts);
  parallel_for(restarts, config.threads, [&](std::size_t r) {
    Rng rng = Rng::substream(config.seed, r);
    runs[r] = differential_evolution(objective, lo, hi, config.population, config.generations,
                                     config.weight, config.crossover, rng);
  });

  EstimateResult result;
  result.restart_best.reserve(restarts);
  int best = 0;
  for (int r = 0; r < restarts; ++r) {
    result.restart_best.push_back(runs[r].value);
    if (runs[r].value > runs[best].value ||
        (runs[r].value == runs[best].value && runs[r].x.norm() < runs[best].x.norm()))
      best = r;
  }

  result.theta_hat = theta_from_free(runs[best].x, n_beta, calib);
  result.score = score(result.theta_hat, ineqs);
  result.delta_calibrated = calib.delta;
  return result;
}

double calibrate_delta(const InequalitySet& ineqs, const std::vector<int>& grid,
                       const DEConfig& config) {
  if (grid.empty()) throw config_error("delta calibration grid is empty");
  std::vector<int> sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  int best_count = -1;
  double best_delta = sorted.front();
  for (int candidate : sorted) {
    Calibration calib;
    calib.delta = candidate;
    EstimateResult est = point_estimate(ineqs, config, calib);
    if (est.score.count > best_count) {
      best_count = est.score.count;
      best_delta = candidate;
    }
  }
  return best_delta;
}

std::vector<std::array<double, 2>> maximizer_bounds(const InequalitySet& ineqs,
                                                    const Theta& theta_hat,
                                                    const DEConfig& config,
                                                    const Calibration& calib, int grid_points) {
  if (ineqs.empty()) throw empty_inequality_set("maximizer bounds need inequalities");
  const int n_beta = ineqs.theta_dim() - 3;
  Eigen::MatrixXd z = ineqs.z_matrix();
  const int target = score_count(z, theta_hat.stacked());

  Eigen::VectorXd lo, hi;
  free_bounds(ineqs, config, calib, lo, hi);
  Eigen::VectorXd center = free_from_theta(theta_hat, calib);

  std::vector<std::array<double, 2>> out(center.size());
  for (int k = 0; k < center.size(); ++k) {
    double lb = center(k), ub = center(k);
    for (int g = 0; g <= grid_points; ++g) {
      double value = g == grid_points
                         ? center(k)  // the profile always touches theta_hat itself
                         : lo(k) + (hi(k) - lo(k)) * g / (grid_points - 1.0);
      Eigen::VectorXd probe = center;
      probe(k) = value;
      Theta theta = theta_from_free(probe, n_beta, calib);
      if (score_count(z, theta.stacked()) >= target) {
        lb = std::min(lb, value);
        ub = std::max(ub, value);
      }
    }
    out[k] = {lb, ub};
  }
  return out;
}

Surface objective_surface(const InequalitySet& ineqs, const Theta& base,
                          std::vector<SurfaceAxis> axes, int threads) {
  if (axes.empty() || axes.size() > 2)
    throw config_error("objective surface takes one or two axes");
  if (ineqs.empty()) throw empty_inequality_set("objective surface needs inequalities");

  Eigen::MatrixXd z = ineqs.z_matrix();
  auto apply = [](Theta theta, const ParamRef& p, double value) {
    switch (p.kind) {
      case ParamRef::Kind::Beta: theta.beta(p.beta_index) = value; break;
      case ParamRef::Kind::Delta: theta.delta = value; break;
      case ParamRef::Kind::Gamma: theta.gamma = value; break;
    }
    return theta;
  };

  Surface surface;
  const Eigen::Index rows = axes[0].grid.size();
  const Eigen::Index cols = axes.size() == 2 ? axes[1].grid.size() : 1;
  surface.counts.resize(rows, cols);
  double n = ineqs.n_firms;
  surface.pair_normalizer = n > 1 ? 2.0 / (n * (n - 1.0)) : 0.0;

  parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t r) {
    Theta row_theta = apply(base, axes[0].param, axes[0].grid(static_cast<Eigen::Index>(r)));
    for (Eigen::Index c = 0; c < cols; ++c) {
      Theta theta = axes.size() == 2
                        ? apply(row_theta, axes[1].param, axes[1].grid(c))
                        : row_theta;
      surface.counts(static_cast<Eigen::Index>(r), c) = score_count(z, theta.stacked());
    }
  });
  surface.axes = std::move(axes);
  return surface;
}

}  // namespace coalmatch
