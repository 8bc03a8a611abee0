#pragma once

#include <cstdint>
#include <vector>

#include "coalmatch/equilibrium.hpp"
#include "coalmatch/estimator.hpp"
#include "coalmatch/market.hpp"

namespace coalmatch {

enum class ResampleMethod { Bootstrap, Subsampling };

struct ResampleConfig {
  ResampleMethod method = ResampleMethod::Bootstrap;
  int replications = 200;
  std::vector<int> keep_fixed;  // firm indices retained in every replicate
  int subsample_size = 0;       // total firms per replicate (Subsampling only)
  std::uint64_t seed = 0;
  int threads = 0;
};

struct ReplicateRow {
  int replicate = 0;
  bool skipped = false;  // the replicate produced no inequalities
  Theta theta_hat;
  int score_count = 0;
  int n_inequalities = 0;
};

struct CiInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ResampleResult {
  std::vector<ReplicateRow> rows;
  std::vector<CiInterval> ci;  // free-parameter layout [beta..., delta?, gamma]
  int n_skipped = 0;
  bool skip_warning = false;  // more than 10% of replicates skipped
};

// Percentile confidence intervals: each replicate resamples the non-fixed
// firms (with replacement under Bootstrap, without under Subsampling),
// rebuilds the inequality set with roles preserved, re-runs the point
// estimator, and the CI takes the 2.5th/97.5th percentiles of the replicate
// estimates component by component. No symmetry around the point estimate is
// imposed.
ResampleResult resample_ci(const Market& market, const MatchingOutcome& matching,
                           const IneqOptions& options, const DEConfig& de,
                           const Calibration& calib, const ResampleConfig& rc);

// Linear-interpolation percentile of q in [0, 100] over the values.
double percentile(std::vector<double> values, double q);

}  // namespace coalmatch
