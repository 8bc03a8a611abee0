#pragma once

#include <cstdint>
#include <vector>

#include "coalmatch/equilibrium.hpp"
#include "coalmatch/estimator.hpp"
#include "coalmatch/inequalities.hpp"
#include "coalmatch/market.hpp"

namespace coalmatch {

enum class TonnageLaw {
  LogNormalScaled,  // exp(N(2,1)) / 100 per carrier type
  UniformLarge,     // Uniform[20, 80] per carrier type
};

// Synthetic data-generating process: two carrier types, covariates are the
// type-1 tonnage (normalized interaction) and the type-1 share, true
// parameters (beta0, beta, delta, gamma) = (1, 0, 1, 1) with gamma = 5 for
// no-merger markets.
struct DgpConfig {
  int n_firms = 8;
  Theta theta0 = base_theta();
  TonnageLaw law = TonnageLaw::LogNormalScaled;
  SubsidyKind subsidy_kind = SubsidyKind::ToBuyer;
  double subsidy_amount = 1.0;
  double subsidy_threshold = 1.0;
  std::uint64_t seed = 0;
  bool drop_noninteger = true;
  int max_attempts = 1000;

  static Theta base_theta(double gamma = 1.0) {
    Theta t;
    t.beta0 = 1.0;
    t.beta = Eigen::VectorXd::Zero(1);
    t.delta = 1.0;
    t.gamma = gamma;
    return t;
  }
};

struct SimulatedMarket {
  Market market;
  Allocation allocation;
  MatchingOutcome outcome;
  Eigen::MatrixXd eps;  // the retained draw's valuation shocks
  int attempts = 1;     // draws consumed until an integer equilibrium (when dropping)
};

// Draws tonnages and valuation shocks, solves the equilibrium, and either
// resamples non-integer outcomes (drop_noninteger) or perturbation-rounds
// them. Distinct sim_index values give independent substreams.
SimulatedMarket generate_market(const DgpConfig& cfg, std::uint64_t sim_index);

struct McConfig {
  int n_sims = 1000;
  DEConfig de = mc_de_defaults();
  IneqOptions ineq = mc_ineq_defaults();  // IR-subsidy family stays off in Monte Carlo
  int threads = 0;

  // Histogram-style estimation settings: one DE run of 50 steps with 100
  // population members on [-20, 20]^3.
  static DEConfig mc_de_defaults() {
    DEConfig de;
    de.population = 100;
    de.generations = 50;
    de.restarts = 1;
    return de;
  }

  // The bias/RMSE benchmarks correspond to coalition-index deviations.
  static IneqOptions mc_ineq_defaults() {
    IneqOptions options;
    options.rule = DeviationRule::CoalitionSwaps;
    return options;
  }
};

struct McSimRow {
  std::uint64_t sim = 0;
  double beta = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  int score_count = 0;
  int n_inequalities = 0;
  bool qualified = false;  // at least one group met the subsidy requirement
  int attempts = 1;
};

struct McAggregate {
  int n = 0;
  double median_bias_beta = 0.0;
  double median_bias_gamma = 0.0;
  double rmse_beta = 0.0;
  double rmse_gamma = 0.0;
};

struct McSummary {
  std::vector<McSimRow> rows;
  McAggregate qualified;
  McAggregate unqualified;
  McAggregate all;
};

McSummary run_mc(const DgpConfig& dgp, const McConfig& mc);

struct SmallNEntry {
  int n = 0;
  int n_inequalities = 0;
  bool bounded = false;  // max-score region stays off the scan-box boundary
  Surface surface;       // (beta, gamma) grid
};

// One market per size; reports whether the (beta, gamma) max-score region is
// bounded within [lo, hi]^2 at the given resolution.
std::vector<SmallNEntry> small_n_scan(const DgpConfig& base, const std::vector<int>& sizes,
                                      double lo = -20.0, double hi = 30.0,
                                      int grid_points = 101);

// Median over the sorted values, lower element on even counts.
double lower_median(std::vector<double> values);

}  // namespace coalmatch
