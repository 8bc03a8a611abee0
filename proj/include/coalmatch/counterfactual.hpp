#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "coalmatch/equilibrium.hpp"
#include "coalmatch/market.hpp"

namespace coalmatch {

// One policy sweep over subsidy amounts M and thresholds kappa. Valuation
// shocks default to N(0, 5) read as variance 5; draws share shocks across
// cells so cell differences reflect policy, not noise.
struct PolicyGrid {
  std::vector<double> amounts{0.0, 0.1, 0.25, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0};
  std::vector<double> thresholds{0.5, 1.0, 2.0, 3.0, 5.0, 7.5};
  int draws = 20;
  NoiseSpec noise{NoiseDist::Normal, std::sqrt(5.0), 0};
  Theta theta;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct CellResult {
  double amount = 0.0;
  double threshold = 0.0;
  bool failed = false;
  std::string failure;
  double median_groups = 0.0;
  double median_unmatched = 0.0;
  double median_expenditure = 0.0;
  int n_integer_draws = 0;  // draws that solved integral without rounding
  int modal_draws = 0;      // how many draws realized the modal configuration
  MatchingOutcome modal;
  Allocation modal_allocation;  // allocation of the first draw realizing the mode
};

struct SweepResult {
  std::vector<CellResult> cells;  // amounts-major, thresholds within
};

// Solves the equilibrium per (amount, threshold, draw), perturbation-rounds
// fractional allocations, and reduces each cell to lower-medians and the
// modal configuration. A failing cell is marked and the sweep continues.
SweepResult policy_sweep(const Market& market, const PolicyGrid& grid);

// Government outlay of the realized outcome: amount paid once per qualified
// group; unqualified groups and unmatched firms cost nothing.
double expenditure(const MatchingOutcome& outcome, double amount);

// Most frequent canonicalized partition; ties resolve to the
// lexicographically smallest canonical key.
MatchingOutcome modal_configuration(const std::vector<MatchingOutcome>& outcomes);

// Canonical group label for flow tables: sorted member ids, "U<id>" for an
// unmatched firm.
std::string group_label(const std::vector<int>& members);

struct FlowRow {
  double amount = 0.0;
  double threshold = 0.0;
  int firm = 0;
  std::string source;  // firm's group in the baseline outcome
  std::string target;  // group (or unmatched) in the cell's allocation
  double weight = 0.0;
};

// Per-cell firm flows from the baseline matching into each cell's modal
// allocation. Fractional buyer mass flows to the bundle's group; fractional
// seller mass is split across the groups demanding the firm, pro rata to
// their demand.
std::vector<FlowRow> export_configuration_flows(const Market& market,
                                                const MatchingOutcome& before,
                                                const SweepResult& sweep);

}  // namespace coalmatch
