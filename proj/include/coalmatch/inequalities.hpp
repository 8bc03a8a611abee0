#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "coalmatch/equilibrium.hpp"
#include "coalmatch/market.hpp"

namespace coalmatch {

// The five pairwise-stability families:
//   TwoCoalitions    — single-member swap between two observed coalitions;
//   OneCoalitionDrop — drop one target, it becomes unmatched;
//   UnmatchedTarget  — insert an unmatched firm into a coalition;
//   IrUnmatched      — two unmatched firms stay apart rather than merge;
//   IrSubsidy        — matched with subsidy beats unmatched beats matched
//                      without subsidy (two one-sided inequalities).
enum class IneqFamily { TwoCoalitions, OneCoalitionDrop, UnmatchedTarget, IrUnmatched, IrSubsidy };

inline constexpr int kIneqFamilies = 5;

// One linear-in-theta stability condition z . theta >= 0. z stacks the
// interaction-coefficient differences, then the subsidy-term difference
// (multiplying delta), then minus the target-count difference (multiplying
// gamma). Valuation shocks never enter: deterministic indices only.
struct Inequality {
  Eigen::VectorXd z;
  IneqFamily family = IneqFamily::TwoCoalitions;
  int firm_a = -1;   // provenance pair, a < b
  int firm_b = -1;
  int swap_out = -1; // member leaving the first coalition (IrSubsidy: side 0/1)
  int swap_in = -1;  // member joining it (IrSubsidy: the buyer)
};

// How counterfactual deviations are priced.
//
// MemberSwaps: buyer pairs exchange one member at a time and displaced firms
// are credited at their unmatched payoffs, so each inequality compares the
// total deterministic value of everyone the deviation touches.
//
// CoalitionSwaps: buyer pairs exchange whole coalitions, a buyer-unmatched
// pair compares the observed coalition against taking the lone firm instead,
// and drops compare coalition production indices with no displaced-firm
// payoffs; coalition covariates come from the target set alone. This is the
// evaluation-procedure form that the benchmark Monte Carlo bias table and
// its inequality counts correspond to.
enum class DeviationRule { MemberSwaps, CoalitionSwaps };

struct IneqOptions {
  // Only main firms may act as (counterfactual) buyers.
  bool buyer_restriction = false;
  // Emit the pre/post-subsidy IR pair per buyer-involving pair; off in Monte
  // Carlo runs, which have no pre-subsidy period.
  bool enable_ir_subsidy = false;
  // Unmatched-firm insertion swaps out an incumbent member (one inequality
  // per member); the alternative inserts without removal (one inequality).
  // MemberSwaps only; CoalitionSwaps always emits the single whole swap.
  bool insertion_with_removal = true;
  DeviationRule rule = DeviationRule::MemberSwaps;
};

struct InequalitySet {
  std::vector<Inequality> items;
  int n_firms = 0;
  IneqOptions options;
  SubsidySpec subsidy;
  std::array<int, kIneqFamilies> family_counts{};

  int size() const { return static_cast<int>(items.size()); }
  bool empty() const { return items.empty(); }
  int theta_dim() const { return items.empty() ? 0 : static_cast<int>(items[0].z.size()); }

  // |G| x dim(theta) stack for vectorized scoring.
  Eigen::MatrixXd z_matrix() const;
};

// Walks ordered firm pairs (a < b) of the observed matching and emits
// inequalities per the nine-case score table; seller-seller and
// seller/unmatched pairs contribute nothing.
InequalitySet build_inequalities(const Market& market, const MatchingOutcome& matching,
                                 const IneqOptions& options = {});

// The IR-with/without-subsidy pair for one buyer and its observed coalition:
// matched at the data subsidy level >= unmatched >= matched with the subsidy
// switched off.
std::pair<Inequality, Inequality> chi_ir_subsidy(
    const Market& market, int buyer, std::span<const int> targets,
    DeviationRule rule = DeviationRule::MemberSwaps);

struct ScoreResult {
  int count = 0;          // satisfied inequalities, weak comparison
  double fraction = 0.0;  // count / |G|
  double normalized = 0.0;  // 2 / (N (N - 1)) * count
};

ScoreResult score(const Theta& theta, const InequalitySet& ineqs);

// Fast path for optimizers: satisfied count given the precomputed z-stack.
int score_count(const Eigen::MatrixXd& z_matrix, const Eigen::VectorXd& theta_stacked);

}  // namespace coalmatch
