#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coalmatch/market.hpp"
#include "coalmatch/rng.hpp"

namespace coalmatch {

// Bundle bitmask; bit i = firm i participates. Market sizes are capped well
// below 32 firms (the LP has N * 2^N variables).
using Mask = std::uint32_t;

inline constexpr int kLpMarketCap = 14;
inline constexpr int kOracleCap = 6;
inline constexpr double kFeasibilityTol = 1e-8;
inline constexpr double kIntegralityTol = 1e-6;

// Role of bundle J for firm i:
//   Null       — empty bundle, firm stays autarkic;
//   SellerSelf — only bit i set, firm sells itself;
//   Buyer      — bit i clear, at least one other bit set: i acquires those firms;
//   Unreal     — bit i set together with others (sell itself while buying);
//                kept in the catalog so the constraint system matches the
//                supply/demand accounting term-for-term, priced at the
//                sentinel so it never carries mass.
struct BundleCatalog {
  int n = 0;

  static BundleCatalog make(int n);

  int n_bundles() const { return 1 << n; }
  Mask null_bundle() const { return 0; }
  Mask seller_bundle(int firm) const { return Mask(1) << firm; }

  BundleClass classify(int firm, Mask bundle) const {
    if (bundle == 0) return BundleClass::Null;
    if (bundle == seller_bundle(firm)) return BundleClass::SellerSelf;
    if (bundle >> firm & 1u) return BundleClass::Unreal;
    return BundleClass::Buyer;
  }

  Coalition to_coalition(Mask bundle) const { return Coalition::from_mask(n, bundle); }
};

struct VarRef {
  int firm = 0;
  Mask bundle = 0;
  bool operator==(const VarRef&) const = default;
};

// One supply = demand equality: firm i's mass on its seller bundle equals all
// other firms' mass on bundles that contain firm i.
struct FeasibilityConstraint {
  VarRef supply;
  std::vector<VarRef> demand;  // ordered: demanding firm ascending, bundle ascending
};

std::vector<FeasibilityConstraint> build_feasibility_constraints(int n);

struct LinearProgram {
  int n = 0;
  Eigen::MatrixXd payoff;  // n x 2^n, U_{i,J} with noise folded in
  Eigen::VectorXd eta;
};

// Per-(firm, bundle) valuation shocks; seller and unreal bundles ignore
// theirs. Entries are a pure function of (seed, firm, bundle).
Eigen::MatrixXd draw_noise(const NoiseSpec& spec, int n);

// Precomputes coalition aggregates and interaction rows for every bundle once
// per market, so repeated assemblies (policy cells, Monte Carlo draws) only
// re-price.
class LpAssembler {
public:
  explicit LpAssembler(const Market& market, int market_cap = kLpMarketCap);

  LinearProgram assemble(const Theta& theta, const Eigen::MatrixXd& eps) const;
  LinearProgram assemble(const Theta& theta, const SubsidySpec& subsidy,
                         const Eigen::MatrixXd& eps) const;

  const Market& market() const { return *market_; }
  const BundleCatalog& catalog() const { return catalog_; }

private:
  const Market* market_;
  BundleCatalog catalog_;
  Eigen::MatrixXd unmatched_iv_;      // n x menu
  Eigen::MatrixXd buyer_iv_;          // (n * 2^n) x menu, rows for buyer bundles only
  Eigen::VectorXd mask_tonnage_;      // per mask: total tonnage of members
  std::vector<int> mask_count_;       // per mask: member count
};

LinearProgram assemble_lp(const Market& market, const Theta& theta,
                          const Eigen::MatrixXd& eps, int market_cap = kLpMarketCap);

struct Allocation {
  Eigen::MatrixXd weights;  // n x 2^n
  double welfare = 0.0;
  bool is_integer = false;
};

// Solves the social-welfare program by bounded revised simplex, starting from
// the always-feasible autarky basis. Vertex solutions keep equilibria integer
// whenever an integer optimum exists.
Allocation solve_equilibrium(const LinearProgram& lp);

// Re-checks box, adding-up, and supply=demand families directly from the
// constraint definitions, independent of the solver's own accounting.
double allocation_violation(const LinearProgram& lp, const Allocation& alloc);

struct Group {
  int buyer = 0;
  std::vector<int> members;  // includes the buyer, ascending
  bool qualified = false;    // coalition tonnage strictly above the threshold
};

struct MatchingOutcome {
  std::vector<Group> groups;
  std::vector<int> unmatched;
  bool probabilistic = false;  // came out of perturbation rounding
};

// Reads the group structure out of an integer allocation.
MatchingOutcome extract_outcome(const Market& market, const Allocation& alloc);

// Integer allocations pass through; fractional ones get i.i.d. N(0, 1e-3)
// perturbations added to the weights, then firms are greedily assigned to
// their maximum-weight bundle subject to one-buyer-per-seller consistency.
MatchingOutcome integerize(const Market& market, const Allocation& alloc, Rng rng);

struct OutcomeSummary {
  int n_groups = 0;
  int n_unmatched = 0;
  int n_post_merger_firms = 0;
  int n_qualified = 0;
};

OutcomeSummary classify_outcome(const MatchingOutcome& outcome);

// Canonical text form (groups by ascending least member, buyer marked); used
// for modal-configuration counting and tie-breaking.
std::string outcome_key(const MatchingOutcome& outcome);

struct OracleResult {
  double welfare = 0.0;
  MatchingOutcome outcome;
};

// Exhaustive welfare maximum over all partitions of firms into buyer-led
// groups and unmatched singletons; every member of a group is tried as its
// buyer. Independent of the LP path; N <= 6.
OracleResult oracle_welfare(const Market& market, const Theta& theta,
                            const Eigen::MatrixXd& eps);

}  // namespace coalmatch
