#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coalmatch/errors.hpp"

namespace coalmatch {

// Payoff assigned to assignments that would have a firm sell itself while
// buying others. Finite so the program stays bounded, large enough that such
// assignments never carry mass at an optimum.
inline constexpr double kUnrealPayoff = -1e9;

// Merger bundle over firm indices. Width equals the market size; an empty
// bitset is the null bundle (autarky) and the singleton {i} is firm i's
// seller bundle.
class Coalition {
public:
  Coalition() = default;
  explicit Coalition(int width) : width_(width), words_((width + 63) / 64, 0) {}

  static Coalition from_members(int width, std::span<const int> members) {
    Coalition c(width);
    for (int m : members) c.set(m);
    return c;
  }

  static Coalition from_mask(int width, std::uint32_t mask) {
    Coalition c(width);
    for (int i = 0; i < width; ++i)
      if (mask >> i & 1u) c.set(i);
    return c;
  }

  int width() const { return width_; }
  bool test(int i) const { return words_[i / 64] >> (i % 64) & 1ull; }
  void set(int i) { words_[i / 64] |= 1ull << (i % 64); }
  void reset(int i) { words_[i / 64] &= ~(1ull << (i % 64)); }

  int count() const {
    int c = 0;
    for (auto w : words_) c += __builtin_popcountll(w);
    return c;
  }

  bool empty() const { return count() == 0; }
  bool is_singleton(int i) const { return count() == 1 && test(i); }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(count());
    for (int i = 0; i < width_; ++i)
      if (test(i)) out.push_back(i);
    return out;
  }

  bool operator==(const Coalition& other) const = default;

private:
  int width_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class FirmRole { MainBuyer, SellerAffiliate, Unmatched };

// One firm's identity plus tonnage by carrier type (millions of D/W tons).
struct FirmRecord {
  int id = 0;
  std::string name;
  std::optional<FirmRole> role;      // observed role; absent for synthetic firms
  Eigen::VectorXd tonnage;           // one entry per carrier type, >= 0
  std::optional<int> group_id;       // observed group membership

  double total_tonnage() const { return tonnage.sum(); }
};

// Size, specialization-share, and concentration proxies for a firm or a
// coalition. Shares of a zero-tonnage firm are the zero vector (flagged
// degenerate) since sub-thousand-ton firms occur in real data.
struct Covariates {
  double size_total = 0.0;
  Eigen::VectorXd size_by_type;
  Eigen::VectorXd share_by_type;
  double hhi = 0.0;
  bool degenerate = false;
};

Covariates build_covariates(const FirmRecord& firm);

// Member-wise running sums; shares become unweighted means and the HHI is
// recomputed from the aggregated tonnage, matching the coalition covariate
// construction used throughout.
struct CoalitionAggregate {
  Eigen::VectorXd tonnage_by_type;
  Eigen::VectorXd share_sum;
  double size_total = 0.0;
  int count = 0;

  void init(int n_types) {
    tonnage_by_type = Eigen::VectorXd::Zero(n_types);
    share_sum = Eigen::VectorXd::Zero(n_types);
    size_total = 0.0;
    count = 0;
  }

  void add(const Covariates& member) {
    tonnage_by_type += member.size_by_type;
    share_sum += member.share_by_type;
    size_total += member.size_total;
    ++count;
  }

  Covariates to_covariates() const;
};

Covariates coalition_covariates(std::span<const Covariates> members);

// Parameter vector indexing the linear production value. beta0 is the
// normalized coefficient on the first configured interaction covariate and is
// fixed at +1; beta covers the remaining interaction covariates.
struct Theta {
  double beta0 = 1.0;
  Eigen::VectorXd beta;
  double delta = 0.0;
  double gamma = 0.0;

  // [beta0; beta; delta; gamma] so that stability inequalities reduce to one
  // dot product per inequality.
  Eigen::VectorXd stacked() const {
    Eigen::VectorXd out(beta.size() + 3);
    out(0) = beta0;
    out.segment(1, beta.size()) = beta;
    out(beta.size() + 1) = delta;
    out(beta.size() + 2) = gamma;
    return out;
  }

  int dim() const { return static_cast<int>(beta.size()) + 3; }
};

enum class SubsidyKind { ToBuyer, Shared };

struct SubsidySpec {
  SubsidyKind kind = SubsidyKind::ToBuyer;
  double amount = 1.0;     // M
  double threshold = 1.0;  // kappa, millions of tons
};

// Per-group subsidy term. Qualification is strict: a coalition whose total
// tonnage equals the threshold exactly does not qualify.
double subsidy_term(const SubsidySpec& spec, double coalition_tonnage, int coalition_size);

struct CostSpec {
  bool per_target = true;
};

// gamma * |J \ {i}|; autarky and self-sale cost exactly zero.
double merger_cost(double gamma, int n_targets);

enum class NoiseDist { StdNormal, Normal, None };

struct NoiseSpec {
  NoiseDist dist = NoiseDist::StdNormal;
  double sigma = 1.0;  // standard deviation when dist == Normal
  std::uint64_t seed = 0;

  double scale() const {
    switch (dist) {
      case NoiseDist::StdNormal: return 1.0;
      case NoiseDist::Normal: return sigma;
      case NoiseDist::None: return 0.0;
    }
    return 0.0;
  }
};

enum class CovariateKind { TotalSize, SizeByType, ShareByType };

struct MenuItem {
  CovariateKind kind = CovariateKind::TotalSize;
  int type_index = 0;  // carrier type for SizeByType / ShareByType

  bool operator==(const MenuItem&) const = default;
};

// Interaction covariate menu; the first item carries the normalized beta0.
using CovariateMenu = std::vector<MenuItem>;

double menu_value(const MenuItem& item, const Covariates& cov);

// Deterministic coefficient stack of one production value: the value at theta
// is stacked-theta dot z(), so the model is exactly affine in (beta, delta,
// gamma) holding covariates, subsidy qualification, and noise fixed.
struct ValueStack {
  Eigen::VectorXd interactions;  // x_i (.) x_J over the menu
  double subsidy = 0.0;          // multiplies delta
  double targets = 0.0;          // count of acquired firms, multiplies -gamma

  double value(const Theta& theta) const {
    return theta.stacked().dot(z());
  }

  Eigen::VectorXd z() const {
    Eigen::VectorXd out(interactions.size() + 2);
    out.head(interactions.size()) = interactions;
    out(interactions.size()) = subsidy;
    out(interactions.size() + 1) = -targets;
    return out;
  }
};

enum class BundleClass { Null, SellerSelf, Buyer, Unreal };

// A one-sided one-to-many transferable-utility merger market: firms,
// their covariates, the interaction menu, and the subsidy / merger-cost
// environment of the joint production function.
class Market {
public:
  Market() = default;
  Market(std::vector<FirmRecord> firms, CovariateMenu menu, SubsidySpec subsidy,
         CostSpec cost = {}, bool buyer_in_aggregate = true);

  int size() const { return static_cast<int>(firms_.size()); }
  int n_types() const { return firms_.empty() ? 0 : static_cast<int>(firms_[0].tonnage.size()); }
  const std::vector<FirmRecord>& firms() const { return firms_; }
  const FirmRecord& firm(int i) const { return firms_[i]; }
  const Covariates& covariates(int i) const { return covariates_[i]; }
  const CovariateMenu& menu() const { return menu_; }
  const SubsidySpec& subsidy() const { return subsidy_; }
  const CostSpec& cost() const { return cost_; }
  bool buyer_in_aggregate() const { return buyer_in_aggregate_; }
  const Eigen::VectorXd& eta() const { return eta_; }
  void set_eta(Eigen::VectorXd eta);
  void set_subsidy(const SubsidySpec& spec) { subsidy_ = spec; }

  bool is_main(int i) const {
    return firms_[i].role && *firms_[i].role == FirmRole::MainBuyer;
  }

  // Stack of firm i staying unmatched: matching with a hypothetical firm of
  // identical composition, no subsidy, no cost.
  ValueStack unmatched_stack(int i) const;

  // Stack of buyer i acquiring `targets` (i excluded from the list). The
  // interaction aggregate includes the buyer per buyer_in_aggregate; subsidy
  // qualification always counts the full coalition's tonnage.
  ValueStack buyer_stack(int i, std::span<const int> targets) const;

  // Same stack from precomputed aggregates; shared fast path for the LP
  // assembly over all 2^N bundles.
  ValueStack make_stack(int i, const CoalitionAggregate& interaction_agg,
                        double coalition_tonnage, int coalition_size,
                        int n_targets) const;

  // Production value of firm i joining a bundle of the given class. Seller
  // bundles are exactly 0 with no noise; unreal bundles take the sentinel.
  double production_value(int i, BundleClass cls, std::span<const int> targets,
                          const Theta& theta, double eps) const;

  void check_theta(const Theta& theta) const;

private:
  Eigen::VectorXd interaction_vector(const Covariates& buyer, const Covariates& coal) const;

  std::vector<FirmRecord> firms_;
  std::vector<Covariates> covariates_;
  CovariateMenu menu_;
  SubsidySpec subsidy_;
  CostSpec cost_;
  bool buyer_in_aggregate_ = true;
  Eigen::VectorXd eta_;
};

}  // namespace coalmatch
