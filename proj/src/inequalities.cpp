#include "coalmatch/inequalities.hpp"

#include <algorithm>

#include "coalmatch/errors.hpp"

namespace coalmatch {

namespace {

enum class Role { Buyer, Seller, Unmatched };

struct PairContext {
  const Market* market;
  const IneqOptions* options;
  std::vector<Role> role;
  std::vector<std::vector<int>> targets;  // per buyer, ascending; empty otherwise
  std::vector<bool> eligible_buyer;       // under the buyer restriction
};

// Stack of buyer `i` holding target set `targets`; an emptied coalition
// collapses to the unmatched stack.
ValueStack group_stack(const Market& market, int i, std::span<const int> targets) {
  if (targets.empty()) return market.unmatched_stack(i);
  return market.buyer_stack(i, targets);
}

// CoalitionSwaps pricing: interactions against the target aggregate only,
// subsidy qualification still over the full coalition's tonnage.
ValueStack index_stack(const Market& market, int i, std::span<const int> targets) {
  if (targets.empty()) return market.unmatched_stack(i);
  CoalitionAggregate full, tgt;
  full.init(market.n_types());
  tgt.init(market.n_types());
  full.add(market.covariates(i));
  for (int t : targets) {
    full.add(market.covariates(t));
    tgt.add(market.covariates(t));
  }
  return market.make_stack(i, tgt, full.size_total, full.count,
                           static_cast<int>(targets.size()));
}

std::vector<int> without(std::span<const int> set, int drop) {
  std::vector<int> out;
  out.reserve(set.size());
  for (int v : set)
    if (v != drop) out.push_back(v);
  return out;
}

std::vector<int> with(std::span<const int> set, int add) {
  std::vector<int> out(set.begin(), set.end());
  out.insert(std::lower_bound(out.begin(), out.end(), add), add);
  return out;
}

Inequality make(IneqFamily family, int a, int b, const Eigen::VectorXd& z, int swap_out,
                int swap_in) {
  Inequality ineq;
  ineq.z = z;
  ineq.family = family;
  ineq.firm_a = a;
  ineq.firm_b = b;
  ineq.swap_out = swap_out;
  ineq.swap_in = swap_in;
  return ineq;
}

}  // namespace

std::pair<Inequality, Inequality> chi_ir_subsidy(const Market& market, int buyer,
                                                 std::span<const int> targets,
                                                 DeviationRule rule) {
  ValueStack matched = rule == DeviationRule::CoalitionSwaps
                           ? index_stack(market, buyer, targets)
                           : market.buyer_stack(buyer, targets);
  ValueStack matched_no_subsidy = matched;
  matched_no_subsidy.subsidy = 0.0;  // the M = 0 regime
  ValueStack unmatched = market.unmatched_stack(buyer);

  Inequality upper;  // matched at data subsidy >= unmatched
  upper.z = matched.z() - unmatched.z();
  upper.family = IneqFamily::IrSubsidy;
  upper.swap_out = 0;
  upper.swap_in = buyer;

  Inequality lower;  // unmatched >= matched without subsidy
  lower.z = unmatched.z() - matched_no_subsidy.z();
  lower.family = IneqFamily::IrSubsidy;
  lower.swap_out = 1;
  lower.swap_in = buyer;
  return {upper, lower};
}

namespace {

void emit_chi(const PairContext& ctx, int buyer, int a, int b, InequalitySet& out) {
  if (ctx.targets[buyer].empty()) return;
  auto [upper, lower] =
      chi_ir_subsidy(*ctx.market, buyer, ctx.targets[buyer], ctx.options->rule);
  upper.firm_a = a;
  upper.firm_b = b;
  lower.firm_a = a;
  lower.firm_b = b;
  out.items.push_back(std::move(upper));
  out.items.push_back(std::move(lower));
}

void pair_buyer_buyer(const PairContext& ctx, int a, int b, InequalitySet& out) {
  const Market& market = *ctx.market;
  if (ctx.options->rule == DeviationRule::CoalitionSwaps) {
    Eigen::VectorXd z = index_stack(market, a, ctx.targets[a]).z() +
                        index_stack(market, b, ctx.targets[b]).z() -
                        index_stack(market, a, ctx.targets[b]).z() -
                        index_stack(market, b, ctx.targets[a]).z();
    out.items.push_back(make(IneqFamily::TwoCoalitions, a, b, z, -1, -1));
  } else {
    ValueStack obs_a = group_stack(market, a, ctx.targets[a]);
    ValueStack obs_b = group_stack(market, b, ctx.targets[b]);
    Eigen::VectorXd observed = obs_a.z() + obs_b.z();
    for (int k : ctx.targets[a]) {
      for (int h : ctx.targets[b]) {
        ValueStack swapped_a = group_stack(market, a, with(without(ctx.targets[a], k), h));
        ValueStack swapped_b = group_stack(market, b, with(without(ctx.targets[b], h), k));
        out.items.push_back(make(IneqFamily::TwoCoalitions, a, b,
                                 observed - swapped_a.z() - swapped_b.z(), k, h));
      }
    }
  }
  if (out.options.enable_ir_subsidy) {
    emit_chi(ctx, a, a, b, out);
    emit_chi(ctx, b, a, b, out);
  }
}

void pair_buyer_seller(const PairContext& ctx, int buyer, int a, int b, InequalitySet& out) {
  const Market& market = *ctx.market;
  bool coalition_rule = ctx.options->rule == DeviationRule::CoalitionSwaps;
  ValueStack observed = coalition_rule ? index_stack(market, buyer, ctx.targets[buyer])
                                       : group_stack(market, buyer, ctx.targets[buyer]);
  for (int k : ctx.targets[buyer]) {
    std::vector<int> rest = without(ctx.targets[buyer], k);
    Eigen::VectorXd z;
    if (coalition_rule) {
      z = observed.z() - index_stack(market, buyer, rest).z();
    } else {
      z = observed.z() - group_stack(market, buyer, rest).z() -
          market.unmatched_stack(k).z();
    }
    out.items.push_back(make(IneqFamily::OneCoalitionDrop, a, b, z, k, -1));
  }
  if (out.options.enable_ir_subsidy) emit_chi(ctx, buyer, a, b, out);
}

void pair_buyer_unmatched(const PairContext& ctx, int buyer, int lone, int a, int b,
                          InequalitySet& out) {
  const Market& market = *ctx.market;
  if (ctx.options->rule == DeviationRule::CoalitionSwaps) {
    std::vector<int> single{lone};
    Eigen::VectorXd z = index_stack(market, buyer, ctx.targets[buyer]).z() -
                        index_stack(market, buyer, single).z();
    out.items.push_back(make(IneqFamily::UnmatchedTarget, a, b, z, -1, lone));
    if (out.options.enable_ir_subsidy) emit_chi(ctx, buyer, a, b, out);
    return;
  }
  Eigen::VectorXd observed =
      group_stack(market, buyer, ctx.targets[buyer]).z() + market.unmatched_stack(lone).z();
  if (out.options.insertion_with_removal) {
    for (int k : ctx.targets[buyer]) {
      ValueStack swapped = group_stack(market, buyer, with(without(ctx.targets[buyer], k), lone));
      ValueStack freed = market.unmatched_stack(k);
      out.items.push_back(make(IneqFamily::UnmatchedTarget, a, b,
                               observed - swapped.z() - freed.z(), k, lone));
    }
  } else {
    ValueStack enlarged = group_stack(market, buyer, with(ctx.targets[buyer], lone));
    out.items.push_back(
        make(IneqFamily::UnmatchedTarget, a, b, observed - enlarged.z(), -1, lone));
  }
  if (out.options.enable_ir_subsidy) emit_chi(ctx, buyer, a, b, out);
}

void pair_unmatched_unmatched(const PairContext& ctx, int a, int b, InequalitySet& out) {
  const Market& market = *ctx.market;
  int buyer, target;
  if (ctx.eligible_buyer[a]) {
    buyer = a;
    target = b;
  } else if (ctx.eligible_buyer[b]) {
    buyer = b;
    target = a;
  } else {
    return;
  }
  std::vector<int> merged{target};
  Eigen::VectorXd observed =
      market.unmatched_stack(a).z() + market.unmatched_stack(b).z();
  ValueStack merged_stack = ctx.options->rule == DeviationRule::CoalitionSwaps
                                ? index_stack(market, buyer, merged)
                                : market.buyer_stack(buyer, merged);
  out.items.push_back(make(IneqFamily::IrUnmatched, a, b,
                           observed - merged_stack.z(), -1, target));
}

}  // namespace

InequalitySet build_inequalities(const Market& market, const MatchingOutcome& matching,
                                 const IneqOptions& options) {
  const int n = market.size();
  PairContext ctx;
  ctx.market = &market;
  ctx.options = &options;
  ctx.role.assign(n, Role::Unmatched);
  ctx.targets.assign(n, {});
  ctx.eligible_buyer.assign(n, false);

  for (int i : matching.unmatched) ctx.role[i] = Role::Unmatched;
  for (const Group& g : matching.groups) {
    // A group whose designated buyer is not allowed to buy contributes
    // nothing; its members pair up like sellers.
    bool eligible = !options.buyer_restriction || market.is_main(g.buyer);
    for (int m : g.members) ctx.role[m] = Role::Seller;
    if (eligible) {
      ctx.role[g.buyer] = Role::Buyer;
      ctx.targets[g.buyer] = without(g.members, g.buyer);
    }
  }
  for (int i = 0; i < n; ++i)
    ctx.eligible_buyer[i] = !options.buyer_restriction || market.is_main(i);

  InequalitySet out;
  out.n_firms = n;
  out.options = options;
  out.subsidy = market.subsidy();

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      Role ra = ctx.role[a], rb = ctx.role[b];
      if (ra == Role::Buyer && rb == Role::Buyer) pair_buyer_buyer(ctx, a, b, out);
      else if (ra == Role::Buyer && rb == Role::Seller) pair_buyer_seller(ctx, a, a, b, out);
      else if (ra == Role::Seller && rb == Role::Buyer) pair_buyer_seller(ctx, b, a, b, out);
      else if (ra == Role::Buyer && rb == Role::Unmatched) pair_buyer_unmatched(ctx, a, b, a, b, out);
      else if (ra == Role::Unmatched && rb == Role::Buyer) pair_buyer_unmatched(ctx, b, a, a, b, out);
      else if (ra == Role::Unmatched && rb == Role::Unmatched) pair_unmatched_unmatched(ctx, a, b, out);
      // seller-seller, seller-unmatched, unmatched-seller: nothing
    }
  }

  for (const Inequality& ineq : out.items)
    ++out.family_counts[static_cast<int>(ineq.family)];
  return out;
}

Eigen::MatrixXd InequalitySet::z_matrix() const {
  Eigen::MatrixXd z(items.size(), theta_dim());
  for (std::size_t g = 0; g < items.size(); ++g) z.row(static_cast<Eigen::Index>(g)) = items[g].z;
  return z;
}

int score_count(const Eigen::MatrixXd& z_matrix, const Eigen::VectorXd& theta_stacked) {
  return static_cast<int>(((z_matrix * theta_stacked).array() >= 0.0).count());
}

ScoreResult score(const Theta& theta, const InequalitySet& ineqs) {
  ScoreResult result;
  if (ineqs.empty()) return result;
  if (theta.dim() != ineqs.theta_dim())
    throw config_error("theta dimension " + std::to_string(theta.dim()) +
                       " does not match inequality dimension " +
                       std::to_string(ineqs.theta_dim()));
  result.count = score_count(ineqs.z_matrix(), theta.stacked());
  result.fraction = static_cast<double>(result.count) / ineqs.size();
  double n = ineqs.n_firms;
  result.normalized = n > 1 ? 2.0 / (n * (n - 1.0)) * result.count : 0.0;
  return result;
}

}  // namespace coalmatch
