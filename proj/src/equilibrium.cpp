#include "coalmatch/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coalmatch/errors.hpp"
#include "coalmatch/simplex.hpp"

namespace coalmatch {

BundleCatalog BundleCatalog::make(int n) {
  if (n < 1) throw config_error("market size must be at least 1");
  if (n > 31) throw market_too_large("bundle masks support at most 31 firms");
  return BundleCatalog{n};
}

std::vector<FeasibilityConstraint> build_feasibility_constraints(int n) {
  BundleCatalog catalog = BundleCatalog::make(n);
  std::vector<FeasibilityConstraint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    FeasibilityConstraint c;
    c.supply = VarRef{i, catalog.seller_bundle(i)};
    for (int other = 0; other < n; ++other) {
      if (other == i) continue;
      for (Mask m = 1; m < static_cast<Mask>(catalog.n_bundles()); ++m)
        if (m >> i & 1u) c.demand.push_back(VarRef{other, m});
    }
    out.push_back(std::move(c));
  }
  return out;
}

Eigen::MatrixXd draw_noise(const NoiseSpec& spec, int n) {
  BundleCatalog catalog = BundleCatalog::make(n);
  Eigen::MatrixXd eps(n, catalog.n_bundles());
  double scale = spec.scale();
  if (scale == 0.0) {
    eps.setZero();
    return eps;
  }
  Rng rng = Rng::substream(spec.seed, 0x65707300);  // noise stream tag
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < catalog.n_bundles(); ++m) {
      std::uint64_t idx = static_cast<std::uint64_t>(i) * catalog.n_bundles() + m;
      eps(i, m) = scale * rng.normal_at(2 * idx);
    }
  return eps;
}

LpAssembler::LpAssembler(const Market& market, int market_cap) : market_(&market) {
  int n = market.size();
  if (n > market_cap)
    throw market_too_large("market size " + std::to_string(n) + " exceeds the LP cap " +
                           std::to_string(market_cap) + " (N * 2^N variables)");
  catalog_ = BundleCatalog::make(n);
  const int n_bundles = catalog_.n_bundles();
  const int menu_dim = static_cast<int>(market.menu().size());

  // Aggregates for every mask, built off each mask's lowest member.
  std::vector<CoalitionAggregate> aggregate(n_bundles);
  aggregate[0].init(market.n_types());
  mask_tonnage_ = Eigen::VectorXd::Zero(n_bundles);
  mask_count_.assign(n_bundles, 0);
  for (Mask m = 1; m < static_cast<Mask>(n_bundles); ++m) {
    Mask low = m & (~m + 1);
    int firm = __builtin_ctz(m);
    aggregate[m] = aggregate[m ^ low];
    aggregate[m].add(market.covariates(firm));
    mask_tonnage_(m) = aggregate[m].size_total;
    mask_count_[m] = aggregate[m].count;
  }

  unmatched_iv_.resize(n, menu_dim);
  for (int i = 0; i < n; ++i)
    unmatched_iv_.row(i) = market.unmatched_stack(i).interactions.transpose();

  buyer_iv_.setZero(static_cast<Eigen::Index>(n) * n_bundles, menu_dim);
  std::vector<Covariates> mask_cov(n_bundles);
  for (Mask m = 1; m < static_cast<Mask>(n_bundles); ++m) mask_cov[m] = aggregate[m].to_covariates();
  for (int i = 0; i < n; ++i) {
    const Covariates& own = market.covariates(i);
    for (Mask m = 1; m < static_cast<Mask>(n_bundles); ++m) {
      if (catalog_.classify(i, m) != BundleClass::Buyer) continue;
      Mask full = m | catalog_.seller_bundle(i);
      const Covariates& coal = market.buyer_in_aggregate() ? mask_cov[full] : mask_cov[m];
      auto row = buyer_iv_.row(static_cast<Eigen::Index>(i) * n_bundles + m);
      for (int k = 0; k < menu_dim; ++k)
        row(k) = menu_value(market.menu()[k], own) * menu_value(market.menu()[k], coal);
    }
  }
}

LinearProgram LpAssembler::assemble(const Theta& theta, const Eigen::MatrixXd& eps) const {
  return assemble(theta, market_->subsidy(), eps);
}

LinearProgram LpAssembler::assemble(const Theta& theta, const SubsidySpec& subsidy,
                                    const Eigen::MatrixXd& eps) const {
  market_->check_theta(theta);
  const int n = market_->size();
  const int n_bundles = catalog_.n_bundles();
  if (eps.rows() != n || eps.cols() != n_bundles)
    throw config_error("noise matrix must be n x 2^n");

  Eigen::VectorXd beta_full(theta.beta.size() + 1);
  beta_full(0) = theta.beta0;
  beta_full.tail(theta.beta.size()) = theta.beta;

  LinearProgram lp;
  lp.n = n;
  lp.eta = market_->eta();
  lp.payoff.resize(n, n_bundles);
  for (int i = 0; i < n; ++i) {
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m) {
      double value = 0.0;
      switch (catalog_.classify(i, m)) {
        case BundleClass::Null:
          value = unmatched_iv_.row(i).dot(beta_full) + eps(i, m);
          break;
        case BundleClass::SellerSelf:
          value = 0.0;
          break;
        case BundleClass::Unreal:
          value = kUnrealPayoff;
          break;
        case BundleClass::Buyer: {
          Mask full = m | catalog_.seller_bundle(i);
          double s = subsidy_term(subsidy, mask_tonnage_(full), mask_count_[full]);
          double cost = merger_cost(theta.gamma, __builtin_popcount(m));
          value = buyer_iv_.row(static_cast<Eigen::Index>(i) * n_bundles + m).dot(beta_full) +
                  theta.delta * s - cost + eps(i, m);
          break;
        }
      }
      lp.payoff(i, m) = value;
    }
  }
  return lp;
}

LinearProgram assemble_lp(const Market& market, const Theta& theta,
                          const Eigen::MatrixXd& eps, int market_cap) {
  return LpAssembler(market, market_cap).assemble(theta, eps);
}

namespace {

// Column of variable (firm, bundle): +1 in adding-up row `firm`; sellers
// supply their own feasibility row; every bundle bit j != firm demands firm j.
BoundedLp::SparseColumn variable_column(int n, int firm, Mask bundle) {
  BoundedLp::SparseColumn col;
  col.emplace_back(firm, 1.0);
  if (bundle == Mask(1) << firm) col.emplace_back(n + firm, 1.0);
  for (int j = 0; j < n; ++j)
    if (j != firm && (bundle >> j & 1u)) col.emplace_back(n + j, -1.0);
  return col;
}

BoundedLp build_bounded_lp(const LinearProgram& lp) {
  const int n = lp.n;
  const int n_bundles = 1 << n;
  const long n_vars = static_cast<long>(n) * n_bundles;
  Eigen::VectorXd objective(n_vars), upper(n_vars);
  for (int i = 0; i < n; ++i)
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m) {
      objective(static_cast<long>(i) * n_bundles + m) = lp.payoff(i, m);
      upper(static_cast<long>(i) * n_bundles + m) = lp.eta(i);
    }
  Eigen::VectorXd rhs(2 * n);
  rhs.head(n) = lp.eta;
  rhs.tail(n).setZero();

  if (n <= 10) {
    Eigen::MatrixXd columns = Eigen::MatrixXd::Zero(2 * n, n_vars);
    for (int i = 0; i < n; ++i)
      for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m)
        for (const auto& [row, coef] : variable_column(n, i, m))
          columns(row, static_cast<long>(i) * n_bundles + m) = coef;
    return BoundedLp::dense(std::move(columns), std::move(objective), std::move(upper),
                            std::move(rhs));
  }
  std::vector<BoundedLp::SparseColumn> columns(n_vars);
  for (int i = 0; i < n; ++i)
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m)
      columns[static_cast<long>(i) * n_bundles + m] = variable_column(n, i, m);
  return BoundedLp::sparse(2 * n, std::move(columns), std::move(objective), std::move(upper),
                           std::move(rhs));
}

}  // namespace

Allocation solve_equilibrium(const LinearProgram& lp) {
  const int n = lp.n;
  const int n_bundles = 1 << n;
  BoundedLp bounded = build_bounded_lp(lp);

  // Autarky basis: null bundles carry eta, seller bundles sit at zero.
  std::vector<int> basis;
  basis.reserve(2 * n);
  for (int i = 0; i < n; ++i) basis.push_back(i * n_bundles);
  for (int i = 0; i < n; ++i) basis.push_back(i * n_bundles + (1 << i));

  SimplexResult result;
  try {
    result = simplex_maximize(bounded, basis);
  } catch (const Error& e) {
    throw solver_error(std::string("equilibrium solve failed: ") + e.what());
  }

  Allocation alloc;
  alloc.weights.resize(n, n_bundles);
  for (int i = 0; i < n; ++i)
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m)
      alloc.weights(i, m) = result.x(static_cast<long>(i) * n_bundles + m);
  alloc.welfare = result.objective;
  alloc.is_integer = true;
  for (int i = 0; i < n && alloc.is_integer; ++i)
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m) {
      double w = alloc.weights(i, m);
      if (std::min(std::abs(w), std::abs(w - lp.eta(i))) > kIntegralityTol) {
        alloc.is_integer = false;
        break;
      }
    }
  return alloc;
}

double allocation_violation(const LinearProgram& lp, const Allocation& alloc) {
  const int n = lp.n;
  const int n_bundles = 1 << n;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m) {
      double w = alloc.weights(i, m);
      worst = std::max(worst, -w);
      worst = std::max(worst, w - lp.eta(i));
      row_sum += w;
    }
    worst = std::max(worst, std::abs(row_sum - lp.eta(i)));
  }
  for (const FeasibilityConstraint& c : build_feasibility_constraints(n)) {
    double supply = alloc.weights(c.supply.firm, c.supply.bundle);
    double demand = 0.0;
    for (const VarRef& v : c.demand) demand += alloc.weights(v.firm, v.bundle);
    worst = std::max(worst, std::abs(supply - demand));
  }
  return worst;
}

namespace {

bool group_qualified(const Market& market, const std::vector<int>& members) {
  double tonnage = 0.0;
  for (int m : members) tonnage += market.firm(m).total_tonnage();
  return tonnage > market.subsidy().threshold;
}

Group make_group(const Market& market, int buyer, Mask targets) {
  Group g;
  g.buyer = buyer;
  g.members.push_back(buyer);
  for (int j = 0; j < market.size(); ++j)
    if (targets >> j & 1u) g.members.push_back(j);
  std::sort(g.members.begin(), g.members.end());
  g.qualified = group_qualified(market, g.members);
  return g;
}

void sort_outcome(MatchingOutcome& outcome) {
  std::sort(outcome.groups.begin(), outcome.groups.end(),
            [](const Group& a, const Group& b) { return a.members.front() < b.members.front(); });
  std::sort(outcome.unmatched.begin(), outcome.unmatched.end());
}

}  // namespace

MatchingOutcome extract_outcome(const Market& market, const Allocation& alloc) {
  const int n = market.size();
  const int n_bundles = 1 << n;
  BundleCatalog catalog = BundleCatalog::make(n);
  if (!alloc.is_integer) throw solver_error("extract_outcome requires an integer allocation");

  MatchingOutcome outcome;
  std::vector<bool> sold(n, false);
  std::vector<int> demanded(n, 0);
  for (int i = 0; i < n; ++i) {
    Mask chosen = 0;
    bool found = false;
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m) {
      if (std::abs(alloc.weights(i, m) - 1.0) <= kIntegralityTol) {
        chosen = m;
        found = true;
        break;
      }
    }
    if (!found) throw solver_error("integer allocation has no unit bundle for firm " +
                                   std::to_string(i));
    switch (catalog.classify(i, chosen)) {
      case BundleClass::Null:
        outcome.unmatched.push_back(i);
        break;
      case BundleClass::SellerSelf:
        sold[i] = true;
        break;
      case BundleClass::Buyer: {
        outcome.groups.push_back(make_group(market, i, chosen));
        for (int j = 0; j < n; ++j)
          if (chosen >> j & 1u) ++demanded[j];
        break;
      }
      case BundleClass::Unreal:
        throw solver_error("unreal bundle carries mass for firm " + std::to_string(i));
    }
  }
  // Sellers must be bought exactly once, everyone else not at all.
  for (int i = 0; i < n; ++i)
    if (demanded[i] != (sold[i] ? 1 : 0))
      throw solver_error("allocation does not partition the firm set at firm " +
                         std::to_string(i));
  sort_outcome(outcome);
  return outcome;
}

MatchingOutcome integerize(const Market& market, const Allocation& alloc, Rng rng) {
  if (alloc.is_integer) return extract_outcome(market, alloc);

  const int n = market.size();
  const int n_bundles = 1 << n;
  Eigen::MatrixXd perturbed = alloc.weights;
  const double sigma = std::sqrt(1e-3);
  for (int i = 0; i < n; ++i)
    for (Mask m = 0; m < static_cast<Mask>(n_bundles); ++m)
      perturbed(i, m) += sigma * rng.normal_at(2 * (static_cast<std::uint64_t>(i) * n_bundles + m));

  MatchingOutcome outcome;
  outcome.probabilistic = true;
  Mask available = (Mask(1) << n) - 1;
  while (available != 0) {
    double best = -std::numeric_limits<double>::infinity();
    int best_firm = -1;
    Mask best_bundle = 0;
    for (int i = 0; i < n; ++i) {
      if (!(available >> i & 1u)) continue;
      Mask others = available & ~(Mask(1) << i);
      if (perturbed(i, 0) > best) {
        best = perturbed(i, 0);
        best_firm = i;
        best_bundle = 0;
      }
      // Buyer bundles whose targets are all still on the market.
      for (Mask m = others; m != 0; m = (m - 1) & others) {
        if (perturbed(i, m) > best) {
          best = perturbed(i, m);
          best_firm = i;
          best_bundle = m;
        }
      }
    }
    if (best_bundle == 0) {
      outcome.unmatched.push_back(best_firm);
      available &= ~(Mask(1) << best_firm);
    } else {
      outcome.groups.push_back(make_group(market, best_firm, best_bundle));
      available &= ~(Mask(1) << best_firm);
      available &= ~best_bundle;
    }
  }
  sort_outcome(outcome);
  return outcome;
}

OutcomeSummary classify_outcome(const MatchingOutcome& outcome) {
  OutcomeSummary s;
  s.n_groups = static_cast<int>(outcome.groups.size());
  s.n_unmatched = static_cast<int>(outcome.unmatched.size());
  s.n_post_merger_firms = s.n_groups + s.n_unmatched;
  for (const Group& g : outcome.groups)
    if (g.qualified) ++s.n_qualified;
  return s;
}

std::string outcome_key(const MatchingOutcome& outcome) {
  std::ostringstream os;
  for (const Group& g : outcome.groups) {
    os << 'b' << g.buyer << ':';
    for (std::size_t k = 0; k < g.members.size(); ++k)
      os << (k ? "," : "") << g.members[k];
    os << '|';
  }
  os << 'u';
  for (int i : outcome.unmatched) os << ':' << i;
  return os.str();
}

namespace {

struct OracleState {
  const Market* market;
  const Theta* theta;
  const Eigen::MatrixXd* eps;
  int n = 0;
  std::vector<double> best;       // by remaining mask
  std::vector<bool> known;
  std::vector<Mask> choice_block;  // group chosen at this mask (members incl. buyer)
  std::vector<int> choice_buyer;   // -1 = lowest firm unmatched

  double solve(Mask remaining) {
    if (remaining == 0) return 0.0;
    if (known[remaining]) return best[remaining];
    int f = __builtin_ctz(remaining);
    Mask rest = remaining & ~(Mask(1) << f);

    double top = (*eps)(f, 0) + market->unmatched_stack(f).value(*theta);
    Mask top_block = Mask(1) << f;
    int top_buyer = -1;
    top += solve(rest);

    for (Mask s = rest; s != 0; s = (s - 1) & rest) {
      Mask block = s | (Mask(1) << f);
      double tail = solve(remaining & ~block);
      // Every member of the block is tried as its buyer.
      for (int b = 0; b < n; ++b) {
        if (!(block >> b & 1u)) continue;
        Mask targets = block & ~(Mask(1) << b);
        std::vector<int> ids;
        for (int j = 0; j < n; ++j)
          if (targets >> j & 1u) ids.push_back(j);
        double value = market->buyer_stack(b, ids).value(*theta) + (*eps)(b, targets) + tail;
        if (value > top) {
          top = value;
          top_block = block;
          top_buyer = b;
        }
      }
    }
    known[remaining] = true;
    best[remaining] = top;
    choice_block[remaining] = top_block;
    choice_buyer[remaining] = top_buyer;
    return top;
  }
};

}  // namespace

OracleResult oracle_welfare(const Market& market, const Theta& theta,
                            const Eigen::MatrixXd& eps) {
  const int n = market.size();
  if (n > kOracleCap)
    throw oracle_too_large("brute-force oracle supports at most " +
                           std::to_string(kOracleCap) + " firms");
  market.check_theta(theta);

  OracleState state;
  state.market = &market;
  state.theta = &theta;
  state.eps = &eps;
  state.n = n;
  state.best.assign(1 << n, 0.0);
  state.known.assign(1 << n, false);
  state.choice_block.assign(1 << n, 0);
  state.choice_buyer.assign(1 << n, -1);

  OracleResult result;
  result.welfare = state.solve((Mask(1) << n) - 1);

  Mask remaining = (Mask(1) << n) - 1;
  while (remaining != 0) {
    Mask block = state.choice_block[remaining];
    int buyer = state.choice_buyer[remaining];
    if (buyer < 0) {
      result.outcome.unmatched.push_back(__builtin_ctz(remaining));
    } else {
      Mask targets = block & ~(Mask(1) << buyer);
      result.outcome.groups.push_back(make_group(market, buyer, targets));
    }
    remaining &= ~block;
  }
  sort_outcome(result.outcome);
  return result;
}

}  // namespace coalmatch
