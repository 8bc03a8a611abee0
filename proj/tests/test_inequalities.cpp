#include <doctest.h>

#include <cmath>
#include <vector>

#include "coalmatch/inequalities.hpp"
#include "coalmatch/montecarlo.hpp"
#include "coalmatch/rng.hpp"

using namespace coalmatch;

namespace {

FirmRecord firm(int id, std::vector<double> tons, std::optional<FirmRole> role = {}) {
  FirmRecord f;
  f.id = id;
  f.name = "f" + std::to_string(id);
  f.role = role;
  f.tonnage = Eigen::Map<Eigen::VectorXd>(tons.data(), tons.size());
  return f;
}

Market synthetic_market(std::vector<FirmRecord> firms, SubsidySpec subsidy = {},
                        bool buyer_in_aggregate = true) {
  CovariateMenu menu{{CovariateKind::SizeByType, 0}, {CovariateKind::ShareByType, 0}};
  return Market(std::move(firms), std::move(menu), subsidy, {}, buyer_in_aggregate);
}

MatchingOutcome matching(std::vector<Group> groups, std::vector<int> unmatched) {
  MatchingOutcome m;
  m.groups = std::move(groups);
  m.unmatched = std::move(unmatched);
  return m;
}

// Eight firms, two unmatched, three one-to-one matches: buyers 0, 2, 4 with
// targets 1, 3, 5.
MatchingOutcome three_pairs_two_unmatched() {
  return matching({{0, {0, 1}, false}, {2, {2, 3}, false}, {4, {4, 5}, false}}, {6, 7});
}

std::vector<FirmRecord> eight_firms(Rng rng) {
  std::vector<FirmRecord> firms;
  for (int i = 0; i < 8; ++i)
    firms.push_back(firm(i, {rng.uniform(0.05, 0.6), rng.uniform(0.05, 0.6)}));
  return firms;
}

Theta base_theta(double gamma = 1.0) { return DgpConfig::base_theta(gamma); }

}  // namespace

TEST_SUITE_BEGIN("inequalities");

TEST_CASE("two one-to-one matches emit one swap inequality with the documented z") {
  // Pair of buyers with disjoint 1-1 coalitions; with the buyer excluded from
  // the aggregate the z-vector is the textbook form
  //   [x_a o x_h + x_b o x_k - x_a o x_k - x_b o x_h | ds | -dcost].
  std::vector<FirmRecord> firms{firm(0, {0.5, 0.1}), firm(1, {0.3, 0.2}),
                                firm(2, {0.4, 0.4}), firm(3, {0.2, 0.6})};
  Market market = synthetic_market(firms, {SubsidyKind::ToBuyer, 1.0, 1.0},
                                   /*buyer_in_aggregate=*/false);
  MatchingOutcome m = matching({{0, {0, 1}, false}, {2, {2, 3}, false}}, {});
  InequalitySet set = build_inequalities(market, m);
  // buyer-buyer pair gives 1x1 swap, plus each buyer against the other's target
  CHECK(set.family_counts[static_cast<int>(IneqFamily::TwoCoalitions)] == 1);

  const Inequality* swap = nullptr;
  for (const Inequality& ineq : set.items)
    if (ineq.family == IneqFamily::TwoCoalitions) swap = &ineq;
  REQUIRE(swap != nullptr);
  CHECK(swap->firm_a == 0);
  CHECK(swap->firm_b == 2);
  CHECK(swap->swap_out == 1);
  CHECK(swap->swap_in == 3);

  auto interact = [&](int i, int j, int comp) {
    const Covariates& a = market.covariates(i);
    const Covariates& b = market.covariates(j);
    return comp == 0 ? a.size_by_type(0) * b.size_by_type(0)
                     : a.share_by_type(0) * b.share_by_type(0);
  };
  for (int comp = 0; comp < 2; ++comp) {
    double expect = interact(0, 1, comp) + interact(2, 3, comp) - interact(0, 3, comp) -
                    interact(2, 1, comp);
    CHECK(swap->z(comp) == doctest::Approx(expect).epsilon(1e-12));
  }
  // same target counts on both sides: the gamma component cancels
  CHECK(swap->z(3) == doctest::Approx(0.0));
}

TEST_CASE("two unmatched firms emit a single merge-deviation inequality") {
  std::vector<FirmRecord> firms{firm(0, {0.7, 0.2}), firm(1, {0.6, 0.3})};
  Market market = synthetic_market(firms, {SubsidyKind::ToBuyer, 1.0, 1.0});
  InequalitySet set = build_inequalities(market, matching({}, {0, 1}));
  REQUIRE(set.size() == 1);
  const Inequality& ineq = set.items[0];
  CHECK(ineq.family == IneqFamily::IrUnmatched);
  // unmatched(a) + unmatched(b) >= merged(a, b): one acquired firm on the
  // right makes the gamma component +1, and the pair qualifies (1.8 > 1) so
  // the delta component is -1.
  CHECK(ineq.z(3) == doctest::Approx(1.0));
  CHECK(ineq.z(2) == doctest::Approx(-1.0));
  Theta theta = base_theta();
  double lhs = market.unmatched_stack(0).value(theta) + market.unmatched_stack(1).value(theta);
  double rhs = market.buyer_stack(0, std::vector<int>{1}).value(theta);
  CHECK(ineq.z.dot(theta.stacked()) == doctest::Approx(lhs - rhs).epsilon(1e-12));
}

TEST_CASE("seller-seller pairs contribute nothing") {
  std::vector<FirmRecord> firms{firm(0, {0.5, 0.1}), firm(1, {0.3, 0.2}),
                                firm(2, {0.4, 0.4})};
  Market market = synthetic_market(firms);
  // one buyer with two targets: pairs (1,2) seller-seller -> nothing; the
  // buyer-seller pairs drive the count
  InequalitySet set = build_inequalities(market, matching({{0, {0, 1, 2}, false}}, {}));
  // pairs: (0,1) buyer-seller -> 2, (0,2) buyer-seller -> 2, (1,2) -> 0
  CHECK(set.size() == 4);
  CHECK(set.family_counts[static_cast<int>(IneqFamily::OneCoalitionDrop)] == 4);
}

TEST_CASE("counts follow the nine-case table on the benchmark shapes") {
  Rng rng(404);
  Market market = synthetic_market(eight_firms(rng));

  // two unmatched + three one-to-one matchings
  InequalitySet a = build_inequalities(market, three_pairs_two_unmatched());
  CHECK(a.size() == 19);  // 3 swaps x 1 + 9 drops + 6 insertions + 1 merge

  // four unmatched + two one-to-one matchings
  InequalitySet b = build_inequalities(
      market, matching({{0, {0, 1}, false}, {2, {2, 3}, false}}, {4, 5, 6, 7}));
  CHECK(b.size() == 19);  // 1 swap + 4 drops + 8 insertions + 6 merges

  // three unmatched, a one-to-two and a one-to-one matching
  InequalitySet c = build_inequalities(
      market, matching({{0, {0, 1, 2}, false}, {3, {3, 4}, false}}, {5, 6, 7}));
  CHECK(c.size() == 23);  // 2 swaps + 9 drops + 9 insertions + 3 merges
}

TEST_CASE("coalition-swap rule: every benchmark shape counts 19") {
  Rng rng(412);
  Market market = synthetic_market(eight_firms(rng));
  IneqOptions coalition;
  coalition.rule = DeviationRule::CoalitionSwaps;

  // the shape that tells the two rules apart: one-to-two plus one-to-one
  MatchingOutcome mixed =
      matching({{0, {0, 1, 2}, false}, {3, {3, 4}, false}}, {5, 6, 7});
  CHECK(build_inequalities(market, mixed, coalition).size() == 19);
  CHECK(build_inequalities(market, mixed, {}).size() == 23);

  CHECK(build_inequalities(market, three_pairs_two_unmatched(), coalition).size() == 19);
  CHECK(build_inequalities(
            market, matching({{0, {0, 1}, false}, {2, {2, 3}, false}}, {4, 5, 6, 7}),
            coalition)
            .size() == 19);
}

TEST_CASE("coalition-swap rule prices whole-coalition exchanges without side payments") {
  std::vector<FirmRecord> firms{firm(0, {0.5, 0.1}), firm(1, {0.3, 0.2}),
                                firm(2, {0.4, 0.4}), firm(3, {0.2, 0.6}),
                                firm(4, {0.15, 0.3})};
  Market market = synthetic_market(firms, {SubsidyKind::ToBuyer, 1.0, 1.0});
  IneqOptions coalition;
  coalition.rule = DeviationRule::CoalitionSwaps;
  MatchingOutcome m = matching({{0, {0, 1, 4}, false}, {2, {2, 3}, false}}, {});
  InequalitySet set = build_inequalities(market, m, coalition);
  // one whole swap for the buyer pair
  CHECK(set.family_counts[static_cast<int>(IneqFamily::TwoCoalitions)] == 1);

  auto interact = [&](int i, std::vector<int> members, int comp) {
    std::vector<Covariates> covs;
    for (int j : members) covs.push_back(market.covariates(j));
    Covariates agg = coalition_covariates(covs);
    const Covariates& own = market.covariates(i);
    return comp == 0 ? own.size_by_type(0) * agg.size_by_type(0)
                     : own.share_by_type(0) * agg.share_by_type(0);
  };
  for (const Inequality& ineq : set.items) {
    if (ineq.family != IneqFamily::TwoCoalitions) continue;
    // interactions over target sets only, full-coalition exchange
    for (int comp = 0; comp < 2; ++comp) {
      double expect = interact(0, {1, 4}, comp) + interact(2, {3}, comp) -
                      interact(0, {3}, comp) - interact(2, {1, 4}, comp);
      CHECK(ineq.z(comp) == doctest::Approx(expect).epsilon(1e-12));
    }
    // swapping a 2-target coalition against a 1-target one moves one
    // acquisition from buyer 0 to buyer 2: the cost components cancel in sum
    CHECK(ineq.z(3) == doctest::Approx(0.0));
  }
  // drops carry no displaced-firm payoff: z is the coalition-index difference
  for (const Inequality& ineq : set.items) {
    if (ineq.family != IneqFamily::OneCoalitionDrop || ineq.firm_a != 0) continue;
    if (ineq.swap_out != 4) continue;
    for (int comp = 0; comp < 2; ++comp)
      CHECK(ineq.z(comp) ==
            doctest::Approx(interact(0, {1, 4}, comp) - interact(0, {1}, comp))
                .epsilon(1e-12));
    CHECK(ineq.z(3) == doctest::Approx(-1.0));  // one fewer acquisition
  }
}

TEST_CASE("pure-insertion variant shrinks the unmatched-target family") {
  Rng rng(405);
  Market market = synthetic_market(eight_firms(rng));
  MatchingOutcome m = three_pairs_two_unmatched();
  IneqOptions with_removal;
  IneqOptions pure;
  pure.insertion_with_removal = false;
  InequalitySet a = build_inequalities(market, m, with_removal);
  InequalitySet b = build_inequalities(market, m, pure);
  CHECK(a.family_counts[static_cast<int>(IneqFamily::UnmatchedTarget)] == 6);
  CHECK(b.family_counts[static_cast<int>(IneqFamily::UnmatchedTarget)] == 6);
  // with 1-1 groups the two variants coincide in count; a 1-2 group differs
  MatchingOutcome wide = matching({{0, {0, 1, 2}, false}}, {3, 4, 5, 6, 7});
  InequalitySet wa = build_inequalities(market, wide, with_removal);
  InequalitySet wb = build_inequalities(market, wide, pure);
  CHECK(wa.family_counts[static_cast<int>(IneqFamily::UnmatchedTarget)] == 10);
  CHECK(wb.family_counts[static_cast<int>(IneqFamily::UnmatchedTarget)] == 5);
}

TEST_CASE("chi pair: delta components differ by the subsidy term") {
  // qualified shared-subsidy pair: s = 1/2
  std::vector<FirmRecord> firms{firm(0, {0.7, 0.2}), firm(1, {0.6, 0.3})};
  Market market = synthetic_market(firms, {SubsidyKind::Shared, 1.0, 1.0});
  auto [upper, lower] = chi_ir_subsidy(market, 0, std::vector<int>{1});
  CHECK(upper.z(2) == doctest::Approx(0.5));
  CHECK(lower.z(2) == doctest::Approx(0.0));

  // unqualified group: both sides are delta-free
  Market small = synthetic_market({firm(0, {0.2, 0.1}), firm(1, {0.1, 0.1})},
                                  {SubsidyKind::Shared, 1.0, 1.0});
  auto [u2, l2] = chi_ir_subsidy(small, 0, std::vector<int>{1});
  CHECK(u2.z(2) == 0.0);
  CHECK(l2.z(2) == 0.0);
}

TEST_CASE("ir-subsidy family appears only when enabled") {
  Rng rng(406);
  Market market = synthetic_market(eight_firms(rng), {SubsidyKind::ToBuyer, 1.0, 1.0});
  MatchingOutcome m = three_pairs_two_unmatched();
  InequalitySet off = build_inequalities(market, m, {});
  CHECK(off.family_counts[static_cast<int>(IneqFamily::IrSubsidy)] == 0);
  IneqOptions opts;
  opts.enable_ir_subsidy = true;
  InequalitySet on = build_inequalities(market, m, opts);
  CHECK(on.family_counts[static_cast<int>(IneqFamily::IrSubsidy)] > 0);
  CHECK(on.size() > off.size());
}

TEST_CASE("score: zero theta satisfies everything weakly") {
  Rng rng(407);
  Market market = synthetic_market(eight_firms(rng));
  InequalitySet set = build_inequalities(market, three_pairs_two_unmatched());
  Theta zero;
  zero.beta0 = 0.0;
  zero.beta = Eigen::VectorXd::Zero(1);
  ScoreResult s = score(zero, set);
  CHECK(s.count == set.size());
  CHECK(s.fraction == doctest::Approx(1.0));
  CHECK(s.normalized == doctest::Approx(2.0 / (8 * 7) * set.size()));
}

TEST_CASE("score: single inequality against theta") {
  InequalitySet set;
  set.n_firms = 2;
  Inequality ineq;
  ineq.z = Eigen::VectorXd::Zero(4);
  ineq.z(0) = 1.0;
  set.items.push_back(ineq);
  Theta theta;
  theta.beta0 = -1.0;
  theta.beta = Eigen::VectorXd::Zero(1);
  CHECK(score(theta, set).count == 0);
  theta.beta0 = 1.0;
  CHECK(score(theta, set).count == 1);
}

TEST_CASE("score is invariant under positive scaling of theta") {
  Rng rng(408);
  Market market = synthetic_market(eight_firms(rng), {SubsidyKind::ToBuyer, 1.0, 1.0});
  InequalitySet set = build_inequalities(market, three_pairs_two_unmatched());
  for (int trial = 0; trial < 100; ++trial) {
    Theta theta = base_theta();
    theta.beta(0) = rng.uniform(-10, 10);
    theta.delta = rng.uniform(-10, 10);
    theta.gamma = rng.uniform(-10, 10);
    double c = rng.uniform(1e-3, 50.0);
    Theta scaled = theta;
    scaled.beta0 *= c;
    scaled.beta *= c;
    scaled.delta *= c;
    scaled.gamma *= c;
    CHECK(score(theta, set).count == score(scaled, set).count);
  }
}

TEST_CASE("z is exactly linear in theta") {
  Rng rng(409);
  Market market = synthetic_market(eight_firms(rng), {SubsidyKind::Shared, 1.0, 1.0});
  InequalitySet set = build_inequalities(market, three_pairs_two_unmatched());
  for (int trial = 0; trial < 50; ++trial) {
    Theta t1 = base_theta(), t2 = base_theta();
    t1.beta(0) = rng.uniform(-5, 5);
    t1.delta = rng.uniform(-5, 5);
    t1.gamma = rng.uniform(-5, 5);
    t2.beta(0) = rng.uniform(-5, 5);
    t2.delta = rng.uniform(-5, 5);
    t2.gamma = rng.uniform(-5, 5);
    for (const Inequality& ineq : set.items) {
      double sum = ineq.z.dot(t1.stacked()) + ineq.z.dot(t2.stacked());
      double joint = ineq.z.dot((t1.stacked() + t2.stacked()).eval());
      CHECK(sum == doctest::Approx(joint).epsilon(1e-13));
    }
  }
}

TEST_CASE("noiseless equilibrium satisfies every inequality at the true theta") {
  DgpConfig cfg;
  cfg.seed = 5005;
  for (std::uint64_t sim = 0; sim < 10; ++sim) {
    // solve with eps = 0: the matching is the planner optimum at theta0
    Rng draw = Rng::substream(cfg.seed, sim);
    std::vector<FirmRecord> firms;
    for (int i = 0; i < 6; ++i)
      firms.push_back(firm(i, {draw.lognormal(2.0, 1.0) / 100.0,
                               draw.lognormal(2.0, 1.0) / 100.0}));
    Market market = synthetic_market(firms, {SubsidyKind::ToBuyer, 1.0, 1.0});
    Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(6, 1 << 6);
    Allocation alloc = solve_equilibrium(assemble_lp(market, cfg.theta0, eps));
    if (!alloc.is_integer) continue;
    MatchingOutcome outcome = extract_outcome(market, alloc);
    InequalitySet set = build_inequalities(market, outcome);
    if (set.empty()) continue;
    CHECK(score(cfg.theta0, set).fraction == doctest::Approx(1.0));
  }
}

TEST_CASE("inequality count depends only on the role pattern") {
  Rng rng(410);
  Market m1 = synthetic_market(eight_firms(rng));
  Market m2 = synthetic_market(eight_firms(rng));  // different covariates
  MatchingOutcome shape = three_pairs_two_unmatched();
  CHECK(build_inequalities(m1, shape).size() == build_inequalities(m2, shape).size());
}

TEST_CASE("adding an unmatched firm never removes inequalities") {
  Rng rng(411);
  std::vector<FirmRecord> firms = eight_firms(rng);
  Market big = synthetic_market(firms);
  MatchingOutcome with_seven = matching({{0, {0, 1}, false}, {2, {2, 3}, false}}, {4, 5, 6});
  MatchingOutcome with_eight = matching({{0, {0, 1}, false}, {2, {2, 3}, false}}, {4, 5, 6, 7});
  CHECK(build_inequalities(big, with_eight).size() >=
        build_inequalities(big, with_seven).size());
}

TEST_CASE("buyer restriction never increases the count") {
  // mains: 0 and 2; firm 4 is a non-main buyer, 6/7 unmatched non-mains
  std::vector<FirmRecord> firms{
      firm(0, {0.5, 0.1}, FirmRole::MainBuyer),     firm(1, {0.3, 0.2}, FirmRole::SellerAffiliate),
      firm(2, {0.4, 0.4}, FirmRole::MainBuyer),     firm(3, {0.2, 0.6}, FirmRole::SellerAffiliate),
      firm(4, {0.3, 0.3}, FirmRole::SellerAffiliate), firm(5, {0.2, 0.2}, FirmRole::SellerAffiliate),
      firm(6, {0.1, 0.4}, FirmRole::Unmatched),     firm(7, {0.2, 0.1}, FirmRole::Unmatched)};
  Market market = synthetic_market(firms);
  MatchingOutcome m =
      matching({{0, {0, 1}, false}, {2, {2, 3}, false}, {4, {4, 5}, false}}, {6, 7});
  IneqOptions restricted;
  restricted.buyer_restriction = true;
  InequalitySet off = build_inequalities(market, m, {});
  InequalitySet on = build_inequalities(market, m, restricted);
  CHECK(on.size() < off.size());
  CHECK(off.size() == 19);
  // firm 4's group and the unmatched-unmatched merge (no main involved) drop out
  for (const Inequality& ineq : on.items) CHECK(ineq.family != IneqFamily::IrUnmatched);
}

TEST_CASE("no buyers and no unmatched firms yields an empty set") {
  std::vector<FirmRecord> firms{firm(0, {0.5, 0.1}, FirmRole::SellerAffiliate),
                                firm(1, {0.3, 0.2}, FirmRole::SellerAffiliate)};
  Market market = synthetic_market(firms);
  MatchingOutcome m = matching({{0, {0, 1}, false}}, {});
  IneqOptions restricted;
  restricted.buyer_restriction = true;  // buyer 0 is not a main firm
  InequalitySet set = build_inequalities(market, m, restricted);
  CHECK(set.empty());
}

TEST_SUITE_END();
