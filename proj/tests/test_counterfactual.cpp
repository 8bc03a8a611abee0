#include <doctest.h>

#include <cmath>
#include <set>

#include "coalmatch/counterfactual.hpp"
#include "coalmatch/montecarlo.hpp"

using namespace coalmatch;

namespace {

FirmRecord firm(int id, std::vector<double> tons) {
  FirmRecord f;
  f.id = id;
  f.name = "f" + std::to_string(id);
  f.tonnage = Eigen::Map<Eigen::VectorXd>(tons.data(), tons.size());
  return f;
}

// Twelve firms in the empirical size range, two carrier types.
Market main_firm_market(std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<FirmRecord> firms;
  for (int i = 0; i < 12; ++i)
    firms.push_back(firm(i, {rng.uniform(0.05, 0.9), rng.uniform(0.05, 0.9)}));
  CovariateMenu menu{{CovariateKind::SizeByType, 0}, {CovariateKind::ShareByType, 0}};
  return Market(std::move(firms), std::move(menu), {SubsidyKind::ToBuyer, 1.0, 1.0});
}

MatchingOutcome outcome_of(std::vector<Group> groups, std::vector<int> unmatched) {
  MatchingOutcome m;
  m.groups = std::move(groups);
  m.unmatched = std::move(unmatched);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("counterfactual");

TEST_CASE("expenditure counts qualified groups only") {
  MatchingOutcome six;
  for (int g = 0; g < 6; ++g) six.groups.push_back({2 * g, {2 * g, 2 * g + 1}, true});
  CHECK(expenditure(six, 1.0) == doctest::Approx(6.0));

  MatchingOutcome four;
  for (int g = 0; g < 4; ++g) four.groups.push_back({2 * g, {2 * g, 2 * g + 1}, true});
  CHECK(expenditure(four, 0.5) == doctest::Approx(2.0));

  MatchingOutcome none;
  none.groups.push_back({0, {0, 1}, false});
  none.unmatched = {2, 3};
  CHECK(expenditure(none, 1.0) == 0.0);
}

TEST_CASE("expenditure is degree-1 homogeneous in the amount") {
  MatchingOutcome m;
  m.groups.push_back({0, {0, 1}, true});
  m.groups.push_back({2, {2, 3}, false});
  for (double amount : {0.0, 0.3, 1.0, 2.5})
    CHECK(expenditure(m, 4.0 * amount) == doctest::Approx(4.0 * expenditure(m, amount)));
}

TEST_CASE("modal configuration: unanimity and majority") {
  MatchingOutcome a = outcome_of({{0, {0, 1}, true}}, {2});
  MatchingOutcome b = outcome_of({}, {0, 1, 2});
  CHECK(outcome_key(modal_configuration({a, a, a})) == outcome_key(a));
  CHECK(outcome_key(modal_configuration({a, b, a, b, a})) == outcome_key(a));
}

TEST_CASE("modal configuration breaks ties lexicographically") {
  MatchingOutcome a = outcome_of({{0, {0, 1}, true}}, {2});
  MatchingOutcome b = outcome_of({}, {0, 1, 2});
  MatchingOutcome winner = modal_configuration({a, b});
  CHECK(outcome_key(winner) == std::min(outcome_key(a), outcome_key(b)));
}

TEST_CASE("zero subsidy with dominant merger costs keeps every firm unmatched") {
  Market market = main_firm_market(3);
  PolicyGrid grid;
  grid.amounts = {0.0};
  grid.thresholds = {1.0};
  grid.draws = 8;
  grid.noise = {NoiseDist::Normal, 0.05, 0};  // small noise against gamma = 15
  grid.theta = DgpConfig::base_theta(15.0);
  grid.theta.delta = 400.0;
  SweepResult sweep = policy_sweep(market, grid);
  REQUIRE(sweep.cells.size() == 1);
  const CellResult& cell = sweep.cells[0];
  REQUIRE_FALSE(cell.failed);
  CHECK(cell.median_groups == 0.0);
  CHECK(cell.median_unmatched == 12.0);
  CHECK(cell.median_expenditure == 0.0);
  CHECK(cell.modal.groups.empty());
}

TEST_CASE("unattainable threshold behaves like zero subsidy") {
  Market market = main_firm_market(4);
  double total = 0.0;
  for (int i = 0; i < market.size(); ++i) total += market.firm(i).total_tonnage();
  PolicyGrid grid;
  grid.amounts = {0.0, 1.0};
  grid.thresholds = {total + 1.0};  // nobody can qualify
  grid.draws = 6;
  grid.theta = DgpConfig::base_theta(2.0);
  grid.theta.delta = 50.0;
  grid.seed = 9;
  SweepResult sweep = policy_sweep(market, grid);
  REQUIRE(sweep.cells.size() == 2);
  REQUIRE_FALSE(sweep.cells[0].failed);
  REQUIRE_FALSE(sweep.cells[1].failed);
  // shared shocks across cells: identical outcomes cell to cell
  CHECK(outcome_key(sweep.cells[0].modal) == outcome_key(sweep.cells[1].modal));
  CHECK(sweep.cells[0].median_groups == sweep.cells[1].median_groups);
  CHECK(sweep.cells[1].median_expenditure == 0.0);
}

TEST_CASE("expenditure identity holds cell by cell against a recount") {
  Market market = main_firm_market(5);
  PolicyGrid grid;
  grid.amounts = {0.0, 0.5, 1.0};
  grid.thresholds = {0.5, 1.0};
  grid.draws = 5;
  grid.theta = DgpConfig::base_theta(1.0);
  grid.theta.delta = 5.0;
  grid.seed = 31;
  SweepResult sweep = policy_sweep(market, grid);
  for (const CellResult& cell : sweep.cells) {
    REQUIRE_FALSE(cell.failed);
    // modal outcome: recount qualified groups independently
    int qualified = 0;
    for (const Group& g : cell.modal.groups) {
      double tonnage = 0.0;
      for (int m : g.members) tonnage += market.firm(m).total_tonnage();
      if (tonnage > cell.threshold) ++qualified;
    }
    CHECK(expenditure(cell.modal, cell.amount) == doctest::Approx(cell.amount * qualified));
  }
}

TEST_CASE("sweep cells hold valid partitions") {
  Market market = main_firm_market(6);
  PolicyGrid grid;
  grid.amounts = {0.5, 1.0};
  grid.thresholds = {1.0};
  grid.draws = 6;
  grid.theta = DgpConfig::base_theta(1.0);
  grid.theta.delta = 10.0;
  SweepResult sweep = policy_sweep(market, grid);
  for (const CellResult& cell : sweep.cells) {
    REQUIRE_FALSE(cell.failed);
    std::vector<int> covered = cell.modal.unmatched;
    for (const Group& g : cell.modal.groups)
      covered.insert(covered.end(), g.members.begin(), g.members.end());
    std::sort(covered.begin(), covered.end());
    std::vector<int> expected(market.size());
    for (int i = 0; i < market.size(); ++i) expected[i] = i;
    CHECK(covered == expected);
  }
}

TEST_CASE("shocks small against the index terms make the mode near-unanimous") {
  // large-firm sizes: interaction terms are hundreds while shocks are N(0,5)
  std::vector<FirmRecord> firms;
  for (int i = 0; i < 10; ++i) {
    FirmRecord f;
    f.id = i;
    f.tonnage = Eigen::VectorXd(2);
    f.tonnage << 10.0 + 5.0 * i, 8.0 + 3.0 * i;
    firms.push_back(f);
  }
  CovariateMenu menu{{CovariateKind::SizeByType, 0}, {CovariateKind::ShareByType, 0}};
  Market market(std::move(firms), menu, {SubsidyKind::ToBuyer, 1.0, 1.0});
  PolicyGrid grid;
  grid.amounts = {1.0};
  grid.thresholds = {1.0};
  grid.draws = 20;
  grid.noise = {NoiseDist::Normal, std::sqrt(5.0), 0};
  grid.theta = DgpConfig::base_theta(2.0);
  grid.seed = 17;
  SweepResult sweep = policy_sweep(market, grid);
  REQUIRE_FALSE(sweep.cells[0].failed);
  CHECK(sweep.cells[0].modal_draws >= 19);
}

TEST_CASE("policy sweep is reproducible across thread counts") {
  Market market = main_firm_market(11);
  PolicyGrid grid;
  grid.amounts = {0.5, 1.0};
  grid.thresholds = {1.0, 2.0};
  grid.draws = 5;
  grid.theta = DgpConfig::base_theta(1.0);
  grid.theta.delta = 10.0;
  grid.seed = 3;
  grid.threads = 1;
  SweepResult a = policy_sweep(market, grid);
  grid.threads = 4;
  SweepResult b = policy_sweep(market, grid);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(a.cells[k].median_groups == b.cells[k].median_groups);
    CHECK(a.cells[k].median_expenditure == b.cells[k].median_expenditure);
    CHECK(outcome_key(a.cells[k].modal) == outcome_key(b.cells[k].modal));
  }
}

TEST_CASE("flow export: integer baseline cell maps firms to their own groups") {
  Market market = main_firm_market(7);
  PolicyGrid grid;
  grid.amounts = {0.0};
  grid.thresholds = {1.0};
  grid.draws = 3;
  grid.noise = {NoiseDist::Normal, 0.05, 0};
  grid.theta = DgpConfig::base_theta(15.0);
  SweepResult sweep = policy_sweep(market, grid);
  REQUIRE_FALSE(sweep.cells[0].failed);

  // baseline: everyone unmatched; the M=0 cell is all-unmatched too
  MatchingOutcome before;
  for (int i = 0; i < market.size(); ++i) before.unmatched.push_back(i);
  auto rows = export_configuration_flows(market, before, sweep);
  REQUIRE(rows.size() == static_cast<std::size_t>(market.size()));
  for (const FlowRow& row : rows) {
    CHECK(row.source == row.target);
    CHECK(row.weight == doctest::Approx(1.0));
  }
}

TEST_CASE("flow export splits fractional mass") {
  Market market = main_firm_market(8);
  SweepResult sweep;
  CellResult cell;
  cell.amount = 1.0;
  cell.threshold = 1.0;
  const int n = market.size();
  cell.modal_allocation.weights = Eigen::MatrixXd::Zero(n, 1 << n);
  // firm 0 splits between staying out and buying firm 1
  cell.modal_allocation.weights(0, 0) = 0.5;
  cell.modal_allocation.weights(0, 0b10) = 0.5;
  cell.modal_allocation.weights(1, 0b10) = 0.5;  // sold half
  cell.modal_allocation.weights(1, 0) = 0.5;
  for (int i = 2; i < n; ++i) cell.modal_allocation.weights(i, 0) = 1.0;
  sweep.cells.push_back(cell);

  MatchingOutcome before;
  for (int i = 0; i < n; ++i) before.unmatched.push_back(i);
  auto rows = export_configuration_flows(market, before, sweep);

  int firm0_rows = 0, firm1_rows = 0;
  for (const FlowRow& row : rows) {
    if (row.firm == 0) {
      ++firm0_rows;
      CHECK(row.weight == doctest::Approx(0.5));
    }
    if (row.firm == 1) {
      ++firm1_rows;
      CHECK(row.weight == doctest::Approx(0.5));
    }
  }
  CHECK(firm0_rows == 2);  // unmatched half + buyer half
  CHECK(firm1_rows == 2);  // unmatched half + sold-to-group half
}

TEST_SUITE_END();
