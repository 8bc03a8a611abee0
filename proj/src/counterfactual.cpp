#include "coalmatch/counterfactual.hpp"

#include <algorithm>
#include <map>

#include "coalmatch/errors.hpp"
#include "coalmatch/montecarlo.hpp"
#include "coalmatch/parallel.hpp"

namespace coalmatch {

double expenditure(const MatchingOutcome& outcome, double amount) {
  return amount * classify_outcome(outcome).n_qualified;
}

MatchingOutcome modal_configuration(const std::vector<MatchingOutcome>& outcomes) {
  if (outcomes.empty()) throw empty_data("modal configuration needs at least one outcome");
  std::map<std::string, std::pair<int, std::size_t>> tally;  // key -> (count, first index)
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto [it, inserted] = tally.try_emplace(outcome_key(outcomes[i]), 0, i);
    ++it->second.first;
  }
  auto best = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it)
    if (it->second.first > best->second.first) best = it;
  // std::map iterates keys in lexicographic order, so the first maximum is
  // the smallest canonical form.
  return outcomes[best->second.second];
}

std::string group_label(const std::vector<int>& members) {
  if (members.size() == 1) return "U" + std::to_string(members[0]);
  std::string label = "g";
  for (std::size_t k = 0; k < members.size(); ++k)
    label += (k ? "+" : "") + std::to_string(members[k]);
  return label;
}

SweepResult policy_sweep(const Market& market, const PolicyGrid& grid) {
  market.check_theta(grid.theta);
  if (grid.amounts.empty() || grid.thresholds.empty())
    throw config_error("policy grid must have amounts and thresholds");
  if (grid.draws < 1) throw config_error("policy grid needs at least one draw");

  LpAssembler assembler(market);
  const int n = market.size();

  // Common random numbers: draw d's shocks are shared by every cell.
  std::vector<Eigen::MatrixXd> eps(grid.draws);
  for (int d = 0; d < grid.draws; ++d) {
    NoiseSpec spec = grid.noise;
    spec.seed = Rng::substream(grid.noise.seed ^ grid.seed, d).key();
    eps[d] = draw_noise(spec, n);
  }

  const std::size_t n_cells = grid.amounts.size() * grid.thresholds.size();
  SweepResult sweep;
  sweep.cells.resize(n_cells);

  parallel_for(n_cells, grid.threads, [&](std::size_t cell_idx) {
    CellResult& cell = sweep.cells[cell_idx];
    cell.amount = grid.amounts[cell_idx / grid.thresholds.size()];
    cell.threshold = grid.thresholds[cell_idx % grid.thresholds.size()];

    SubsidySpec cell_spec{market.subsidy().kind, cell.amount, cell.threshold};
    Market cell_market = market;
    cell_market.set_subsidy(cell_spec);

    std::vector<MatchingOutcome> outcomes;
    std::vector<Allocation> allocations;
    std::vector<double> groups, unmatched, outlay;
    try {
      for (int d = 0; d < grid.draws; ++d) {
        LinearProgram lp = assembler.assemble(grid.theta, cell_spec, eps[d]);
        Allocation alloc = solve_equilibrium(lp);
        Rng round_rng = Rng::substream(grid.seed ^ 0x10c4, cell_idx * 1024 + d);
        MatchingOutcome outcome = integerize(cell_market, alloc, round_rng);
        if (alloc.is_integer) ++cell.n_integer_draws;
        groups.push_back(classify_outcome(outcome).n_groups);
        unmatched.push_back(classify_outcome(outcome).n_unmatched);
        outlay.push_back(expenditure(outcome, cell.amount));
        outcomes.push_back(std::move(outcome));
        allocations.push_back(std::move(alloc));
      }
    } catch (const Error& e) {
      cell.failed = true;
      cell.failure = e.what();
      return;
    }

    cell.median_groups = lower_median(groups);
    cell.median_unmatched = lower_median(unmatched);
    cell.median_expenditure = lower_median(outlay);
    cell.modal = modal_configuration(outcomes);
    std::string modal_key = outcome_key(cell.modal);
    bool kept = false;
    for (std::size_t d = 0; d < outcomes.size(); ++d) {
      if (outcome_key(outcomes[d]) != modal_key) continue;
      ++cell.modal_draws;
      if (!kept) {
        cell.modal_allocation = allocations[d];
        kept = true;
      }
    }
  });
  return sweep;
}

namespace {

std::string firm_source_label(const MatchingOutcome& before, int firm) {
  for (const Group& g : before.groups)
    if (std::find(g.members.begin(), g.members.end(), firm) != g.members.end())
      return group_label(g.members);
  return group_label({firm});
}

}  // namespace

std::vector<FlowRow> export_configuration_flows(const Market& market,
                                                const MatchingOutcome& before,
                                                const SweepResult& sweep) {
  constexpr double kMassTol = 1e-9;
  const int n = market.size();
  BundleCatalog catalog = BundleCatalog::make(n);
  std::vector<FlowRow> rows;

  for (const CellResult& cell : sweep.cells) {
    if (cell.failed) continue;
    const Eigen::MatrixXd& weights = cell.modal_allocation.weights;
    for (int i = 0; i < n; ++i) {
      std::string source = firm_source_label(before, i);
      for (Mask m = 0; m < static_cast<Mask>(weights.cols()); ++m) {
        double mass = weights(i, m);
        if (mass <= kMassTol) continue;
        switch (catalog.classify(i, m)) {
          case BundleClass::Null:
            rows.push_back({cell.amount, cell.threshold, i, source, group_label({i}), mass});
            break;
          case BundleClass::Buyer: {
            std::vector<int> members = catalog.to_coalition(m | catalog.seller_bundle(i)).members();
            rows.push_back({cell.amount, cell.threshold, i, source, group_label(members), mass});
            break;
          }
          case BundleClass::SellerSelf: {
            // Sold mass goes where it is demanded, pro rata; the feasibility
            // equality makes the demand masses sum to this seller mass.
            for (int buyer = 0; buyer < n; ++buyer) {
              if (buyer == i) continue;
              for (Mask bm = 0; bm < static_cast<Mask>(weights.cols()); ++bm) {
                if (!(bm >> i & 1u)) continue;
                if (catalog.classify(buyer, bm) != BundleClass::Buyer) continue;
                double demand = weights(buyer, bm);
                if (demand <= kMassTol) continue;
                std::vector<int> members =
                    catalog.to_coalition(bm | catalog.seller_bundle(buyer)).members();
                rows.push_back(
                    {cell.amount, cell.threshold, i, source, group_label(members), demand});
              }
            }
            break;
          }
          case BundleClass::Unreal:
            break;
        }
      }
    }
  }
  return rows;
}

}  // namespace coalmatch
