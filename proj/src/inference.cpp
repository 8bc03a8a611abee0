#include "coalmatch/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coalmatch/errors.hpp"
#include "coalmatch/inequalities.hpp"
#include "coalmatch/parallel.hpp"

namespace coalmatch {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw empty_data("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  double rank = q / 100.0 * (values.size() - 1);
  std::size_t below = static_cast<std::size_t>(std::floor(rank));
  std::size_t above = std::min(below + 1, values.size() - 1);
  double frac = rank - below;
  return values[below] * (1.0 - frac) + values[above] * frac;
}

namespace {

struct Replicate {
  Market market;
  MatchingOutcome matching;
};

// Resampled firms keep their original roles and group identities; groups led
// by a retained buyer survive with every resampled copy of their members,
// members of an orphaned group (its buyer not drawn) fall back to unmatched.
// Extra copies of a buyer join its group as sellers.
Replicate make_replicate(const Market& market, const MatchingOutcome& matching,
                         const ResampleConfig& rc, Rng rng) {
  const int n = market.size();
  std::vector<bool> fixed(n, false);
  for (int i : rc.keep_fixed) fixed[i] = true;
  std::vector<int> pool;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) pool.push_back(i);

  std::vector<int> chosen = rc.keep_fixed;
  std::sort(chosen.begin(), chosen.end());
  if (rc.method == ResampleMethod::Bootstrap) {
    for (std::size_t k = 0; k < pool.size(); ++k)
      chosen.push_back(pool[rng.below(pool.size())]);
  } else {
    int want = rc.subsample_size - static_cast<int>(chosen.size());
    if (want < 0 || want > static_cast<int>(pool.size()))
      throw config_error("subsample size outside [" + std::to_string(chosen.size()) + ", " +
                         std::to_string(chosen.size() + pool.size()) + "]");
    std::vector<int> shuffled = pool;
    for (std::size_t k = shuffled.size(); k > 1; --k)
      std::swap(shuffled[k - 1], shuffled[rng.below(k)]);
    chosen.insert(chosen.end(), shuffled.begin(), shuffled.begin() + want);
  }

  std::vector<std::vector<int>> copies(n);  // original -> new indices
  std::vector<FirmRecord> firms;
  firms.reserve(chosen.size());
  for (std::size_t pos = 0; pos < chosen.size(); ++pos) {
    copies[chosen[pos]].push_back(static_cast<int>(pos));
    firms.push_back(market.firm(chosen[pos]));
  }

  Replicate rep{Market(std::move(firms), market.menu(), market.subsidy(), market.cost(),
                       market.buyer_in_aggregate()),
                {}};

  for (const Group& g : matching.groups) {
    if (copies[g.buyer].empty()) {
      for (int m : g.members)
        for (int idx : copies[m]) rep.matching.unmatched.push_back(idx);
      continue;
    }
    Group ng;
    ng.buyer = copies[g.buyer].front();
    for (int m : g.members)
      for (int idx : copies[m]) ng.members.push_back(idx);
    std::sort(ng.members.begin(), ng.members.end());
    double tonnage = 0.0;
    for (int m : ng.members) tonnage += rep.market.firm(m).total_tonnage();
    ng.qualified = tonnage > rep.market.subsidy().threshold;
    rep.matching.groups.push_back(std::move(ng));
  }
  for (int u : matching.unmatched)
    for (int idx : copies[u]) rep.matching.unmatched.push_back(idx);
  std::sort(rep.matching.unmatched.begin(), rep.matching.unmatched.end());
  return rep;
}

}  // namespace

ResampleResult resample_ci(const Market& market, const MatchingOutcome& matching,
                           const IneqOptions& options, const DEConfig& de,
                           const Calibration& calib, const ResampleConfig& rc) {
  if (rc.replications < 1) throw config_error("resampling needs at least one replication");
  for (int i : rc.keep_fixed)
    if (i < 0 || i >= market.size()) throw config_error("keep_fixed index out of range");

  ResampleResult result;
  result.rows.resize(rc.replications);

  parallel_for(static_cast<std::size_t>(rc.replications), rc.threads, [&](std::size_t r) {
    ReplicateRow& row = result.rows[r];
    row.replicate = static_cast<int>(r);
    Replicate rep = make_replicate(market, matching, rc, Rng::substream(rc.seed, r));
    InequalitySet ineqs = build_inequalities(rep.market, rep.matching, options);
    row.n_inequalities = ineqs.size();
    if (ineqs.empty()) {
      row.skipped = true;
      return;
    }
    // One shared search seed: replicates with identical data estimate
    // identically, so all CI width comes from resampling variation.
    DEConfig rde = de;
    rde.seed = Rng::substream(rc.seed, 0xd3).key();
    rde.threads = 1;
    EstimateResult est = point_estimate(ineqs, rde, calib);
    row.theta_hat = est.theta_hat;
    row.score_count = est.score.count;
  });

  for (const ReplicateRow& row : result.rows)
    if (row.skipped) ++result.n_skipped;
  result.skip_warning = result.n_skipped > rc.replications / 10;

  int n_beta = static_cast<int>(market.menu().size()) - 1;
  int dim = n_beta + (calib.delta ? 1 : 2);
  result.ci.resize(dim);
  for (int k = 0; k < dim; ++k) {
    std::vector<double> component;
    for (const ReplicateRow& row : result.rows) {
      if (row.skipped) continue;
      component.push_back(free_from_theta(row.theta_hat, calib)(k));
    }
    if (component.empty()) throw empty_inequality_set("every replicate was skipped");
    result.ci[k].lo = percentile(component, 2.5);
    result.ci[k].hi = percentile(std::move(component), 97.5);
  }
  return result;
}

}  // namespace coalmatch
