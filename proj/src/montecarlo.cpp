#include "coalmatch/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "coalmatch/errors.hpp"
#include "coalmatch/parallel.hpp"

namespace coalmatch {

namespace {

Market draw_market(const DgpConfig& cfg, Rng& rng) {
  std::vector<FirmRecord> firms(cfg.n_firms);
  for (int i = 0; i < cfg.n_firms; ++i) {
    FirmRecord& f = firms[i];
    f.id = i;
    f.name = "sim" + std::to_string(i);
    f.tonnage = Eigen::VectorXd(2);
    for (int k = 0; k < 2; ++k) {
      switch (cfg.law) {
        case TonnageLaw::LogNormalScaled:
          f.tonnage(k) = rng.lognormal(2.0, 1.0) / 100.0;
          break;
        case TonnageLaw::UniformLarge:
          f.tonnage(k) = rng.uniform(20.0, 80.0);
          break;
      }
    }
  }
  CovariateMenu menu{{CovariateKind::SizeByType, 0}, {CovariateKind::ShareByType, 0}};
  SubsidySpec subsidy{cfg.subsidy_kind, cfg.subsidy_amount, cfg.subsidy_threshold};
  return Market(std::move(firms), std::move(menu), subsidy);
}

}  // namespace

SimulatedMarket generate_market(const DgpConfig& cfg, std::uint64_t sim_index) {
  Rng sim_rng = Rng::substream(cfg.seed, sim_index);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Rng draw = sim_rng.split(attempt);
    Market market = draw_market(cfg, draw);

    NoiseSpec noise;
    noise.dist = NoiseDist::StdNormal;
    noise.seed = draw.split(0x7eb5).key();
    Eigen::MatrixXd eps = draw_noise(noise, market.size());

    LinearProgram lp = assemble_lp(market, cfg.theta0, eps);
    Allocation alloc = solve_equilibrium(lp);

    SimulatedMarket sim;
    sim.attempts = attempt + 1;
    if (alloc.is_integer) {
      sim.outcome = extract_outcome(market, alloc);
    } else if (cfg.drop_noninteger) {
      continue;
    } else {
      sim.outcome = integerize(market, alloc, draw.split(0x9a11));
    }
    sim.market = std::move(market);
    sim.allocation = std::move(alloc);
    sim.eps = std::move(eps);
    return sim;
  }
  throw degenerate_dgp("no integer equilibrium in " + std::to_string(cfg.max_attempts) +
                       " consecutive draws (sim " + std::to_string(sim_index) + ")");
}

double lower_median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

namespace {

McAggregate aggregate_rows(const std::vector<McSimRow>& rows, const Theta& theta0,
                           int which /* 0 all, 1 qualified, 2 unqualified */) {
  McAggregate agg;
  std::vector<double> beta_err, gamma_err;
  for (const McSimRow& row : rows) {
    if (which == 1 && !row.qualified) continue;
    if (which == 2 && row.qualified) continue;
    beta_err.push_back(row.beta - theta0.beta(0));
    gamma_err.push_back(row.gamma - theta0.gamma);
  }
  agg.n = static_cast<int>(beta_err.size());
  if (agg.n == 0) return agg;
  double sq_beta = 0.0, sq_gamma = 0.0;
  for (double e : beta_err) sq_beta += e * e;
  for (double e : gamma_err) sq_gamma += e * e;
  agg.rmse_beta = std::sqrt(sq_beta / agg.n);
  agg.rmse_gamma = std::sqrt(sq_gamma / agg.n);
  agg.median_bias_beta = lower_median(std::move(beta_err));
  agg.median_bias_gamma = lower_median(std::move(gamma_err));
  return agg;
}

}  // namespace

McSummary run_mc(const DgpConfig& dgp, const McConfig& mc) {
  McSummary summary;
  summary.rows.resize(mc.n_sims);
  parallel_for(static_cast<std::size_t>(mc.n_sims), mc.threads, [&](std::size_t s) {
    SimulatedMarket sim = generate_market(dgp, s);
    InequalitySet ineqs = build_inequalities(sim.market, sim.outcome, mc.ineq);

    DEConfig de = mc.de;
    de.seed = Rng::substream(dgp.seed ^ 0xe571, s).key();
    de.threads = 1;  // parallelism lives at the sim level
    EstimateResult est = point_estimate(ineqs, de);

    McSimRow row;
    row.sim = s;
    row.beta = est.theta_hat.beta(0);
    row.delta = est.theta_hat.delta;
    row.gamma = est.theta_hat.gamma;
    row.score_count = est.score.count;
    row.n_inequalities = ineqs.size();
    row.qualified = classify_outcome(sim.outcome).n_qualified > 0;
    row.attempts = sim.attempts;
    summary.rows[s] = row;
  });

  summary.all = aggregate_rows(summary.rows, dgp.theta0, 0);
  summary.qualified = aggregate_rows(summary.rows, dgp.theta0, 1);
  summary.unqualified = aggregate_rows(summary.rows, dgp.theta0, 2);
  return summary;
}

std::vector<SmallNEntry> small_n_scan(const DgpConfig& base, const std::vector<int>& sizes,
                                      double lo, double hi, int grid_points) {
  std::vector<SmallNEntry> out;
  for (int n : sizes) {
    DgpConfig cfg = base;
    cfg.n_firms = n;
    SimulatedMarket sim = generate_market(cfg, 0);
    InequalitySet ineqs = build_inequalities(sim.market, sim.outcome, {});

    SmallNEntry entry;
    entry.n = n;
    entry.n_inequalities = ineqs.size();

    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, lo, hi);
    std::vector<SurfaceAxis> axes{{ParamRef::beta(0), grid}, {ParamRef::gamma(), grid}};
    entry.surface = objective_surface(ineqs, cfg.theta0, std::move(axes));

    double max_count = entry.surface.counts.maxCoeff();
    bool touches_boundary = false;
    const Eigen::Index rows = entry.surface.counts.rows();
    const Eigen::Index cols = entry.surface.counts.cols();
    for (Eigen::Index r = 0; r < rows && !touches_boundary; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (entry.surface.counts(r, c) == max_count &&
            (r == 0 || c == 0 || r == rows - 1 || c == cols - 1)) {
          touches_boundary = true;
          break;
        }
    entry.bounded = !touches_boundary;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace coalmatch
