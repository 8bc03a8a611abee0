#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coalmatch/io.hpp"

namespace cm = coalmatch;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration (JSON)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--threads", args.threads, "worker pool cap (0 = hardware)");
}

cm::RunConfig resolve_config(const CommonArgs& args) {
  cm::RunConfig config = cm::load_config(args.config_path);
  nlohmann::json overrides = cm::config_to_json(config);
  if (args.seed) overrides["seed"] = *args.seed;
  if (args.threads) overrides["threads"] = *args.threads;
  return cm::parse_config(overrides);
}

struct RunWriter {
  std::string out_dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;

  void emit(const std::string& name, const std::string& content) {
    cm::write_file(out_dir + "/" + name, content);
    outputs.push_back(name);
  }

  void finish(const std::string& command, const cm::RunConfig& config) {
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    cm::write_manifest(out_dir, command, config, elapsed, outputs);
    std::cout << command << ": wrote " << outputs.size() << " file(s) to " << out_dir << "\n";
  }
};

cm::ParamRef axis_ref(const std::string& text) {
  if (text == "delta") return cm::ParamRef::delta();
  if (text == "gamma") return cm::ParamRef::gamma();
  return cm::ParamRef::beta(std::stoi(text.substr(5)));
}

struct EstimationInput {
  cm::Market market;
  cm::MatchingOutcome matching;
  cm::InequalitySet ineqs;
};

// Inequalities from observed data, or from one synthetic equilibrium when no
// firm file is given.
EstimationInput estimation_input(const cm::RunConfig& config, const std::string& firms_path,
                                 std::uint64_t sim_index) {
  if (!firms_path.empty()) {
    cm::FirmTable table = cm::load_firms(firms_path);
    cm::Market market = cm::market_from_table(table, config);
    cm::MatchingOutcome matching =
        cm::observed_matching(market, config.ineq.buyer_restriction);
    cm::InequalitySet ineqs = cm::build_inequalities(market, matching, config.ineq);
    if (ineqs.empty())
      throw cm::empty_inequality_set("no inequalities derivable from the observed matching");
    return {std::move(market), std::move(matching), std::move(ineqs)};
  }
  cm::DgpConfig dgp = config.dgp;
  dgp.drop_noninteger = config.drop_noninteger;
  cm::SimulatedMarket sim = cm::generate_market(dgp, sim_index);
  cm::InequalitySet ineqs = cm::build_inequalities(sim.market, sim.outcome, config.ineq);
  if (ineqs.empty())
    throw cm::empty_inequality_set("no inequalities derivable from the simulated matching");
  return {std::move(sim.market), std::move(sim.outcome), std::move(ineqs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coalition matching markets: equilibrium, estimation, counterfactuals"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string firms_path;
  std::uint64_t sim_index = 0;
  int oracle_n = 4, oracle_trials = 200;
  std::optional<int> sims_override;

  CLI::App* simulate = app.add_subcommand("simulate", "solve one equilibrium");
  add_common(simulate, common);
  simulate->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  simulate->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* estimate = app.add_subcommand("estimate", "maximum rank point estimate");
  add_common(estimate, common);
  estimate->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  estimate->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* surface = app.add_subcommand("surface", "objective surface scan");
  add_common(surface, common);
  surface->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  surface->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* bounds = app.add_subcommand("bounds", "maximizer-set bounds");
  add_common(bounds, common);
  bounds->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  bounds->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* ci = app.add_subcommand("ci", "resampling confidence intervals");
  add_common(ci, common);
  ci->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  ci->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo identification study");
  add_common(mc, common);
  mc->add_option("--sims", sims_override, "number of simulations");

  CLI::App* counterfactual = app.add_subcommand("counterfactual", "subsidy policy sweep");
  add_common(counterfactual, common);
  counterfactual->add_option("--firms", firms_path, "firm CSV (synthetic market when absent)");
  counterfactual->add_option("--sim-index", sim_index, "substream index for synthetic draws");

  CLI::App* oracle = app.add_subcommand("oracle-check", "LP vs brute-force cross-validation");
  add_common(oracle, common);
  oracle->add_option("--n", oracle_n, "market size (2..6)")->check(CLI::Range(2, 6));
  oracle->add_option("--trials", oracle_trials, "number of random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    cm::RunConfig config = resolve_config(common);
    RunWriter writer{common.out_dir};

    if (simulate->parsed()) {
      if (firms_path.empty()) {
        cm::DgpConfig dgp = config.dgp;
        dgp.drop_noninteger = config.drop_noninteger;
        cm::SimulatedMarket sim = cm::generate_market(dgp, sim_index);
        writer.emit("allocation.json", cm::allocation_to_json(sim.allocation).dump(2) + "\n");
        writer.emit("outcome.json", cm::outcome_to_json(sim.outcome).dump(2) + "\n");
      } else {
        cm::FirmTable table = cm::load_firms(firms_path);
        cm::Market market = cm::market_from_table(table, config);
        cm::NoiseSpec noise = config.noise;
        noise.seed = config.seed;
        Eigen::MatrixXd eps = cm::draw_noise(noise, market.size());
        cm::LinearProgram lp = cm::assemble_lp(market, config.theta, eps);
        cm::Allocation alloc = cm::solve_equilibrium(lp);
        cm::MatchingOutcome outcome =
            cm::integerize(market, alloc, cm::Rng::substream(config.seed, 0x51));
        writer.emit("allocation.json", cm::allocation_to_json(alloc).dump(2) + "\n");
        writer.emit("outcome.json", cm::outcome_to_json(outcome).dump(2) + "\n");
      }
      writer.finish("simulate", config);
      return 0;
    }

    if (estimate->parsed() || bounds->parsed()) {
      EstimationInput input = estimation_input(config, firms_path, sim_index);
      cm::Calibration calib;
      if (config.delta_fixed) calib.delta = *config.delta_fixed;
      if (!config.delta_grid.empty())
        calib.delta = cm::calibrate_delta(input.ineqs, config.delta_grid, config.de);
      cm::EstimateResult result = cm::point_estimate(input.ineqs, config.de, calib);
      if (bounds->parsed())
        result.maximizer_bounds =
            cm::maximizer_bounds(input.ineqs, result.theta_hat, config.de, calib);
      writer.emit("estimate.json", cm::estimate_to_json(result).dump(2) + "\n");
      writer.emit("inequalities.csv", cm::inequalities_to_csv(input.ineqs));
      writer.finish(bounds->parsed() ? "bounds" : "estimate", config);
      return 0;
    }

    if (surface->parsed()) {
      EstimationInput input = estimation_input(config, firms_path, sim_index);
      Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(config.surface_points,
                                                        config.surface_lo, config.surface_hi);
      std::vector<cm::SurfaceAxis> axes;
      for (const std::string& axis : config.surface_axes)
        axes.push_back({axis_ref(axis), grid});
      cm::Surface result =
          cm::objective_surface(input.ineqs, config.theta, std::move(axes), config.threads);
      writer.emit("surface.csv", cm::surface_to_csv(result));
      writer.finish("surface", config);
      return 0;
    }

    if (ci->parsed()) {
      EstimationInput input = estimation_input(config, firms_path, sim_index);
      cm::Calibration calib;
      if (config.delta_fixed) calib.delta = *config.delta_fixed;
      cm::ResampleConfig rc = config.resample;
      for (int i = 0; i < input.market.size(); ++i)
        if (input.market.is_main(i)) rc.keep_fixed.push_back(i);
      if (rc.keep_fixed.empty())  // synthetic markets: hold the realized buyers
        for (const cm::Group& g : input.matching.groups) rc.keep_fixed.push_back(g.buyer);
      cm::DEConfig de = config.de;
      de.restarts = 1;
      de.population = config.resample_population;
      cm::ResampleResult result =
          cm::resample_ci(input.market, input.matching, config.ineq, de, calib, rc);
      writer.emit("replicates.csv", cm::replicates_to_csv(result));
      writer.emit("ci.json", cm::resample_to_json(result).dump(2) + "\n");
      writer.finish("ci", config);
      return 0;
    }

    if (mc->parsed()) {
      cm::McConfig mcc;
      mcc.n_sims = sims_override.value_or(config.n_sims);
      mcc.de.seed = config.seed;
      mcc.threads = config.threads;
      mcc.ineq = config.ineq;
      mcc.ineq.enable_ir_subsidy = false;  // no pre-subsidy period in simulation
      if (!config.deviation_rule_set)
        mcc.ineq.rule = cm::DeviationRule::CoalitionSwaps;  // benchmark-table form
      cm::DgpConfig dgp = config.dgp;
      dgp.drop_noninteger = config.drop_noninteger;
      cm::McSummary summary = cm::run_mc(dgp, mcc);
      writer.emit("mc_rows.csv", cm::mc_rows_to_csv(summary));
      writer.emit("mc_summary.json",
                  cm::mc_summary_to_json(summary, dgp.theta0).dump(2) + "\n");
      writer.finish("mc", config);
      return 0;
    }

    if (counterfactual->parsed()) {
      cm::Market market = [&]() {
        if (!firms_path.empty())
          return cm::market_from_table(cm::load_firms(firms_path), config);
        cm::DgpConfig dgp = config.dgp;
        dgp.drop_noninteger = config.drop_noninteger;
        return cm::generate_market(dgp, sim_index).market;
      }();
      cm::MatchingOutcome before =
          cm::observed_matching(market, config.ineq.buyer_restriction);
      cm::SweepResult sweep = cm::policy_sweep(market, config.policy);
      std::vector<cm::FlowRow> flows = cm::export_configuration_flows(market, before, sweep);
      writer.emit("cells.csv", cm::cells_to_csv(sweep));
      writer.emit("flows.csv", cm::flows_to_csv(flows));
      writer.emit("counterfactual.json", cm::sweep_to_json(sweep).dump(2) + "\n");
      writer.finish("counterfactual", config);
      return 0;
    }

    if (oracle->parsed()) {
      cm::DgpConfig dgp = config.dgp;
      dgp.n_firms = oracle_n;
      dgp.drop_noninteger = true;
      int matched = 0;
      for (int t = 0; t < oracle_trials; ++t) {
        cm::SimulatedMarket sim = cm::generate_market(dgp, t);
        cm::OracleResult oracle_result = cm::oracle_welfare(sim.market, dgp.theta0, sim.eps);
        double scale = 1.0 + std::abs(oracle_result.welfare);
        bool welfare_ok =
            std::abs(sim.allocation.welfare - oracle_result.welfare) <= 1e-6 * scale;
        bool partition_ok =
            cm::outcome_key(sim.outcome) == cm::outcome_key(oracle_result.outcome);
        if (welfare_ok && partition_ok) ++matched;
      }
      std::cout << matched << "/" << oracle_trials << " match\n";
      return matched == oracle_trials ? 0 : 1;
    }
  } catch (const cm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
