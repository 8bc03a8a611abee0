#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coalmatch/counterfactual.hpp"
#include "coalmatch/equilibrium.hpp"
#include "coalmatch/estimator.hpp"
#include "coalmatch/inference.hpp"
#include "coalmatch/inequalities.hpp"
#include "coalmatch/market.hpp"
#include "coalmatch/montecarlo.hpp"

namespace coalmatch {

inline constexpr const char* kFirmCsvHeader =
    "id,name,firm_type,group_id,ton_liner,ton_special,ton_tramper,ton_tanker";
inline constexpr int kCarrierTypes = 4;

// Parsed firm file plus the raw cells, so re-serialization reproduces the
// input byte-for-byte (modulo trailing whitespace).
struct FirmTable {
  std::vector<FirmRecord> records;
  std::vector<std::string> raw_rows;
};

FirmTable parse_firms_csv(const std::string& text);
FirmTable load_firms(const std::string& path);
std::string serialize_firms(const FirmTable& table);

// Run configuration: one structured file whose defaults reproduce base-case
// behavior, so an empty config is valid.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;

  CovariateMenu menu{{CovariateKind::TotalSize, 0}, {CovariateKind::SizeByType, 0}};
  bool buyer_in_aggregate = true;
  SubsidySpec subsidy;
  NoiseSpec noise;
  Theta theta = default_theta();

  IneqOptions ineq;
  bool deviation_rule_set = false;  // config named a rule explicitly
  bool drop_noninteger = true;

  DEConfig de;
  std::optional<double> delta_fixed;
  std::vector<int> delta_grid;

  DgpConfig dgp;
  int n_sims = 1000;

  ResampleConfig resample = default_resample();
  int resample_population = 200;

  PolicyGrid policy;

  std::vector<std::string> surface_axes{"beta:0", "gamma"};
  double surface_lo = -20.0;
  double surface_hi = 20.0;
  int surface_points = 601;

  static Theta default_theta() {
    Theta t;
    t.beta = Eigen::VectorXd::Zero(1);
    t.delta = 1.0;
    t.gamma = 1.0;
    return t;
  }

  static ResampleConfig default_resample() {
    ResampleConfig rc;
    rc.replications = 200;
    return rc;
  }
};

RunConfig parse_config(const nlohmann::json& source);
RunConfig load_config(const std::string& path);  // "" gives all defaults
nlohmann::json config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);  // FNV-1a over the canonical dump

// Market assembly from an observed firm table.
Market market_from_table(const FirmTable& table, const RunConfig& config);

// Observed matching from role labels and group ids; each group's buyer is
// its largest-tonnage main firm (largest member when the restriction is off
// or no main exists), ties to the smaller index.
MatchingOutcome observed_matching(const Market& market, bool buyer_restriction);

// JSON views.
nlohmann::json allocation_to_json(const Allocation& alloc);
nlohmann::json outcome_to_json(const MatchingOutcome& outcome);
nlohmann::json theta_to_json(const Theta& theta);
nlohmann::json estimate_to_json(const EstimateResult& result);
nlohmann::json mc_summary_to_json(const McSummary& summary, const Theta& theta0);
nlohmann::json resample_to_json(const ResampleResult& result);
nlohmann::json sweep_to_json(const SweepResult& sweep);

// CSV views.
std::string inequalities_to_csv(const InequalitySet& ineqs);
std::string surface_to_csv(const Surface& surface);
std::string replicates_to_csv(const ResampleResult& result);
std::string mc_rows_to_csv(const McSummary& summary);
std::string cells_to_csv(const SweepResult& sweep);
std::string flows_to_csv(const std::vector<FlowRow>& rows);

// Shortest round-trip decimal rendering.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Run manifest: config hash, seed, version, timings, outputs produced.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunConfig& config, double elapsed_seconds,
                    const std::vector<std::string>& outputs);

}  // namespace coalmatch
