#include "coalmatch/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "coalmatch/errors.hpp"

namespace coalmatch {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == sep) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  return s;
}

double parse_tonnage(const std::string& field, int row) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !(value >= 0.0))
    throw bad_decimal("row " + std::to_string(row) + ": tonnage '" + field +
                      "' is not a non-negative decimal");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

FirmTable parse_firms_csv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(rtrim(current));
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!rtrim(current).empty()) lines.push_back(rtrim(current));
  }
  if (lines.empty()) throw empty_data("firm file has no content");
  if (lines[0] != kFirmCsvHeader)
    throw missing_column("header must be exactly '" + std::string(kFirmCsvHeader) + "'");
  if (lines.size() == 1) throw empty_data("firm file has a header but no rows");

  FirmTable table;
  std::set<int> seen_ids;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    std::vector<std::string> fields = split(lines[r], ',');
    int row = static_cast<int>(r) + 1;  // 1-based with header as row 1
    if (fields.size() != 4 + kCarrierTypes)
      throw missing_column("row " + std::to_string(row) + ": expected " +
                           std::to_string(4 + kCarrierTypes) + " fields, got " +
                           std::to_string(fields.size()));

    FirmRecord record;
    {
      const std::string& id_field = fields[0];
      auto [ptr, ec] = std::from_chars(id_field.data(), id_field.data() + id_field.size(),
                                       record.id);
      if (ec != std::errc() || ptr != id_field.data() + id_field.size())
        throw bad_decimal("row " + std::to_string(row) + ": id '" + id_field +
                          "' is not an integer");
    }
    if (!seen_ids.insert(record.id).second)
      throw duplicate_id("row " + std::to_string(row) + ": id " + std::to_string(record.id) +
                         " already used");
    record.name = fields[1];

    const std::string& type = fields[2];
    if (type == "main") record.role = FirmRole::MainBuyer;
    else if (type == "affiliate" || type == "wholly") record.role = FirmRole::SellerAffiliate;
    else if (type == "unmatched") record.role = FirmRole::Unmatched;
    else
      throw config_error("row " + std::to_string(row) + ": firm_type '" + type +
                         "' not in {main, affiliate, wholly, unmatched}");

    const std::string& gid = fields[3];
    if (gid.empty()) {
      if (*record.role != FirmRole::Unmatched)
        throw config_error("row " + std::to_string(row) +
                           ": group_id required unless firm_type is unmatched");
    } else {
      if (*record.role == FirmRole::Unmatched)
        throw config_error("row " + std::to_string(row) +
                           ": unmatched firms must have a blank group_id");
      int parsed = 0;
      auto [ptr, ec] = std::from_chars(gid.data(), gid.data() + gid.size(), parsed);
      if (ec != std::errc() || ptr != gid.data() + gid.size())
        throw bad_decimal("row " + std::to_string(row) + ": group_id '" + gid +
                          "' is not an integer");
      record.group_id = parsed;
    }

    record.tonnage = Eigen::VectorXd(kCarrierTypes);
    for (int k = 0; k < kCarrierTypes; ++k)
      record.tonnage(k) = parse_tonnage(fields[4 + k], row);

    table.records.push_back(std::move(record));
    table.raw_rows.push_back(lines[r]);
  }
  if (table.records.empty()) throw empty_data("firm file has no rows");
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw empty_data("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw empty_data("cannot write '" + path + "'");
  out << content;
}

FirmTable load_firms(const std::string& path) { return parse_firms_csv(read_file(path)); }

std::string serialize_firms(const FirmTable& table) {
  std::string out(kFirmCsvHeader);
  out.push_back('\n');
  for (const std::string& row : table.raw_rows) {
    out += row;
    out.push_back('\n');
  }
  return out;
}

namespace {

MenuItem parse_menu_item(const std::string& text) {
  if (text == "total") return {CovariateKind::TotalSize, 0};
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    std::string kind = text.substr(0, colon);
    int index = std::stoi(text.substr(colon + 1));
    if (kind == "size") return {CovariateKind::SizeByType, index};
    if (kind == "share") return {CovariateKind::ShareByType, index};
  }
  throw config_error("menu item '" + text + "' is not 'total', 'size:<k>' or 'share:<k>'");
}

std::string menu_item_name(const MenuItem& item) {
  switch (item.kind) {
    case CovariateKind::TotalSize: return "total";
    case CovariateKind::SizeByType: return "size:" + std::to_string(item.type_index);
    case CovariateKind::ShareByType: return "share:" + std::to_string(item.type_index);
  }
  return "total";
}

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw config_error("unknown key '" + key + "' in " + where);
}

SubsidyKind parse_subsidy_kind(const std::string& text) {
  if (text == "to_buyer") return SubsidyKind::ToBuyer;
  if (text == "shared") return SubsidyKind::Shared;
  throw config_error("subsidy kind '" + text + "' not in {to_buyer, shared}");
}

ParamRef parse_param_ref(const std::string& text) {
  if (text == "delta") return ParamRef::delta();
  if (text == "gamma") return ParamRef::gamma();
  if (text.rfind("beta:", 0) == 0) return ParamRef::beta(std::stoi(text.substr(5)));
  throw config_error("axis '" + text + "' is not 'beta:<k>', 'delta' or 'gamma'");
}

}  // namespace

RunConfig parse_config(const nlohmann::json& source) {
  RunConfig config;
  check_keys(source,
             {"seed", "threads", "market", "subsidy", "noise", "theta", "flags", "de", "dgp",
              "resample", "policy", "surface"},
             "config root");

  if (source.contains("seed")) config.seed = source["seed"].get<std::uint64_t>();
  if (source.contains("threads")) config.threads = source["threads"].get<int>();

  if (source.contains("market")) {
    const auto& m = source["market"];
    check_keys(m, {"menu", "buyer_in_aggregate"}, "market");
    if (m.contains("menu")) {
      config.menu.clear();
      for (const auto& item : m["menu"]) config.menu.push_back(parse_menu_item(item));
      if (config.menu.empty()) throw config_error("market.menu is empty");
    }
    if (m.contains("buyer_in_aggregate"))
      config.buyer_in_aggregate = m["buyer_in_aggregate"].get<bool>();
  }

  if (source.contains("subsidy")) {
    const auto& s = source["subsidy"];
    check_keys(s, {"kind", "amount", "threshold"}, "subsidy");
    if (s.contains("kind")) config.subsidy.kind = parse_subsidy_kind(s["kind"]);
    if (s.contains("amount")) config.subsidy.amount = s["amount"].get<double>();
    if (s.contains("threshold")) config.subsidy.threshold = s["threshold"].get<double>();
    if (config.subsidy.amount < 0 || config.subsidy.threshold < 0)
      throw config_error("subsidy amount and threshold must be non-negative");
  }

  if (source.contains("noise")) {
    const auto& n = source["noise"];
    check_keys(n, {"dist", "sigma"}, "noise");
    if (n.contains("dist")) {
      std::string dist = n["dist"];
      if (dist == "std_normal") config.noise.dist = NoiseDist::StdNormal;
      else if (dist == "normal") config.noise.dist = NoiseDist::Normal;
      else if (dist == "none") config.noise.dist = NoiseDist::None;
      else throw config_error("noise dist '" + dist + "' not in {std_normal, normal, none}");
    }
    if (n.contains("sigma")) config.noise.sigma = n["sigma"].get<double>();
    if (config.noise.dist == NoiseDist::Normal && !(config.noise.sigma > 0))
      throw config_error("noise sigma must be positive");
  }

  if (source.contains("theta")) {
    const auto& t = source["theta"];
    check_keys(t, {"beta", "delta", "gamma"}, "theta");
    if (t.contains("beta")) {
      std::vector<double> beta = t["beta"].get<std::vector<double>>();
      config.theta.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), beta.size());
    }
    if (t.contains("delta")) config.theta.delta = t["delta"].get<double>();
    if (t.contains("gamma")) config.theta.gamma = t["gamma"].get<double>();
  }

  if (source.contains("flags")) {
    const auto& f = source["flags"];
    check_keys(f, {"buyer_restriction", "enable_ir_subsidy", "insertion_with_removal",
                   "drop_noninteger", "deviation_rule"},
               "flags");
    if (f.contains("buyer_restriction"))
      config.ineq.buyer_restriction = f["buyer_restriction"].get<bool>();
    if (f.contains("enable_ir_subsidy"))
      config.ineq.enable_ir_subsidy = f["enable_ir_subsidy"].get<bool>();
    if (f.contains("insertion_with_removal"))
      config.ineq.insertion_with_removal = f["insertion_with_removal"].get<bool>();
    if (f.contains("drop_noninteger")) config.drop_noninteger = f["drop_noninteger"].get<bool>();
    if (f.contains("deviation_rule") && !f["deviation_rule"].is_null()) {
      std::string rule = f["deviation_rule"];
      if (rule == "member_swaps") config.ineq.rule = DeviationRule::MemberSwaps;
      else if (rule == "coalition_swaps") config.ineq.rule = DeviationRule::CoalitionSwaps;
      else
        throw config_error("flags.deviation_rule '" + rule +
                           "' not in {member_swaps, coalition_swaps}");
      config.deviation_rule_set = true;
    }
  }

  if (source.contains("de")) {
    const auto& d = source["de"];
    check_keys(d, {"population", "generations", "restarts", "weight", "crossover", "bounds",
                   "delta_fixed", "delta_grid"},
               "de");
    if (d.contains("population")) config.de.population = d["population"].get<int>();
    if (d.contains("generations")) config.de.generations = d["generations"].get<int>();
    if (d.contains("restarts")) config.de.restarts = d["restarts"].get<int>();
    if (d.contains("weight")) config.de.weight = d["weight"].get<double>();
    if (d.contains("crossover")) config.de.crossover = d["crossover"].get<double>();
    if (d.contains("bounds"))
      for (const auto& pair : d["bounds"]) {
        if (!pair.is_array() || pair.size() != 2)
          throw config_error("de.bounds entries must be [lo, hi] pairs");
        config.de.bounds.push_back({pair[0].get<double>(), pair[1].get<double>()});
        if (!(config.de.bounds.back()[0] < config.de.bounds.back()[1]))
          throw config_error("de.bounds entries need lo < hi");
      }
    if (d.contains("delta_fixed") && !d["delta_fixed"].is_null())
      config.delta_fixed = d["delta_fixed"].get<double>();
    if (d.contains("delta_grid")) config.delta_grid = d["delta_grid"].get<std::vector<int>>();
    if (config.de.population < 4) throw config_error("de.population must be >= 4");
  }

  if (source.contains("dgp")) {
    const auto& g = source["dgp"];
    check_keys(g, {"n_firms", "law", "subsidy_kind", "gamma", "n_sims", "drop_noninteger"},
               "dgp");
    if (g.contains("n_firms")) config.dgp.n_firms = g["n_firms"].get<int>();
    if (g.contains("law")) {
      std::string law = g["law"];
      if (law == "lognormal") config.dgp.law = TonnageLaw::LogNormalScaled;
      else if (law == "uniform_large") config.dgp.law = TonnageLaw::UniformLarge;
      else throw config_error("dgp.law '" + law + "' not in {lognormal, uniform_large}");
    }
    if (g.contains("subsidy_kind"))
      config.dgp.subsidy_kind = parse_subsidy_kind(g["subsidy_kind"]);
    if (g.contains("gamma")) config.dgp.theta0.gamma = g["gamma"].get<double>();
    if (g.contains("n_sims")) config.n_sims = g["n_sims"].get<int>();
    if (g.contains("drop_noninteger"))
      config.dgp.drop_noninteger = g["drop_noninteger"].get<bool>();
  }

  if (source.contains("resample")) {
    const auto& r = source["resample"];
    check_keys(r, {"method", "replications", "subsample_size", "population"}, "resample");
    if (r.contains("method")) {
      std::string method = r["method"];
      if (method == "bootstrap") config.resample.method = ResampleMethod::Bootstrap;
      else if (method == "subsampling") config.resample.method = ResampleMethod::Subsampling;
      else throw config_error("resample.method '" + method + "' not in {bootstrap, subsampling}");
    }
    if (r.contains("replications"))
      config.resample.replications = r["replications"].get<int>();
    if (r.contains("subsample_size"))
      config.resample.subsample_size = r["subsample_size"].get<int>();
    if (r.contains("population")) config.resample_population = r["population"].get<int>();
    if (config.resample.replications < 1)
      throw config_error("resample.replications must be >= 1");
  }

  if (source.contains("policy")) {
    const auto& p = source["policy"];
    check_keys(p, {"amounts", "thresholds", "draws", "sigma2", "sigma"}, "policy");
    if (p.contains("amounts")) config.policy.amounts = p["amounts"].get<std::vector<double>>();
    if (p.contains("thresholds"))
      config.policy.thresholds = p["thresholds"].get<std::vector<double>>();
    if (p.contains("draws")) config.policy.draws = p["draws"].get<int>();
    if (p.contains("sigma2") && p.contains("sigma"))
      throw config_error("give policy.sigma2 or policy.sigma, not both");
    if (p.contains("sigma2"))
      config.policy.noise.sigma = std::sqrt(p["sigma2"].get<double>());
    if (p.contains("sigma")) config.policy.noise.sigma = p["sigma"].get<double>();
    if (config.policy.amounts.empty() || config.policy.thresholds.empty() ||
        config.policy.draws < 1)
      throw config_error("policy grids must be non-empty with draws >= 1");
  }

  if (source.contains("surface")) {
    const auto& s = source["surface"];
    check_keys(s, {"axes", "lo", "hi", "points"}, "surface");
    if (s.contains("axes")) {
      config.surface_axes = s["axes"].get<std::vector<std::string>>();
      if (config.surface_axes.empty() || config.surface_axes.size() > 2)
        throw config_error("surface.axes must name one or two parameters");
      for (const std::string& axis : config.surface_axes) parse_param_ref(axis);
    }
    if (s.contains("lo")) config.surface_lo = s["lo"].get<double>();
    if (s.contains("hi")) config.surface_hi = s["hi"].get<double>();
    if (s.contains("points")) config.surface_points = s["points"].get<int>();
    if (!(config.surface_lo < config.surface_hi) || config.surface_points < 2)
      throw config_error("surface needs lo < hi and points >= 2");
  }

  // Grid seeds and theta flow into the nested configs.
  config.dgp.theta0.beta = Eigen::VectorXd::Zero(1);
  config.dgp.seed = config.seed;
  config.resample.seed = config.seed;
  config.policy.seed = config.seed;
  config.policy.theta = config.theta;
  config.policy.threads = config.threads;
  config.resample.threads = config.threads;
  config.de.seed = config.seed;
  config.de.threads = config.threads;
  return config;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return parse_config(nlohmann::json::object());
  nlohmann::json source = nlohmann::json::parse(read_file(path));
  if (!source.is_object()) throw config_error("config root must be an object");
  return parse_config(source);
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json menu = nlohmann::json::array();
  for (const MenuItem& item : config.menu) menu.push_back(menu_item_name(item));
  nlohmann::json bounds = nlohmann::json::array();
  for (std::size_t k = 0; k < config.menu.size() + 1; ++k) {
    auto b = config.de.bound(static_cast<int>(k));
    bounds.push_back({b[0], b[1]});
  }
  std::vector<double> beta(config.theta.beta.data(),
                           config.theta.beta.data() + config.theta.beta.size());
  return nlohmann::json{
      {"seed", config.seed},
      {"threads", config.threads},
      {"market", {{"menu", menu}, {"buyer_in_aggregate", config.buyer_in_aggregate}}},
      {"subsidy",
       {{"kind", config.subsidy.kind == SubsidyKind::ToBuyer ? "to_buyer" : "shared"},
        {"amount", config.subsidy.amount},
        {"threshold", config.subsidy.threshold}}},
      {"noise",
       {{"dist", config.noise.dist == NoiseDist::StdNormal
                     ? "std_normal"
                     : (config.noise.dist == NoiseDist::Normal ? "normal" : "none")},
        {"sigma", config.noise.sigma}}},
      {"theta", {{"beta", beta}, {"delta", config.theta.delta}, {"gamma", config.theta.gamma}}},
      {"flags",
       {{"buyer_restriction", config.ineq.buyer_restriction},
        {"enable_ir_subsidy", config.ineq.enable_ir_subsidy},
        {"insertion_with_removal", config.ineq.insertion_with_removal},
        {"drop_noninteger", config.drop_noninteger},
        {"deviation_rule", config.deviation_rule_set
                               ? nlohmann::json(config.ineq.rule == DeviationRule::MemberSwaps
                                                    ? "member_swaps"
                                                    : "coalition_swaps")
                               : nlohmann::json()}}},
      {"de",
       {{"population", config.de.population},
        {"generations", config.de.generations},
        {"restarts", config.de.restarts},
        {"weight", config.de.weight},
        {"crossover", config.de.crossover},
        {"bounds", bounds},
        {"delta_fixed", config.delta_fixed ? nlohmann::json(*config.delta_fixed)
                                           : nlohmann::json()},
        {"delta_grid", config.delta_grid}}},
      {"dgp",
       {{"n_firms", config.dgp.n_firms},
        {"law", config.dgp.law == TonnageLaw::LogNormalScaled ? "lognormal" : "uniform_large"},
        {"subsidy_kind",
         config.dgp.subsidy_kind == SubsidyKind::ToBuyer ? "to_buyer" : "shared"},
        {"gamma", config.dgp.theta0.gamma},
        {"n_sims", config.n_sims},
        {"drop_noninteger", config.dgp.drop_noninteger}}},
      {"resample",
       {{"method",
         config.resample.method == ResampleMethod::Bootstrap ? "bootstrap" : "subsampling"},
        {"replications", config.resample.replications},
        {"subsample_size", config.resample.subsample_size},
        {"population", config.resample_population}}},
      {"policy",
       {{"amounts", config.policy.amounts},
        {"thresholds", config.policy.thresholds},
        {"draws", config.policy.draws},
        {"sigma", config.policy.noise.sigma}}},
      {"surface",
       {{"axes", config.surface_axes},
        {"lo", config.surface_lo},
        {"hi", config.surface_hi},
        {"points", config.surface_points}}}};
}

std::string config_hash(const RunConfig& config) {
  std::string canonical = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

Market market_from_table(const FirmTable& table, const RunConfig& config) {
  return Market(table.records, config.menu, config.subsidy, {}, config.buyer_in_aggregate);
}

MatchingOutcome observed_matching(const Market& market, bool buyer_restriction) {
  MatchingOutcome outcome;
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < market.size(); ++i) {
    const FirmRecord& f = market.firm(i);
    if (!f.role || *f.role == FirmRole::Unmatched || !f.group_id)
      outcome.unmatched.push_back(i);
    else
      groups[*f.group_id].push_back(i);
  }
  for (auto& [gid, members] : groups) {
    Group g;
    g.members = members;
    std::vector<int> candidates;
    if (buyer_restriction)
      for (int m : members)
        if (market.is_main(m)) candidates.push_back(m);
    if (candidates.empty()) candidates = members;
    // Largest eligible firm leads; members ascend, so ties keep the lower id.
    int best = candidates.front();
    for (int m : candidates)
      if (market.firm(m).total_tonnage() > market.firm(best).total_tonnage()) best = m;
    g.buyer = best;
    double tonnage = 0.0;
    for (int m : members) tonnage += market.firm(m).total_tonnage();
    g.qualified = tonnage > market.subsidy().threshold;
    outcome.groups.push_back(std::move(g));
  }
  std::sort(outcome.groups.begin(), outcome.groups.end(),
            [](const Group& a, const Group& b) { return a.members.front() < b.members.front(); });
  return outcome;
}

nlohmann::json allocation_to_json(const Allocation& alloc) {
  nlohmann::json nonzero = nlohmann::json::array();
  for (Eigen::Index i = 0; i < alloc.weights.rows(); ++i)
    for (Eigen::Index m = 0; m < alloc.weights.cols(); ++m)
      if (alloc.weights(i, m) > 1e-12)
        nonzero.push_back({{"firm", i}, {"bundle", m}, {"weight", alloc.weights(i, m)}});
  return {{"welfare", alloc.welfare}, {"is_integer", alloc.is_integer}, {"weights", nonzero}};
}

nlohmann::json outcome_to_json(const MatchingOutcome& outcome) {
  nlohmann::json groups = nlohmann::json::array();
  for (const Group& g : outcome.groups)
    groups.push_back({{"buyer", g.buyer}, {"members", g.members}, {"qualified", g.qualified}});
  OutcomeSummary s = classify_outcome(outcome);
  return {{"groups", groups},
          {"unmatched", outcome.unmatched},
          {"probabilistic", outcome.probabilistic},
          {"n_groups", s.n_groups},
          {"n_unmatched", s.n_unmatched},
          {"n_post_merger_firms", s.n_post_merger_firms},
          {"n_qualified", s.n_qualified}};
}

nlohmann::json theta_to_json(const Theta& theta) {
  std::vector<double> beta(theta.beta.data(), theta.beta.data() + theta.beta.size());
  return {{"beta0", theta.beta0}, {"beta", beta}, {"delta", theta.delta},
          {"gamma", theta.gamma}};
}

nlohmann::json estimate_to_json(const EstimateResult& result) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : result.maximizer_bounds) bounds.push_back({b[0], b[1]});
  return {{"theta_hat", theta_to_json(result.theta_hat)},
          {"score_count", result.score.count},
          {"score_fraction", result.score.fraction},
          {"score_normalized", result.score.normalized},
          {"restart_best", result.restart_best},
          {"maximizer_bounds", bounds},
          {"delta_calibrated", result.delta_calibrated ? nlohmann::json(*result.delta_calibrated)
                                                       : nlohmann::json()}};
}

namespace {

nlohmann::json aggregate_to_json(const McAggregate& agg) {
  return {{"n", agg.n},
          {"median_bias", {{"beta", agg.median_bias_beta}, {"gamma", agg.median_bias_gamma}}},
          {"rmse", {{"beta", agg.rmse_beta}, {"gamma", agg.rmse_gamma}}}};
}

}  // namespace

nlohmann::json mc_summary_to_json(const McSummary& summary, const Theta& theta0) {
  return {{"n_sims", summary.rows.size()},
          {"theta0", theta_to_json(theta0)},
          {"qualified", aggregate_to_json(summary.qualified)},
          {"unqualified", aggregate_to_json(summary.unqualified)},
          {"all", aggregate_to_json(summary.all)}};
}

nlohmann::json resample_to_json(const ResampleResult& result) {
  nlohmann::json ci = nlohmann::json::array();
  for (const CiInterval& interval : result.ci) ci.push_back({interval.lo, interval.hi});
  return {{"ci", ci},
          {"replications", result.rows.size()},
          {"n_skipped", result.n_skipped},
          {"skip_warning", result.skip_warning}};
}

nlohmann::json sweep_to_json(const SweepResult& sweep) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& cell : sweep.cells) {
    cells.push_back({{"amount", cell.amount},
                     {"threshold", cell.threshold},
                     {"failed", cell.failed},
                     {"median_groups", cell.median_groups},
                     {"median_unmatched", cell.median_unmatched},
                     {"median_expenditure", cell.median_expenditure},
                     {"n_integer_draws", cell.n_integer_draws},
                     {"modal_draws", cell.modal_draws},
                     {"modal", cell.failed ? nlohmann::json() : outcome_to_json(cell.modal)}});
  }
  return {{"cells", cells}};
}

std::string inequalities_to_csv(const InequalitySet& ineqs) {
  std::ostringstream os;
  os << "family,firm_a,firm_b,swap_out,swap_in";
  for (int k = 0; k < ineqs.theta_dim(); ++k) os << ",z" << k;
  os << '\n';
  static const char* names[] = {"two_coalitions", "one_coalition_drop", "unmatched_target",
                                "ir_unmatched", "ir_subsidy"};
  for (const Inequality& ineq : ineqs.items) {
    os << names[static_cast<int>(ineq.family)] << ',' << ineq.firm_a << ',' << ineq.firm_b << ','
       << ineq.swap_out << ',' << ineq.swap_in;
    for (int k = 0; k < ineq.z.size(); ++k) os << ',' << format_double(ineq.z(k));
    os << '\n';
  }
  return os.str();
}

std::string surface_to_csv(const Surface& surface) {
  std::ostringstream os;
  bool two = surface.axes.size() == 2;
  os << (two ? "axis0,axis1,count,normalized\n" : "axis0,count,normalized\n");
  for (Eigen::Index r = 0; r < surface.counts.rows(); ++r)
    for (Eigen::Index c = 0; c < surface.counts.cols(); ++c) {
      os << format_double(surface.axes[0].grid(r));
      if (two) os << ',' << format_double(surface.axes[1].grid(c));
      os << ',' << surface.counts(r, c) << ','
         << format_double(surface.counts(r, c) * surface.pair_normalizer) << '\n';
    }
  return os.str();
}

std::string replicates_to_csv(const ResampleResult& result) {
  std::ostringstream os;
  os << "replicate,skipped,score_count,n_inequalities,beta,delta,gamma\n";
  for (const ReplicateRow& row : result.rows) {
    os << row.replicate << ',' << (row.skipped ? 1 : 0) << ',' << row.score_count << ','
       << row.n_inequalities;
    if (row.skipped) {
      os << ",,,\n";
      continue;
    }
    os << ',';
    for (int k = 0; k < row.theta_hat.beta.size(); ++k)
      os << (k ? ";" : "") << format_double(row.theta_hat.beta(k));
    os << ',' << format_double(row.theta_hat.delta) << ','
       << format_double(row.theta_hat.gamma) << '\n';
  }
  return os.str();
}

std::string mc_rows_to_csv(const McSummary& summary) {
  std::ostringstream os;
  os << "sim,beta,delta,gamma,score_count,n_inequalities,qualified,attempts\n";
  for (const McSimRow& row : summary.rows)
    os << row.sim << ',' << format_double(row.beta) << ',' << format_double(row.delta) << ','
       << format_double(row.gamma) << ',' << row.score_count << ',' << row.n_inequalities << ','
       << (row.qualified ? 1 : 0) << ',' << row.attempts << '\n';
  return os.str();
}

std::string cells_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "amount,threshold,failed,median_groups,median_unmatched,median_expenditure,"
        "n_integer_draws,modal_draws,modal\n";
  for (const CellResult& cell : sweep.cells) {
    os << format_double(cell.amount) << ',' << format_double(cell.threshold) << ','
       << (cell.failed ? 1 : 0) << ',' << format_double(cell.median_groups) << ','
       << format_double(cell.median_unmatched) << ',' << format_double(cell.median_expenditure)
       << ',' << cell.n_integer_draws << ',' << cell.modal_draws << ','
       << (cell.failed ? "" : outcome_key(cell.modal)) << '\n';
  }
  return os.str();
}

std::string flows_to_csv(const std::vector<FlowRow>& rows) {
  std::ostringstream os;
  os << "amount,threshold,firm,source,target,weight\n";
  for (const FlowRow& row : rows)
    os << format_double(row.amount) << ',' << format_double(row.threshold) << ',' << row.firm
       << ',' << row.source << ',' << row.target << ',' << format_double(row.weight) << '\n';
  return os.str();
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const RunConfig& config, double elapsed_seconds,
                    const std::vector<std::string>& outputs) {
  nlohmann::json manifest{{"schema_version", 1},
                          {"tool", "coalmatch"},
                          {"version", "0.1.0"},
                          {"command", command},
                          {"config_hash", config_hash(config)},
                          {"seed", config.seed},
                          {"threads", config.threads},
                          {"elapsed_seconds", elapsed_seconds},
                          {"outputs", outputs}};
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace coalmatch
