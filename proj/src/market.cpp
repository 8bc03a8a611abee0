#include "coalmatch/market.hpp"

#include <cmath>

namespace coalmatch {

Covariates build_covariates(const FirmRecord& firm) {
  Covariates out;
  out.size_by_type = firm.tonnage;
  out.size_total = firm.tonnage.sum();
  if (out.size_total > 0.0) {
    out.share_by_type = firm.tonnage / out.size_total;
    out.hhi = out.share_by_type.squaredNorm();
  } else {
    out.share_by_type = Eigen::VectorXd::Zero(firm.tonnage.size());
    out.hhi = 0.0;
    out.degenerate = true;
  }
  return out;
}

Covariates CoalitionAggregate::to_covariates() const {
  Covariates out;
  out.size_by_type = tonnage_by_type;
  out.size_total = size_total;
  if (size_total > 0.0) {
    Eigen::VectorXd agg_share = tonnage_by_type / size_total;
    out.hhi = agg_share.squaredNorm();
  } else {
    out.hhi = 0.0;
    out.degenerate = true;
  }
  out.share_by_type = count > 0 ? Eigen::VectorXd(share_sum / count)
                                : Eigen::VectorXd::Zero(tonnage_by_type.size());
  return out;
}

Covariates coalition_covariates(std::span<const Covariates> members) {
  if (members.empty()) throw null_coalition("coalition covariates require at least one member");
  CoalitionAggregate agg;
  agg.init(static_cast<int>(members[0].size_by_type.size()));
  for (const Covariates& m : members) agg.add(m);
  return agg.to_covariates();
}

double subsidy_term(const SubsidySpec& spec, double coalition_tonnage, int coalition_size) {
  if (!(coalition_tonnage > spec.threshold)) return 0.0;
  switch (spec.kind) {
    case SubsidyKind::ToBuyer: return spec.amount;
    case SubsidyKind::Shared: return spec.amount / coalition_size;
  }
  return 0.0;
}

double merger_cost(double gamma, int n_targets) {
  return n_targets <= 0 ? 0.0 : gamma * n_targets;
}

double menu_value(const MenuItem& item, const Covariates& cov) {
  switch (item.kind) {
    case CovariateKind::TotalSize: return cov.size_total;
    case CovariateKind::SizeByType: return cov.size_by_type(item.type_index);
    case CovariateKind::ShareByType: return cov.share_by_type(item.type_index);
  }
  return 0.0;
}

Market::Market(std::vector<FirmRecord> firms, CovariateMenu menu, SubsidySpec subsidy,
               CostSpec cost, bool buyer_in_aggregate)
    : firms_(std::move(firms)),
      menu_(std::move(menu)),
      subsidy_(subsidy),
      cost_(cost),
      buyer_in_aggregate_(buyer_in_aggregate) {
  if (firms_.empty()) throw empty_data("market has no firms");
  if (menu_.empty()) throw config_error("covariate menu is empty");
  const auto n_types = firms_[0].tonnage.size();
  covariates_.reserve(firms_.size());
  for (const FirmRecord& f : firms_) {
    if (f.tonnage.size() != n_types)
      throw config_error("firm " + std::to_string(f.id) + " has inconsistent carrier-type count");
    if ((f.tonnage.array() < 0.0).any())
      throw bad_decimal("firm " + std::to_string(f.id) + " has negative tonnage");
    covariates_.push_back(build_covariates(f));
  }
  for (const MenuItem& item : menu_) {
    if (item.kind != CovariateKind::TotalSize &&
        (item.type_index < 0 || item.type_index >= n_types))
      throw config_error("menu references carrier type " + std::to_string(item.type_index) +
                         " outside [0, " + std::to_string(n_types) + ")");
  }
  eta_ = Eigen::VectorXd::Ones(static_cast<int>(firms_.size()));
}

void Market::set_eta(Eigen::VectorXd eta) {
  if (eta.size() != size()) throw config_error("eta length must equal market size");
  eta_ = std::move(eta);
}

Eigen::VectorXd Market::interaction_vector(const Covariates& buyer, const Covariates& coal) const {
  Eigen::VectorXd out(static_cast<int>(menu_.size()));
  for (std::size_t k = 0; k < menu_.size(); ++k)
    out(static_cast<int>(k)) = menu_value(menu_[k], buyer) * menu_value(menu_[k], coal);
  return out;
}

ValueStack Market::unmatched_stack(int i) const {
  ValueStack stack;
  stack.interactions = interaction_vector(covariates_[i], covariates_[i]);
  return stack;
}

ValueStack Market::make_stack(int i, const CoalitionAggregate& interaction_agg,
                              double coalition_tonnage, int coalition_size,
                              int n_targets) const {
  ValueStack stack;
  stack.interactions =
      interaction_vector(covariates_[i], interaction_agg.to_covariates());
  stack.subsidy = subsidy_term(subsidy_, coalition_tonnage, coalition_size);
  stack.targets = cost_.per_target ? n_targets : (n_targets > 0 ? 1 : 0);
  return stack;
}

ValueStack Market::buyer_stack(int i, std::span<const int> targets) const {
  if (targets.empty()) throw null_coalition("buyer bundle has no targets");
  CoalitionAggregate full;
  full.init(n_types());
  full.add(covariates_[i]);
  CoalitionAggregate targets_only;
  targets_only.init(n_types());
  for (int t : targets) {
    full.add(covariates_[t]);
    targets_only.add(covariates_[t]);
  }
  const CoalitionAggregate& interaction_agg = buyer_in_aggregate_ ? full : targets_only;
  return make_stack(i, interaction_agg, full.size_total, full.count,
                    static_cast<int>(targets.size()));
}

double Market::production_value(int i, BundleClass cls, std::span<const int> targets,
                                const Theta& theta, double eps) const {
  check_theta(theta);
  switch (cls) {
    case BundleClass::Null: return unmatched_stack(i).value(theta) + eps;
    case BundleClass::SellerSelf: return 0.0;
    case BundleClass::Buyer: return buyer_stack(i, targets).value(theta) + eps;
    case BundleClass::Unreal: return kUnrealPayoff;
  }
  return 0.0;
}

void Market::check_theta(const Theta& theta) const {
  if (theta.beta.size() + 1 != static_cast<Eigen::Index>(menu_.size()))
    throw config_error("theta.beta has dimension " + std::to_string(theta.beta.size()) +
                       ", menu needs " + std::to_string(menu_.size() - 1));
}

}  // namespace coalmatch
