#pragma once

#include <stdexcept>
#include <string>

namespace coalmatch {

// All library failures carry a stable machine-parsable kind plus a detail
// message; what() renders as "<kind>: <detail>".
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

inline Error config_error(const std::string& detail) { return Error("ConfigError", detail); }
inline Error null_coalition(const std::string& detail) { return Error("NullCoalition", detail); }
inline Error market_too_large(const std::string& detail) { return Error("MarketTooLarge", detail); }
inline Error oracle_too_large(const std::string& detail) { return Error("OracleTooLarge", detail); }
inline Error solver_error(const std::string& detail) { return Error("SolverError", detail); }
inline Error empty_inequality_set(const std::string& detail) { return Error("EmptyInequalitySet", detail); }
inline Error degenerate_dgp(const std::string& detail) { return Error("DegenerateDGP", detail); }
inline Error missing_column(const std::string& detail) { return Error("MissingColumn", detail); }
inline Error bad_decimal(const std::string& detail) { return Error("BadDecimal", detail); }
inline Error duplicate_id(const std::string& detail) { return Error("DuplicateId", detail); }
inline Error empty_data(const std::string& detail) { return Error("EmptyData", detail); }

}  // namespace coalmatch
