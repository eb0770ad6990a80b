#pragma once

#include <array>
#include <string_view>

namespace syncon {

/// Stable identifiers shared by the estimators, the Monte Carlo engine and
/// every file format.
enum class EstimatorId {
  Sc,                // "sc"
  ScDemeaned,        // "sc_demeaned"
  Ols,               // "ols"
  OlsAddUp,          // "ols_addup"
  ScNestedHalfLags,  // "sc_nested_halflags"
  ScNestedMean,      // "sc_nested_mean"
};

inline constexpr std::array<EstimatorId, 6> kAllEstimators = {
    EstimatorId::Sc,       EstimatorId::ScDemeaned,       EstimatorId::Ols,
    EstimatorId::OlsAddUp, EstimatorId::ScNestedHalfLags, EstimatorId::ScNestedMean};

std::string_view to_string(EstimatorId id);

/// Throws Error(InvalidArgument) on an unknown name.
EstimatorId parse_estimator_id(std::string_view name);

}  // namespace syncon
