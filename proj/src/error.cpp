#include "syncon/error.hpp"

namespace syncon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InfeasibleInput: return "InfeasibleInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::MissingCovariates: return "MissingCovariates";
    case ErrorCode::OuterSearchFailed: return "OuterSearchFailed";
    case ErrorCode::AllReplicationsFailed: return "AllReplicationsFailed";
    case ErrorCode::MissingReferenceCell: return "MissingReferenceCell";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingTreatedColumn: return "MissingTreatedColumn";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::NonFiniteCell: return "NonFiniteCell";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace syncon
