#include "mixedboot/error.hpp"

namespace mixedboot {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::SingularClusterDesign: return "SingularClusterDesign";
    case ErrorCode::SingularEmpiricalCovariance: return "SingularEmpiricalCovariance";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingularBootstrapCovariance: return "SingularBootstrapCovariance";
    case ErrorCode::NonPositiveVarianceComponent: return "NonPositiveVarianceComponent";
    case ErrorCode::ZeroReplicateMean: return "ZeroReplicateMean";
    case ErrorCode::LeverageOne: return "LeverageOne";
    case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorCode::UnknownIntervalType: return "UnknownIntervalType";
    case ErrorCode::IncompatibleResults: return "IncompatibleResults";
    case ErrorCode::NotRandomInterceptModel: return "NotRandomInterceptModel";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::MultipleGroupClauses: return "MultipleGroupClauses";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mixedboot
