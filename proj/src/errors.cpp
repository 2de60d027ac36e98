#include "jointtree/errors.hpp"

namespace jointtree {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidCandidate: return "InvalidCandidate";
    case ErrorCode::DuplicateEntity: return "DuplicateEntity";
    case ErrorCode::DuplicateSpan: return "DuplicateSpan";
    case ErrorCode::FeatureDimError: return "FeatureDimError";
    case ErrorCode::GradShapeError: return "GradShapeError";
    case ErrorCode::GoldSpanPruned: return "GoldSpanPruned";
    case ErrorCode::InvalidAnnotation: return "InvalidAnnotation";
    case ErrorCode::UncoverableGold: return "UncoverableGold";
    case ErrorCode::InvalidClustering: return "InvalidClustering";
    case ErrorCode::GraphDisconnected: return "GraphDisconnected";
    case ErrorCode::ClusterUnreachable: return "ClusterUnreachable";
    case ErrorCode::MalformedTree: return "MalformedTree";
    case ErrorCode::OracleTooLarge: return "OracleTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace jointtree
