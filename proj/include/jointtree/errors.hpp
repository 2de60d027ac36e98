#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jointtree {

enum class ErrorCode {
  InvalidArgument,
  InvalidCandidate,
  DuplicateEntity,
  DuplicateSpan,
  FeatureDimError,
  GradShapeError,
  GoldSpanPruned,
  InvalidAnnotation,
  UncoverableGold,
  InvalidClustering,
  GraphDisconnected,
  ClusterUnreachable,
  MalformedTree,
  OracleTooLarge,
  ParseError,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace jointtree
