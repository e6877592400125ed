#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace searchsig {

enum class ErrorKind {
  // input validation
  MissingFile,
  MalformedRow,
  DuplicateKey,
  NonNumericCount,
  NonFiniteValue,
  UnknownRegion,
  UnknownState,
  InvalidArgument,
  UsageError,
  SpecInvalid,
  TooLarge,
  IncompleteReport,
  // pipeline / runtime
  IoFailure,
  NoOverlap,
  TooFewCounties,
  TooFewStates,
  EmptyInput,
  NoObservedSignatures,
  EmptyCounty,
  BadDimension,
  DegenerateData,
  NonFiniteInput,
  AllFoldsDegenerate,
  NoSites,
  NoLabels,
  ZeroVariance,
  LengthMismatch,
  EmptyTestSet,
  Leakage,
};

std::string_view to_string(ErrorKind kind);

/// Validation errors map to CLI exit code 1, everything else to 2.
bool is_validation_error(ErrorKind kind);

/// Every failure in the library is reported as a searchsig::Error. The kind
/// is stable and machine-checkable; line numbers (1-based, header = line 1)
/// and offending keys are carried when the failure is tied to input data.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail, std::optional<std::size_t> line = std::nullopt,
        std::string key = {});

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
  std::string key_;
};

}  // namespace searchsig
