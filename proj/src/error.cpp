#include "searchsig/error.hpp"

namespace searchsig {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::NonNumericCount: return "NonNumericCount";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::UnknownRegion: return "UnknownRegion";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::IncompleteReport: return "IncompleteReport";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::TooFewCounties: return "TooFewCounties";
    case ErrorKind::TooFewStates: return "TooFewStates";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoObservedSignatures: return "NoObservedSignatures";
    case ErrorKind::EmptyCounty: return "EmptyCounty";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::AllFoldsDegenerate: return "AllFoldsDegenerate";
    case ErrorKind::NoSites: return "NoSites";
    case ErrorKind::NoLabels: return "NoLabels";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::Leakage: return "Leakage";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile:
    case ErrorKind::MalformedRow:
    case ErrorKind::DuplicateKey:
    case ErrorKind::NonNumericCount:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::UnknownRegion:
    case ErrorKind::UnknownState:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UsageError:
    case ErrorKind::SpecInvalid:
    case ErrorKind::TooLarge:
    case ErrorKind::IncompleteReport:
      return true;
    default:
      return false;
  }
}

namespace {

std::string compose(ErrorKind kind, const std::string& detail, std::optional<std::size_t> line) {
  std::string out(to_string(kind));
  if (line) out += "(line " + std::to_string(*line) + ")";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, std::string detail, std::optional<std::size_t> line, std::string key)
    : std::runtime_error(compose(kind, detail, line)), kind_(kind), line_(line), key_(std::move(key)) {}

}  // namespace searchsig
