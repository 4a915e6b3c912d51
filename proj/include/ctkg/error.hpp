#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctkg {

/// Closed set of domain error codes. The textual form (to_string) is what
/// appears in error documents and on the wire.
enum class Errc {
  DuplicateName,
  DuplicateId,
  UnknownParent,
  CyclicParent,
  UnknownConcept,
  UnknownKind,
  SchemaViolation,
  DanglingEndpoint,
  NotFound,
  InUse,
  NonMonotonicTimespot,
  SelfLoop,
  BadDtype,
  FlowEndpointOutsideTwin,
  BadWindow,
  ParseError,
  ClosureNotAllowed,
  BadLimit,
  BadArgument,
  BadUri,
  InvalidProcess,
  HorizonExceeded,
  IncompleteTrace,
  UnknownSignal,
  UnsortedSeries,
  BadConfig,
  BadAssignment,
  BadBudget,
  BadSpace,
  BadObjective,
  UnsupportedVersion,
  MalformedDocument,
  MalformedHeader,
  IoError,
  Usage,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Position information, only set for PARSE_ERROR.
  std::optional<int> line;
  std::optional<int> column;
  std::vector<std::string> expected;

  /// {"error": CODE, "message": text, optional "line"/"column"/"expected"}
  nlohmann::json to_json() const;

 private:
  Errc code_;
};

/// HTTP status for a domain error code.
int http_status(Errc code);

}  // namespace ctkg
