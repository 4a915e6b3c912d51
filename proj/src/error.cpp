#include "ctkg/error.hpp"

namespace ctkg {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DuplicateName: return "DUPLICATE_NAME";
    case Errc::DuplicateId: return "DUPLICATE_ID";
    case Errc::UnknownParent: return "UNKNOWN_PARENT";
    case Errc::CyclicParent: return "CYCLIC_PARENT";
    case Errc::UnknownConcept: return "UNKNOWN_CONCEPT";
    case Errc::UnknownKind: return "UNKNOWN_KIND";
    case Errc::SchemaViolation: return "SCHEMA_VIOLATION";
    case Errc::DanglingEndpoint: return "DANGLING_ENDPOINT";
    case Errc::NotFound: return "NOT_FOUND";
    case Errc::InUse: return "IN_USE";
    case Errc::NonMonotonicTimespot: return "NON_MONOTONIC_TIMESPOT";
    case Errc::SelfLoop: return "SELF_LOOP";
    case Errc::BadDtype: return "BAD_DTYPE";
    case Errc::FlowEndpointOutsideTwin: return "FLOW_ENDPOINT_OUTSIDE_TWIN";
    case Errc::BadWindow: return "BAD_WINDOW";
    case Errc::ParseError: return "PARSE_ERROR";
    case Errc::ClosureNotAllowed: return "CLOSURE_NOT_ALLOWED";
    case Errc::BadLimit: return "BAD_LIMIT";
    case Errc::BadArgument: return "BAD_ARGUMENT";
    case Errc::BadUri: return "BAD_URI";
    case Errc::InvalidProcess: return "INVALID_PROCESS";
    case Errc::HorizonExceeded: return "HORIZON_EXCEEDED";
    case Errc::IncompleteTrace: return "INCOMPLETE_TRACE";
    case Errc::UnknownSignal: return "UNKNOWN_SIGNAL";
    case Errc::UnsortedSeries: return "UNSORTED_SERIES";
    case Errc::BadConfig: return "BAD_CONFIG";
    case Errc::BadAssignment: return "BAD_ASSIGNMENT";
    case Errc::BadBudget: return "BAD_BUDGET";
    case Errc::BadSpace: return "BAD_SPACE";
    case Errc::BadObjective: return "BAD_OBJECTIVE";
    case Errc::UnsupportedVersion: return "UNSUPPORTED_VERSION";
    case Errc::MalformedDocument: return "MALFORMED_DOCUMENT";
    case Errc::MalformedHeader: return "MALFORMED_HEADER";
    case Errc::IoError: return "IO_ERROR";
    case Errc::Usage: return "USAGE";
  }
  return "UNKNOWN";
}

nlohmann::json Error::to_json() const {
  nlohmann::json doc = {{"error", std::string(to_string(code_))}, {"message", what()}};
  if (line) doc["line"] = *line;
  if (column) doc["column"] = *column;
  if (!expected.empty()) doc["expected"] = expected;
  return doc;
}

int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound:
      return 404;
    case Errc::DuplicateId:
    case Errc::DuplicateName:
    case Errc::InUse:
    case Errc::NonMonotonicTimespot:
      return 409;
    case Errc::IoError:
      return 500;
    default:
      return 400;
  }
}

}  // namespace ctkg
