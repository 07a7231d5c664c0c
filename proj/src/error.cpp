#include "readmit/error.hpp"

namespace readmit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Staleness: return "staleness error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Integrity: return "integrity error";
    case ErrorKind::Encoding: return "encoding error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Corruption: return "corruption error";
    case ErrorKind::UnsupportedVersion: return "unsupported version";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::State: return "state error";
    case ErrorKind::MetricUndefined: return "metric undefined";
    case ErrorKind::DegenerateSample: return "degenerate sample";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Staleness: return 3;
    case ErrorKind::Numeric: return 4;
    default: return 1;
  }
}

}  // namespace readmit
