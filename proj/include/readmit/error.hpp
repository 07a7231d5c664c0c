#pragma once

#include <stdexcept>
#include <string>

namespace readmit {

enum class ErrorKind {
  Config,
  Staleness,
  Numeric,
  Parse,
  Integrity,
  Encoding,
  Lookup,
  Alignment,
  Corruption,
  UnsupportedVersion,
  Shape,
  State,
  MetricUndefined,
  DegenerateSample,
  Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// Exit code used by the CLI for an error kind: 2 config, 3 staleness,
// 4 numeric failure, 1 for everything else.
int exit_code_for(ErrorKind kind);

}  // namespace readmit
