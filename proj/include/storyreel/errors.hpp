#ifndef STORYREEL_ERRORS_HPP_
#define STORYREEL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace storyreel {

// Base for everything the library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Reading or writing persisted state failed. Carries the offending path.
struct PersistenceError : Error {
  PersistenceError(const std::string& msg, std::string path_)
      : Error(msg + ": " + path_), path(std::move(path_)) {}
  std::string path;
};

// Remote call failed after all retries.
struct TransportError : Error {
  using Error::Error;
};

// A request issued under a mock script matched no entry.
struct MockError : Error {
  using Error::Error;
};

// No balanced structured object could be recovered from model output.
struct ParseError : Error {
  ParseError(const std::string& msg, std::string raw_)
      : Error(msg), raw(std::move(raw_)) {}
  std::string raw;
};

// A pipeline stage could not complete.
struct StageError : Error {
  using Error::Error;
};

// Bad configuration, detected before any work starts.
struct ConfigError : Error {
  using Error::Error;
};

// Per-record dataset failure; the record is skipped, the run continues.
struct RecordError : Error {
  using Error::Error;
};

// A judge cell could not be scored; recorded as missing.
struct EvalError : Error {
  using Error::Error;
};

struct MuxError : Error {
  using Error::Error;
};

struct ResumeError : Error {
  using Error::Error;
};

}  // namespace storyreel

#endif  // STORYREEL_ERRORS_HPP_
