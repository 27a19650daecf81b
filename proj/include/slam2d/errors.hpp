#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slam2d {

/// Base class for all recoverable engine errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// scan conversion / registration
struct EmptyCloud : Error {
  using Error::Error;
};
struct NoCorrespondences : Error {
  using Error::Error;
};
struct SingularInformation : Error {
  using Error::Error;
};

// factor graph
struct MissingVariable : Error {
  using Error::Error;
};
struct IndefiniteSystem : Error {
  using Error::Error;
};

// pipeline
struct BadConfig : Error {
  using Error::Error;
};
struct DegenerateScan : Error {
  using Error::Error;
};
struct MatchFailure : Error {
  using Error::Error;
};

// evaluation
struct NoMatches : Error {
  using Error::Error;
};
struct DegenerateAlignment : Error {
  using Error::Error;
};
struct TooShort : Error {
  using Error::Error;
};

// mapping
struct NoAssociations : Error {
  using Error::Error;
};

// simulator
struct BadWaypoints : Error {
  using Error::Error;
};

/// File errors carry "<path>:<line>: <message>" so the offending line is
/// always reported.
struct ParseError : Error {
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

struct OrderError : Error {
  OrderError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

}  // namespace slam2d
