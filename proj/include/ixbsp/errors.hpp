#pragma once

#include <stdexcept>
#include <string>

namespace ixbsp {

enum class ErrorKind {
  InvalidBelief,
  UnknownLandmark,
  DegenerateUpdate,
  IncompatibleHistories,
  UnknownVariable,
  DaMismatch,
  NumericalError,
  UnsupportedModel,
  InvalidInput,
  UnknownSequence,
  IncompatibleHorizon,
  EmptyCandidates,
  IncompatibleStates,
  IncompleteRecord,
  IncompatibleTrees,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ixbsp
