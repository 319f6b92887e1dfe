#include "ixbsp/errors.hpp"

namespace ixbsp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidBelief: return "InvalidBelief";
    case ErrorKind::UnknownLandmark: return "UnknownLandmark";
    case ErrorKind::DegenerateUpdate: return "DegenerateUpdate";
    case ErrorKind::IncompatibleHistories: return "IncompatibleHistories";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::DaMismatch: return "DaMismatch";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::UnsupportedModel: return "UnsupportedModel";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::UnknownSequence: return "UnknownSequence";
    case ErrorKind::IncompatibleHorizon: return "IncompatibleHorizon";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::IncompatibleStates: return "IncompatibleStates";
    case ErrorKind::IncompleteRecord: return "IncompleteRecord";
    case ErrorKind::IncompatibleTrees: return "IncompatibleTrees";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace ixbsp
