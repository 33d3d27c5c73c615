#include "geoparc/error.hpp"

namespace geoparc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonProbability: return "NonProbability";
    case ErrorCode::TrivialLaw: return "TrivialLaw";
    case ErrorCode::BadParam: return "BadParam";
    case ErrorCode::BeyondRadius: return "BeyondRadius";
    case ErrorCode::DivergentAtRadius: return "DivergentAtRadius";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::BadTruncation: return "BadTruncation";
    case ErrorCode::NearRadius: return "NearRadius";
    case ErrorCode::NotSubcritical: return "NotSubcritical";
    case ErrorCode::BeyondThreshold: return "BeyondThreshold";
    case ErrorCode::NegativeRadicand: return "NegativeRadicand";
    case ErrorCode::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InsufficientRange: return "InsufficientRange";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace geoparc
