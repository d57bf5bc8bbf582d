#include "stigscan/errors.hpp"

namespace stigscan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::IdCollision: return "IdCollision";
    case ErrorCode::NoAdmissions: return "NoAdmissions";
    case ErrorCode::UnknownInsuranceLabel: return "UnknownInsuranceLabel";
    case ErrorCode::AgeBelowRange: return "AgeBelowRange";
    case ErrorCode::EmptyLexicon: return "EmptyLexicon";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::LexiconMismatch: return "LexiconMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoCharts: return "NoCharts";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::AllZeroOutcome: return "AllZeroOutcome";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::DegenerateClusters: return "DegenerateClusters";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::InvalidRates: return "InvalidRates";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
  }
  return "Unknown";
}

}  // namespace stigscan
