#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stigscan {

enum class ErrorCode {
  Io,
  Parse,
  InvalidArgument,
  MissingColumn,
  IdCollision,
  NoAdmissions,
  UnknownInsuranceLabel,
  AgeBelowRange,
  EmptyLexicon,
  SingleClassTraining,
  LexiconMismatch,
  LengthMismatch,
  NoCharts,
  EmptyInput,
  NotConverged,
  AllZeroOutcome,
  RankDeficientDesign,
  DegenerateClusters,
  NegativeVariance,
  ConstantInput,
  InvalidRates,
  ManifestMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a stable code so the CLI can
// print a machine-parsable line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stigscan
