#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stigscan/aggregation.hpp"
#include "stigscan/stats.hpp"

namespace stigscan {

std::string_view tool_version();

// Everything that determines a run's outputs.
struct RunManifest {
  std::map<std::string, std::string> inputs;          // table -> path as given
  std::map<std::string, std::string> input_hashes;    // table -> FNV-1a 64 of file bytes
  std::map<std::string, std::string> lexicon_hashes;  // lexicon kind -> hash of file bytes
  std::string counting_mode = "flagged_charts";
  std::string model_mode = "per_predictor";
  bool classifier = false;
  std::map<std::string, std::string> classifier_hashes;  // lexicon kind -> model hash
  std::uint64_t seed = 0;
  std::string version = std::string(tool_version());

  // Sorted-key JSON; the id is the hash of this text.
  std::string canonical_json() const;
  std::string id() const;
  static RunManifest from_json(std::string_view text);
};

struct HeadlineTotals {
  std::size_t notes = 0;
  std::size_t patients = 0;
  std::size_t providers = 0;
  std::size_t flagged_stigma_notes = 0;
  std::size_t flagged_doubt_notes = 0;
  std::int64_t stigma_sentences = 0;
  std::int64_t doubt_sentences = 0;
  std::size_t notes_without_provider = 0;
  std::size_t notes_without_patient_record = 0;
};

struct CorrelationSummary {
  EntityLevel level = EntityLevel::Patient;
  std::optional<CorrelationResult> result;
  std::string error;
};

struct AnalysisResults {
  std::string manifest_id;
  CountingMode counting_mode = CountingMode::FlaggedCharts;
  ModelMode model_mode = ModelMode::PerPredictor;
  HeadlineTotals totals;
  std::optional<DescriptiveStats> patient_descriptives;
  std::optional<DescriptiveStats> provider_descriptives;
  std::vector<BlockFit> fits;
  std::vector<MixedSummary> mixed;
  std::vector<CorrelationSummary> correlations;
};

// Descriptives, per-level Poisson models for both outcomes, random-intercept
// clustering and Spearman correlations for one aggregated corpus.
AnalysisResults analyze(const AggregationResult& aggregation, ModelMode mode, const std::string& manifest_id,
                        unsigned threads = 1, const MixedOptions& mixed_options = {});

std::string analysis_to_json(const AnalysisResults& results);
AnalysisResults analysis_from_json(std::string_view text);

// "1.16 (1.08, 1.25)**"
std::string format_rate_ratio_cell(const RateRatio& rr);
std::string format_rate_ratio_cell(double rr, double ci_low, double ci_high, double p_value);
// Table row label for a covariate level ("Black/African American").
std::string level_display_name(const std::string& predictor, const std::string& level);

struct Report {
  std::string markdown;
  std::string csv;  // outcome,entity_level,predictor,level,cell,rr,ci_low,ci_high,p,stars,model_mode
};

// Throws ManifestMismatch when the results were produced under another
// manifest, EmptyInput when there are no fits to render.
Report emit_report(const RunManifest& manifest, const AnalysisResults& results);

}  // namespace stigscan
