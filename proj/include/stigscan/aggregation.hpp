#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stigscan/corpus.hpp"

namespace stigscan {

enum class CountingMode { FlaggedCharts, Sentences };
enum class EntityLevel { Patient, Provider };
enum class Outcome { Stigma, Doubt };

std::string_view to_string(CountingMode mode);  // "flagged_charts" / "sentences"
std::string_view to_string(EntityLevel level);  // "patient" / "provider"
std::string_view to_string(Outcome outcome);    // "stigma_count" / "doubt_count"
CountingMode parse_counting_mode(std::string_view name);
EntityLevel parse_entity_level(std::string_view name);
Outcome parse_outcome(std::string_view name);

// Per-sentence detection result. Only sentences with at least one lexicon hit
// are materialized; all other sentences are implicitly negative.
struct SentenceLabel {
  std::string note_id;
  std::size_t sentence_index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool stigma_hit = false;
  bool stigma_positive = false;
  double stigma_probability = 0.0;
  std::string stigma_terms;  // matched terms joined by ';'
  bool doubt_hit = false;
  bool doubt_positive = false;
  double doubt_probability = 0.0;
  std::string doubt_terms;
};

struct NoteFlags {
  std::string note_id;
  bool stigma_present = false;
  bool doubt_present = false;
  std::int64_t stigma_sentence_count = 0;
  std::int64_t doubt_sentence_count = 0;

  bool operator==(const NoteFlags&) const = default;
};

NoteFlags aggregate_note(std::string_view note_id, std::span<const SentenceLabel> labels);

// Count contributed by one note under a counting mode.
std::int64_t note_count(const NoteFlags& flags, Outcome outcome, CountingMode mode);

struct EntityOutcome {
  std::string entity_id;
  EntityLevel level = EntityLevel::Patient;
  std::int64_t stigma_count = 0;
  std::int64_t doubt_count = 0;
  std::int64_t chart_total = 0;
  std::map<std::string, std::string> covariates;  // empty string = missing

  std::int64_t count(Outcome outcome) const {
    return outcome == Outcome::Stigma ? stigma_count : doubt_count;
  }
  std::string covariate(const std::string& name) const;
};

// Throws NoCharts when note_flags is empty.
EntityOutcome aggregate_entity(std::string_view entity_id, EntityLevel level, std::span<const NoteFlags> note_flags,
                               CountingMode mode, std::map<std::string, std::string> covariates = {});

std::map<std::string, std::string> patient_covariates(const PatientRecord& patient);
std::map<std::string, std::string> provider_covariates(const ProviderRecord& provider);

// Column order used for entity-outcome CSVs.
const std::vector<std::string>& covariate_columns(EntityLevel level);
// Known level order for a covariate (reports, descriptives); empty if free-form.
std::vector<std::string> covariate_level_order(const std::string& covariate);

struct NoteOutcomeRow {
  std::string note_id;
  std::string patient_id;
  std::string provider_id;  // empty when the note has no CGID
  NoteFlags flags;
};

struct AggregationResult {
  CountingMode mode = CountingMode::FlaggedCharts;
  std::vector<EntityOutcome> patients;
  std::vector<EntityOutcome> providers;
  std::vector<NoteOutcomeRow> notes;
  std::size_t notes_without_provider = 0;        // D6: kept for patients only
  std::size_t notes_without_patient_record = 0;  // D5: kept for providers only
  std::size_t flagged_stigma_notes = 0;
  std::size_t flagged_doubt_notes = 0;
  std::int64_t stigma_sentences = 0;
  std::int64_t doubt_sentences = 0;
};

// note_flags must be parallel to corpus.notes.
AggregationResult aggregate_corpus(const Corpus& corpus, std::span<const NoteFlags> note_flags, CountingMode mode);

// entity_id,level,stigma_count,doubt_count,chart_total,<covariate columns>
void write_entity_outcomes(std::ostream& out, std::span<const EntityOutcome> outcomes);
std::vector<EntityOutcome> parse_entity_outcomes(std::string_view csv_text);
std::vector<EntityOutcome> read_entity_outcomes(const std::filesystem::path& path);

// note_id,patient_id,provider_id,stigma_present,doubt_present,stigma_sentences,doubt_sentences
void write_note_outcomes(std::ostream& out, std::span<const NoteOutcomeRow> rows);
std::vector<NoteOutcomeRow> read_note_outcomes(const std::filesystem::path& path);

// note_id,sentence_index,char_start,char_end,stigma_hit,stigma_positive,stigma_probability,
// stigma_terms,doubt_hit,doubt_positive,doubt_probability,doubt_terms
void write_sentence_labels(std::ostream& out, std::span<const SentenceLabel> labels);
std::vector<SentenceLabel> read_sentence_labels(const std::filesystem::path& path);

// ---- Descriptives ------------------------------------------------------------

struct NumericSummary {
  std::string variable;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n-1) standard deviation
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct CategoryCount {
  std::string level;
  std::size_t count = 0;
  double percent = 0.0;
};

struct CategoricalSummary {
  std::string variable;
  std::size_t n = 0;        // entities with a value
  std::size_t missing = 0;
  std::vector<CategoryCount> levels;
};

struct DescriptiveStats {
  EntityLevel level = EntityLevel::Patient;
  std::size_t n = 0;
  std::vector<CategoricalSummary> categorical;
  std::vector<NumericSummary> numeric;
};

NumericSummary summarize(std::string variable, std::span<const double> values);

// Throws EmptyInput for an empty entity list.
DescriptiveStats descriptive_table(std::span<const EntityOutcome> entities);

}  // namespace stigscan
