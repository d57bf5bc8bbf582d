#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stigscan/corpus.hpp"
#include "stigscan/lexicon.hpp"

namespace stigscan {

// Generator settings. Rate ratios and prevalences are keyed by covariate
// machine names, e.g. rr.stigma.gender.Male or prevalence.ethnicity.Asian.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_patients = 200;
  std::size_t n_providers = 60;
  std::size_t notes_per_patient_min = 5;
  std::size_t notes_per_patient_max = 15;
  std::size_t sentences_per_note_min = 3;
  std::size_t sentences_per_note_max = 6;
  std::size_t words_per_sentence_min = 6;
  std::size_t words_per_sentence_max = 14;
  std::size_t filler_vocab_size = 400;

  double base_rate_stigma = 0.05;  // per-note flag probability at reference levels
  double base_rate_doubt = 0.02;
  double sigma2_stigma = 0.0;      // patient random-intercept variance (log scale)
  double sigma2_doubt = 0.0;

  double excluded_category_fraction = 0.05;  // Radiology filler notes
  double missing_cgid_fraction = 0.02;
  double deidentified_age_fraction = 0.01;   // ages > 120, clamped on ingest
  double second_admission_fraction = 0.2;

  // Categorical: prevalence.<covariate>.<level>; the reference level takes the
  // remaining mass. Conditions: prevalence.condition.<name> = probability.
  std::map<std::string, std::map<std::string, double>> prevalence = default_prevalence();
  // rr.<outcome>.<covariate>.<level>, outcome in {stigma, doubt}.
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> rate_ratios;

  static std::map<std::string, std::map<std::string, double>> default_prevalence();
  // Throws InvalidArgument for unknown keys, Parse for malformed values.
  static SynthConfig parse(std::string_view text);
  static SynthConfig load(const std::filesystem::path& path);

  double rate_ratio(std::string_view outcome, const std::string& covariate, const std::string& level) const;
  // Throws InvalidRates unless every reachable per-note rate lies in (0, 1)
  // before the random intercept is applied.
  void validate() const;
};

struct SynthCorpus {
  std::string notes_csv;
  std::string patients_csv;
  std::string admissions_csv;
  std::string caregivers_csv;
  std::string diagnoses_csv;
  std::string truth_jsonl;

  std::size_t notes = 0;
  std::size_t excluded_notes = 0;
  std::size_t flagged_stigma = 0;
  std::size_t flagged_doubt = 0;
  std::size_t probability_clamped = 0;  // per-note rates capped at 1 by the random intercept
  std::vector<std::string> injectable_stigma_terms;
  std::vector<std::string> injectable_doubt_terms;
};

// Only terms that round-trip through segmentation and matching as exactly one
// match of their own lexicon are injected.
SynthCorpus generate(const SynthConfig& config, const Lexicon& stigma = Lexicon::shipped(LexiconKind::StigmatizingLabels),
                     const Lexicon& doubt = Lexicon::shipped(LexiconKind::DoubtMarkers));

// NOTEEVENTS.csv, PATIENTS.csv, ADMISSIONS.csv, CAREGIVERS.csv, DIAGNOSES_ICD.csv, truth.jsonl
TablePaths write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& out_dir);
CsvTables synth_tables(const SynthCorpus& corpus);

// Pseudo-words that share no token with any lexicon term or abbreviation.
std::vector<std::string> filler_vocabulary(std::size_t size, std::uint64_t seed,
                                           const std::vector<const Lexicon*>& lexicons);

}  // namespace stigscan
