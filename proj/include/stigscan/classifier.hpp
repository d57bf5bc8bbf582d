#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stigscan/lexicon.hpp"
#include "stigscan/text.hpp"

namespace stigscan {

struct AnnotatedSentence {
  std::string sentence;
  std::string term;
  LexiconKind lexicon = LexiconKind::DoubtMarkers;
  bool gold_positive = false;
  std::optional<std::string> annotator;
};

// Annotated-sample CSV: sentence,term,lexicon,gold_label,annotator
std::vector<AnnotatedSentence> read_annotations(const std::filesystem::path& path);
std::vector<AnnotatedSentence> parse_annotations(std::string_view csv_text);

// Context features around a match: position-bucketed unigrams and bigrams
// within +-window_k tokens plus the matched term identity. Sorted, unique.
std::vector<std::string> extract_features(std::span<const Token> tokens, std::size_t match_begin,
                                          std::size_t match_end, std::string_view term,
                                          std::size_t window_k);

struct TrainParams {
  std::size_t window_k = 8;
  // Objective: mean logistic loss + (l2 / 2) * |w|^2 (intercept unpenalized).
  double l2 = 0.01;
  double threshold = 0.5;
  double gradient_tolerance = 1e-6;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 0;
};

struct Prediction {
  bool positive = false;
  double probability = 0.0;
};

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(LexiconKind lexicon, std::vector<std::string> vocabulary, std::vector<double> weights,
                  double intercept, double l2, double threshold, std::size_t window_k);

  LexiconKind lexicon() const { return lexicon_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  double l2() const { return l2_; }
  double threshold() const { return threshold_; }
  std::size_t window_k() const { return window_k_; }

  ClassifierModel with_threshold(double threshold) const;

  double decision_value(std::span<const std::string> features) const;
  Prediction predict_features(std::span<const std::string> features) const;

  // Versioned line-oriented text format.
  std::string serialize() const;
  static ClassifierModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

 private:
  LexiconKind lexicon_ = LexiconKind::DoubtMarkers;
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> weights_;
  double intercept_ = 0.0;
  double l2_ = 0.0;
  double threshold_ = 0.5;
  std::size_t window_k_ = 8;
};

struct TrainReport {
  std::size_t epochs = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
  bool converged = false;
};

// Throws SingleClassTraining unless both classes have >= 2 examples.
ClassifierModel train(std::span<const AnnotatedSentence> annotated, LexiconKind lexicon,
                      const TrainParams& params = {}, TrainReport* report = nullptr);

// Throws LexiconMismatch when the match comes from another lexicon.
Prediction predict(const ClassifierModel& model, std::span<const Token> tokens, const Match& match);
Prediction predict(const ClassifierModel& model, const AnnotatedSentence& example);

struct EvalMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double macro_f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

EvalMetrics metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
EvalMetrics metrics_from_labels(std::span<const int> gold, std::span<const int> predicted);
EvalMetrics evaluate(const ClassifierModel& model, std::span<const AnnotatedSentence> test);

struct KappaResult {
  double observed_agreement = 0.0;
  double chance_agreement = 0.0;
  double kappa = 0.0;
  bool degenerate_marginals = false;  // a rater used a single label
};

KappaResult cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

// Binary design rows (active feature indices) for the logistic objective.
struct SparseRow {
  std::vector<std::uint32_t> active;
};

// Mean logistic loss + (l2/2)|w|^2 over params = [w..., b]. Fills gradient
// when non-null.
double logistic_objective(std::span<const SparseRow> rows, std::span<const double> labels,
                          std::span<const double> params, double l2, std::vector<double>* gradient);

// Locates the term's token sequence in the sentence; nullopt if absent.
std::optional<Match> locate_term(std::span<const Token> tokens, std::string_view term, LexiconKind lexicon);

}  // namespace stigscan
