#include "stigscan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "stigscan/csv.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

namespace {

bool parse_gold(std::string_view raw, bool& out) {
  auto v = trim(raw);
  if (iequals(v, "positive") || v == "1" || iequals(v, "true") || iequals(v, "yes")) {
    out = true;
    return true;
  }
  if (iequals(v, "negative") || v == "0" || iequals(v, "false") || iequals(v, "no")) {
    out = false;
    return true;
  }
  return false;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<AnnotatedSentence> parse_annotations(std::string_view csv_text) {
  auto table = parse_csv(csv_text, "annotations");
  const auto c_sentence = table.require_column("sentence");
  const auto c_term = table.require_column("term");
  const auto c_lexicon = table.require_column("lexicon");
  const auto c_gold = table.require_column("gold_label");
  const auto c_annotator = table.find_column("annotator");
  std::vector<AnnotatedSentence> out;
  out.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    AnnotatedSentence a;
    a.sentence = table.cell(r, c_sentence);
    a.term = std::string(trim(table.cell(r, c_term)));
    a.lexicon = parse_lexicon_kind(table.cell(r, c_lexicon));
    if (!parse_gold(table.cell(r, c_gold), a.gold_positive)) {
      throw Error(ErrorCode::Parse, "annotation row " + std::to_string(r + 2) + ": bad gold_label '" +
                                        table.cell(r, c_gold) + "'");
    }
    if (!locate_term(normalize_tokens(a.sentence), a.term, a.lexicon)) {
      throw Error(ErrorCode::Parse, "annotation row " + std::to_string(r + 2) + ": term '" + a.term +
                                        "' does not occur in the sentence");
    }
    if (c_annotator) {
      auto ann = trim(table.cell(r, *c_annotator));
      if (!ann.empty()) a.annotator = std::string(ann);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AnnotatedSentence> read_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_file(path));
}

std::vector<std::string> extract_features(std::span<const Token> tokens, std::size_t match_begin,
                                          std::size_t match_end, std::string_view term,
                                          std::size_t window_k) {
  std::vector<std::string> features;
  auto add_bucket = [&](std::string_view prefix, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      features.push_back(std::string(prefix) + ":" + tokens[i].norm);
      if (i + 1 < to) features.push_back(std::string(prefix) + ":" + tokens[i].norm + "|" + tokens[i + 1].norm);
    }
  };
  const std::size_t left_from = match_begin > window_k ? match_begin - window_k : 0;
  const std::size_t right_to = std::min(tokens.size(), match_end + window_k);
  add_bucket("left", left_from, match_begin);
  add_bucket("match", match_begin, match_end);
  add_bucket("right", match_end, right_to);
  features.push_back("term:" + std::string(term));
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

std::optional<Match> locate_term(std::span<const Token> tokens, std::string_view term, LexiconKind lexicon) {
  auto parts = normalize_term(term);
  if (parts.empty() || parts.size() > tokens.size()) return std::nullopt;
  std::string joined = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) joined += " " + parts[i];
  for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < parts.size() && ok; ++j) ok = tokens[i + j].norm == parts[j];
    if (ok) return Match{joined, lexicon, i, i + parts.size()};
  }
  return std::nullopt;
}

ClassifierModel::ClassifierModel(LexiconKind lexicon, std::vector<std::string> vocabulary,
                                 std::vector<double> weights, double intercept, double l2, double threshold,
                                 std::size_t window_k)
    : lexicon_(lexicon),
      vocabulary_(std::move(vocabulary)),
      weights_(std::move(weights)),
      intercept_(intercept),
      l2_(l2),
      threshold_(threshold),
      window_k_(window_k) {
  if (vocabulary_.size() != weights_.size())
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from vocabulary size");
  if (!(threshold_ > 0.0 && threshold_ < 1.0))
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_.emplace(vocabulary_[i], i);
}

ClassifierModel ClassifierModel::with_threshold(double threshold) const {
  return ClassifierModel(lexicon_, vocabulary_, weights_, intercept_, l2_, threshold, window_k_);
}

double ClassifierModel::decision_value(std::span<const std::string> features) const {
  double z = intercept_;
  for (const auto& f : features) {
    auto it = index_.find(f);
    if (it != index_.end()) z += weights_[it->second];
  }
  return z;
}

Prediction ClassifierModel::predict_features(std::span<const std::string> features) const {
  double p = sigmoid(decision_value(features));
  return {p >= threshold_, p};
}

std::string ClassifierModel::serialize() const {
  std::ostringstream out;
  out << "stigscan-classifier 1\n";
  out << "lexicon " << to_string(lexicon_) << "\n";
  out << "window_k " << window_k_ << "\n";
  out << "l2 " << format_double(l2_) << "\n";
  out << "threshold " << format_double(threshold_) << "\n";
  out << "intercept " << format_double(intercept_) << "\n";
  out << "features " << vocabulary_.size() << "\n";
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    out << format_double(weights_[i]) << "\t" << vocabulary_[i] << "\n";
  }
  return out.str();
}

ClassifierModel ClassifierModel::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [](const std::string& why) { return Error(ErrorCode::Parse, "classifier model: " + why); };
  if (!std::getline(in, line) || line != "stigscan-classifier 1") throw fail("unsupported header");
  std::map<std::string, std::string> fields;
  for (const char* key : {"lexicon", "window_k", "l2", "threshold", "intercept", "features"}) {
    if (!std::getline(in, line)) throw fail("truncated header");
    auto sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key) throw fail(std::string("expected ") + key);
    fields[key] = line.substr(sp + 1);
  }
  const std::size_t n = std::stoul(fields["features"]);
  std::vector<std::string> vocab;
  std::vector<double> weights;
  vocab.reserve(n);
  weights.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw fail("truncated feature list");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw fail("bad feature line");
    weights.push_back(std::stod(line.substr(0, tab)));
    vocab.push_back(line.substr(tab + 1));
  }
  return ClassifierModel(parse_lexicon_kind(fields["lexicon"]), std::move(vocab), std::move(weights),
                         std::stod(fields["intercept"]), std::stod(fields["l2"]), std::stod(fields["threshold"]),
                         std::stoul(fields["window_k"]));
}

void ClassifierModel::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

double logistic_objective(std::span<const SparseRow> rows, std::span<const double> labels,
                          std::span<const double> params, double l2, std::vector<double>* gradient) {
  const std::size_t dim = params.size();
  const std::size_t bias = dim - 1;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  if (gradient) gradient->assign(dim, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double z = params[bias];
    for (auto j : rows[r].active) z += params[j];
    const double y = labels[r];
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += softplus(z) - y * z;
    if (gradient) {
      const double g = (sigmoid(z) - y) * inv_n;
      for (auto j : rows[r].active) (*gradient)[j] += g;
      (*gradient)[bias] += g;
    }
  }
  loss *= inv_n;
  double penalty = 0.0;
  for (std::size_t j = 0; j < bias; ++j) {
    penalty += params[j] * params[j];
    if (gradient) (*gradient)[j] += l2 * params[j];
  }
  return loss + 0.5 * l2 * penalty;
}

ClassifierModel train(std::span<const AnnotatedSentence> annotated, LexiconKind lexicon,
                      const TrainParams& params, TrainReport* report) {
  std::vector<std::vector<std::string>> example_features;
  std::vector<double> labels;
  std::size_t positives = 0, negatives = 0;
  for (const auto& a : annotated) {
    if (a.lexicon != lexicon) continue;
    auto tokens = normalize_tokens(a.sentence);
    auto m = locate_term(tokens, a.term, lexicon);
    if (!m) {
      throw Error(ErrorCode::InvalidArgument,
                  "term '" + a.term + "' does not occur in annotated sentence '" + a.sentence + "'");
    }
    example_features.push_back(extract_features(tokens, m->token_begin, m->token_end, m->term, params.window_k));
    labels.push_back(a.gold_positive ? 1.0 : 0.0);
    (a.gold_positive ? positives : negatives)++;
  }
  if (positives < 2 || negatives < 2) {
    throw Error(ErrorCode::SingleClassTraining,
                "training needs >= 2 examples of each class for " + std::string(to_string(lexicon)) + " (got " +
                    std::to_string(positives) + " positive, " + std::to_string(negatives) + " negative)");
  }

  std::vector<std::string> vocab;
  for (const auto& f : example_features) vocab.insert(vocab.end(), f.begin(), f.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  std::vector<SparseRow> rows(example_features.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& f : example_features[r]) {
      auto it = std::lower_bound(vocab.begin(), vocab.end(), f);
      rows[r].active.push_back(static_cast<std::uint32_t>(it - vocab.begin()));
    }
  }

  // L-BFGS with backtracking (Armijo) line search.
  const std::size_t dim = vocab.size() + 1;
  const std::size_t history = 10;
  std::vector<double> x(dim, 0.0), g, g_new;
  double f = logistic_objective(rows, labels, x, params.l2, &g);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::size_t epoch = 0;
  bool converged = norm2(g) < params.gradient_tolerance;
  while (!converged && epoch < params.max_epochs) {
    std::vector<double> q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], q);
      for (std::size_t i = 0; i < dim; ++i) q[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    else gamma = 1.0 / std::max(1.0, norm2(g));
    for (auto& v : q) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double beta = rho_hist[k] * dot(y_hist[k], q);
      for (std::size_t i = 0; i < dim; ++i) q[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    // Search direction d = -q.
    double slope = -dot(g, q);
    if (slope >= 0) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      q = g;
      slope = -dot(g, g);
    }
    double step = 1.0;
    std::vector<double> x_new(dim);
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < dim; ++i) x_new[i] = x[i] - step * q[i];
      f_new = logistic_objective(rows, labels, x_new, params.l2, &g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++epoch;
    if (!accepted) break;
    std::vector<double> s(dim), yv(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      yv[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    converged = norm2(g) < params.gradient_tolerance;
  }
  if (report) *report = {epoch, norm2(g), f, converged};

  const double intercept = x.back();
  x.pop_back();
  return ClassifierModel(lexicon, std::move(vocab), std::move(x), intercept, params.l2, params.threshold,
                         params.window_k);
}

Prediction predict(const ClassifierModel& model, std::span<const Token> tokens, const Match& match) {
  if (match.lexicon != model.lexicon()) {
    throw Error(ErrorCode::LexiconMismatch, "model serves " + std::string(to_string(model.lexicon())) +
                                                " but match is from " + std::string(to_string(match.lexicon)));
  }
  auto features = extract_features(tokens, match.token_begin, match.token_end, match.term, model.window_k());
  return model.predict_features(features);
}

Prediction predict(const ClassifierModel& model, const AnnotatedSentence& example) {
  auto tokens = normalize_tokens(example.sentence);
  auto m = locate_term(tokens, example.term, example.lexicon);
  if (!m) throw Error(ErrorCode::InvalidArgument, "term '" + example.term + "' not found in sentence");
  return predict(model, tokens, *m);
}

EvalMetrics metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  EvalMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const double total = static_cast<double>(tp + fp + tn + fn);
  if (total > 0) m.accuracy = static_cast<double>(tp + tn) / total;
  m.precision_undefined = tp + fp == 0;
  m.recall_undefined = tp + fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  auto f1 = [](std::size_t t, std::size_t falsep, std::size_t falsen) {
    const double denom = static_cast<double>(2 * t + falsep + falsen);
    return denom > 0 ? 2.0 * static_cast<double>(t) / denom : 0.0;
  };
  // Negative class F1 swaps the roles: its TP is tn, its FP is fn, its FN is fp.
  m.macro_f1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
  return m;
}

EvalMetrics metrics_from_labels(std::span<const int> gold, std::span<const int> predicted) {
  if (gold.size() != predicted.size())
    throw Error(ErrorCode::LengthMismatch, "gold and predicted label lists differ in length");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] != 0, p = predicted[i] != 0;
    if (g && p) ++tp;
    else if (!g && p) ++fp;
    else if (!g && !p) ++tn;
    else ++fn;
  }
  return metrics_from_confusion(tp, fp, tn, fn);
}

EvalMetrics evaluate(const ClassifierModel& model, std::span<const AnnotatedSentence> test) {
  if (test.empty()) throw Error(ErrorCode::EmptyInput, "evaluation set is empty");
  std::vector<int> gold, predicted;
  for (const auto& a : test) {
    gold.push_back(a.gold_positive ? 1 : 0);
    predicted.push_back(predict(model, a).positive ? 1 : 0);
  }
  return metrics_from_labels(gold, predicted);
}

KappaResult cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size() || labels_a.empty())
    throw Error(ErrorCode::LengthMismatch, "kappa needs two label lists of equal, non-zero length");
  const double n = static_cast<double>(labels_a.size());
  std::map<int, double> freq_a, freq_b;
  double agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    agree += labels_a[i] == labels_b[i];
    freq_a[labels_a[i]] += 1;
    freq_b[labels_b[i]] += 1;
  }
  KappaResult k;
  k.observed_agreement = agree / n;
  for (const auto& [label, count] : freq_a) {
    auto it = freq_b.find(label);
    if (it != freq_b.end()) k.chance_agreement += (count / n) * (it->second / n);
  }
  k.degenerate_marginals = freq_a.size() == 1 || freq_b.size() == 1;
  if (k.chance_agreement < 1.0) {
    k.kappa = (k.observed_agreement - k.chance_agreement) / (1.0 - k.chance_agreement);
  } else {
    // Both raters used the same single label throughout.
    k.kappa = 1.0;
  }
  return k;
}

}  // namespace stigscan
