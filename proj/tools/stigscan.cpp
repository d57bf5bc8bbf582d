#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stigscan/aggregation.hpp"
#include "stigscan/classifier.hpp"
#include "stigscan/corpus.hpp"
#include "stigscan/default_data.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/lexicon.hpp"
#include "stigscan/pipeline.hpp"
#include "stigscan/report.hpp"
#include "stigscan/stats.hpp"
#include "stigscan/synth.hpp"
#include "stigscan/util.hpp"

namespace fs = std::filesystem;
using namespace stigscan;

namespace {

struct Options {
  std::string notes, patients, admissions, caregivers, diagnoses;
  std::string lexicon_stigma, lexicon_doubt;
  std::vector<std::string> classifier{"off"};
  std::string counting_mode = "flagged_charts";
  std::string model_mode = "per_predictor";
  std::string out_dir = "stigscan_out";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string labels;
  std::string synth_config;
  std::string annotations;
  std::string lexicon = "stigma";
  std::string model_out;
  double test_fraction = 0.2;
  double l2 = TrainParams{}.l2;
  std::size_t window_k = TrainParams{}.window_k;
  double threshold = 0.5;
};

void add_corpus_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--notes", o.notes, "NOTEEVENTS CSV");
  cmd->add_option("--patients", o.patients, "PATIENTS CSV");
  cmd->add_option("--admissions", o.admissions, "ADMISSIONS CSV");
  cmd->add_option("--caregivers", o.caregivers, "CAREGIVERS CSV");
  cmd->add_option("--diagnoses", o.diagnoses, "DIAGNOSES_ICD CSV");
}

void add_lexicon_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--lexicon-stigma", o.lexicon_stigma, "Stigmatizing-label lexicon (default: shipped)");
  cmd->add_option("--lexicon-doubt", o.lexicon_doubt, "Doubt-marker lexicon (default: shipped)");
  cmd->add_option("--classifier", o.classifier, "Model file(s) from `train`, or 'off' for lexicon-only");
}

void add_run_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--counting-mode", o.counting_mode, "flagged_charts | sentences")
      ->check(CLI::IsMember({"flagged_charts", "sentences"}));
  cmd->add_option("--model-mode", o.model_mode, "per_predictor | joint")
      ->check(CLI::IsMember({"per_predictor", "joint"}));
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--seed", o.seed, "Seed recorded in the manifest (and used by train/synth)");
  cmd->add_option("--threads", o.threads, "Worker threads (fallback: STIGMA_SCAN_THREADS)");
}

TablePaths table_paths(const Options& o) {
  const std::pair<const char*, const std::string*> required[] = {{"--notes", &o.notes},
                                                                 {"--patients", &o.patients},
                                                                 {"--admissions", &o.admissions},
                                                                 {"--caregivers", &o.caregivers},
                                                                 {"--diagnoses", &o.diagnoses}};
  for (const auto& [flag, value] : required) {
    if (value->empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
  }
  return {o.notes, o.patients, o.admissions, o.caregivers, o.diagnoses};
}

Lexicon lexicon_for(const std::string& path, LexiconKind kind) {
  return path.empty() ? Lexicon::shipped(kind) : load_lexicon(path, kind);
}

struct Models {
  std::optional<ClassifierModel> stigma;
  std::optional<ClassifierModel> doubt;
  std::map<std::string, std::string> hashes;
};

Models load_models(const Options& o) {
  Models m;
  for (const auto& spec : o.classifier) {
    if (iequals(spec, "off")) continue;
    const std::string text = read_file(spec);
    ClassifierModel model = ClassifierModel::deserialize(text);
    m.hashes[std::string(to_string(model.lexicon()))] = hex64(fnv1a64(text));
    (model.lexicon() == LexiconKind::StigmatizingLabels ? m.stigma : m.doubt) = std::move(model);
  }
  return m;
}

RunManifest build_manifest(const Options& o, const Models& models) {
  RunManifest m;
  const std::pair<const char*, const std::string*> inputs[] = {{"notes", &o.notes},
                                                               {"patients", &o.patients},
                                                               {"admissions", &o.admissions},
                                                               {"caregivers", &o.caregivers},
                                                               {"diagnoses", &o.diagnoses}};
  for (const auto& [name, path] : inputs) {
    if (path->empty()) continue;
    m.inputs[name] = *path;
    m.input_hashes[name] = hex64(fnv1a64(read_file(*path)));
  }
  m.lexicon_hashes["stigmatizing_labels"] =
      hex64(fnv1a64(o.lexicon_stigma.empty() ? default_data::stigmatizing_labels_lexicon : read_file(o.lexicon_stigma)));
  m.lexicon_hashes["doubt_markers"] =
      hex64(fnv1a64(o.lexicon_doubt.empty() ? default_data::doubt_markers_lexicon : read_file(o.lexicon_doubt)));
  m.counting_mode = o.counting_mode;
  m.model_mode = o.model_mode;
  m.classifier = !models.hashes.empty();
  m.classifier_hashes = models.hashes;
  m.seed = o.seed;
  return m;
}

void write_stream(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  std::ostringstream out;
  fill(out);
  write_file(path, out.str());
}

Corpus load_corpus(const Options& o) { return dedup_and_filter(load_tables(table_paths(o))); }

void print_load_report(const LoadReport& r) {
  std::cout << "loaded notes=" << r.notes_loaded << " empty_text=" << r.notes_empty_text
            << " missing_patient=" << r.notes_missing_patient << " duplicates_removed=" << r.duplicates_removed
            << " excluded_category=" << r.excluded_category_removed << " bad_rows=" << r.bad_rows.size()
            << " ages_clamped=" << r.ages_clamped << "\n";
}

int cmd_scan(const Options& o) {
  const Corpus corpus = load_corpus(o);
  print_load_report(corpus.report);
  const std::vector<Lexicon> lexicons{lexicon_for(o.lexicon_stigma, LexiconKind::StigmatizingLabels),
                                      lexicon_for(o.lexicon_doubt, LexiconKind::DoubtMarkers)};
  const Matcher matcher = Matcher::build(lexicons);
  const Models models = load_models(o);
  ScanOptions scan;
  scan.threads = resolve_threads(o.threads ? std::optional<unsigned>(o.threads) : std::nullopt);
  scan.stigma_model = models.stigma ? &*models.stigma : nullptr;
  scan.doubt_model = models.doubt ? &*models.doubt : nullptr;
  const ScanResult result = scan_notes(corpus.notes, matcher, AbbreviationList::defaults(), scan);

  const fs::path out(o.out_dir);
  write_stream(out / "sentence_labels.csv", [&](std::ostream& s) { write_sentence_labels(s, result.labels); });
  write_file(out / "manifest.json", build_manifest(o, models).canonical_json() + "\n");
  std::cout << "scan notes=" << corpus.notes.size() << " sentences=" << result.sentences
            << " tokens=" << result.tokens << " matched_sentences=" << result.labels.size()
            << " threads=" << scan.threads << " -> " << (out / "sentence_labels.csv").string() << "\n";
  return 0;
}

AggregationResult aggregate_from_labels(const Corpus& corpus, const std::vector<SentenceLabel>& labels,
                                        CountingMode mode) {
  std::map<std::string, std::vector<SentenceLabel>> by_note;
  for (const auto& l : labels) by_note[l.note_id].push_back(l);
  std::vector<NoteFlags> flags;
  flags.reserve(corpus.notes.size());
  for (const auto& note : corpus.notes) {
    const auto it = by_note.find(note.note_id);
    flags.push_back(it == by_note.end() ? aggregate_note(note.note_id, {}) : aggregate_note(note.note_id, it->second));
  }
  return aggregate_corpus(corpus, flags, mode);
}

void write_aggregation(const fs::path& out, const AggregationResult& agg) {
  write_stream(out / "patient_outcomes.csv", [&](std::ostream& s) { write_entity_outcomes(s, agg.patients); });
  write_stream(out / "provider_outcomes.csv", [&](std::ostream& s) { write_entity_outcomes(s, agg.providers); });
  write_stream(out / "note_outcomes.csv", [&](std::ostream& s) { write_note_outcomes(s, agg.notes); });
}

int cmd_aggregate(const Options& o) {
  const Corpus corpus = load_corpus(o);
  const fs::path out(o.out_dir);
  const fs::path labels_path = o.labels.empty() ? out / "sentence_labels.csv" : fs::path(o.labels);
  const auto labels = read_sentence_labels(labels_path);
  const AggregationResult agg = aggregate_from_labels(corpus, labels, parse_counting_mode(o.counting_mode));
  write_aggregation(out, agg);
  write_file(out / "manifest.json", build_manifest(o, load_models(o)).canonical_json() + "\n");
  std::cout << "aggregate mode=" << o.counting_mode << " patients=" << agg.patients.size()
            << " providers=" << agg.providers.size() << " notes_without_provider=" << agg.notes_without_provider
            << " notes_without_patient_record=" << agg.notes_without_patient_record << "\n";
  return 0;
}

AggregationResult reload_aggregation(const fs::path& dir, CountingMode mode) {
  AggregationResult agg;
  agg.mode = mode;
  agg.patients = read_entity_outcomes(dir / "patient_outcomes.csv");
  agg.providers = read_entity_outcomes(dir / "provider_outcomes.csv");
  agg.notes = read_note_outcomes(dir / "note_outcomes.csv");
  std::set<std::string> patients;
  for (const auto& p : agg.patients) patients.insert(p.entity_id);
  for (const auto& n : agg.notes) {
    agg.flagged_stigma_notes += n.flags.stigma_present;
    agg.flagged_doubt_notes += n.flags.doubt_present;
    agg.stigma_sentences += n.flags.stigma_sentence_count;
    agg.doubt_sentences += n.flags.doubt_sentence_count;
    if (n.provider_id.empty()) ++agg.notes_without_provider;
    if (!patients.count(n.patient_id)) ++agg.notes_without_patient_record;
  }
  return agg;
}

int cmd_fit(const Options& o, bool model_mode_given) {
  const fs::path out(o.out_dir);
  RunManifest manifest = fs::exists(out / "manifest.json") ? RunManifest::from_json(read_file(out / "manifest.json"))
                                                           : build_manifest(o, load_models(o));
  if (model_mode_given || !fs::exists(out / "manifest.json")) manifest.model_mode = o.model_mode;
  const AggregationResult agg = reload_aggregation(out, parse_counting_mode(manifest.counting_mode));
  const unsigned threads = resolve_threads(o.threads ? std::optional<unsigned>(o.threads) : std::nullopt);
  const AnalysisResults results = analyze(agg, parse_model_mode(manifest.model_mode), manifest.id(), threads);

  write_stream(out / "fits.csv", [&](std::ostream& s) { write_fits_csv(s, results.fits); });
  write_stream(out / "mixed.csv", [&](std::ostream& s) {
    write_csv_row(s, std::vector<std::string>{"entity_level", "outcome", "intercept", "sigma2", "median_irr", "loglik",
                                              "quadrature_points", "n_clusters", "n_observations", "error"});
    for (const auto& m : results.mixed) {
      std::vector<std::string> row{std::string(to_string(m.level)), std::string(to_string(m.outcome))};
      if (m.fit) {
        for (double v : {m.fit->intercept, m.fit->sigma2, m.fit->median_irr, m.fit->loglik}) {
          row.push_back(format_double(v));
        }
        row.push_back(std::to_string(m.fit->quadrature_points));
        row.push_back(std::to_string(m.fit->n_clusters));
        row.push_back(std::to_string(m.fit->n_observations));
        row.push_back("");
      } else {
        row.insert(row.end(), 7, "");
        row.push_back(m.error);
      }
      write_csv_row(s, row);
    }
  });
  write_stream(out / "spearman.csv", [&](std::ostream& s) {
    write_csv_row(s, std::vector<std::string>{"entity_level", "rho", "p", "n", "error"});
    for (const auto& c : results.correlations) {
      if (c.result) {
        write_csv_row(s, std::vector<std::string>{std::string(to_string(c.level)), format_double(c.result->rho),
                                                  format_double(c.result->p_value), std::to_string(c.result->n), ""});
      } else {
        write_csv_row(s, std::vector<std::string>{std::string(to_string(c.level)), "", "", "", c.error});
      }
    }
  });
  write_file(out / "analysis.json", analysis_to_json(results) + "\n");
  write_file(out / "manifest.json", manifest.canonical_json() + "\n");

  std::size_t rows = 0, failed = 0;
  for (const auto& b : results.fits) {
    rows += b.rows.size();
    failed += !b.error.empty();
  }
  std::cout << "fit model_mode=" << manifest.model_mode << " blocks=" << results.fits.size() << " rows=" << rows
            << " failed_blocks=" << failed << "\n";
  for (const auto& m : results.mixed) {
    std::cout << "median_irr " << to_string(m.level) << " " << to_string(m.outcome) << " = "
              << (m.fit ? format_fixed(m.fit->median_irr, 3) : m.error) << "\n";
  }
  for (const auto& c : results.correlations) {
    std::cout << "spearman " << to_string(c.level) << " rho = "
              << (c.result ? format_fixed(c.result->rho, 4) + " p = " + format_double(c.result->p_value) : c.error)
              << "\n";
  }
  return 0;
}

int cmd_report(const Options& o) {
  const fs::path out(o.out_dir);
  const RunManifest manifest = RunManifest::from_json(read_file(out / "manifest.json"));
  const AnalysisResults results = analysis_from_json(read_file(out / "analysis.json"));
  const Report report = emit_report(manifest, results);
  write_file(out / "report.md", report.markdown);
  write_file(out / "report.csv", report.csv);
  std::cout << "report -> " << (out / "report.md").string() << "\n";
  return 0;
}

int cmd_synth(const Options& o, bool seed_given) {
  SynthConfig config = o.synth_config.empty() ? SynthConfig{} : SynthConfig::load(o.synth_config);
  if (seed_given) config.seed = o.seed;
  const SynthCorpus corpus = generate(config);
  write_synth_corpus(corpus, o.out_dir);
  std::cout << "synth patients=" << config.n_patients << " notes=" << corpus.notes
            << " excluded_notes=" << corpus.excluded_notes << " flagged_stigma=" << corpus.flagged_stigma
            << " flagged_doubt=" << corpus.flagged_doubt << " -> " << o.out_dir << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  if (o.annotations.empty()) throw Error(ErrorCode::InvalidArgument, "--annotations is required");
  const LexiconKind kind = parse_lexicon_kind(o.lexicon);
  std::vector<AnnotatedSentence> examples;
  for (auto& a : read_annotations(o.annotations)) {
    if (a.lexicon == kind) examples.push_back(std::move(a));
  }
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(o.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto n_test = static_cast<std::size_t>(o.test_fraction * static_cast<double>(examples.size()));
  std::vector<AnnotatedSentence> train_set, test_set;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? test_set : train_set).push_back(examples[order[i]]);
  }
  TrainParams params;
  params.l2 = o.l2;
  params.window_k = o.window_k;
  params.threshold = o.threshold;
  params.seed = o.seed;
  TrainReport report;
  const ClassifierModel model = train(train_set, kind, params, &report);
  const fs::path model_path = o.model_out.empty() ? fs::path(o.out_dir) / (std::string(to_string(kind)) + ".model")
                                                  : fs::path(o.model_out);
  model.save(model_path);
  const auto& eval_set = test_set.empty() ? train_set : test_set;
  const EvalMetrics m = evaluate(model, eval_set);
  std::cout << "train lexicon=" << to_string(kind) << " train=" << train_set.size() << " test=" << test_set.size()
            << " epochs=" << report.epochs << " converged=" << (report.converged ? 1 : 0) << "\n";
  std::cout << "eval(" << (test_set.empty() ? "train" : "held-out") << ") accuracy=" << format_fixed(m.accuracy, 4)
            << " precision=" << format_fixed(m.precision, 4) << (m.precision_undefined ? "(undefined)" : "")
            << " recall=" << format_fixed(m.recall, 4) << (m.recall_undefined ? "(undefined)" : "")
            << " macro_f1=" << format_fixed(m.macro_f1, 4) << " tp=" << m.tp << " fp=" << m.fp << " tn=" << m.tn
            << " fn=" << m.fn << "\n";
  std::cout << "model -> " << model_path.string() << "\n";
  return 0;
}

int cmd_all(Options o, bool seed_given) {
  if (!o.synth_config.empty() || o.notes.empty()) {
    if (o.synth_config.empty() && o.notes.empty()) {
      throw Error(ErrorCode::InvalidArgument, "`all` needs the corpus flags or --synth-config");
    }
    Options synth = o;
    synth.out_dir = (fs::path(o.out_dir) / "corpus").string();
    cmd_synth(synth, seed_given);
    const fs::path dir(synth.out_dir);
    o.notes = (dir / "NOTEEVENTS.csv").string();
    o.patients = (dir / "PATIENTS.csv").string();
    o.admissions = (dir / "ADMISSIONS.csv").string();
    o.caregivers = (dir / "CAREGIVERS.csv").string();
    o.diagnoses = (dir / "DIAGNOSES_ICD.csv").string();
  }
  cmd_scan(o);
  cmd_aggregate(o);
  cmd_fit(o, true);
  return cmd_report(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect stigmatizing labels and doubt markers in clinical notes and model their distribution"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto* scan = app.add_subcommand("scan", "Segment, match and classify notes -> sentence_labels.csv");
  add_corpus_flags(scan, o);
  add_lexicon_flags(scan, o);
  add_run_flags(scan, o);

  auto* train_cmd = app.add_subcommand("train", "Train a sentence classifier from an annotated CSV");
  train_cmd->add_option("--annotations", o.annotations, "CSV: sentence,term,lexicon,gold_label,annotator")->required();
  train_cmd->add_option("--lexicon", o.lexicon, "stigma | doubt");
  train_cmd->add_option("--model-out", o.model_out, "Model output path (default: <out-dir>/<lexicon>.model)");
  train_cmd->add_option("--test-fraction", o.test_fraction, "Held-out fraction")->check(CLI::Range(0.0, 0.9));
  train_cmd->add_option("--l2", o.l2, "L2 strength");
  train_cmd->add_option("--window", o.window_k, "Context window (tokens)");
  train_cmd->add_option("--threshold", o.threshold, "Decision threshold");
  train_cmd->add_option("--out-dir", o.out_dir, "Output directory");
  train_cmd->add_option("--seed", o.seed, "Split seed");

  auto* aggregate = app.add_subcommand("aggregate", "Roll sentence labels up to patient/provider outcomes");
  add_corpus_flags(aggregate, o);
  add_lexicon_flags(aggregate, o);
  add_run_flags(aggregate, o);
  aggregate->add_option("--labels", o.labels, "sentence_labels.csv (default: <out-dir>/sentence_labels.csv)");

  auto* fit = app.add_subcommand("fit", "Fit Poisson, random-intercept and Spearman analyses");
  add_run_flags(fit, o);

  auto* report = app.add_subcommand("report", "Render Tables 1-3 as markdown and CSV");
  report->add_option("--out-dir", o.out_dir, "Directory holding manifest.json and analysis.json");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic MIMIC-shaped corpus");
  synth->add_option("--config", o.synth_config, "key = value config file");
  synth->add_option("--out-dir", o.out_dir, "Output directory");
  synth->add_option("--seed", o.seed, "Override the config seed");

  auto* all = app.add_subcommand("all", "scan + aggregate + fit + report (optionally on a synthetic corpus)");
  add_corpus_flags(all, o);
  add_lexicon_flags(all, o);
  add_run_flags(all, o);
  all->add_option("--synth-config", o.synth_config, "Generate a synthetic corpus first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*scan) return cmd_scan(o);
    if (*train_cmd) return cmd_train(o);
    if (*aggregate) return cmd_aggregate(o);
    if (*fit) return cmd_fit(o, fit->count("--model-mode") > 0);
    if (*report) return cmd_report(o);
    if (*synth) return cmd_synth(o, synth->count("--seed") > 0);
    if (*all) return cmd_all(o, all->count("--seed") > 0);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
