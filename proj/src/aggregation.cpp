#include "stigscan/aggregation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stigscan/csv.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

std::string_view to_string(CountingMode mode) {
  return mode == CountingMode::FlaggedCharts ? "flagged_charts" : "sentences";
}

std::string_view to_string(EntityLevel level) { return level == EntityLevel::Patient ? "patient" : "provider"; }

std::string_view to_string(Outcome outcome) {
  return outcome == Outcome::Stigma ? "stigma_count" : "doubt_count";
}

CountingMode parse_counting_mode(std::string_view name) {
  const std::string n = to_lower(trim(name));
  if (n == "flagged_charts" || n == "charts") return CountingMode::FlaggedCharts;
  if (n == "sentences") return CountingMode::Sentences;
  throw Error(ErrorCode::InvalidArgument, "unknown counting mode '" + std::string(name) + "'");
}

EntityLevel parse_entity_level(std::string_view name) {
  const std::string n = to_lower(trim(name));
  if (n == "patient") return EntityLevel::Patient;
  if (n == "provider") return EntityLevel::Provider;
  throw Error(ErrorCode::InvalidArgument, "unknown entity level '" + std::string(name) + "'");
}

Outcome parse_outcome(std::string_view name) {
  const std::string n = to_lower(trim(name));
  if (n == "stigma" || n == "stigma_count") return Outcome::Stigma;
  if (n == "doubt" || n == "doubt_count") return Outcome::Doubt;
  throw Error(ErrorCode::InvalidArgument, "unknown outcome '" + std::string(name) + "'");
}

NoteFlags aggregate_note(std::string_view note_id, std::span<const SentenceLabel> labels) {
  NoteFlags flags;
  flags.note_id = std::string(note_id);
  for (const auto& label : labels) {
    if (label.stigma_positive) ++flags.stigma_sentence_count;
    if (label.doubt_positive) ++flags.doubt_sentence_count;
  }
  flags.stigma_present = flags.stigma_sentence_count > 0;
  flags.doubt_present = flags.doubt_sentence_count > 0;
  return flags;
}

std::int64_t note_count(const NoteFlags& flags, Outcome outcome, CountingMode mode) {
  if (mode == CountingMode::FlaggedCharts) {
    return (outcome == Outcome::Stigma ? flags.stigma_present : flags.doubt_present) ? 1 : 0;
  }
  return outcome == Outcome::Stigma ? flags.stigma_sentence_count : flags.doubt_sentence_count;
}

std::string EntityOutcome::covariate(const std::string& name) const {
  const auto it = covariates.find(name);
  return it == covariates.end() ? std::string() : it->second;
}

EntityOutcome aggregate_entity(std::string_view entity_id, EntityLevel level, std::span<const NoteFlags> note_flags,
                               CountingMode mode, std::map<std::string, std::string> covariates) {
  if (note_flags.empty()) {
    throw Error(ErrorCode::NoCharts, "entity '" + std::string(entity_id) + "' has no charts");
  }
  EntityOutcome out;
  out.entity_id = std::string(entity_id);
  out.level = level;
  out.covariates = std::move(covariates);
  for (const auto& f : note_flags) {
    out.stigma_count += note_count(f, Outcome::Stigma, mode);
    out.doubt_count += note_count(f, Outcome::Doubt, mode);
  }
  out.chart_total = static_cast<std::int64_t>(note_flags.size());
  return out;
}

std::map<std::string, std::string> patient_covariates(const PatientRecord& patient) {
  std::map<std::string, std::string> cov;
  cov["gender"] = std::string(to_string(patient.gender));
  cov["ethnicity"] = std::string(to_string(patient.ethnicity));
  cov["insurance"] = patient.insurance ? std::string(to_string(*patient.insurance)) : std::string();
  cov["insurance_raw"] = patient.insurance_raw;
  cov["age_years"] = patient.age_years ? format_fixed(*patient.age_years, 2) : std::string();
  cov["age_category"] = patient.age_category ? std::string(to_string(*patient.age_category)) : std::string();
  for (Condition c : kConditions) {
    cov[std::string(to_string(c))] = patient.diagnosis_flags.has(c) ? "1" : "0";
  }
  return cov;
}

std::map<std::string, std::string> provider_covariates(const ProviderRecord& provider) {
  return {{"provider_type", std::string(to_string(provider.provider_type))}, {"raw_label", provider.raw_label}};
}

const std::vector<std::string>& covariate_columns(EntityLevel level) {
  static const std::vector<std::string> patient = [] {
    std::vector<std::string> cols{"gender", "ethnicity", "insurance", "insurance_raw", "age_years", "age_category"};
    for (Condition c : kConditions) cols.emplace_back(to_string(c));
    return cols;
  }();
  static const std::vector<std::string> provider{"provider_type", "raw_label"};
  return level == EntityLevel::Patient ? patient : provider;
}

std::vector<std::string> covariate_level_order(const std::string& covariate) {
  std::vector<std::string> out;
  if (covariate == "gender") {
    for (auto v : kGenders) out.emplace_back(to_string(v));
  } else if (covariate == "ethnicity") {
    for (auto v : kEthnicities) out.emplace_back(to_string(v));
  } else if (covariate == "insurance") {
    for (auto v : kInsurances) out.emplace_back(to_string(v));
  } else if (covariate == "insurance_raw") {
    out = {"Private", "Government", "Medicaid", "Medicare", "Self Pay"};
  } else if (covariate == "age_category") {
    for (auto v : kAgeCategories) out.emplace_back(to_string(v));
  } else if (covariate == "provider_type") {
    for (auto v : kProviderTypes) out.emplace_back(to_string(v));
  } else if (parse_condition(covariate)) {
    out = {"0", "1"};
  }
  return out;
}

AggregationResult aggregate_corpus(const Corpus& corpus, std::span<const NoteFlags> note_flags, CountingMode mode) {
  if (note_flags.size() != corpus.notes.size()) {
    throw Error(ErrorCode::LengthMismatch, "note flags (" + std::to_string(note_flags.size()) +
                                               ") do not match corpus notes (" +
                                               std::to_string(corpus.notes.size()) + ")");
  }
  AggregationResult result;
  result.mode = mode;
  std::map<std::string, std::vector<NoteFlags>> by_patient;
  std::map<std::string, std::vector<NoteFlags>> by_provider;

  for (std::size_t i = 0; i < corpus.notes.size(); ++i) {
    const Note& note = corpus.notes[i];
    const NoteFlags& flags = note_flags[i];
    NoteOutcomeRow row{note.note_id, note.patient_id, note.provider_id.value_or(""), flags};
    row.flags.note_id = note.note_id;
    result.notes.push_back(row);

    if (flags.stigma_present) ++result.flagged_stigma_notes;
    if (flags.doubt_present) ++result.flagged_doubt_notes;
    result.stigma_sentences += flags.stigma_sentence_count;
    result.doubt_sentences += flags.doubt_sentence_count;

    if (corpus.patients.count(note.patient_id)) {
      by_patient[note.patient_id].push_back(flags);
    } else {
      ++result.notes_without_patient_record;
    }
    if (note.provider_id && !note.provider_id->empty()) {
      by_provider[*note.provider_id].push_back(flags);
    } else {
      ++result.notes_without_provider;
    }
  }

  for (const auto& [id, flags] : by_patient) {
    result.patients.push_back(
        aggregate_entity(id, EntityLevel::Patient, flags, mode, patient_covariates(corpus.patients.at(id))));
  }
  for (const auto& [id, flags] : by_provider) {
    const auto it = corpus.providers.find(id);
    ProviderRecord fallback{id, "", ProviderType::Unknown};
    const ProviderRecord& rec = it == corpus.providers.end() ? fallback : it->second;
    result.providers.push_back(aggregate_entity(id, EntityLevel::Provider, flags, mode, provider_covariates(rec)));
  }
  return result;
}

namespace {

std::int64_t parse_int(const std::string& text, const std::string& what) {
  std::int64_t v = 0;
  const std::string_view t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::Parse, "invalid integer for " + what + ": '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != trim(text).size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "invalid number for " + what + ": '" + text + "'");
  }
}

bool parse_flag(const std::string& text) {
  const std::string t = to_lower(trim(text));
  return t == "1" || t == "true";
}

}  // namespace

void write_entity_outcomes(std::ostream& out, std::span<const EntityOutcome> outcomes) {
  std::vector<std::string> cols{"entity_id", "level", "stigma_count", "doubt_count", "chart_total"};
  std::vector<std::string> covs;
  if (!outcomes.empty()) {
    covs = covariate_columns(outcomes.front().level);
    for (const auto& o : outcomes) {
      for (const auto& [k, v] : o.covariates) {
        if (std::find(covs.begin(), covs.end(), k) == covs.end()) covs.push_back(k);
      }
    }
  }
  cols.insert(cols.end(), covs.begin(), covs.end());
  write_csv_row(out, cols);
  for (const auto& o : outcomes) {
    std::vector<std::string> row{o.entity_id, std::string(to_string(o.level)), std::to_string(o.stigma_count),
                                 std::to_string(o.doubt_count), std::to_string(o.chart_total)};
    for (const auto& c : covs) row.push_back(o.covariate(c));
    write_csv_row(out, row);
  }
}

std::vector<EntityOutcome> parse_entity_outcomes(std::string_view csv_text) {
  const CsvTable table = parse_csv(csv_text, "entity outcomes");
  const std::size_t id = table.require_column("entity_id");
  const std::size_t level = table.require_column("level");
  const std::size_t stigma = table.require_column("stigma_count");
  const std::size_t doubt = table.require_column("doubt_count");
  const std::size_t total = table.require_column("chart_total");
  std::vector<EntityOutcome> out;
  out.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    EntityOutcome o;
    o.entity_id = table.cell(r, id);
    o.level = parse_entity_level(table.cell(r, level));
    o.stigma_count = parse_int(table.cell(r, stigma), "stigma_count");
    o.doubt_count = parse_int(table.cell(r, doubt), "doubt_count");
    o.chart_total = parse_int(table.cell(r, total), "chart_total");
    for (std::size_t c = 0; c < table.header().size(); ++c) {
      if (c == id || c == level || c == stigma || c == doubt || c == total) continue;
      o.covariates[table.header()[c]] = table.cell(r, c);
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<EntityOutcome> read_entity_outcomes(const std::filesystem::path& path) {
  return parse_entity_outcomes(read_file(path));
}

void write_note_outcomes(std::ostream& out, std::span<const NoteOutcomeRow> rows) {
  const std::vector<std::string> header{"note_id",        "patient_id",       "provider_id",     "stigma_present",
                                        "doubt_present", "stigma_sentences", "doubt_sentences"};
  write_csv_row(out, header);
  for (const auto& r : rows) {
    const std::vector<std::string> fields{r.note_id,
                                          r.patient_id,
                                          r.provider_id,
                                          r.flags.stigma_present ? "1" : "0",
                                          r.flags.doubt_present ? "1" : "0",
                                          std::to_string(r.flags.stigma_sentence_count),
                                          std::to_string(r.flags.doubt_sentence_count)};
    write_csv_row(out, fields);
  }
}

std::vector<NoteOutcomeRow> read_note_outcomes(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t note = table.require_column("note_id");
  const std::size_t patient = table.require_column("patient_id");
  const std::size_t provider = table.require_column("provider_id");
  const std::size_t sp = table.require_column("stigma_present");
  const std::size_t dp = table.require_column("doubt_present");
  const std::size_t ss = table.require_column("stigma_sentences");
  const std::size_t ds = table.require_column("doubt_sentences");
  std::vector<NoteOutcomeRow> rows;
  rows.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    NoteOutcomeRow row;
    row.note_id = table.cell(r, note);
    row.patient_id = table.cell(r, patient);
    row.provider_id = table.cell(r, provider);
    row.flags.note_id = row.note_id;
    row.flags.stigma_present = parse_flag(table.cell(r, sp));
    row.flags.doubt_present = parse_flag(table.cell(r, dp));
    row.flags.stigma_sentence_count = parse_int(table.cell(r, ss), "stigma_sentences");
    row.flags.doubt_sentence_count = parse_int(table.cell(r, ds), "doubt_sentences");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sentence_labels(std::ostream& out, std::span<const SentenceLabel> labels) {
  const std::vector<std::string> header{"note_id",          "sentence_index",  "char_start",
                                        "char_end",         "stigma_hit",      "stigma_positive",
                                        "stigma_probability", "stigma_terms",  "doubt_hit",
                                        "doubt_positive",   "doubt_probability", "doubt_terms"};
  write_csv_row(out, header);
  for (const auto& l : labels) {
    const std::vector<std::string> fields{l.note_id,
                                          std::to_string(l.sentence_index),
                                          std::to_string(l.begin),
                                          std::to_string(l.end),
                                          l.stigma_hit ? "1" : "0",
                                          l.stigma_positive ? "1" : "0",
                                          format_fixed(l.stigma_probability, 6),
                                          l.stigma_terms,
                                          l.doubt_hit ? "1" : "0",
                                          l.doubt_positive ? "1" : "0",
                                          format_fixed(l.doubt_probability, 6),
                                          l.doubt_terms};
    write_csv_row(out, fields);
  }
}

std::vector<SentenceLabel> read_sentence_labels(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t cols[] = {
      table.require_column("note_id"),          table.require_column("sentence_index"),
      table.require_column("char_start"),       table.require_column("char_end"),
      table.require_column("stigma_hit"),       table.require_column("stigma_positive"),
      table.require_column("stigma_probability"), table.require_column("stigma_terms"),
      table.require_column("doubt_hit"),        table.require_column("doubt_positive"),
      table.require_column("doubt_probability"), table.require_column("doubt_terms")};
  std::vector<SentenceLabel> labels;
  labels.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    SentenceLabel l;
    l.note_id = table.cell(r, cols[0]);
    l.sentence_index = static_cast<std::size_t>(parse_int(table.cell(r, cols[1]), "sentence_index"));
    l.begin = static_cast<std::size_t>(parse_int(table.cell(r, cols[2]), "char_start"));
    l.end = static_cast<std::size_t>(parse_int(table.cell(r, cols[3]), "char_end"));
    l.stigma_hit = parse_flag(table.cell(r, cols[4]));
    l.stigma_positive = parse_flag(table.cell(r, cols[5]));
    l.stigma_probability = parse_real(table.cell(r, cols[6]), "stigma_probability");
    l.stigma_terms = table.cell(r, cols[7]);
    l.doubt_hit = parse_flag(table.cell(r, cols[8]));
    l.doubt_positive = parse_flag(table.cell(r, cols[9]));
    l.doubt_probability = parse_real(table.cell(r, cols[10]), "doubt_probability");
    l.doubt_terms = table.cell(r, cols[11]);
    labels.push_back(std::move(l));
  }
  return labels;
}

NumericSummary summarize(std::string variable, std::span<const double> values) {
  NumericSummary s;
  s.variable = std::move(variable);
  s.n = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

DescriptiveStats descriptive_table(std::span<const EntityOutcome> entities) {
  if (entities.empty()) throw Error(ErrorCode::EmptyInput, "no entities to describe");
  DescriptiveStats stats;
  stats.level = entities.front().level;
  stats.n = entities.size();

  std::vector<std::string> categorical;
  std::vector<std::string> numeric;
  if (stats.level == EntityLevel::Patient) {
    categorical = {"gender", "ethnicity", "insurance_raw", "insurance", "age_category"};
    for (Condition c : kConditions) categorical.emplace_back(to_string(c));
    numeric = {"age_years"};
  } else {
    categorical = {"provider_type"};
  }

  for (const auto& var : categorical) {
    CategoricalSummary cs;
    cs.variable = var;
    std::map<std::string, std::size_t> counts;
    for (const auto& e : entities) {
      const std::string v = e.covariate(var);
      if (v.empty()) {
        ++cs.missing;
      } else {
        ++counts[v];
        ++cs.n;
      }
    }
    for (const auto& level : covariate_level_order(var)) {
      const auto it = counts.find(level);
      if (it == counts.end()) continue;
      cs.levels.push_back({level, it->second, 0.0});
      counts.erase(it);
    }
    for (const auto& [level, count] : counts) cs.levels.push_back({level, count, 0.0});
    for (auto& l : cs.levels) {
      l.percent = cs.n ? 100.0 * static_cast<double>(l.count) / static_cast<double>(cs.n) : 0.0;
    }
    stats.categorical.push_back(std::move(cs));
  }

  for (const auto& var : numeric) {
    std::vector<double> values;
    for (const auto& e : entities) {
      const std::string v = e.covariate(var);
      if (!v.empty()) values.push_back(parse_real(v, var));
    }
    stats.numeric.push_back(summarize(var, values));
  }
  std::vector<double> stigma, doubt, charts;
  for (const auto& e : entities) {
    stigma.push_back(static_cast<double>(e.stigma_count));
    doubt.push_back(static_cast<double>(e.doubt_count));
    charts.push_back(static_cast<double>(e.chart_total));
  }
  stats.numeric.push_back(summarize("stigma_count", stigma));
  stats.numeric.push_back(summarize("doubt_count", doubt));
  stats.numeric.push_back(summarize("chart_total", charts));
  return stats;
}

}  // namespace stigscan
