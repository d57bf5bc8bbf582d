#include "stigscan/report.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stigscan/csv.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

using nlohmann::json;

std::string_view tool_version() { return STIGSCAN_VERSION; }

// ---- Manifest -------------------------------------------------------------------

std::string RunManifest::canonical_json() const {
  json j;
  j["inputs"] = inputs;
  j["input_hashes"] = input_hashes;
  j["lexicon_hashes"] = lexicon_hashes;
  j["counting_mode"] = counting_mode;
  j["model_mode"] = model_mode;
  j["classifier"] = classifier;
  j["classifier_hashes"] = classifier_hashes;
  j["seed"] = seed;
  j["version"] = version;
  return j.dump();
}

std::string RunManifest::id() const { return hex64(fnv1a64(canonical_json())); }

RunManifest RunManifest::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    m.lexicon_hashes = j.at("lexicon_hashes").get<std::map<std::string, std::string>>();
    m.counting_mode = j.at("counting_mode").get<std::string>();
    m.model_mode = j.at("model_mode").get<std::string>();
    m.classifier = j.at("classifier").get<bool>();
    m.classifier_hashes = j.at("classifier_hashes").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("manifest: ") + e.what());
  }
}

// ---- Analysis --------------------------------------------------------------------

AnalysisResults analyze(const AggregationResult& aggregation, ModelMode mode, const std::string& manifest_id,
                        unsigned threads, const MixedOptions& mixed_options) {
  AnalysisResults r;
  r.manifest_id = manifest_id;
  r.counting_mode = aggregation.mode;
  r.model_mode = mode;
  r.totals.notes = aggregation.notes.size();
  r.totals.patients = aggregation.patients.size();
  r.totals.providers = aggregation.providers.size();
  r.totals.flagged_stigma_notes = aggregation.flagged_stigma_notes;
  r.totals.flagged_doubt_notes = aggregation.flagged_doubt_notes;
  r.totals.stigma_sentences = aggregation.stigma_sentences;
  r.totals.doubt_sentences = aggregation.doubt_sentences;
  r.totals.notes_without_provider = aggregation.notes_without_provider;
  r.totals.notes_without_patient_record = aggregation.notes_without_patient_record;

  if (!aggregation.patients.empty()) r.patient_descriptives = descriptive_table(aggregation.patients);
  if (!aggregation.providers.empty()) r.provider_descriptives = descriptive_table(aggregation.providers);

  for (EntityLevel level : {EntityLevel::Patient, EntityLevel::Provider}) {
    const auto& entities = level == EntityLevel::Patient ? aggregation.patients : aggregation.providers;
    for (Outcome outcome : {Outcome::Stigma, Outcome::Doubt}) {
      if (entities.empty()) continue;
      auto blocks = fit_model_set(entities, level, outcome, mode, threads);
      std::move(blocks.begin(), blocks.end(), std::back_inserter(r.fits));
    }
  }

  // Notes without a patient record stay out of patient-level clustering.
  std::set<std::string> known_patients;
  for (const auto& p : aggregation.patients) known_patients.insert(p.entity_id);
  std::vector<NoteOutcomeRow> patient_notes;
  for (const auto& n : aggregation.notes) {
    if (known_patients.count(n.patient_id)) patient_notes.push_back(n);
  }
  for (EntityLevel level : {EntityLevel::Patient, EntityLevel::Provider}) {
    const auto& rows = level == EntityLevel::Patient ? patient_notes : aggregation.notes;
    for (Outcome outcome : {Outcome::Stigma, Outcome::Doubt}) {
      r.mixed.push_back(fit_clustering(rows, level, outcome, mixed_options));
    }
  }

  for (EntityLevel level : {EntityLevel::Patient, EntityLevel::Provider}) {
    const auto& entities = level == EntityLevel::Patient ? aggregation.patients : aggregation.providers;
    CorrelationSummary c;
    c.level = level;
    std::vector<double> x, y;
    for (const auto& e : entities) {
      x.push_back(static_cast<double>(e.stigma_count));
      y.push_back(static_cast<double>(e.doubt_count));
    }
    try {
      c.result = spearman(x, y);
    } catch (const Error& e) {
      c.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    r.correlations.push_back(std::move(c));
  }
  return r;
}

// ---- JSON --------------------------------------------------------------------------

namespace {

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

json to_json(const DescriptiveStats& d) {
  json j;
  j["level"] = to_string(d.level);
  j["n"] = d.n;
  j["categorical"] = json::array();
  for (const auto& c : d.categorical) {
    json jc{{"variable", c.variable}, {"n", c.n}, {"missing", c.missing}, {"levels", json::array()}};
    for (const auto& l : c.levels) jc["levels"].push_back({{"level", l.level}, {"count", l.count}, {"percent", l.percent}});
    j["categorical"].push_back(jc);
  }
  j["numeric"] = json::array();
  for (const auto& s : d.numeric) {
    j["numeric"].push_back({{"variable", s.variable},
                            {"n", s.n},
                            {"mean", num(s.mean)},
                            {"sd", num(s.sd)},
                            {"median", num(s.median)},
                            {"min", num(s.min)},
                            {"max", num(s.max)}});
  }
  return j;
}

DescriptiveStats descriptives_from(const json& j) {
  DescriptiveStats d;
  d.level = parse_entity_level(j.at("level").get<std::string>());
  d.n = j.at("n").get<std::size_t>();
  for (const auto& jc : j.at("categorical")) {
    CategoricalSummary c;
    c.variable = jc.at("variable").get<std::string>();
    c.n = jc.at("n").get<std::size_t>();
    c.missing = jc.at("missing").get<std::size_t>();
    for (const auto& jl : jc.at("levels")) {
      c.levels.push_back({jl.at("level").get<std::string>(), jl.at("count").get<std::size_t>(),
                          jl.at("percent").get<double>()});
    }
    d.categorical.push_back(std::move(c));
  }
  for (const auto& js : j.at("numeric")) {
    NumericSummary s;
    s.variable = js.at("variable").get<std::string>();
    s.n = js.at("n").get<std::size_t>();
    s.mean = num(js.at("mean"));
    s.sd = num(js.at("sd"));
    s.median = num(js.at("median"));
    s.min = num(js.at("min"));
    s.max = num(js.at("max"));
    d.numeric.push_back(std::move(s));
  }
  return d;
}

json to_json(const RateRatio& r) {
  return {{"predictor", r.predictor}, {"level", r.level},     {"beta", num(r.beta)},
          {"se", num(r.se)},          {"rr", num(r.rr)},       {"ci_low", num(r.ci_low)},
          {"ci_high", num(r.ci_high)}, {"p", num(r.p_value)},  {"stars", r.stars},
          {"n_entities", r.n_entities}, {"events", num(r.events)}, {"converged", r.converged},
          {"diverging", r.diverging}};
}

RateRatio rate_ratio_from_json(const json& j) {
  RateRatio r;
  r.predictor = j.at("predictor").get<std::string>();
  r.level = j.at("level").get<std::string>();
  r.beta = num(j.at("beta"));
  r.se = num(j.at("se"));
  r.rr = num(j.at("rr"));
  r.ci_low = num(j.at("ci_low"));
  r.ci_high = num(j.at("ci_high"));
  r.p_value = num(j.at("p"));
  r.stars = j.at("stars").get<std::string>();
  r.n_entities = j.at("n_entities").get<std::size_t>();
  r.events = num(j.at("events"));
  r.converged = j.at("converged").get<bool>();
  r.diverging = j.at("diverging").get<bool>();
  return r;
}

json to_json(const BlockFit& b) {
  json j{{"level", to_string(b.level)}, {"outcome", to_string(b.outcome)}, {"mode", to_string(b.mode)},
         {"block", b.block},           {"error", b.error},                  {"rows", json::array()}};
  for (const auto& r : b.rows) j["rows"].push_back(to_json(r));
  if (b.fit) {
    j["fit"] = {{"deviance", num(b.fit->deviance)},
                {"iterations", b.fit->iterations},
                {"converged", b.fit->converged},
                {"gradient_norm", num(b.fit->gradient_norm)},
                {"n_entities", b.fit->n_entities},
                {"absent_levels", b.fit->absent_levels},
                {"excluded_entities", b.fit->excluded_entities},
                {"missing_covariate_entities", b.fit->missing_covariate_entities}};
  }
  return j;
}

BlockFit block_from_json(const json& j) {
  BlockFit b;
  b.level = parse_entity_level(j.at("level").get<std::string>());
  b.outcome = parse_outcome(j.at("outcome").get<std::string>());
  b.mode = parse_model_mode(j.at("mode").get<std::string>());
  b.block = j.at("block").get<std::string>();
  b.error = j.at("error").get<std::string>();
  for (const auto& r : j.at("rows")) b.rows.push_back(rate_ratio_from_json(r));
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    GlmFit fit;
    fit.deviance = num(f.at("deviance"));
    fit.iterations = f.at("iterations").get<int>();
    fit.converged = f.at("converged").get<bool>();
    fit.gradient_norm = num(f.at("gradient_norm"));
    fit.n_entities = f.at("n_entities").get<std::size_t>();
    fit.absent_levels = f.at("absent_levels").get<std::vector<std::string>>();
    fit.excluded_entities = f.at("excluded_entities").get<std::map<std::string, std::size_t>>();
    fit.missing_covariate_entities = f.at("missing_covariate_entities").get<std::size_t>();
    b.fit = std::move(fit);
  }
  return b;
}

}  // namespace

std::string analysis_to_json(const AnalysisResults& r) {
  json j;
  j["manifest_id"] = r.manifest_id;
  j["counting_mode"] = to_string(r.counting_mode);
  j["model_mode"] = to_string(r.model_mode);
  const auto& t = r.totals;
  j["totals"] = {{"notes", t.notes},
                 {"patients", t.patients},
                 {"providers", t.providers},
                 {"flagged_stigma_notes", t.flagged_stigma_notes},
                 {"flagged_doubt_notes", t.flagged_doubt_notes},
                 {"stigma_sentences", t.stigma_sentences},
                 {"doubt_sentences", t.doubt_sentences},
                 {"notes_without_provider", t.notes_without_provider},
                 {"notes_without_patient_record", t.notes_without_patient_record}};
  if (r.patient_descriptives) j["patient_descriptives"] = to_json(*r.patient_descriptives);
  if (r.provider_descriptives) j["provider_descriptives"] = to_json(*r.provider_descriptives);
  j["fits"] = json::array();
  for (const auto& b : r.fits) j["fits"].push_back(to_json(b));
  j["mixed"] = json::array();
  for (const auto& m : r.mixed) {
    json jm{{"level", to_string(m.level)}, {"outcome", to_string(m.outcome)}, {"error", m.error}};
    if (m.fit) {
      jm["fit"] = {{"intercept", num(m.fit->intercept)},
                   {"sigma2", num(m.fit->sigma2)},
                   {"median_irr", num(m.fit->median_irr)},
                   {"loglik", num(m.fit->loglik)},
                   {"quadrature_points", m.fit->quadrature_points},
                   {"iterations", m.fit->iterations},
                   {"converged", m.fit->converged},
                   {"gradient_norm", num(m.fit->gradient_norm)},
                   {"n_clusters", m.fit->n_clusters},
                   {"n_observations", m.fit->n_observations}};
    }
    j["mixed"].push_back(jm);
  }
  j["correlations"] = json::array();
  for (const auto& c : r.correlations) {
    json jc{{"level", to_string(c.level)}, {"error", c.error}};
    if (c.result) jc["result"] = {{"rho", num(c.result->rho)}, {"p", num(c.result->p_value)}, {"n", c.result->n}};
    j["correlations"].push_back(jc);
  }
  return j.dump(2);
}

AnalysisResults analysis_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    AnalysisResults r;
    r.manifest_id = j.at("manifest_id").get<std::string>();
    r.counting_mode = parse_counting_mode(j.at("counting_mode").get<std::string>());
    r.model_mode = parse_model_mode(j.at("model_mode").get<std::string>());
    const json& t = j.at("totals");
    r.totals.notes = t.at("notes").get<std::size_t>();
    r.totals.patients = t.at("patients").get<std::size_t>();
    r.totals.providers = t.at("providers").get<std::size_t>();
    r.totals.flagged_stigma_notes = t.at("flagged_stigma_notes").get<std::size_t>();
    r.totals.flagged_doubt_notes = t.at("flagged_doubt_notes").get<std::size_t>();
    r.totals.stigma_sentences = t.at("stigma_sentences").get<std::int64_t>();
    r.totals.doubt_sentences = t.at("doubt_sentences").get<std::int64_t>();
    r.totals.notes_without_provider = t.at("notes_without_provider").get<std::size_t>();
    r.totals.notes_without_patient_record = t.at("notes_without_patient_record").get<std::size_t>();
    if (j.contains("patient_descriptives")) r.patient_descriptives = descriptives_from(j.at("patient_descriptives"));
    if (j.contains("provider_descriptives")) r.provider_descriptives = descriptives_from(j.at("provider_descriptives"));
    for (const auto& b : j.at("fits")) r.fits.push_back(block_from_json(b));
    for (const auto& jm : j.at("mixed")) {
      MixedSummary m;
      m.level = parse_entity_level(jm.at("level").get<std::string>());
      m.outcome = parse_outcome(jm.at("outcome").get<std::string>());
      m.error = jm.at("error").get<std::string>();
      if (jm.contains("fit")) {
        const json& f = jm.at("fit");
        MixedFit fit;
        fit.intercept = num(f.at("intercept"));
        fit.sigma2 = num(f.at("sigma2"));
        fit.median_irr = num(f.at("median_irr"));
        fit.loglik = num(f.at("loglik"));
        fit.quadrature_points = f.at("quadrature_points").get<int>();
        fit.iterations = f.at("iterations").get<int>();
        fit.converged = f.at("converged").get<bool>();
        fit.gradient_norm = num(f.at("gradient_norm"));
        fit.n_clusters = f.at("n_clusters").get<std::size_t>();
        fit.n_observations = f.at("n_observations").get<std::size_t>();
        m.fit = fit;
      }
      r.mixed.push_back(std::move(m));
    }
    for (const auto& jc : j.at("correlations")) {
      CorrelationSummary c;
      c.level = parse_entity_level(jc.at("level").get<std::string>());
      c.error = jc.at("error").get<std::string>();
      if (jc.contains("result")) {
        const json& res = jc.at("result");
        c.result = CorrelationResult{num(res.at("rho")), num(res.at("p")), res.at("n").get<std::size_t>()};
      }
      r.correlations.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("analysis results: ") + e.what());
  }
}

// ---- Rendering ---------------------------------------------------------------------

std::string format_rate_ratio_cell(double rr, double ci_low, double ci_high, double p_value) {
  return format_fixed(rr, 2) + " (" + format_fixed(ci_low, 2) + ", " + format_fixed(ci_high, 2) + ")" +
         significance_stars(p_value);
}

std::string format_rate_ratio_cell(const RateRatio& r) {
  if (r.diverging) return "0.00 (0.00, inf) zero events";
  std::string cell = format_rate_ratio_cell(r.rr, r.ci_low, r.ci_high, r.p_value);
  if (!r.converged) cell += " (not converged)";
  return cell;
}

std::string level_display_name(const std::string& predictor, const std::string& level) {
  if (predictor == "ethnicity") {
    for (auto v : kEthnicities) {
      if (to_string(v) == level) return std::string(display_name(v));
    }
  } else if (predictor == "insurance") {
    for (auto v : kInsurances) {
      if (to_string(v) == level) return std::string(display_name(v));
    }
  } else if (predictor == "age_category") {
    for (auto v : kAgeCategories) {
      if (to_string(v) == level) return std::string(display_name(v));
    }
  } else if (predictor == "provider_type") {
    for (auto v : kProviderTypes) {
      if (to_string(v) == level) return std::string(display_name(v));
    }
  } else if (auto c = parse_condition(predictor)) {
    return level == "1" ? std::string(display_name(*c)) : std::string(display_name(*c)) + " (absent)";
  }
  return level;
}

namespace {

std::string fixed(double v, int decimals) { return format_fixed(v, decimals); }

std::string percent_cell(std::size_t count, double percent) {
  return std::to_string(count) + " (" + fixed(percent, 1) + "%)";
}

std::string compact(double v) {
  return v == std::floor(v) ? fixed(v, 0) : fixed(v, 1);
}

std::string p_text(double p) {
  if (std::isnan(p)) return "n/a";
  if (p < 0.001) return "< .001";
  return fixed(p, 3);
}

std::string group_header(const std::string& predictor) {
  if (predictor == "gender") return "Gender (Ref = Female)";
  if (predictor == "ethnicity") return "Ethnicity (Ref = White)";
  if (predictor == "insurance") return "Insurance (Ref = Private)";
  if (predictor == "age_category") return "Age (Ref = Middle Aged (45-64))";
  if (predictor == "provider_type") return "Provider Type (Ref = Physicians)";
  return predictor;
}

const CategoricalSummary* find_categorical(const DescriptiveStats& d, const std::string& var) {
  for (const auto& c : d.categorical) {
    if (c.variable == var) return &c;
  }
  return nullptr;
}

const NumericSummary* find_numeric(const DescriptiveStats& d, const std::string& var) {
  for (const auto& n : d.numeric) {
    if (n.variable == var) return &n;
  }
  return nullptr;
}

void categorical_rows(std::ostream& md, const DescriptiveStats& d, const std::string& var, const std::string& title,
                      bool display) {
  const auto* c = find_categorical(d, var);
  if (!c) return;
  md << "| **" << title << "** | |\n";
  for (const auto& l : c->levels) {
    md << "| " << (display ? level_display_name(var, l.level) : l.level) << " | " << percent_cell(l.count, l.percent)
       << " |\n";
  }
  if (c->missing) md << "| Missing | " << c->missing << " |\n";
}

void count_rows(std::ostream& md, const DescriptiveStats& d, const std::string& var, const std::string& title) {
  const auto* s = find_numeric(d, var);
  if (!s) return;
  md << "| **" << title << "** | |\n";
  md << "| Mean (SD) | " << fixed(s->mean, 2) << " (" << fixed(s->sd, 2) << ") |\n";
  md << "| Median [Min, Max] | " << compact(s->median) << " [" << compact(s->min) << ", " << compact(s->max)
     << "] |\n";
}

void render_table1(std::ostream& md, const AnalysisResults& r) {
  md << "## Table 1. Descriptive statistics\n\n";
  if (r.patient_descriptives) {
    const auto& d = *r.patient_descriptives;
    md << "| | Overall (N=" << d.n << " Patients) |\n|---|---|\n";
    categorical_rows(md, d, "ethnicity", "Race/Ethnicity", true);
    if (const auto* age = find_numeric(d, "age_years"); age && age->n) {
      md << "| **Age: Mean (SD) [Min, Max]** | " << fixed(age->mean, 1) << " years (" << fixed(age->sd, 1) << ") ["
         << fixed(age->min, 1) << ", " << fixed(age->max, 1) << "] |\n";
    }
    categorical_rows(md, d, "insurance_raw", "Insurance", false);
    categorical_rows(md, d, "gender", "Gender", false);
    md << "| **Diagnoses** | |\n";
    for (Condition c : kConditions) {
      const auto* cs = find_categorical(d, std::string(to_string(c)));
      if (!cs) continue;
      std::size_t present = 0;
      for (const auto& l : cs->levels) {
        if (l.level == "1") present = l.count;
      }
      const double pct = cs->n ? 100.0 * static_cast<double>(present) / static_cast<double>(cs->n) : 0.0;
      md << "| " << display_name(c) << " | " << percent_cell(present, pct) << " |\n";
    }
    count_rows(md, d, "stigma_count", "Stigmatizing Labels Count Per Patient");
    count_rows(md, d, "doubt_count", "Doubt Marker Labels Count Per Patient");
    md << "\n";
  }
  if (r.provider_descriptives) {
    const auto& d = *r.provider_descriptives;
    md << "| | Overall (N = " << d.n << " Providers) |\n|---|---|\n";
    categorical_rows(md, d, "provider_type", "Provider Types", true);
    count_rows(md, d, "stigma_count", "Stigmatizing Labels Count Per Provider");
    count_rows(md, d, "doubt_count", "Doubt Marker Labels Count Per Provider");
    md << "\n";
  }
}

struct CellKey {
  EntityLevel level;
  Outcome outcome;
  std::string predictor;
  std::string level_name;
  auto operator<=>(const CellKey&) const = default;
};

void render_regression_table(std::ostream& md, std::ostream& csv, const AnalysisResults& r, EntityLevel level,
                             const std::string& title) {
  std::map<CellKey, const RateRatio*> cells;
  std::vector<std::string> notes;
  std::set<std::string> absent;
  for (const auto& b : r.fits) {
    if (b.level != level) continue;
    if (!b.error.empty()) {
      notes.push_back("Not estimable: " + std::string(to_string(b.outcome)) + " ~ " + b.block + " (" + b.error + ")");
    }
    if (b.fit) absent.insert(b.fit->absent_levels.begin(), b.fit->absent_levels.end());
    for (const auto& row : b.rows) cells[{level, b.outcome, row.predictor, row.level}] = &row;
  }

  md << "## " << title << "\n\n";
  md << "| | Stigmatizing Classifier Labels | Doubt Marker Classifier Labels |\n|---|---|---|\n";
  const auto predictors = default_predictors(level);
  const auto refs = ModelSpec::default_reference_levels();
  bool diagnoses_header = false;
  for (const auto& p : predictors) {
    const bool condition = parse_condition(p).has_value();
    std::vector<std::string> levels;
    for (const auto& l : covariate_level_order(p)) {
      if (refs.count(p) && refs.at(p) == l) continue;
      if (cells.count({level, Outcome::Stigma, p, l}) || cells.count({level, Outcome::Doubt, p, l})) {
        levels.push_back(l);
      }
    }
    if (levels.empty()) continue;
    if (condition) {
      if (!diagnoses_header) md << "| **Diagnoses** | | |\n";
      diagnoses_header = true;
    } else if (p == "gender" && levels.size() == 1) {
      // Single-row block: the header carries the reference.
    } else {
      md << "| **" << group_header(p) << "** | | |\n";
    }
    for (const auto& l : levels) {
      std::string label = p == "gender" && levels.size() == 1 ? group_header(p) : level_display_name(p, l);
      md << "| " << label;
      for (Outcome o : {Outcome::Stigma, Outcome::Doubt}) {
        const auto it = cells.find({level, o, p, l});
        if (it == cells.end()) {
          md << " | n/a";
          continue;
        }
        const RateRatio& rr = *it->second;
        const std::string cell = format_rate_ratio_cell(rr);
        md << " | " << cell;
        const std::vector<std::string> fields{std::string(to_string(o)),
                                              std::string(to_string(level)),
                                              p,
                                              l,
                                              cell,
                                              format_double(rr.rr),
                                              format_double(rr.ci_low),
                                              format_double(rr.ci_high),
                                              format_double(rr.p_value),
                                              rr.stars,
                                              std::string(to_string(r.model_mode))};
        write_csv_row(csv, fields);
      }
      md << " |\n";
    }
  }
  md << "\n*p is significant at <.05 value\n\n**p is significant at <.0001 value\n\n";

  if (level == EntityLevel::Provider) {
    std::size_t pharmacists = 0, unknown = 0;
    if (r.provider_descriptives) {
      if (const auto* c = find_categorical(*r.provider_descriptives, "provider_type")) {
        for (const auto& l : c->levels) {
          if (l.level == "Pharmacist") pharmacists = l.count;
          if (l.level == "Unknown") unknown = l.count;
        }
      }
    }
    md << "Pharmacists removed from regression analyses due to low cell size (n = " << pharmacists << ")\n\n";
    md << "Providers with unknown category removed from regression analyses (n = " << unknown << ")\n\n";
  }
  for (const auto& a : absent) notes.push_back("Level with no entities, dropped: " + a);
  for (const auto& n : notes) md << "- " << n << "\n";
  if (!notes.empty()) md << "\n";
}

}  // namespace

Report emit_report(const RunManifest& manifest, const AnalysisResults& results) {
  const std::string id = manifest.id();
  if (results.manifest_id != id) {
    throw Error(ErrorCode::ManifestMismatch,
                "results belong to manifest " + results.manifest_id + ", report manifest is " + id);
  }
  if (results.fits.empty()) throw Error(ErrorCode::EmptyInput, "no model fits to report");

  std::ostringstream md, csv;
  write_csv_row(csv, std::vector<std::string>{"outcome", "entity_level", "predictor", "level", "cell", "rr", "ci_low",
                                              "ci_high", "p", "stars", "model_mode"});
  md << "# Stigmatizing language and doubt marker report\n\n";
  md << "Manifest `" << id << "` (stigscan " << manifest.version << ")\n\n";
  md << "- Counting mode: " << to_string(results.counting_mode) << "\n";
  md << "- Model mode: " << to_string(results.model_mode)
     << (results.model_mode == ModelMode::PerPredictor ? " (each predictor block fit as its own model)"
                                                       : " (all predictor blocks in one model)")
     << "\n";
  md << "- Classifier: " << (manifest.classifier ? "on" : "off (every lexicon match counts)") << "\n\n";
  md << "```json\n" << manifest.canonical_json() << "\n```\n\n";

  const auto& t = results.totals;
  md << "## Headline totals\n\n";
  md << "| Counting mode | Stigmatizing labels | Doubt markers |\n|---|---|---|\n";
  md << "| flagged_charts (notes with a positive sentence) | " << t.flagged_stigma_notes << " | "
     << t.flagged_doubt_notes << " |\n";
  md << "| sentences (positive sentences) | " << t.stigma_sentences << " | " << t.doubt_sentences << " |\n\n";
  md << "Notes analysed: " << t.notes << "; patients: " << t.patients << "; providers: " << t.providers << "\n\n";
  md << "Notes without a provider id (patient-level only): " << t.notes_without_provider << "\n\n";
  md << "Notes without a patient record (provider-level only): " << t.notes_without_patient_record << "\n\n";

  render_table1(md, results);
  render_regression_table(md, csv, results, EntityLevel::Patient,
                          "Table 2. Patient-level Poisson regression, rate ratios (95% CI) per chart");
  render_regression_table(md, csv, results, EntityLevel::Provider,
                          "Table 3. Provider-level Poisson regression, rate ratios (95% CI) per chart");

  md << "## Clustering (random-intercept Poisson on note-level presence)\n\n";
  md << "| Level | Outcome | sigma2 | Median IRR | Log-likelihood | Clusters | Notes |\n|---|---|---|---|---|---|---|\n";
  for (const auto& m : results.mixed) {
    md << "| " << to_string(m.level) << " | " << to_string(m.outcome) << " | ";
    if (m.fit) {
      md << fixed(m.fit->sigma2, 4) << " | " << fixed(m.fit->median_irr, 2) << " | " << fixed(m.fit->loglik, 3)
         << " | " << m.fit->n_clusters << " | " << m.fit->n_observations << " |\n";
    } else {
      md << m.error << " | | | | |\n";
    }
  }
  md << "\n## Spearman correlation of stigmatizing and doubt marker counts\n\n";
  md << "| Level | Rho | p | n |\n|---|---|---|---|\n";
  for (const auto& c : results.correlations) {
    md << "| " << to_string(c.level) << " | ";
    if (c.result) {
      md << fixed(c.result->rho, 4) << " | " << p_text(c.result->p_value) << " | " << c.result->n << " |\n";
    } else {
      md << c.error << " | | |\n";
    }
  }
  return {md.str(), csv.str()};
}

}  // namespace stigscan
