#include "stigscan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stigscan/aggregation.hpp"
#include "stigscan/csv.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/text.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

namespace {

// Level that absorbs the prevalence mass not assigned to other levels.
const std::map<std::string, std::string>& remainder_levels() {
  static const std::map<std::string, std::string> levels{{"gender", "Female"},
                                                         {"ethnicity", "White"},
                                                         {"insurance_raw", "Private"},
                                                         {"age_category", "MiddleAged"},
                                                         {"provider_type", "Physicians"}};
  return levels;
}

const std::vector<std::string>& rr_covariates() {
  static const std::vector<std::string> covs = [] {
    std::vector<std::string> c{"gender", "ethnicity", "insurance", "age_category", "provider_type"};
    for (Condition cond : kConditions) c.emplace_back(to_string(cond));
    return c;
  }();
  return covs;
}

bool valid_level(const std::string& covariate, const std::string& level) {
  const auto levels = covariate_level_order(covariate);
  return std::find(levels.begin(), levels.end(), level) != levels.end();
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "synth config: '" + key + "' expects a number, got '" + value + "'");
  }
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  if (v < 0 || v != std::floor(v)) {
    throw Error(ErrorCode::Parse, "synth config: '" + key + "' expects a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_dots(const std::string& key) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = key.find('.', pos);
    parts.push_back(key.substr(pos, dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return parts;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }
  std::size_t range(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  template <class T>
  const T& pick(const std::vector<T>& items) { return items[index(items.size())]; }

 private:
  std::mt19937_64 engine_;
};

// Days since 1970-01-01 to a civil date (Hinnant).
void civil_from_days(long long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yoe + era * 400) + (m <= 2);
}

std::string format_timestamp(double days) {
  const double whole = std::floor(days);
  long long seconds = std::llround((days - whole) * 86400.0);
  long long day = static_cast<long long>(whole);
  if (seconds >= 86400) {
    seconds -= 86400;
    ++day;
  }
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", y, m, d, seconds / 3600, (seconds / 60) % 60,
                seconds % 60);
  return buf;
}

std::string sample_level(Rng& rng, const std::map<std::string, double>& probs, const std::vector<std::string>& order) {
  double u = rng.uniform();
  for (const auto& level : order) {
    const auto it = probs.find(level);
    if (it == probs.end()) continue;
    if (u < it->second) return level;
    u -= it->second;
  }
  return order.back();
}

// Categorical distribution with the remainder level filled in.
std::map<std::string, double> complete_distribution(const std::string& covariate,
                                                    const std::map<std::string, double>& given) {
  std::map<std::string, double> dist;
  const std::string& rest = remainder_levels().at(covariate);
  double used = 0.0;
  for (const auto& [level, p] : given) {
    if (level == rest) continue;
    dist[level] = p;
    used += p;
  }
  dist[rest] = std::max(0.0, 1.0 - used);
  return dist;
}

std::vector<std::string> remainder_first(const std::string& covariate) {
  std::vector<std::string> order = covariate_level_order(covariate);
  const std::string& rest = remainder_levels().at(covariate);
  std::erase(order, rest);
  order.push_back(rest);
  return order;
}

std::string capitalize(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

std::pair<double, double> age_range(AgeCategory c) {
  switch (c) {
    case AgeCategory::Adolescent: return {13.0, 19.0};
    case AgeCategory::Adult: return {19.0, 45.0};
    case AgeCategory::MiddleAged: return {45.0, 65.0};
    case AgeCategory::Aged: return {65.0, 80.0};
    case AgeCategory::Aged80Plus: return {80.0, 89.9};
  }
  return {45.0, 65.0};
}

// One ICD-9 code per condition, preferring codes that match no other condition.
std::map<Condition, std::string> condition_codes(const Icd9CodeMap& codes) {
  std::map<Condition, std::string> out;
  for (Condition c : kConditions) {
    std::size_t best_overlap = kConditionCount + 1;
    for (const auto& pattern : codes.patterns(c)) {
      if (pattern.exclude) continue;
      const std::string candidate = pattern.code;
      if (!codes.matches(c, candidate)) continue;
      std::size_t overlap = 0;
      for (Condition other : kConditions) {
        if (other != c && codes.matches(other, candidate)) ++overlap;
      }
      if (overlap < best_overlap) {
        best_overlap = overlap;
        out[c] = candidate;
      }
    }
    if (!out.count(c)) {
      throw Error(ErrorCode::InvalidArgument, "no ICD-9 code available for " + std::string(to_string(c)));
    }
  }
  return out;
}

std::vector<std::string> injectable_terms(const Lexicon& lexicon, const Matcher& matcher) {
  std::vector<std::string> out;
  for (const auto& term : lexicon.terms()) {
    const std::string sentence = "Bazo kelu " + term.text + " mafi tovu.";
    const auto sentences = segment_sentences(sentence);
    if (sentences.size() != 1) continue;
    const auto matches = matcher.match(sentences.front());
    if (matches.size() == 1 && matches.front().term == term.text && matches.front().lexicon == lexicon.kind()) {
      out.push_back(term.text);
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::map<std::string, double>> SynthConfig::default_prevalence() {
  return {
      {"gender", {{"Male", 0.563}}},
      {"ethnicity",
       {{"Asian", 0.030},
        {"BlackAfricanAmerican", 0.081},
        {"HispanicLatino", 0.038},
        {"NativeAmericanAlaskanNative", 0.0014},
        {"Other", 0.030},
        {"UnknownDeclined", 0.105}}},
      {"insurance_raw", {{"Government", 0.030}, {"Medicaid", 0.104}, {"Medicare", 0.469}, {"Self Pay", 0.009}}},
      {"age_category", {{"Adolescent", 0.01}, {"Adult", 0.19}, {"Aged", 0.28}, {"Aged80Plus", 0.15}}},
      {"provider_type",
       {{"APP", 0.016},
        {"Pharmacist", 0.002},
        {"RegisteredDieticians", 0.012},
        {"RegisteredNurses", 0.534},
        {"RehabOTPT", 0.026},
        {"RespiratoryTherapist", 0.022},
        {"SocialWorkers", 0.025},
        {"Unknown", 0.048}}},
      {"condition",
       {{"sickle_cell", 0.002},
        {"oud", 0.019},
        {"obesity", 0.058},
        {"hiv_symptomatic", 0.010},
        {"sud", 0.116},
        {"schizophrenia", 0.003},
        {"mood_disorder", 0.060},
        {"anxiety", 0.042},
        {"ptsd", 0.006},
        {"suicide_attempt", 0.005},
        {"suicidal_ideation", 0.002}}},
  };
}

SynthConfig SynthConfig::parse(std::string_view text) {
  SynthConfig config;
  for (const auto& [key, value] : parse_key_values(text)) {
    const auto parts = split_dots(key);
    if (parts.size() == 1) {
      const std::string& k = parts[0];
      if (k == "seed") {
        try {
          std::size_t used = 0;
          config.seed = std::stoull(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
          throw Error(ErrorCode::Parse, "synth config: 'seed' expects an unsigned integer");
        }
      } else if (k == "n_patients") {
        config.n_patients = parse_count(k, value);
      } else if (k == "n_providers") {
        config.n_providers = parse_count(k, value);
      } else if (k == "notes_per_patient_min") {
        config.notes_per_patient_min = parse_count(k, value);
      } else if (k == "notes_per_patient_max") {
        config.notes_per_patient_max = parse_count(k, value);
      } else if (k == "sentences_per_note_min") {
        config.sentences_per_note_min = parse_count(k, value);
      } else if (k == "sentences_per_note_max") {
        config.sentences_per_note_max = parse_count(k, value);
      } else if (k == "words_per_sentence_min") {
        config.words_per_sentence_min = parse_count(k, value);
      } else if (k == "words_per_sentence_max") {
        config.words_per_sentence_max = parse_count(k, value);
      } else if (k == "filler_vocab_size") {
        config.filler_vocab_size = parse_count(k, value);
      } else if (k == "excluded_category_fraction") {
        config.excluded_category_fraction = parse_number(k, value);
      } else if (k == "missing_cgid_fraction") {
        config.missing_cgid_fraction = parse_number(k, value);
      } else if (k == "deidentified_age_fraction") {
        config.deidentified_age_fraction = parse_number(k, value);
      } else if (k == "second_admission_fraction") {
        config.second_admission_fraction = parse_number(k, value);
      } else {
        throw Error(ErrorCode::InvalidArgument, "synth config: unknown key '" + key + "'");
      }
      continue;
    }
    const std::string& head = parts[0];
    if ((head == "base_rate" || head == "sigma2") && parts.size() == 2) {
      const double v = parse_number(key, value);
      if (parts[1] != "stigma" && parts[1] != "doubt") {
        throw Error(ErrorCode::InvalidArgument, "synth config: unknown outcome in '" + key + "'");
      }
      const bool stigma = parts[1] == "stigma";
      if (head == "base_rate") {
        (stigma ? config.base_rate_stigma : config.base_rate_doubt) = v;
      } else {
        (stigma ? config.sigma2_stigma : config.sigma2_doubt) = v;
      }
    } else if (head == "prevalence" && parts.size() == 3) {
      const std::string& cov = parts[1];
      const std::string& level = parts[2];
      const bool known = cov == "condition" ? parse_condition(level).has_value()
                                            : remainder_levels().count(cov) && valid_level(cov, level);
      if (!known) throw Error(ErrorCode::InvalidArgument, "synth config: unknown prevalence key '" + key + "'");
      config.prevalence[cov][level] = parse_number(key, value);
    } else if (head == "rr" && (parts.size() == 3 || parts.size() == 4)) {
      const std::string& outcome = parts[1];
      const std::string& cov = parts[2];
      const bool condition = parse_condition(cov).has_value();
      const std::string level = parts.size() == 4 ? parts[3] : (condition ? "1" : "");
      const bool known = (outcome == "stigma" || outcome == "doubt") &&
                         std::find(rr_covariates().begin(), rr_covariates().end(), cov) != rr_covariates().end() &&
                         valid_level(cov, level);
      if (!known) throw Error(ErrorCode::InvalidArgument, "synth config: unknown rate-ratio key '" + key + "'");
      config.rate_ratios[outcome][cov][level] = parse_number(key, value);
    } else {
      throw Error(ErrorCode::InvalidArgument, "synth config: unknown key '" + key + "'");
    }
  }
  return config;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

double SynthConfig::rate_ratio(std::string_view outcome, const std::string& covariate, const std::string& level) const {
  const auto o = rate_ratios.find(std::string(outcome));
  if (o == rate_ratios.end()) return 1.0;
  const auto c = o->second.find(covariate);
  if (c == o->second.end()) return 1.0;
  const auto l = c->second.find(level);
  return l == c->second.end() ? 1.0 : l->second;
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, "synth config: " + what);
  };
  require(n_patients >= 1, "n_patients must be >= 1");
  require(n_providers >= 1, "n_providers must be >= 1");
  require(notes_per_patient_min >= 1 && notes_per_patient_min <= notes_per_patient_max,
          "need 1 <= notes_per_patient_min <= notes_per_patient_max");
  require(sentences_per_note_min >= 1 && sentences_per_note_min <= sentences_per_note_max,
          "need 1 <= sentences_per_note_min <= sentences_per_note_max");
  require(words_per_sentence_min >= 1 && words_per_sentence_min <= words_per_sentence_max,
          "need 1 <= words_per_sentence_min <= words_per_sentence_max");
  require(filler_vocab_size >= 10, "filler_vocab_size must be >= 10");
  for (double f : {excluded_category_fraction, missing_cgid_fraction, deidentified_age_fraction,
                   second_admission_fraction}) {
    require(f >= 0.0 && f < 1.0, "fractions must lie in [0, 1)");
  }
  require(sigma2_stigma >= 0.0 && sigma2_doubt >= 0.0, "sigma2 must be >= 0");
  for (const auto& [cov, levels] : prevalence) {
    double total = 0.0;
    for (const auto& [level, p] : levels) {
      require(p >= 0.0 && p <= 1.0, "prevalence." + cov + "." + level + " must lie in [0, 1]");
      if (cov != "condition" && level != remainder_levels().at(cov)) total += p;
    }
    require(cov == "condition" || total <= 1.0 + 1e-12, "prevalences of " + cov + " sum above 1");
  }

  for (const char* outcome : {"stigma", "doubt"}) {
    const double base = std::string(outcome) == "stigma" ? base_rate_stigma : base_rate_doubt;
    if (!(base > 0.0 && base < 1.0)) {
      throw Error(ErrorCode::InvalidRates, std::string("base_rate.") + outcome + " must lie in (0, 1)");
    }
    double high = base;
    double low = base;
    for (const auto& cov : rr_covariates()) {
      double hi = 1.0, lo = 1.0;
      for (const auto& level : covariate_level_order(cov)) {
        const double rr = rate_ratio(outcome, cov, level);
        if (!(rr > 0.0) || !std::isfinite(rr)) {
          throw Error(ErrorCode::InvalidRates, "rr." + std::string(outcome) + "." + cov + "." + level + " must be > 0");
        }
        hi = std::max(hi, rr);
        lo = std::min(lo, rr);
      }
      high *= hi;
      low *= lo;
    }
    if (!(high < 1.0) || !(low > 0.0)) {
      throw Error(ErrorCode::InvalidRates, std::string("largest reachable ") + outcome + " rate " + format_double(high) +
                                               " is not below 1");
    }
  }
}

std::vector<std::string> filler_vocabulary(std::size_t size, std::uint64_t seed,
                                           const std::vector<const Lexicon*>& lexicons) {
  std::set<std::string> forbidden;
  for (const Lexicon* lex : lexicons) {
    for (const auto& term : lex->terms()) forbidden.insert(term.tokens.begin(), term.tokens.end());
  }
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  Rng rng(seed ^ 0x5eed5eed5eed5eedULL);
  std::set<std::string> seen;
  std::vector<std::string> words;
  const std::size_t max_attempts = size * 50 + 1000;
  for (std::size_t attempt = 0; words.size() < size && attempt < max_attempts; ++attempt) {
    std::string word;
    const std::size_t syllables = rng.range(2, 3);
    for (std::size_t s = 0; s < syllables; ++s) {
      word += consonants[rng.index(consonants.size())];
      word += vowels[rng.index(vowels.size())];
    }
    if (forbidden.count(word) || !seen.insert(word).second) continue;
    words.push_back(word);
  }
  if (words.size() < size) {
    throw Error(ErrorCode::InvalidArgument, "cannot build " + std::to_string(size) + " distinct filler words");
  }
  return words;
}

SynthCorpus generate(const SynthConfig& config, const Lexicon& stigma, const Lexicon& doubt) {
  config.validate();
  const std::vector<Lexicon> both{stigma, doubt};
  const Matcher matcher = Matcher::build(both);

  SynthCorpus out;
  out.injectable_stigma_terms = injectable_terms(stigma, matcher);
  out.injectable_doubt_terms = injectable_terms(doubt, matcher);
  if (out.injectable_stigma_terms.empty() || out.injectable_doubt_terms.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no injectable lexicon terms");
  }
  const auto vocab = filler_vocabulary(config.filler_vocab_size, config.seed, {&stigma, &doubt});

  Rng rng(config.seed);
  const auto& prev = config.prevalence;
  auto dist = [&](const std::string& cov) {
    const auto it = prev.find(cov);
    return complete_distribution(cov, it == prev.end() ? std::map<std::string, double>{} : it->second);
  };
  const auto gender_dist = dist("gender");
  const auto ethnicity_dist = dist("ethnicity");
  const auto insurance_dist = dist("insurance_raw");
  const auto age_dist = dist("age_category");
  const auto provider_dist = dist("provider_type");
  const auto gender_order = remainder_first("gender");
  const auto ethnicity_order = remainder_first("ethnicity");
  const auto insurance_order = remainder_first("insurance_raw");
  const auto age_order = remainder_first("age_category");
  const auto provider_order = remainder_first("provider_type");
  std::map<std::string, double> condition_prev;
  if (prev.count("condition")) condition_prev = prev.at("condition");

  const ReferenceTables tables;
  std::map<std::string, std::vector<std::string>> ethnicity_labels;
  for (const auto& [label, eth] : tables.ethnicity.entries()) ethnicity_labels[std::string(to_string(eth))].push_back(label);
  std::map<std::string, std::vector<std::string>> provider_labels;
  for (const auto& [label, type] : tables.providers.entries()) provider_labels[std::string(to_string(type))].push_back(label);
  provider_labels["Unknown"] = {"Clerk", "Volunteer", "Admin"};
  const auto codes = condition_codes(tables.codes);

  nlohmann::json config_line;
  config_line["record"] = "config";
  config_line["seed"] = config.seed;
  config_line["base_rate"] = {{"stigma", config.base_rate_stigma}, {"doubt", config.base_rate_doubt}};
  config_line["sigma2"] = {{"stigma", config.sigma2_stigma}, {"doubt", config.sigma2_doubt}};
  config_line["rate_ratios"] = config.rate_ratios;
  std::ostringstream truth;
  truth << config_line.dump() << '\n';

  // Providers.
  std::ostringstream caregivers;
  write_csv_row(caregivers, std::vector<std::string>{"ROW_ID", "CGID", "LABEL", "DESCRIPTION"});
  struct Provider {
    std::string cgid;
    std::string type;
  };
  std::vector<Provider> providers;
  for (std::size_t i = 0; i < config.n_providers; ++i) {
    const std::string type = sample_level(rng, provider_dist, provider_order);
    const std::string label = rng.pick(provider_labels.at(type));
    const std::string actual = std::string(to_string(tables.providers.lookup(label)));
    Provider p{std::to_string(10001 + i), actual};
    providers.push_back(p);
    write_csv_row(caregivers, std::vector<std::string>{std::to_string(i + 1), p.cgid, label, "synthetic caregiver"});
    nlohmann::json line{{"record", "provider"}, {"id", p.cgid}, {"raw_label", label}, {"provider_type", actual}};
    truth << line.dump() << '\n';
  }

  std::ostringstream patients, admissions, diagnoses, notes;
  write_csv_row(patients, std::vector<std::string>{"ROW_ID", "SUBJECT_ID", "GENDER", "DOB"});
  write_csv_row(admissions, std::vector<std::string>{"ROW_ID", "SUBJECT_ID", "HADM_ID", "ADMITTIME", "INSURANCE",
                                                     "ETHNICITY"});
  write_csv_row(diagnoses, std::vector<std::string>{"ROW_ID", "SUBJECT_ID", "HADM_ID", "SEQ_NUM", "ICD9_CODE"});
  write_csv_row(notes, std::vector<std::string>{"ROW_ID", "SUBJECT_ID", "HADM_ID", "CHARTDATE", "CHARTTIME",
                                                "CATEGORY", "DESCRIPTION", "CGID", "ISERROR", "TEXT"});
  static const std::vector<std::string> categories{"Nursing", "Nursing/other", "Physician ", "General",
                                                   "Social Work", "Rehab Services", "Nutrition", "Respiratory "};

  auto filler_sentence = [&](std::size_t words) {
    std::string s;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) s += ' ';
      s += w == 0 ? capitalize(rng.pick(vocab)) : rng.pick(vocab);
    }
    return s + '.';
  };
  auto injection_sentence = [&](const std::string& term) {
    std::string s = capitalize(rng.pick(vocab));
    for (std::size_t w = 0, n = rng.range(1, 4); w < n; ++w) s += ' ' + rng.pick(vocab);
    s += ' ' + term;
    for (std::size_t w = 0, n = rng.range(2, 5); w < n; ++w) s += ' ' + rng.pick(vocab);
    return s + '.';
  };

  std::size_t note_row = 0, admission_row = 0, diagnosis_row = 0, hadm = 100000;
  for (std::size_t i = 0; i < config.n_patients; ++i) {
    const std::string subject = std::to_string(i + 1);
    PatientRecord record;
    record.patient_id = subject;
    record.gender = sample_level(rng, gender_dist, gender_order) == "Male" ? Gender::Male : Gender::Female;
    const std::string eth = sample_level(rng, ethnicity_dist, ethnicity_order);
    record.ethnicity_raw = rng.pick(ethnicity_labels.at(eth));
    record.ethnicity = tables.ethnicity.lookup(record.ethnicity_raw);
    record.insurance_raw = sample_level(rng, insurance_dist, insurance_order);
    record.insurance = recategorize_insurance(record.insurance_raw);

    const bool deidentified = rng.uniform() < config.deidentified_age_fraction;
    std::string age_level = sample_level(rng, age_dist, age_order);
    double age;
    if (deidentified) {
      age = 300.0 + 10.0 * rng.uniform();
    } else {
      const AgeCategory cat = *std::find_if(kAgeCategories.begin(), kAgeCategories.end(),
                                            [&](AgeCategory c) { return to_string(c) == age_level; });
      const auto [lo, hi] = age_range(cat);
      age = lo + 0.01 + (hi - lo - 0.02) * rng.uniform();
    }
    record.age_years = clamp_deidentified_age(age);
    record.age_category = derive_age_category(*record.age_years);

    std::vector<std::string> patient_codes{"4019"};
    for (Condition c : kConditions) {
      const auto it = condition_prev.find(std::string(to_string(c)));
      if (it != condition_prev.end() && rng.uniform() < it->second) patient_codes.push_back(codes.at(c));
    }
    record.diagnosis_flags = derive_diagnosis_flags(patient_codes, tables.codes);

    const double admit_days = 47482.0 + std::floor(36500.0 * rng.uniform()) + std::floor(86400.0 * rng.uniform()) / 86400.0;
    const double dob_days = std::floor(admit_days - age * 365.2425);
    write_csv_row(patients, std::vector<std::string>{subject, subject,
                                                     record.gender == Gender::Male ? "M" : "F",
                                                     format_timestamp(dob_days)});
    const std::string first_hadm = std::to_string(++hadm);
    write_csv_row(admissions, std::vector<std::string>{std::to_string(++admission_row), subject, first_hadm,
                                                       format_timestamp(admit_days), record.insurance_raw,
                                                       record.ethnicity_raw});
    if (rng.uniform() < config.second_admission_fraction) {
      const double later = admit_days + 30.0 + std::floor(370.0 * rng.uniform());
      write_csv_row(admissions, std::vector<std::string>{std::to_string(++admission_row), subject,
                                                         std::to_string(++hadm), format_timestamp(later),
                                                         sample_level(rng, insurance_dist, insurance_order),
                                                         record.ethnicity_raw});
    }
    for (std::size_t k = 0; k < patient_codes.size(); ++k) {
      write_csv_row(diagnoses, std::vector<std::string>{std::to_string(++diagnosis_row), subject, first_hadm,
                                                        std::to_string(k + 1), patient_codes[k]});
    }

    const auto covariates = patient_covariates(record);
    auto patient_multiplier = [&](const char* outcome) {
      double m = 1.0;
      for (const auto& cov : rr_covariates()) {
        if (cov == "provider_type") continue;
        const auto it = covariates.find(cov);
        if (it != covariates.end()) m *= config.rate_ratio(outcome, cov, it->second);
      }
      return m;
    };
    const double rate_stigma = config.base_rate_stigma * patient_multiplier("stigma");
    const double rate_doubt = config.base_rate_doubt * patient_multiplier("doubt");
    const double u_stigma = config.sigma2_stigma > 0 ? std::sqrt(config.sigma2_stigma) * rng.normal() : 0.0;
    const double u_doubt = config.sigma2_doubt > 0 ? std::sqrt(config.sigma2_doubt) * rng.normal() : 0.0;

    const std::size_t n_notes = rng.range(config.notes_per_patient_min, config.notes_per_patient_max);
    std::size_t kept = 0, flagged_s = 0, flagged_d = 0;
    for (std::size_t j = 0; j < n_notes; ++j) {
      const bool excluded = rng.uniform() < config.excluded_category_fraction;
      const bool no_cgid = rng.uniform() < config.missing_cgid_fraction;
      const Provider& provider = rng.pick(providers);
      bool flag_s = false, flag_d = false;
      std::string category = "Radiology";
      if (!excluded) {
        category = rng.pick(categories);
        auto draw = [&](const char* outcome, double rate, double u) {
          double p = rate * std::exp(u);
          if (!no_cgid) p *= config.rate_ratio(outcome, "provider_type", provider.type);
          if (p >= 1.0) {
            ++out.probability_clamped;
            p = 1.0;
          }
          return rng.uniform() < p;
        };
        flag_s = draw("stigma", rate_stigma, u_stigma);
        flag_d = draw("doubt", rate_doubt, u_doubt);
      }
      std::vector<std::string> sentences;
      const std::size_t n_sentences = rng.range(config.sentences_per_note_min, config.sentences_per_note_max);
      for (std::size_t s = 0; s < n_sentences; ++s) {
        sentences.push_back(filler_sentence(rng.range(config.words_per_sentence_min, config.words_per_sentence_max)));
      }
      if (flag_s) {
        sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(rng.index(sentences.size() + 1)),
                         injection_sentence(rng.pick(out.injectable_stigma_terms)));
      }
      if (flag_d) {
        sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(rng.index(sentences.size() + 1)),
                         injection_sentence(rng.pick(out.injectable_doubt_terms)));
      }
      std::string text;
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (s) text += rng.uniform() < 0.2 ? "\n" : " ";
        text += sentences[s];
      }
      const double chart = admit_days + static_cast<double>(j + 1) / 24.0;
      const std::string stamp = format_timestamp(chart);
      write_csv_row(notes, std::vector<std::string>{std::to_string(++note_row), subject, first_hadm,
                                                    stamp.substr(0, 10), stamp, category, "Report",
                                                    no_cgid ? "" : provider.cgid, "", text});
      if (excluded) {
        ++out.excluded_notes;
      } else {
        ++kept;
        flagged_s += flag_s;
        flagged_d += flag_d;
      }
    }
    out.notes += kept;
    out.flagged_stigma += flagged_s;
    out.flagged_doubt += flagged_d;

    nlohmann::json line;
    line["record"] = "patient";
    line["id"] = subject;
    line["covariates"] = covariates;
    line["rate_stigma"] = rate_stigma;
    line["rate_doubt"] = rate_doubt;
    line["u_stigma"] = u_stigma;
    line["u_doubt"] = u_doubt;
    line["notes"] = kept;
    line["flagged_stigma"] = flagged_s;
    line["flagged_doubt"] = flagged_d;
    truth << line.dump() << '\n';
  }

  out.notes_csv = notes.str();
  out.patients_csv = patients.str();
  out.admissions_csv = admissions.str();
  out.caregivers_csv = caregivers.str();
  out.diagnoses_csv = diagnoses.str();
  out.truth_jsonl = truth.str();
  return out;
}

TablePaths write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& out_dir) {
  TablePaths paths{out_dir / "NOTEEVENTS.csv", out_dir / "PATIENTS.csv", out_dir / "ADMISSIONS.csv",
                   out_dir / "CAREGIVERS.csv", out_dir / "DIAGNOSES_ICD.csv"};
  write_file(paths.notes, corpus.notes_csv);
  write_file(paths.patients, corpus.patients_csv);
  write_file(paths.admissions, corpus.admissions_csv);
  write_file(paths.caregivers, corpus.caregivers_csv);
  write_file(paths.diagnoses, corpus.diagnoses_csv);
  write_file(out_dir / "truth.jsonl", corpus.truth_jsonl);
  return paths;
}

CsvTables synth_tables(const SynthCorpus& corpus) {
  return CsvTables{parse_csv(corpus.notes_csv, "NOTEEVENTS.csv"), parse_csv(corpus.patients_csv, "PATIENTS.csv"),
                   parse_csv(corpus.admissions_csv, "ADMISSIONS.csv"),
                   parse_csv(corpus.caregivers_csv, "CAREGIVERS.csv"),
                   parse_csv(corpus.diagnoses_csv, "DIAGNOSES_ICD.csv")};
}

}  // namespace stigscan
