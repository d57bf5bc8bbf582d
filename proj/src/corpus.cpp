#include "stigscan/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "stigscan/default_data.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

std::string_view to_string(Gender v) { return v == Gender::Female ? "Female" : "Male"; }

std::string_view to_string(AgeCategory v) {
  switch (v) {
    case AgeCategory::Adolescent: return "Adolescent";
    case AgeCategory::Adult: return "Adult";
    case AgeCategory::MiddleAged: return "MiddleAged";
    case AgeCategory::Aged: return "Aged";
    case AgeCategory::Aged80Plus: return "Aged80Plus";
  }
  return "";
}

std::string_view to_string(Ethnicity v) {
  switch (v) {
    case Ethnicity::White: return "White";
    case Ethnicity::Asian: return "Asian";
    case Ethnicity::BlackAfricanAmerican: return "BlackAfricanAmerican";
    case Ethnicity::HispanicLatino: return "HispanicLatino";
    case Ethnicity::NativeAmericanAlaskanNative: return "NativeAmericanAlaskanNative";
    case Ethnicity::Other: return "Other";
    case Ethnicity::UnknownDeclined: return "UnknownDeclined";
  }
  return "";
}

std::string_view to_string(Insurance v) {
  switch (v) {
    case Insurance::Private: return "Private";
    case Insurance::GovernmentRun: return "GovernmentRun";
    case Insurance::SelfPay: return "SelfPay";
  }
  return "";
}

std::string_view to_string(ProviderType v) {
  switch (v) {
    case ProviderType::Physicians: return "Physicians";
    case ProviderType::APP: return "APP";
    case ProviderType::Pharmacist: return "Pharmacist";
    case ProviderType::RegisteredDieticians: return "RegisteredDieticians";
    case ProviderType::RegisteredNurses: return "RegisteredNurses";
    case ProviderType::RehabOTPT: return "RehabOTPT";
    case ProviderType::RespiratoryTherapist: return "RespiratoryTherapist";
    case ProviderType::SocialWorkers: return "SocialWorkers";
    case ProviderType::Unknown: return "Unknown";
  }
  return "";
}

std::string_view to_string(Condition v) {
  switch (v) {
    case Condition::SickleCell: return "sickle_cell";
    case Condition::Oud: return "oud";
    case Condition::Obesity: return "obesity";
    case Condition::HivSymptomatic: return "hiv_symptomatic";
    case Condition::Sud: return "sud";
    case Condition::Schizophrenia: return "schizophrenia";
    case Condition::MoodDisorder: return "mood_disorder";
    case Condition::Anxiety: return "anxiety";
    case Condition::Ptsd: return "ptsd";
    case Condition::SuicideAttempt: return "suicide_attempt";
    case Condition::SuicidalIdeation: return "suicidal_ideation";
  }
  return "";
}

std::string_view display_name(AgeCategory v) {
  switch (v) {
    case AgeCategory::Adolescent: return "Adolescent (13-18)";
    case AgeCategory::Adult: return "Adult (19-44)";
    case AgeCategory::MiddleAged: return "Middle Aged (45-64)";
    case AgeCategory::Aged: return "Aged (65-79)";
    case AgeCategory::Aged80Plus: return "Aged, 80 and over (>80)";
  }
  return "";
}

std::string_view display_name(Ethnicity v) {
  switch (v) {
    case Ethnicity::White: return "White";
    case Ethnicity::Asian: return "Asian";
    case Ethnicity::BlackAfricanAmerican: return "Black/African American";
    case Ethnicity::HispanicLatino: return "Hispanic/Latino";
    case Ethnicity::NativeAmericanAlaskanNative: return "Native American/Alaskan Native";
    case Ethnicity::Other: return "Other";
    case Ethnicity::UnknownDeclined: return "Unknown/Declined";
  }
  return "";
}

std::string_view display_name(Insurance v) {
  switch (v) {
    case Insurance::Private: return "Private";
    case Insurance::GovernmentRun: return "Government-run";
    case Insurance::SelfPay: return "Self-Pay";
  }
  return "";
}

std::string_view display_name(ProviderType v) {
  switch (v) {
    case ProviderType::Physicians: return "Physicians";
    case ProviderType::APP: return "Advanced Practice Providers (NP, PA-C)";
    case ProviderType::Pharmacist: return "Pharmacists";
    case ProviderType::RegisteredDieticians: return "Registered Dieticians";
    case ProviderType::RegisteredNurses: return "Registered Nurses";
    case ProviderType::RehabOTPT: return "Rehab (OT/PT)";
    case ProviderType::RespiratoryTherapist: return "Respiratory Therapists";
    case ProviderType::SocialWorkers: return "Social Workers";
    case ProviderType::Unknown: return "Unknown";
  }
  return "";
}

std::string_view display_name(Condition v) {
  switch (v) {
    case Condition::SickleCell: return "Sickle Cell Disease";
    case Condition::Oud: return "Opioid Use Disorder";
    case Condition::Obesity: return "Obesity";
    case Condition::HivSymptomatic: return "HIV (Symptomatic)";
    case Condition::Sud: return "Substance Use Disorder";
    case Condition::Schizophrenia: return "Schizophrenia";
    case Condition::MoodDisorder: return "Mood Disorder";
    case Condition::Anxiety: return "Anxiety";
    case Condition::Ptsd: return "PTSD";
    case Condition::SuicideAttempt: return "Suicide Attempts";
    case Condition::SuicidalIdeation: return "Suicidal Ideation";
  }
  return "";
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view name, const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (iequals(to_string(v), trim(name))) return v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Ethnicity> parse_ethnicity(std::string_view name) { return parse_enum(name, kEthnicities); }
std::optional<ProviderType> parse_provider_type(std::string_view name) {
  return parse_enum(name, kProviderTypes);
}
std::optional<Condition> parse_condition(std::string_view name) { return parse_enum(name, kConditions); }

bool DiagnosisFlags::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](bool b) { return b; });
}

// ---- Reference tables -------------------------------------------------------

EthnicityMap EthnicityMap::parse(std::string_view text) {
  EthnicityMap map;
  for (const auto& entry : parse_key_value_lists(text)) {
    auto category = parse_ethnicity(entry.key);
    if (!category) {
      throw Error(ErrorCode::Parse, "ethnicity map line " + std::to_string(entry.line) +
                                        ": unknown category " + entry.key);
    }
    for (const auto& raw : entry.values) map.table_.emplace(to_upper(trim(raw)), *category);
  }
  return map;
}

const EthnicityMap& EthnicityMap::defaults() {
  static const EthnicityMap map = parse(default_data::ethnicity_map);
  return map;
}

Ethnicity EthnicityMap::lookup(std::string_view raw) const {
  auto it = table_.find(to_upper(trim(raw)));
  return it == table_.end() ? Ethnicity::UnknownDeclined : it->second;
}

ProviderMap ProviderMap::parse(std::string_view text) {
  ProviderMap map;
  for (const auto& entry : parse_key_value_lists(text)) {
    auto type = parse_provider_type(entry.key);
    if (!type) {
      throw Error(ErrorCode::Parse, "provider map line " + std::to_string(entry.line) +
                                        ": unknown provider type " + entry.key);
    }
    for (const auto& raw : entry.values) {
      auto [it, inserted] = map.table_.emplace(std::string(trim(raw)), *type);
      if (!inserted && it->second != *type) {
        throw Error(ErrorCode::Parse, "provider label " + raw + " mapped to two types");
      }
    }
  }
  return map;
}

const ProviderMap& ProviderMap::defaults() {
  static const ProviderMap map = parse(default_data::provider_map);
  return map;
}

ProviderType ProviderMap::lookup(std::string_view raw_label) const {
  auto it = table_.find(std::string(trim(raw_label)));
  return it == table_.end() ? ProviderType::Unknown : it->second;
}

bool CodePattern::matches(std::string_view icd9) const {
  if (prefix) return icd9.substr(0, code.size()) == code;
  return icd9 == code;
}

Icd9CodeMap Icd9CodeMap::parse(std::string_view text) {
  Icd9CodeMap map;
  for (const auto& entry : parse_key_value_lists(text)) {
    auto condition = parse_condition(entry.key);
    if (!condition) {
      throw Error(ErrorCode::Parse, "ICD-9 map line " + std::to_string(entry.line) +
                                        ": unknown condition " + entry.key);
    }
    for (std::string_view value : entry.values) {
      CodePattern p;
      if (!value.empty() && value.front() == '!') {
        p.exclude = true;
        value.remove_prefix(1);
      }
      if (!value.empty() && value.back() == '*') {
        p.prefix = true;
        value.remove_suffix(1);
      }
      std::string code;
      for (char c : value) {
        if (c != '.') code.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      }
      if (code.empty()) throw Error(ErrorCode::Parse, "empty ICD-9 pattern for " + entry.key);
      p.code = std::move(code);
      map.patterns_[static_cast<std::size_t>(*condition)].push_back(std::move(p));
    }
  }
  return map;
}

const Icd9CodeMap& Icd9CodeMap::defaults() {
  static const Icd9CodeMap map = parse(default_data::icd9_code_map);
  return map;
}

bool Icd9CodeMap::matches(Condition c, std::string_view icd9) const {
  bool included = false;
  for (const auto& p : patterns(c)) {
    if (!p.matches(icd9)) continue;
    if (p.exclude) return false;
    included = true;
  }
  return included;
}

// ---- Operations -------------------------------------------------------------

AdmissionAttrs resolve_admission_attrs(std::span<const AdmissionRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::NoAdmissions, "patient has no admission rows");
  return {rows.front().insurance, rows.front().ethnicity};
}

Ethnicity recategorize_ethnicity(std::string_view raw, const EthnicityMap& map) {
  return map.lookup(raw);
}

Insurance recategorize_insurance(std::string_view raw) {
  auto label = trim(raw);
  if (iequals(label, "Medicare") || iequals(label, "Medicaid") || iequals(label, "Government"))
    return Insurance::GovernmentRun;
  if (iequals(label, "Private")) return Insurance::Private;
  if (iequals(label, "Self Pay")) return Insurance::SelfPay;
  throw Error(ErrorCode::UnknownInsuranceLabel, "unknown insurance label '" + std::string(label) + "'");
}

ProviderType recategorize_provider(std::string_view raw_label, const ProviderMap& map) {
  return map.lookup(raw_label);
}

double clamp_deidentified_age(double age_years) {
  return age_years > kAgeClampThreshold ? kClampedAge : age_years;
}

AgeCategory derive_age_category(double age_years) {
  double age = clamp_deidentified_age(age_years);
  if (!(age >= 13.0)) {
    throw Error(ErrorCode::AgeBelowRange, "age " + format_fixed(age_years, 2) + " is below 13");
  }
  // Completed years.
  double years = std::floor(age);
  if (years <= 18) return AgeCategory::Adolescent;
  if (years <= 44) return AgeCategory::Adult;
  if (years <= 64) return AgeCategory::MiddleAged;
  if (years <= 79) return AgeCategory::Aged;
  return AgeCategory::Aged80Plus;
}

DiagnosisFlags derive_diagnosis_flags(std::span<const std::string> icd9_codes, const Icd9CodeMap& code_map) {
  DiagnosisFlags flags;
  for (const auto& raw : icd9_codes) {
    std::string code;
    for (char c : trim(raw)) {
      if (c != '.') code.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (code.empty()) continue;
    for (Condition c : kConditions) {
      if (!flags.has(c) && code_map.matches(c, code)) flags.set(c);
    }
  }
  return flags;
}

namespace {

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::optional<double> parse_timestamp_days(std::string_view text) {
  text = trim(text);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d))
    return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  double days = static_cast<double>(days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d)));
  if (text.size() >= 19 && (text[10] == ' ' || text[10] == 'T')) {
    int hh = 0, mm = 0, ss = 0;
    if (parse_int(text.substr(11, 2), hh) && parse_int(text.substr(14, 2), mm) &&
        parse_int(text.substr(17, 2), ss)) {
      days += (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
    }
  }
  return days;
}

namespace {

std::optional<Gender> parse_gender(std::string_view raw) {
  auto g = trim(raw);
  if (iequals(g, "F") || iequals(g, "Female")) return Gender::Female;
  if (iequals(g, "M") || iequals(g, "Male")) return Gender::Male;
  return std::nullopt;
}

std::optional<std::string> optional_id(const std::string& value) {
  auto v = trim(value);
  if (v.empty()) return std::nullopt;
  return std::string(v);
}

std::string row_ref(const CsvTable& t, std::size_t row) {
  // +2: header row and 1-based numbering.
  return t.source() + ":" + std::to_string(row + 2);
}

struct AdmissionInfo {
  AdmissionRow row;
  std::optional<double> admit_days;
};

}  // namespace

Corpus link_tables(const CsvTables& csv, const ReferenceTables& tables) {
  Corpus corpus;
  auto& report = corpus.report;

  // Validate all required columns up front.
  const auto n_row = csv.notes.require_column("ROW_ID");
  const auto n_subject = csv.notes.require_column("SUBJECT_ID");
  const auto n_hadm = csv.notes.require_column("HADM_ID");
  const auto n_cgid = csv.notes.require_column("CGID");
  const auto n_category = csv.notes.require_column("CATEGORY");
  const auto n_charttime = csv.notes.require_column("CHARTTIME");
  const auto n_text = csv.notes.require_column("TEXT");
  const auto p_subject = csv.patients.require_column("SUBJECT_ID");
  const auto p_gender = csv.patients.require_column("GENDER");
  const auto p_dob = csv.patients.require_column("DOB");
  const auto a_subject = csv.admissions.require_column("SUBJECT_ID");
  csv.admissions.require_column("HADM_ID");
  const auto a_insurance = csv.admissions.require_column("INSURANCE");
  const auto a_ethnicity = csv.admissions.require_column("ETHNICITY");
  const auto a_admittime = csv.admissions.require_column("ADMITTIME");
  const auto c_cgid = csv.caregivers.require_column("CGID");
  const auto c_label = csv.caregivers.require_column("LABEL");
  const auto d_subject = csv.diagnoses.require_column("SUBJECT_ID");
  const auto d_code = csv.diagnoses.require_column("ICD9_CODE");

  for (std::size_t r = 0; r < csv.caregivers.size(); ++r) {
    auto id = optional_id(csv.caregivers.cell(r, c_cgid));
    if (!id) {
      report.bad_rows.push_back(row_ref(csv.caregivers, r) + ": empty CGID");
      continue;
    }
    ProviderRecord rec;
    rec.provider_id = *id;
    rec.raw_label = std::string(trim(csv.caregivers.cell(r, c_label)));
    rec.provider_type = recategorize_provider(rec.raw_label, tables.providers);
    if (!corpus.providers.emplace(*id, rec).second) {
      report.bad_rows.push_back(row_ref(csv.caregivers, r) + ": duplicate CGID " + *id);
    }
  }

  std::unordered_map<std::string, std::vector<AdmissionInfo>> admissions;
  for (std::size_t r = 0; r < csv.admissions.size(); ++r) {
    auto id = optional_id(csv.admissions.cell(r, a_subject));
    if (!id) {
      report.bad_rows.push_back(row_ref(csv.admissions, r) + ": empty SUBJECT_ID");
      continue;
    }
    AdmissionInfo info;
    info.row.insurance = std::string(trim(csv.admissions.cell(r, a_insurance)));
    info.row.ethnicity = std::string(trim(csv.admissions.cell(r, a_ethnicity)));
    info.admit_days = parse_timestamp_days(csv.admissions.cell(r, a_admittime));
    admissions[*id].push_back(std::move(info));
  }

  std::unordered_map<std::string, std::vector<std::string>> diagnoses;
  for (std::size_t r = 0; r < csv.diagnoses.size(); ++r) {
    auto id = optional_id(csv.diagnoses.cell(r, d_subject));
    if (!id) {
      report.bad_rows.push_back(row_ref(csv.diagnoses, r) + ": empty SUBJECT_ID");
      continue;
    }
    diagnoses[*id].push_back(csv.diagnoses.cell(r, d_code));
  }

  for (std::size_t r = 0; r < csv.patients.size(); ++r) {
    auto id = optional_id(csv.patients.cell(r, p_subject));
    if (!id) {
      report.bad_rows.push_back(row_ref(csv.patients, r) + ": empty SUBJECT_ID");
      continue;
    }
    if (corpus.patients.count(*id)) {
      throw Error(ErrorCode::IdCollision,
                  "duplicate SUBJECT_ID " + *id + " in " + csv.patients.source());
    }
    auto gender = parse_gender(csv.patients.cell(r, p_gender));
    if (!gender) {
      report.bad_rows.push_back(row_ref(csv.patients, r) + ": unparseable GENDER '" +
                                csv.patients.cell(r, p_gender) + "'");
      continue;
    }
    PatientRecord rec;
    rec.patient_id = *id;
    rec.gender = *gender;

    auto dob = parse_timestamp_days(csv.patients.cell(r, p_dob));
    if (!dob) report.bad_rows.push_back(row_ref(csv.patients, r) + ": unparseable DOB");

    auto adm = admissions.find(*id);
    if (adm == admissions.end() || adm->second.empty()) {
      ++report.patients_without_admissions;
    } else {
      std::vector<AdmissionRow> rows;
      rows.reserve(adm->second.size());
      std::optional<double> first_admit;
      for (const auto& a : adm->second) {
        rows.push_back(a.row);
        if (a.admit_days && (!first_admit || *a.admit_days < *first_admit)) first_admit = a.admit_days;
      }
      auto attrs = resolve_admission_attrs(rows);
      rec.insurance_raw = attrs.insurance_raw;
      rec.ethnicity_raw = attrs.ethnicity_raw;
      rec.ethnicity = recategorize_ethnicity(attrs.ethnicity_raw, tables.ethnicity);
      try {
        rec.insurance = recategorize_insurance(attrs.insurance_raw);
      } catch (const Error&) {
        ++report.unknown_insurance_labels[attrs.insurance_raw];
      }
      if (dob && first_admit) {
        double age = (*first_admit - *dob) / 365.2425;
        if (age > kAgeClampThreshold) ++report.ages_clamped;
        rec.age_years = clamp_deidentified_age(age);
        try {
          rec.age_category = derive_age_category(age);
        } catch (const Error&) {
          ++report.patients_age_below_range;
        }
      }
    }

    auto dx = diagnoses.find(*id);
    if (dx != diagnoses.end()) rec.diagnosis_flags = derive_diagnosis_flags(dx->second, tables.codes);
    corpus.patients.emplace(*id, std::move(rec));
  }

  std::unordered_set<std::string> seen_notes;
  for (std::size_t r = 0; r < csv.notes.size(); ++r) {
    auto note_id = optional_id(csv.notes.cell(r, n_row));
    auto patient_id = optional_id(csv.notes.cell(r, n_subject));
    if (!note_id || !patient_id) {
      report.bad_rows.push_back(row_ref(csv.notes, r) + ": empty ROW_ID or SUBJECT_ID");
      continue;
    }
    if (!seen_notes.insert(*note_id).second) {
      report.bad_rows.push_back(row_ref(csv.notes, r) + ": duplicate ROW_ID " + *note_id);
      continue;
    }
    const auto& text = csv.notes.cell(r, n_text);
    if (trim(text).empty()) {
      ++report.notes_empty_text;
      continue;
    }
    Note note;
    note.note_id = *note_id;
    note.patient_id = *patient_id;
    note.admission_id = optional_id(csv.notes.cell(r, n_hadm));
    note.provider_id = optional_id(csv.notes.cell(r, n_cgid));
    note.category = std::string(trim(csv.notes.cell(r, n_category)));
    note.charttime = optional_id(csv.notes.cell(r, n_charttime));
    note.text = text;
    if (!corpus.patients.count(note.patient_id)) ++report.notes_missing_patient;
    if (note.provider_id && !corpus.providers.count(*note.provider_id)) {
      ProviderRecord rec;
      rec.provider_id = *note.provider_id;
      rec.provider_type = ProviderType::Unknown;
      corpus.providers.emplace(rec.provider_id, rec);
    }
    corpus.notes.push_back(std::move(note));
  }
  report.notes_loaded = corpus.notes.size();

  for (const auto& [id, provider] : corpus.providers) {
    if (provider.provider_type == ProviderType::Unknown) ++report.unknown_provider_labels[provider.raw_label];
  }
  return corpus;
}

Corpus load_tables(const TablePaths& paths, const ReferenceTables& tables) {
  CsvTables csv{read_csv(paths.notes), read_csv(paths.patients), read_csv(paths.admissions),
                read_csv(paths.caregivers), read_csv(paths.diagnoses)};
  return link_tables(csv, tables);
}

const std::set<std::string>& default_excluded_categories() {
  static const std::set<std::string> categories{"EEG", "Radiology"};
  return categories;
}

namespace {

bool numeric_less(const std::string& a, const std::string& b) {
  auto digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (digits(a) && digits(b) && a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

Corpus dedup_and_filter(Corpus corpus, const std::set<std::string>& excluded_categories) {
  std::vector<std::string> excluded;
  for (const auto& c : excluded_categories) excluded.push_back(to_lower(trim(c)));

  std::vector<Note> kept;
  kept.reserve(corpus.notes.size());
  for (auto& note : corpus.notes) {
    auto cat = to_lower(trim(note.category));
    if (std::find(excluded.begin(), excluded.end(), cat) != excluded.end()) {
      ++corpus.report.excluded_category_removed;
    } else {
      kept.push_back(std::move(note));
    }
  }

  // Visit in (patient, charttime, note_id) order so the earliest copy wins;
  // survivors keep their original relative order.
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = kept[a];
    const auto& y = kept[b];
    if (x.patient_id != y.patient_id) return x.patient_id < y.patient_id;
    // Missing charttime sorts last.
    if (x.charttime.has_value() != y.charttime.has_value()) return x.charttime.has_value();
    if (x.charttime && *x.charttime != *y.charttime) return *x.charttime < *y.charttime;
    return numeric_less(x.note_id, y.note_id);
  });
  std::vector<bool> keep(kept.size(), true);
  std::unordered_set<std::string> seen;
  for (std::size_t idx : order) {
    const auto& note = kept[idx];
    std::string key = note.patient_id;
    key.push_back('\0');
    key.append(trim_right(note.text));
    if (!seen.insert(std::move(key)).second) {
      keep[idx] = false;
      ++corpus.report.duplicates_removed;
    }
  }
  corpus.notes.clear();
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (keep[i]) corpus.notes.push_back(std::move(kept[i]));
  }
  return corpus;
}

}  // namespace stigscan
