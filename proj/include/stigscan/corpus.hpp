#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stigscan/csv.hpp"

namespace stigscan {

enum class Gender { Female, Male };
enum class AgeCategory { Adolescent, Adult, MiddleAged, Aged, Aged80Plus };
enum class Ethnicity {
  White,
  Asian,
  BlackAfricanAmerican,
  HispanicLatino,
  NativeAmericanAlaskanNative,
  Other,
  UnknownDeclined,
};
enum class Insurance { Private, GovernmentRun, SelfPay };
enum class ProviderType {
  Physicians,
  APP,
  Pharmacist,
  RegisteredDieticians,
  RegisteredNurses,
  RehabOTPT,
  RespiratoryTherapist,
  SocialWorkers,
  Unknown,
};

enum class Condition {
  SickleCell,
  Oud,
  Obesity,
  HivSymptomatic,
  Sud,
  Schizophrenia,
  MoodDisorder,
  Anxiety,
  Ptsd,
  SuicideAttempt,
  SuicidalIdeation,
};
inline constexpr std::size_t kConditionCount = 11;

inline constexpr std::array<Gender, 2> kGenders{Gender::Female, Gender::Male};
inline constexpr std::array<AgeCategory, 5> kAgeCategories{
    AgeCategory::Adolescent, AgeCategory::Adult, AgeCategory::MiddleAged, AgeCategory::Aged,
    AgeCategory::Aged80Plus};
inline constexpr std::array<Ethnicity, 7> kEthnicities{
    Ethnicity::White,          Ethnicity::Asian,
    Ethnicity::BlackAfricanAmerican, Ethnicity::HispanicLatino,
    Ethnicity::NativeAmericanAlaskanNative, Ethnicity::Other,
    Ethnicity::UnknownDeclined};
inline constexpr std::array<Insurance, 3> kInsurances{Insurance::Private, Insurance::GovernmentRun,
                                                       Insurance::SelfPay};
inline constexpr std::array<ProviderType, 9> kProviderTypes{
    ProviderType::Physicians,        ProviderType::APP,
    ProviderType::Pharmacist,        ProviderType::RegisteredDieticians,
    ProviderType::RegisteredNurses,  ProviderType::RehabOTPT,
    ProviderType::RespiratoryTherapist, ProviderType::SocialWorkers,
    ProviderType::Unknown};
inline constexpr std::array<Condition, kConditionCount> kConditions{
    Condition::SickleCell,   Condition::Oud,          Condition::Obesity,
    Condition::HivSymptomatic, Condition::Sud,        Condition::Schizophrenia,
    Condition::MoodDisorder, Condition::Anxiety,      Condition::Ptsd,
    Condition::SuicideAttempt, Condition::SuicidalIdeation};

// Machine names (CSV values, config keys).
std::string_view to_string(Gender v);
std::string_view to_string(AgeCategory v);
std::string_view to_string(Ethnicity v);
std::string_view to_string(Insurance v);
std::string_view to_string(ProviderType v);
std::string_view to_string(Condition v);

// Table row labels.
std::string_view display_name(AgeCategory v);
std::string_view display_name(Ethnicity v);
std::string_view display_name(Insurance v);
std::string_view display_name(ProviderType v);
std::string_view display_name(Condition v);

std::optional<Ethnicity> parse_ethnicity(std::string_view name);
std::optional<ProviderType> parse_provider_type(std::string_view name);
std::optional<Condition> parse_condition(std::string_view name);

class DiagnosisFlags {
 public:
  bool has(Condition c) const { return bits_[static_cast<std::size_t>(c)]; }
  void set(Condition c, bool value = true) { bits_[static_cast<std::size_t>(c)] = value; }
  bool any() const;
  bool operator==(const DiagnosisFlags&) const = default;

 private:
  std::array<bool, kConditionCount> bits_{};
};

struct Note {
  std::string note_id;
  std::string patient_id;
  std::optional<std::string> admission_id;
  std::optional<std::string> provider_id;
  std::string category;
  std::optional<std::string> charttime;
  std::string text;
};

struct PatientRecord {
  std::string patient_id;
  Gender gender = Gender::Female;
  std::optional<double> age_years;
  std::optional<AgeCategory> age_category;
  Ethnicity ethnicity = Ethnicity::UnknownDeclined;
  std::optional<Insurance> insurance;  // empty when the label is not recognized
  std::string insurance_raw;
  std::string ethnicity_raw;
  DiagnosisFlags diagnosis_flags;
};

struct ProviderRecord {
  std::string provider_id;
  std::string raw_label;
  ProviderType provider_type = ProviderType::Unknown;
};

// Counts of everything skipped or degraded during load and filtering.
struct LoadReport {
  std::vector<std::string> bad_rows;  // "file:row: reason"
  std::size_t notes_loaded = 0;
  std::size_t notes_empty_text = 0;
  std::size_t notes_missing_patient = 0;  // D5: excluded from patient-level analyses
  std::size_t patients_without_admissions = 0;
  std::size_t patients_age_below_range = 0;
  std::size_t ages_clamped = 0;
  std::map<std::string, std::size_t> unknown_insurance_labels;
  std::map<std::string, std::size_t> unknown_provider_labels;
  std::size_t duplicates_removed = 0;
  std::size_t excluded_category_removed = 0;
};

struct Corpus {
  std::vector<Note> notes;
  std::map<std::string, PatientRecord> patients;
  std::map<std::string, ProviderRecord> providers;
  LoadReport report;
};

// ---- Reference tables -------------------------------------------------------

class EthnicityMap {
 public:
  static EthnicityMap parse(std::string_view text);
  static const EthnicityMap& defaults();
  // Trimmed, case-insensitive. Blank or unlisted -> UnknownDeclined.
  Ethnicity lookup(std::string_view raw) const;
  const std::map<std::string, Ethnicity>& entries() const { return table_; }

 private:
  std::map<std::string, Ethnicity> table_;  // keys upper-cased
};

class ProviderMap {
 public:
  static ProviderMap parse(std::string_view text);
  static const ProviderMap& defaults();
  // Exact, case-sensitive, whitespace-trimmed. Miss -> Unknown.
  ProviderType lookup(std::string_view raw_label) const;
  const std::map<std::string, ProviderType>& entries() const { return table_; }

 private:
  std::map<std::string, ProviderType> table_;
};

struct CodePattern {
  std::string code;
  bool prefix = false;
  bool exclude = false;

  bool matches(std::string_view icd9) const;
};

class Icd9CodeMap {
 public:
  static Icd9CodeMap parse(std::string_view text);
  static const Icd9CodeMap& defaults();
  const std::vector<CodePattern>& patterns(Condition c) const {
    return patterns_[static_cast<std::size_t>(c)];
  }
  // A code counts toward a condition when it matches an include pattern and
  // no exclude pattern of that condition.
  bool matches(Condition c, std::string_view icd9) const;

 private:
  std::array<std::vector<CodePattern>, kConditionCount> patterns_;
};

struct ReferenceTables {
  EthnicityMap ethnicity = EthnicityMap::defaults();
  ProviderMap providers = ProviderMap::defaults();
  Icd9CodeMap codes = Icd9CodeMap::defaults();
};

// ---- Operations -------------------------------------------------------------

struct TablePaths {
  std::filesystem::path notes;
  std::filesystem::path patients;
  std::filesystem::path admissions;
  std::filesystem::path caregivers;
  std::filesystem::path diagnoses;
};

struct CsvTables {
  CsvTable notes;
  CsvTable patients;
  CsvTable admissions;
  CsvTable caregivers;
  CsvTable diagnoses;
};

Corpus load_tables(const TablePaths& paths, const ReferenceTables& tables = {});
Corpus link_tables(const CsvTables& csv, const ReferenceTables& tables = {});

const std::set<std::string>& default_excluded_categories();
Corpus dedup_and_filter(Corpus corpus,
                        const std::set<std::string>& excluded_categories = default_excluded_categories());

struct AdmissionRow {
  std::string insurance;
  std::string ethnicity;
};
struct AdmissionAttrs {
  std::string insurance_raw;
  std::string ethnicity_raw;
};
// First row in admission-table order; throws NoAdmissions when empty.
AdmissionAttrs resolve_admission_attrs(std::span<const AdmissionRow> rows);

Ethnicity recategorize_ethnicity(std::string_view raw, const EthnicityMap& map = EthnicityMap::defaults());
// Throws UnknownInsuranceLabel for labels outside Medicare/Medicaid/Government/Private/Self Pay.
Insurance recategorize_insurance(std::string_view raw);
ProviderType recategorize_provider(std::string_view raw_label,
                                   const ProviderMap& map = ProviderMap::defaults());

// Ages above this are MIMIC de-identification artifacts and are clamped.
inline constexpr double kAgeClampThreshold = 120.0;
inline constexpr double kClampedAge = 90.0;
double clamp_deidentified_age(double age_years);
// Throws AgeBelowRange for ages under 13.
AgeCategory derive_age_category(double age_years);

DiagnosisFlags derive_diagnosis_flags(std::span<const std::string> icd9_codes,
                                      const Icd9CodeMap& code_map = Icd9CodeMap::defaults());

// Days since 1970-01-01 for "YYYY-MM-DD[ HH:MM:SS]"; nullopt if unparseable.
std::optional<double> parse_timestamp_days(std::string_view text);

}  // namespace stigscan
