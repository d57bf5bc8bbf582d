#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "stigscan/corpus.hpp"
#include "stigscan/errors.hpp"

using namespace stigscan;

namespace {

CsvTables toy_tables() {
  CsvTables t;
  t.notes = parse_csv(
      "ROW_ID,SUBJECT_ID,HADM_ID,CGID,CATEGORY,CHARTTIME,TEXT\n"
      "1,P1,H1,C1,Nursing,2100-01-01 10:00:00,Pt resting.\n"
      "2,P1,H1,C2,Physician,2100-01-01 11:00:00,Patient claimed pain.\n"
      "3,P1,H1,C1,Nursing,2100-01-02 10:00:00,\"Pt resting.  \"\n"
      "4,P2,H2,C2,Radiology,2100-02-01 09:00:00,CXR clear.\n"
      "5,P2,H2,,Nursing,2100-02-01 10:00:00,Pt resting.\n",
      "notes.csv");
  t.patients = parse_csv("SUBJECT_ID,GENDER,DOB\nP1,F,2050-01-01\nP2,M,1800-01-01\n", "patients.csv");
  t.admissions = parse_csv(
      "SUBJECT_ID,HADM_ID,INSURANCE,ETHNICITY,ADMITTIME\n"
      "P1,H1,Medicare,WHITE,2100-01-01 00:00:00\n"
      "P1,H3,Private,ASIAN,2101-01-01 00:00:00\n"
      "P2,H2,Self Pay,BLACK/AFRICAN AMERICAN,2100-02-01 00:00:00\n",
      "admissions.csv");
  t.caregivers = parse_csv("CGID,LABEL\nC1,RN\nC2,MSIV\n", "caregivers.csv");
  t.diagnoses = parse_csv("SUBJECT_ID,ICD9_CODE\nP1,30400\nP2,4019\n", "diagnoses.csv");
  return t;
}

}  // namespace

TEST_CASE("link_tables builds the toy corpus") {
  const Corpus c = link_tables(toy_tables());
  CHECK(c.notes.size() == 5);
  CHECK(c.patients.size() == 2);
  CHECK(c.providers.size() == 2);
  const auto& p1 = c.patients.at("P1");
  CHECK(p1.diagnosis_flags.has(Condition::Oud));
  CHECK(p1.insurance == Insurance::GovernmentRun);
  CHECK(p1.ethnicity == Ethnicity::White);
  CHECK(p1.age_category == AgeCategory::MiddleAged);
  const auto& p2 = c.patients.at("P2");
  CHECK(p2.age_category == AgeCategory::Aged80Plus);
  CHECK(p2.age_years.value() == doctest::Approx(90.0));
  CHECK(c.report.ages_clamped == 1);
  CHECK(c.providers.at("C2").provider_type == ProviderType::Physicians);
  CHECK_FALSE(c.notes[4].provider_id.has_value());
}

TEST_CASE("missing column names column and file") {
  CsvTables t = toy_tables();
  t.patients = parse_csv("SUBJECT_ID,DOB\nP1,2050-01-01\n", "patients.csv");
  try {
    link_tables(t);
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("GENDER") != std::string::npos);
    CHECK(std::string(e.what()).find("patients.csv") != std::string::npos);
  }
}

TEST_CASE("duplicate patient id is an IdCollision") {
  CsvTables t = toy_tables();
  t.patients = parse_csv("SUBJECT_ID,GENDER,DOB\nP1,F,2050-01-01\nP1,M,2050-01-01\n", "patients.csv");
  CHECK_THROWS_AS(link_tables(t), Error);
}

TEST_CASE("dedup_and_filter") {
  const Corpus raw = link_tables(toy_tables());
  const Corpus c = dedup_and_filter(raw);
  std::set<std::string> ids;
  for (const auto& n : c.notes) ids.insert(n.note_id);
  // Note 3 repeats note 1 after trailing-space trim; note 4 is Radiology; note 5
  // repeats the text of another patient and survives.
  CHECK(ids == std::set<std::string>{"1", "2", "5"});
  CHECK(c.report.duplicates_removed == 1);
  CHECK(c.report.excluded_category_removed == 1);

  SUBCASE("idempotent") {
    const Corpus twice = dedup_and_filter(c);
    REQUIRE(twice.notes.size() == c.notes.size());
    for (std::size_t i = 0; i < c.notes.size(); ++i) CHECK(twice.notes[i].note_id == c.notes[i].note_id);
  }
  SUBCASE("category match is case-insensitive") {
    Corpus r = raw;
    r.notes[3].category = "radiology";
    CHECK(dedup_and_filter(r).notes.size() == 3);
  }
}

TEST_CASE("resolve_admission_attrs takes the first row") {
  std::vector<AdmissionRow> rows{{"Medicare", "WHITE"}, {"Private", "WHITE"}};
  CHECK(resolve_admission_attrs(rows).insurance_raw == "Medicare");
  std::vector<AdmissionRow> blank{{"", ""}, {"Private", "ASIAN"}};
  const auto a = resolve_admission_attrs(blank);
  CHECK(a.ethnicity_raw.empty());
  CHECK(recategorize_ethnicity(a.ethnicity_raw) == Ethnicity::UnknownDeclined);
  CHECK_THROWS_AS(resolve_admission_attrs(std::vector<AdmissionRow>{}), Error);
}

TEST_CASE("recategorization tables") {
  CHECK(recategorize_ethnicity("BLACK/AFRICAN AMERICAN") == Ethnicity::BlackAfricanAmerican);
  CHECK(recategorize_ethnicity("WHITE") == Ethnicity::White);
  CHECK(recategorize_ethnicity("") == Ethnicity::UnknownDeclined);
  CHECK(recategorize_insurance("Medicare") == Insurance::GovernmentRun);
  CHECK(recategorize_insurance("Medicaid") == Insurance::GovernmentRun);
  CHECK(recategorize_insurance("Government") == Insurance::GovernmentRun);
  CHECK(recategorize_insurance("Self Pay") == Insurance::SelfPay);
  CHECK(recategorize_insurance("Private") == Insurance::Private);
  CHECK_THROWS_AS(recategorize_insurance("Barter"), Error);
  CHECK(recategorize_provider("MSIV") == ProviderType::Physicians);
  CHECK(recategorize_provider("LICSW") == ProviderType::SocialWorkers);
  CHECK(recategorize_provider("  LICSW ") == ProviderType::SocialWorkers);
  CHECK(recategorize_provider("ZZZ") == ProviderType::Unknown);

  std::set<ProviderType> image;
  for (const auto& [label, type] : ProviderMap::defaults().entries()) image.insert(recategorize_provider(label));
  for (auto t : kProviderTypes) {
    if (t != ProviderType::Unknown) CHECK(image.count(t) == 1);
  }
}

TEST_CASE("age categories") {
  CHECK(derive_age_category(50) == AgeCategory::MiddleAged);
  CHECK(derive_age_category(13) == AgeCategory::Adolescent);
  CHECK(derive_age_category(18) == AgeCategory::Adolescent);
  CHECK(derive_age_category(18.99) == AgeCategory::Adolescent);
  CHECK(derive_age_category(19) == AgeCategory::Adult);
  CHECK(derive_age_category(44) == AgeCategory::Adult);
  CHECK(derive_age_category(45) == AgeCategory::MiddleAged);
  CHECK(derive_age_category(64) == AgeCategory::MiddleAged);
  CHECK(derive_age_category(65) == AgeCategory::Aged);
  CHECK(derive_age_category(79) == AgeCategory::Aged);
  CHECK(derive_age_category(80) == AgeCategory::Aged80Plus);
  CHECK(derive_age_category(300) == AgeCategory::Aged80Plus);
  CHECK(clamp_deidentified_age(300) == 90.0);
  CHECK(clamp_deidentified_age(89.5) == 89.5);
  CHECK_THROWS_AS(derive_age_category(12.9), Error);
}

TEST_CASE("diagnosis flags") {
  CHECK(derive_diagnosis_flags(std::vector<std::string>{"28260"}).has(Condition::SickleCell));
  CHECK(derive_diagnosis_flags(std::vector<std::string>{"30981"}).has(Condition::Ptsd));
  CHECK_FALSE(derive_diagnosis_flags(std::vector<std::string>{}).any());
  const auto tobacco = derive_diagnosis_flags(std::vector<std::string>{"3051"});
  CHECK_FALSE(tobacco.has(Condition::Sud));
  CHECK(derive_diagnosis_flags(std::vector<std::string>{"30500"}).has(Condition::Sud));
  CHECK(derive_diagnosis_flags(std::vector<std::string>{"E9503"}).has(Condition::SuicideAttempt));
  CHECK(derive_diagnosis_flags(std::vector<std::string>{"V6284"}).has(Condition::SuicidalIdeation));
}

TEST_CASE("diagnosis flags equal a per-pattern loop") {
  const auto& map = Icd9CodeMap::defaults();
  const std::vector<std::string> pool{"28260", "28269", "30400", "30471", "30550", "042",  "27800", "27801",
                                      "30300", "3051",  "30590", "2950",  "29630", "3004", "311",   "30000",
                                      "30981", "E9500", "E9599", "V6284", "4019",  "25000", "2780", "V628"};
  oracle::SplitMix rng{42};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> codes;
    const std::size_t k = rng.below(6);
    for (std::size_t i = 0; i < k; ++i) codes.push_back(pool[rng.below(pool.size())]);
    const DiagnosisFlags flags = derive_diagnosis_flags(codes);
    for (auto c : kConditions) {
      bool expected = false;
      for (const auto& code : codes) {
        bool included = false, excluded = false;
        for (const auto& p : map.patterns(c)) {
          const bool hit = p.prefix ? code.rfind(p.code, 0) == 0 : code == p.code;
          if (hit && p.exclude) excluded = true;
          if (hit && !p.exclude) included = true;
        }
        expected = expected || (included && !excluded);
      }
      CHECK(flags.has(c) == expected);
    }
  }
}

TEST_CASE("category counts sum to the patient count") {
  const Corpus c = link_tables(toy_tables());
  std::map<Ethnicity, int> eth;
  for (const auto& [id, p] : c.patients) ++eth[p.ethnicity];
  int total = 0;
  for (const auto& [k, v] : eth) total += v;
  CHECK(total == static_cast<int>(c.patients.size()));
}
