#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "stigscan/aggregation.hpp"
#include "stigscan/errors.hpp"

using namespace stigscan;

namespace {

SentenceLabel label(const std::string& note, std::size_t idx, bool stigma, bool doubt) {
  SentenceLabel l;
  l.note_id = note;
  l.sentence_index = idx;
  l.stigma_hit = l.stigma_positive = stigma;
  l.doubt_hit = l.doubt_positive = doubt;
  l.stigma_probability = stigma ? 1.0 : 0.0;
  l.doubt_probability = doubt ? 1.0 : 0.0;
  return l;
}

NoteFlags flags(const std::string& id, std::int64_t stigma, std::int64_t doubt) {
  return {id, stigma > 0, doubt > 0, stigma, doubt};
}

Corpus random_corpus(oracle::SplitMix& rng, std::vector<NoteFlags>& note_flags) {
  Corpus c;
  for (int p = 0; p < 6; ++p) {
    PatientRecord rec;
    rec.patient_id = "P" + std::to_string(p);
    rec.age_years = 50;
    rec.age_category = AgeCategory::MiddleAged;
    rec.insurance = Insurance::Private;
    rec.insurance_raw = "Private";
    c.patients.emplace(rec.patient_id, rec);
  }
  for (int q = 0; q < 4; ++q) {
    ProviderRecord rec;
    rec.provider_id = "C" + std::to_string(q);
    rec.raw_label = "RN";
    rec.provider_type = ProviderType::RegisteredNurses;
    c.providers.emplace(rec.provider_id, rec);
  }
  for (int n = 0; n < 60; ++n) {
    Note note;
    note.note_id = std::to_string(n);
    note.patient_id = "P" + std::to_string(rng.below(7));  // P6 has no record
    if (rng.below(6) != 0) note.provider_id = "C" + std::to_string(rng.below(4));
    note.text = "x";
    c.notes.push_back(note);
    note_flags.push_back(flags(note.note_id, static_cast<std::int64_t>(rng.below(3)) * (rng.below(2)),
                               static_cast<std::int64_t>(rng.below(2))));
  }
  return c;
}

}  // namespace

TEST_CASE("aggregate_note") {
  const std::vector<SentenceLabel> mixed{label("n", 0, true, false), label("n", 2, false, true)};
  const auto f = aggregate_note("n", mixed);
  CHECK(f == NoteFlags{"n", true, true, 1, 1});
  CHECK(aggregate_note("n", {}) == NoteFlags{"n", false, false, 0, 0});
  std::vector<SentenceLabel> three{label("n", 0, true, false), label("n", 1, true, false), label("n", 2, true, false)};
  CHECK(aggregate_note("n", three).stigma_sentence_count == 3);
  // A hit the classifier rejected does not count.
  SentenceLabel rejected = label("n", 0, false, false);
  rejected.stigma_hit = true;
  CHECK_FALSE(aggregate_note("n", std::vector<SentenceLabel>{rejected}).stigma_present);
}

TEST_CASE("aggregate_entity counting modes") {
  const std::vector<NoteFlags> notes{flags("a", 2, 0), flags("b", 0, 0), flags("c", 5, 1)};
  const auto charts = aggregate_entity("P1", EntityLevel::Patient, notes, CountingMode::FlaggedCharts);
  CHECK(charts.stigma_count == 2);
  CHECK(charts.doubt_count == 1);
  CHECK(charts.chart_total == 3);
  const auto sentences = aggregate_entity("P1", EntityLevel::Patient, notes, CountingMode::Sentences);
  CHECK(sentences.stigma_count == 7);
  CHECK_THROWS_AS(aggregate_entity("P1", EntityLevel::Patient, {}, CountingMode::FlaggedCharts), Error);
}

TEST_CASE("aggregate_corpus properties") {
  oracle::SplitMix rng{17};
  std::vector<NoteFlags> nf;
  const Corpus c = random_corpus(rng, nf);
  const auto agg = aggregate_corpus(c, nf, CountingMode::FlaggedCharts);

  std::size_t without_provider = 0, without_patient = 0;
  std::int64_t flagged_with_patient = 0, flagged_with_provider = 0;
  for (std::size_t i = 0; i < c.notes.size(); ++i) {
    const bool known = c.patients.count(c.notes[i].patient_id) > 0;
    without_patient += !known;
    without_provider += !c.notes[i].provider_id.has_value();
    if (known) flagged_with_patient += nf[i].stigma_present;
    if (c.notes[i].provider_id) flagged_with_provider += nf[i].stigma_present;
  }
  CHECK(agg.notes_without_provider == without_provider);
  CHECK(agg.notes_without_patient_record == without_patient);

  std::int64_t patient_sum = 0, provider_sum = 0, patient_charts = 0;
  for (const auto& e : agg.patients) {
    CHECK(e.stigma_count <= e.chart_total);
    CHECK(e.doubt_count <= e.chart_total);
    patient_sum += e.stigma_count;
    patient_charts += e.chart_total;
  }
  for (const auto& e : agg.providers) provider_sum += e.stigma_count;
  CHECK(patient_sum == flagged_with_patient);
  CHECK(provider_sum == flagged_with_provider);
  CHECK(patient_charts == static_cast<std::int64_t>(c.notes.size() - without_patient));

  SUBCASE("both levels flag the same notes") {
    std::set<std::string> total;
    for (std::size_t i = 0; i < nf.size(); ++i) {
      if (nf[i].stigma_present) total.insert(nf[i].note_id);
    }
    std::set<std::string> seen;
    for (const auto& row : agg.notes) {
      if (row.flags.stigma_present) seen.insert(row.note_id);
    }
    CHECK(seen == total);
    CHECK(agg.flagged_stigma_notes == total.size());
  }

  SUBCASE("order independent") {
    Corpus shuffled = c;
    std::vector<NoteFlags> sf = nf;
    for (std::size_t i = shuffled.notes.size(); i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(shuffled.notes[i - 1], shuffled.notes[j]);
      std::swap(sf[i - 1], sf[j]);
    }
    const auto again = aggregate_corpus(shuffled, sf, CountingMode::FlaggedCharts);
    REQUIRE(again.patients.size() == agg.patients.size());
    for (std::size_t i = 0; i < agg.patients.size(); ++i) {
      CHECK(again.patients[i].entity_id == agg.patients[i].entity_id);
      CHECK(again.patients[i].stigma_count == agg.patients[i].stigma_count);
      CHECK(again.patients[i].doubt_count == agg.patients[i].doubt_count);
    }
  }

  SUBCASE("CSV round trip") {
    std::ostringstream out;
    write_entity_outcomes(out, agg.patients);
    const auto back = parse_entity_outcomes(out.str());
    REQUIRE(back.size() == agg.patients.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].entity_id == agg.patients[i].entity_id);
      CHECK(back[i].chart_total == agg.patients[i].chart_total);
      CHECK(back[i].covariates == agg.patients[i].covariates);
    }
  }

  CHECK_THROWS_AS(aggregate_corpus(c, std::vector<NoteFlags>{}, CountingMode::FlaggedCharts), Error);
}

TEST_CASE("descriptives") {
  const auto s = summarize("stigma_count", std::vector<double>{0, 4});
  CHECK(s.mean == 2.0);
  CHECK(s.sd == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(s.median == 2.0);
  CHECK(s.min == 0.0);
  CHECK(s.max == 4.0);

  std::vector<EntityOutcome> entities;
  for (int i = 0; i < 7; ++i) {
    EntityOutcome e;
    e.entity_id = std::to_string(i);
    e.chart_total = 3;
    e.stigma_count = i % 3;
    PatientRecord rec;
    rec.patient_id = e.entity_id;
    rec.gender = Gender::Male;
    rec.ethnicity = i < 3 ? Ethnicity::White : Ethnicity::Asian;
    rec.insurance_raw = "Private";
    rec.insurance = Insurance::Private;
    rec.age_years = 30;
    rec.age_category = AgeCategory::Adult;
    e.covariates = patient_covariates(rec);
    entities.push_back(e);
  }
  const auto table = descriptive_table(entities);
  for (const auto& cat : table.categorical) {
    double total = 0;
    for (const auto& lv : cat.levels) total += lv.percent;
    if (cat.n > 0) CHECK(total == doctest::Approx(100.0));
    if (cat.variable == "gender") {
      for (const auto& lv : cat.levels) {
        if (lv.level == "Male") CHECK(lv.percent == 100.0);
      }
    }
  }
  for (const auto& num : table.numeric) {
    CHECK(num.min <= num.median);
    CHECK(num.median <= num.max);
  }
  CHECK_THROWS_AS(descriptive_table(std::vector<EntityOutcome>{}), Error);
}
