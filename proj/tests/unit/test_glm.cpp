#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/stats.hpp"

using namespace stigscan;

namespace {

EntityOutcome entity(const std::string& id, std::int64_t count, std::int64_t charts,
                     std::map<std::string, std::string> covariates) {
  EntityOutcome e;
  e.entity_id = id;
  e.stigma_count = count;
  e.chart_total = charts;
  e.covariates = std::move(covariates);
  return e;
}

std::vector<EntityOutcome> binary_fixture(std::int64_t chart_scale = 1) {
  return {entity("a", 1, 10 * chart_scale, {{"gender", "Female"}}),
          entity("b", 2, 10 * chart_scale, {{"gender", "Female"}}),
          entity("c", 3, 15 * chart_scale, {{"gender", "Male"}}),
          entity("d", 6, 15 * chart_scale, {{"gender", "Male"}})};
}

ModelSpec gender_spec() {
  ModelSpec spec;
  spec.outcome = Outcome::Stigma;
  spec.predictors = {"gender"};
  return spec;
}

}  // namespace

TEST_CASE("binary predictor recovers the crude rate ratio") {
  const auto fit = fit_poisson_glm(binary_fixture(), gender_spec());
  CHECK(fit.converged);
  const auto rows = rate_ratios(fit);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].level == "Male");
  CHECK(rows[0].rr == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rows[0].ci_low < rows[0].rr);
  CHECK(rows[0].rr < rows[0].ci_high);
  // Saturated two-group model: se^2 = 1/events0 + 1/events1.
  CHECK(rows[0].se == doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0 / 9.0)).epsilon(1e-8));
}

TEST_CASE("intercept-only fit is the log mean rate") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2), offset = Eigen::VectorXd::Zero(2);
  y << 2, 4;
  const auto fit = fit_poisson_irls(x, y, offset);
  CHECK(std::fabs(fit.beta(0) - std::log(3.0)) < 1e-8);
  y << 0, 0;
  CHECK_THROWS_AS(fit_poisson_irls(x, y, offset), Error);
}

TEST_CASE("rank deficient design is rejected") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, 1, 1, 1, 1, 1, 1;
  Eigen::VectorXd y(4), offset = Eigen::VectorXd::Zero(4);
  y << 1, 2, 3, 4;
  try {
    fit_poisson_irls(x, y, offset);
    FAIL("expected RankDeficientDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientDesign);
  }
}

TEST_CASE("rate_ratio_from and stars") {
  const auto r = rate_ratio_from(0.0, 0.1);
  CHECK(r.rr == 1.0);
  CHECK(r.ci_low == doctest::Approx(std::exp(-0.196)).epsilon(1e-12));
  CHECK(r.ci_high == doctest::Approx(std::exp(0.196)).epsilon(1e-12));
  CHECK(r.ci_low == doctest::Approx(0.822).epsilon(1e-3));
  CHECK(r.ci_high == doctest::Approx(1.216).epsilon(1e-3));
  const auto tight = rate_ratio_from(std::log(2.0), 1e-9);
  CHECK(tight.rr == doctest::Approx(2.0));
  CHECK(tight.ci_high - tight.ci_low < 1e-6);
  CHECK(significance_stars(0.03) == "*");
  CHECK(significance_stars(5e-6) == "**");
  CHECK(significance_stars(0.2).empty());
  CHECK(significance_stars(0.05).empty());
  CHECK(significance_stars(1e-4) == "*");
  CHECK(two_sided_normal_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("offset scaling shifts only the intercept") {
  const auto base = fit_poisson_glm(binary_fixture(1), gender_spec());
  const auto scaled = fit_poisson_glm(binary_fixture(7), gender_spec());
  CHECK(scaled.beta(0) == doctest::Approx(base.beta(0) - std::log(7.0)).epsilon(1e-10));
  CHECK(std::fabs(scaled.beta(1) - base.beta(1)) <= 1e-8);
}

TEST_CASE("reference relabelling inverts the rate ratio") {
  auto spec = gender_spec();
  const auto female_ref = rate_ratios(fit_poisson_glm(binary_fixture(), spec));
  spec.reference_levels["gender"] = "Male";
  const auto male_ref = rate_ratios(fit_poisson_glm(binary_fixture(), spec));
  REQUIRE(male_ref.size() == 1);
  CHECK(male_ref[0].level == "Female");
  CHECK(male_ref[0].rr == doctest::Approx(1.0 / female_ref[0].rr).epsilon(1e-10));
  CHECK(male_ref[0].ci_low == doctest::Approx(1.0 / female_ref[0].ci_high).epsilon(1e-10));
}

TEST_CASE("zero-event and absent levels") {
  std::vector<EntityOutcome> eth{entity("a", 3, 10, {{"ethnicity", "White"}}),
                                 entity("b", 2, 10, {{"ethnicity", "White"}}),
                                 entity("c", 4, 10, {{"ethnicity", "Asian"}}),
                                 entity("d", 0, 10, {{"ethnicity", "Other"}}),
                                 entity("e", 1, 10, {{"ethnicity", ""}})};
  ModelSpec spec;
  spec.predictors = {"ethnicity"};
  const auto fit = fit_poisson_glm(eth, spec);
  REQUIRE(fit.diverging.size() == 1);
  CHECK(fit.diverging[0].level == "Other");
  CHECK(fit.missing_covariate_entities == 1);
  CHECK(std::find(fit.absent_levels.begin(), fit.absent_levels.end(), "ethnicity=HispanicLatino") !=
        fit.absent_levels.end());
  const auto rows = rate_ratios(fit);
  const auto other = std::find_if(rows.begin(), rows.end(), [](const RateRatio& r) { return r.level == "Other"; });
  REQUIRE(other != rows.end());
  CHECK(other->diverging);
  CHECK(other->rr == 0.0);
  CHECK(std::isinf(other->ci_high));

  std::vector<EntityOutcome> dead_ref{entity("a", 0, 10, {{"ethnicity", "White"}}),
                                      entity("b", 2, 10, {{"ethnicity", "Asian"}})};
  CHECK_THROWS_AS(fit_poisson_glm(dead_ref, spec), Error);
}

TEST_CASE("provider exclusions") {
  std::vector<EntityOutcome> providers;
  const char* types[] = {"Physicians", "RegisteredNurses", "Pharmacist", "Unknown"};
  for (int i = 0; i < 12; ++i) {
    providers.push_back(entity("p" + std::to_string(i), 1 + i % 3, 10, {{"provider_type", types[i % 4]}}));
  }
  ModelSpec spec;
  spec.predictors = {"provider_type"};
  spec.excluded_levels = default_excluded_levels(EntityLevel::Provider);
  const auto fit = fit_poisson_glm(providers, spec);
  CHECK(fit.n_entities == 6);
  CHECK(fit.excluded_entities.at("provider_type=Pharmacist") == 3);
  CHECK(fit.excluded_entities.at("provider_type=Unknown") == 3);
  for (const auto& r : rate_ratios(fit)) {
    CHECK(r.level != "Pharmacist");
    CHECK(r.level != "Unknown");
  }
}

TEST_CASE("IRLS equals the Newton oracle and satisfies the score equation") {
  oracle::SplitMix rng{2024};
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = fixtures::random_glm_problem(rng);
    const auto fit = fit_poisson_irls(g.x, g.y, g.offset);
    const auto ref = oracle::poisson_newton(fixtures::to_rows(g.x), fixtures::to_vec(g.y), fixtures::to_vec(g.offset));
    REQUIRE(ref.converged);
    CHECK(fit.converged);
    for (Eigen::Index j = 0; j < g.x.cols(); ++j) {
      CHECK(std::fabs(fit.beta(j) - ref.beta[static_cast<std::size_t>(j)]) < 1e-6);
      CHECK(std::fabs(std::sqrt(fit.covariance(j, j)) - ref.se[static_cast<std::size_t>(j)]) < 1e-6);
    }
    const Eigen::VectorXd mu = (g.x * fit.beta + g.offset).array().exp();
    CHECK(mu.sum() == doctest::Approx(g.y.sum()).epsilon(1e-6));
    for (std::size_t k = 1; k < fit.deviance_trace.size(); ++k) {
      CHECK(fit.deviance_trace[k] <= fit.deviance_trace[k - 1] + 1e-9);
    }
  }
}

TEST_CASE("model sets") {
  std::vector<EntityOutcome> entities;
  oracle::SplitMix rng{3};
  for (int i = 0; i < 80; ++i) {
    PatientRecord rec;
    rec.patient_id = std::to_string(i);
    rec.gender = i % 2 ? Gender::Male : Gender::Female;
    rec.ethnicity = kEthnicities[rng.below(3)];
    rec.insurance = kInsurances[rng.below(3)];
    rec.insurance_raw = "x";
    rec.age_years = 50;
    rec.age_category = i % 5 ? AgeCategory::MiddleAged : AgeCategory::Adult;
    EntityOutcome e = entity(rec.patient_id, static_cast<std::int64_t>(rng.below(4)), 5, patient_covariates(rec));
    e.doubt_count = static_cast<std::int64_t>(rng.below(2));
    entities.push_back(e);
  }
  const auto per = fit_model_set(entities, EntityLevel::Patient, Outcome::Stigma, ModelMode::PerPredictor, 2);
  CHECK(per.size() == default_predictors(EntityLevel::Patient).size());
  const auto gender_block =
      std::find_if(per.begin(), per.end(), [](const BlockFit& b) { return b.block == "gender"; });
  REQUIRE(gender_block != per.end());
  CHECK(gender_block->error.empty());
  // No entity has the condition, so the block has no rate-ratio rows.
  const auto sud = std::find_if(per.begin(), per.end(), [](const BlockFit& b) { return b.block == "sud"; });
  REQUIRE(sud != per.end());
  CHECK(sud->rows.empty());

  const auto serial = fit_model_set(entities, EntityLevel::Patient, Outcome::Stigma, ModelMode::PerPredictor, 1);
  REQUIRE(serial.size() == per.size());
  for (std::size_t i = 0; i < per.size(); ++i) {
    CHECK(serial[i].block == per[i].block);
    CHECK(serial[i].rows.size() == per[i].rows.size());
    for (std::size_t k = 0; k < per[i].rows.size(); ++k) CHECK(serial[i].rows[k].rr == per[i].rows[k].rr);
  }
}
