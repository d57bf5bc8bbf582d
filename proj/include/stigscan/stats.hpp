#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stigscan/aggregation.hpp"

namespace stigscan {

// ---- Offset Poisson GLM -------------------------------------------------------

enum class ModelMode { PerPredictor, Joint };
std::string_view to_string(ModelMode mode);  // "per_predictor" / "joint"
ModelMode parse_model_mode(std::string_view name);

struct ModelSpec {
  Outcome outcome = Outcome::Stigma;
  // One block for per-predictor models, several for a joint model.
  std::vector<std::string> predictors;
  std::map<std::string, std::string> reference_levels = default_reference_levels();
  // Entities at these levels are removed before fitting (provider Pharmacist/Unknown).
  std::map<std::string, std::set<std::string>> excluded_levels;

  static std::map<std::string, std::string> default_reference_levels();
};

// Predictor blocks in table order.
std::vector<std::string> default_predictors(EntityLevel level);
std::map<std::string, std::set<std::string>> default_excluded_levels(EntityLevel level);

struct GlmOptions {
  double deviance_tolerance = 1e-8;
  int max_iterations = 50;
};

struct DesignColumn {
  std::string predictor;  // empty for the intercept
  std::string level;
  std::size_t n_entities = 0;
  double events = 0.0;
};

struct DivergingLevel {
  std::string predictor;
  std::string level;
  std::size_t n_entities = 0;
};

struct GlmFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // inverse Fisher information at beta
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> deviance_trace;

  // Populated by the entity-level overload.
  std::vector<DesignColumn> columns;
  std::vector<DivergingLevel> diverging;      // zero-event levels, rows removed
  std::vector<std::string> absent_levels;     // "predictor=level" with no entities
  std::map<std::string, std::size_t> excluded_entities;  // "predictor=level" -> count
  std::size_t missing_covariate_entities = 0;
  std::size_t n_entities = 0;
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd offset;
  std::vector<DesignColumn> columns;
  std::vector<DivergingLevel> diverging;
  std::vector<std::string> absent_levels;
  std::map<std::string, std::size_t> excluded_entities;
  std::size_t missing_covariate_entities = 0;
};

// Reference-coded design with offset log(chart_total). Throws AllZeroOutcome
// when no events remain (or the reference level of a block has none),
// InvalidArgument for chart_total < 1 or an absent reference level.
Design build_design(std::span<const EntityOutcome> entities, const ModelSpec& spec);

// IRLS with log link. Throws AllZeroOutcome, RankDeficientDesign. Non-convergence
// is reported through GlmFit::converged.
GlmFit fit_poisson_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        const GlmOptions& options = {});
GlmFit fit_poisson_glm(std::span<const EntityOutcome> entities, const ModelSpec& spec,
                       const GlmOptions& options = {});

struct RateRatio {
  std::string predictor;
  std::string level;
  double beta = 0.0;
  double se = 0.0;
  double rr = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double p_value = 1.0;
  std::string stars;
  std::size_t n_entities = 0;
  double events = 0.0;
  bool converged = true;
  bool diverging = false;  // zero events: rr 0, CI (0, inf), p undefined
};

inline constexpr double kWaldZ = 1.96;

RateRatio rate_ratio_from(double beta, double se);
std::string significance_stars(double p_value);  // "**" < .0001, "*" < .05
double two_sided_normal_p(double z);
// One row per non-reference column plus one per diverging level.
std::vector<RateRatio> rate_ratios(const GlmFit& fit);

struct BlockFit {
  EntityLevel level = EntityLevel::Patient;
  Outcome outcome = Outcome::Stigma;
  ModelMode mode = ModelMode::PerPredictor;
  std::string block;  // predictor name, or "joint"
  std::optional<GlmFit> fit;
  std::vector<RateRatio> rows;
  std::string error;  // set when the block could not be fit
};

// Fits every predictor block (or one joint model) for one outcome. Blocks run
// on up to `threads` workers; output order is deterministic.
std::vector<BlockFit> fit_model_set(std::span<const EntityOutcome> entities, EntityLevel level, Outcome outcome,
                                    ModelMode mode, unsigned threads = 1);

// outcome,predictor_block,level,rr,ci_low,ci_high,p,stars,n_entities,converged,model_mode,entity_level,diverging
void write_fits_csv(std::ostream& out, std::span<const BlockFit> fits);

// ---- Random-intercept Poisson -------------------------------------------------

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight function exp(-x^2)
};
GaussHermite gauss_hermite(int points);

struct MixedOptions {
  int quadrature_points = 15;
  double gradient_tolerance = 1e-6;
  int max_iterations = 200;
  std::vector<double> start_sigma2{0.1, 1.0, 4.0};
};

struct MixedFit {
  double intercept = 0.0;
  double sigma2 = 0.0;
  double median_irr = 1.0;
  double loglik = 0.0;
  int quadrature_points = 0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t n_clusters = 0;
  std::size_t n_observations = 0;
};

// Marginal log-likelihood by adaptive Gauss-Hermite quadrature (exact Poisson
// likelihood when sigma2 == 0).
double random_intercept_loglik(std::span<const double> counts, std::span<const double> exposures,
                               std::span<const std::string> cluster_ids, double intercept, double sigma2,
                               int quadrature_points = 15);

// Throws InvalidArgument (< 2 clusters or bad inputs), LengthMismatch,
// DegenerateClusters (all clusters of size 1), AllZeroOutcome.
MixedFit fit_random_intercept_poisson(std::span<const double> counts, std::span<const double> exposures,
                                      std::span<const std::string> cluster_ids, const MixedOptions& options = {});

struct MixedSummary {
  EntityLevel level = EntityLevel::Patient;
  Outcome outcome = Outcome::Stigma;
  std::optional<MixedFit> fit;
  std::string error;
};

// Note-level presence flags clustered by patient or provider, exposure 1 per note.
MixedSummary fit_clustering(std::span<const NoteOutcomeRow> notes, EntityLevel level, Outcome outcome,
                            const MixedOptions& options = {});

double normal_cdf(double x);
// Acklam's rational approximation plus one Halley refinement step.
double normal_quantile(double p);
// exp(sqrt(2 sigma2) * z_0.75). Throws NegativeVariance.
double median_irr(double sigma2);

// ---- Spearman ----------------------------------------------------------------

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// 1-based ranks; ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);
// Throws LengthMismatch, InvalidArgument (n < 3), ConstantInput.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

}  // namespace stigscan
