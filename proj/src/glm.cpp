#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "stigscan/csv.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/stats.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

std::string_view to_string(ModelMode mode) { return mode == ModelMode::PerPredictor ? "per_predictor" : "joint"; }

ModelMode parse_model_mode(std::string_view name) {
  const std::string n = to_lower(trim(name));
  if (n == "per_predictor" || n == "per-predictor") return ModelMode::PerPredictor;
  if (n == "joint") return ModelMode::Joint;
  throw Error(ErrorCode::InvalidArgument, "unknown model mode '" + std::string(name) + "'");
}

std::map<std::string, std::string> ModelSpec::default_reference_levels() {
  std::map<std::string, std::string> refs{{"gender", "Female"},
                                          {"ethnicity", "White"},
                                          {"insurance", "Private"},
                                          {"age_category", "MiddleAged"},
                                          {"provider_type", "Physicians"}};
  for (Condition c : kConditions) refs[std::string(to_string(c))] = "0";
  return refs;
}

std::vector<std::string> default_predictors(EntityLevel level) {
  if (level == EntityLevel::Provider) return {"provider_type"};
  return {"gender",        "ethnicity", "insurance",     "hiv_symptomatic", "obesity",
          "oud",           "sickle_cell", "sud",         "schizophrenia",   "mood_disorder",
          "anxiety",       "ptsd",      "suicide_attempt", "suicidal_ideation", "age_category"};
}

std::map<std::string, std::set<std::string>> default_excluded_levels(EntityLevel level) {
  if (level == EntityLevel::Provider) return {{"provider_type", {"Pharmacist", "Unknown"}}};
  return {};
}

namespace {

std::string level_key(const std::string& predictor, const std::string& level) { return predictor + "=" + level; }

std::vector<std::string> ordered_levels(const std::string& predictor, const std::map<std::string, std::size_t>& seen) {
  std::vector<std::string> out;
  for (const auto& l : covariate_level_order(predictor)) {
    if (seen.count(l)) out.push_back(l);
  }
  for (const auto& [l, n] : seen) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] > 0) dev += y[i] * std::log(y[i] / mu[i]);
    dev -= y[i] - mu[i];
  }
  return 2.0 * dev;
}

}  // namespace

Design build_design(std::span<const EntityOutcome> entities, const ModelSpec& spec) {
  if (spec.predictors.empty()) throw Error(ErrorCode::InvalidArgument, "model has no predictors");
  Design design;
  std::vector<const EntityOutcome*> rows;
  for (const auto& e : entities) {
    if (e.chart_total < 1) {
      throw Error(ErrorCode::InvalidArgument, "entity '" + e.entity_id + "' has chart_total < 1");
    }
    bool keep = true;
    for (const auto& p : spec.predictors) {
      const std::string v = e.covariate(p);
      if (v.empty()) {
        ++design.missing_covariate_entities;
        keep = false;
        break;
      }
      const auto ex = spec.excluded_levels.find(p);
      if (ex != spec.excluded_levels.end() && ex->second.count(v)) {
        ++design.excluded_entities[level_key(p, v)];
        keep = false;
        break;
      }
    }
    if (keep) rows.push_back(&e);
  }

  auto reference_of = [&](const std::string& p, const std::vector<std::string>& levels) {
    const auto it = spec.reference_levels.find(p);
    return it != spec.reference_levels.end() ? it->second : (levels.empty() ? std::string() : levels.front());
  };

  // Zero-event levels have an MLE at -infinity; their rows carry no information
  // about the other coefficients, so they are flagged and removed.
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  std::map<std::string, std::map<std::string, double>> events;
  for (;;) {
    counts.clear();
    events.clear();
    for (const auto* e : rows) {
      for (const auto& p : spec.predictors) {
        const std::string v = e->covariate(p);
        ++counts[p][v];
        events[p][v] += static_cast<double>(e->count(spec.outcome));
      }
    }
    std::set<std::string> drop;
    for (const auto& p : spec.predictors) {
      const auto levels = ordered_levels(p, counts[p]);
      const std::string ref = reference_of(p, levels);
      for (const auto& l : levels) {
        if (l != ref && events[p][l] == 0.0) {
          design.diverging.push_back({p, l, counts[p][l]});
          drop.insert(level_key(p, l));
        }
      }
    }
    if (drop.empty()) break;
    std::erase_if(rows, [&](const EntityOutcome* e) {
      for (const auto& p : spec.predictors) {
        if (drop.count(level_key(p, e->covariate(p)))) return true;
      }
      return false;
    });
  }

  double total_events = 0.0;
  for (const auto* e : rows) total_events += static_cast<double>(e->count(spec.outcome));
  if (rows.empty() || total_events == 0.0) {
    throw Error(ErrorCode::AllZeroOutcome, std::string("no events for ") + std::string(to_string(spec.outcome)));
  }

  design.columns.push_back({"", "(intercept)", rows.size(), total_events});
  std::vector<std::pair<std::string, std::string>> indicator;  // (predictor, level) per column
  indicator.emplace_back("", "");
  for (const auto& p : spec.predictors) {
    const auto levels = ordered_levels(p, counts[p]);
    const std::string ref = reference_of(p, levels);
    if (!counts[p].count(ref)) {
      throw Error(ErrorCode::InvalidArgument, "reference level '" + ref + "' of '" + p + "' has no entities");
    }
    if (events[p][ref] == 0.0) {
      throw Error(ErrorCode::AllZeroOutcome, "reference level '" + ref + "' of '" + p + "' has zero events");
    }
    for (const auto& l : covariate_level_order(p)) {
      const auto ex = spec.excluded_levels.find(p);
      const bool excluded = ex != spec.excluded_levels.end() && ex->second.count(l);
      const bool diverging = std::any_of(design.diverging.begin(), design.diverging.end(),
                                         [&](const DivergingLevel& d) { return d.predictor == p && d.level == l; });
      if (!excluded && !diverging && !counts[p].count(l)) design.absent_levels.push_back(level_key(p, l));
    }
    for (const auto& l : levels) {
      if (l == ref) continue;
      design.columns.push_back({p, l, counts[p][l], events[p][l]});
      indicator.emplace_back(p, l);
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index k = static_cast<Eigen::Index>(design.columns.size());
  design.x = Eigen::MatrixXd::Zero(n, k);
  design.y.resize(n);
  design.offset.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const EntityOutcome& e = *rows[static_cast<std::size_t>(i)];
    design.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) {
      const auto& [p, l] = indicator[static_cast<std::size_t>(j)];
      if (e.covariate(p) == l) design.x(i, j) = 1.0;
    }
    design.y[i] = static_cast<double>(e.count(spec.outcome));
    design.offset[i] = std::log(static_cast<double>(e.chart_total));
  }
  return design;
}

GlmFit fit_poisson_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        const GlmOptions& options) {
  if (x.rows() != y.size() || offset.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "design, outcome and offset lengths differ");
  }
  if (y.size() == 0) throw Error(ErrorCode::EmptyInput, "no observations");
  if ((y.array() < 0).any()) throw Error(ErrorCode::InvalidArgument, "negative count in outcome");
  if (y.sum() == 0.0) throw Error(ErrorCode::AllZeroOutcome, "all outcome counts are zero");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    throw Error(ErrorCode::RankDeficientDesign,
                "design rank " + std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) + " columns");
  }

  GlmFit fit;
  const Eigen::Index p = x.cols();
  // Start from mu = y + 0.1, so the first step is a weighted least-squares fit.
  Eigen::VectorXd mu = (y.array() + 0.1).matrix();
  Eigen::VectorXd eta = mu.array().log().matrix();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double dev = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd z = (eta - offset).array() + (y - mu).array() / mu.array();
    const Eigen::MatrixXd xtw = x.transpose() * mu.asDiagonal();
    Eigen::VectorXd next = (xtw * x).ldlt().solve(xtw * z);

    Eigen::VectorXd next_eta = x * next + offset;
    Eigen::VectorXd next_mu = next_eta.array().exp().matrix();
    double next_dev = poisson_deviance(y, next_mu);
    for (int halving = 0; halving < 30 && iter > 1 && !(next_dev <= dev); ++halving) {
      next = 0.5 * (next + beta);
      next_eta = x * next + offset;
      next_mu = next_eta.array().exp().matrix();
      next_dev = poisson_deviance(y, next_mu);
    }
    const double step = (next - beta).cwiseAbs().maxCoeff();
    const double change = std::abs(next_dev - dev);
    beta = next;
    eta = next_eta;
    mu = next_mu;
    dev = next_dev;
    fit.deviance_trace.push_back(dev);
    fit.iterations = iter;
    if (iter > 1 && (change < options.deviance_tolerance || step < 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff()))) {
      fit.converged = true;
      break;
    }
  }

  const Eigen::MatrixXd info = x.transpose() * mu.asDiagonal() * x;
  fit.beta = beta;
  fit.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.deviance = dev;
  fit.gradient_norm = (x.transpose() * (y - mu)).norm();
  return fit;
}

GlmFit fit_poisson_glm(std::span<const EntityOutcome> entities, const ModelSpec& spec, const GlmOptions& options) {
  Design design = build_design(entities, spec);
  GlmFit fit = fit_poisson_irls(design.x, design.y, design.offset, options);
  fit.columns = std::move(design.columns);
  fit.diverging = std::move(design.diverging);
  fit.absent_levels = std::move(design.absent_levels);
  fit.excluded_entities = std::move(design.excluded_entities);
  fit.missing_covariate_entities = design.missing_covariate_entities;
  fit.n_entities = static_cast<std::size_t>(design.y.size());
  return fit;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::string significance_stars(double p_value) {
  if (!(p_value < 0.05)) return "";
  return p_value < 0.0001 ? "**" : "*";
}

RateRatio rate_ratio_from(double beta, double se) {
  RateRatio r;
  r.beta = beta;
  r.se = se;
  r.rr = std::exp(beta);
  r.ci_low = std::exp(beta - kWaldZ * se);
  r.ci_high = std::exp(beta + kWaldZ * se);
  if (se > 0.0) {
    r.p_value = two_sided_normal_p(beta / se);
  } else {
    r.p_value = beta == 0.0 ? 1.0 : 0.0;
  }
  r.stars = significance_stars(r.p_value);
  return r;
}

std::vector<RateRatio> rate_ratios(const GlmFit& fit) {
  std::vector<RateRatio> out;
  for (std::size_t j = 0; j < fit.columns.size(); ++j) {
    const DesignColumn& col = fit.columns[j];
    if (col.predictor.empty()) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    RateRatio r = rate_ratio_from(fit.beta[jj], std::sqrt(std::max(0.0, fit.covariance(jj, jj))));
    r.predictor = col.predictor;
    r.level = col.level;
    r.n_entities = col.n_entities;
    r.events = col.events;
    r.converged = fit.converged;
    out.push_back(std::move(r));
  }
  for (const auto& d : fit.diverging) {
    RateRatio r;
    r.predictor = d.predictor;
    r.level = d.level;
    r.beta = -std::numeric_limits<double>::infinity();
    r.se = std::numeric_limits<double>::infinity();
    r.rr = 0.0;
    r.ci_low = 0.0;
    r.ci_high = std::numeric_limits<double>::infinity();
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    r.n_entities = d.n_entities;
    r.converged = fit.converged;
    r.diverging = true;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BlockFit> fit_model_set(std::span<const EntityOutcome> entities, EntityLevel level, Outcome outcome,
                                    ModelMode mode, unsigned threads) {
  std::vector<BlockFit> blocks;
  const auto predictors = default_predictors(level);
  auto make = [&](std::string name) {
    BlockFit b;
    b.level = level;
    b.outcome = outcome;
    b.mode = mode;
    b.block = std::move(name);
    return b;
  };
  if (mode == ModelMode::Joint) {
    blocks.push_back(make("joint"));
  } else {
    for (const auto& p : predictors) blocks.push_back(make(p));
  }

  auto run = [&](BlockFit& b) {
    ModelSpec spec;
    spec.outcome = outcome;
    spec.predictors = mode == ModelMode::Joint ? predictors : std::vector<std::string>{b.block};
    spec.excluded_levels = default_excluded_levels(level);
    try {
      b.fit = fit_poisson_glm(entities, spec);
      b.rows = rate_ratios(*b.fit);
    } catch (const Error& e) {
      b.error = std::string(to_string(e.code())) + ": " + e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks.size())));
  if (workers == 1) {
    for (auto& b : blocks) run(b);
    return blocks;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < blocks.size(); i = next++) run(blocks[i]);
    });
  }
  for (auto& t : pool) t.join();
  return blocks;
}

void write_fits_csv(std::ostream& out, std::span<const BlockFit> fits) {
  const std::vector<std::string> header{"outcome",     "predictor_block", "level",      "rr",         "ci_low",
                                        "ci_high",     "p",               "stars",      "n_entities", "converged",
                                        "model_mode",  "entity_level",    "diverging"};
  write_csv_row(out, header);
  for (const auto& b : fits) {
    for (const auto& r : b.rows) {
      const std::vector<std::string> row{std::string(to_string(b.outcome)),
                                         b.block == "joint" ? r.predictor : b.block,
                                         r.level,
                                         format_double(r.rr),
                                         format_double(r.ci_low),
                                         format_double(r.ci_high),
                                         format_double(r.p_value),
                                         r.stars,
                                         std::to_string(r.n_entities),
                                         r.converged ? "1" : "0",
                                         std::string(to_string(b.mode)),
                                         std::string(to_string(b.level)),
                                         r.diverging ? "1" : "0"};
      write_csv_row(out, row);
    }
  }
}

}  // namespace stigscan
