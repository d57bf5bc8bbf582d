#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>

#include "stigscan/errors.hpp"
#include "stigscan/stats.hpp"

namespace stigscan {

GaussHermite gauss_hermite(int points) {
  if (points < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one point");
  // Golub-Welsch eigenvalues seed the nodes. Eigenvector weights lose relative
  // accuracy in the tails, where the adaptive rule multiplies them by exp(x^2),
  // so each node is polished by Newton on the orthonormal Hermite recurrence
  // and its weight taken from the derivative instead.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const double off = std::sqrt(k / 2.0);
    jacobi(k - 1, k) = off;
    jacobi(k, k - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  const double p0 = std::pow(std::numbers::pi, -0.25);
  auto orthonormal = [&](double x, double& derivative) {
    double prev = 0.0, cur = p0;
    for (int j = 1; j <= points; ++j) {
      const double next = x * std::sqrt(2.0 / j) * cur - std::sqrt((j - 1.0) / j) * prev;
      prev = cur;
      cur = next;
    }
    derivative = std::sqrt(2.0 * points) * prev;
    return cur;
  };
  GaussHermite gh;
  gh.nodes.resize(static_cast<std::size_t>(points));
  gh.weights.resize(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    double x = solver.eigenvalues()[k];
    double d = 0.0;
    for (int it = 0; it < 10; ++it) {
      const double step = orthonormal(x, d) / d;
      x -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    orthonormal(x, d);
    gh.nodes[static_cast<std::size_t>(k)] = x;
    gh.weights[static_cast<std::size_t>(k)] = 2.0 / (d * d);
  }
  // Symmetrize against round-off.
  for (int k = 0; k < points / 2; ++k) {
    const auto lo = static_cast<std::size_t>(k);
    const auto hi = static_cast<std::size_t>(points - 1 - k);
    const double node = 0.5 * (gh.nodes[hi] - gh.nodes[lo]);
    const double weight = 0.5 * (gh.weights[hi] + gh.weights[lo]);
    gh.nodes[lo] = -node;
    gh.nodes[hi] = node;
    gh.weights[lo] = gh.weights[hi] = weight;
  }
  if (points % 2) gh.nodes[static_cast<std::size_t>(points / 2)] = 0.0;
  return gh;
}

namespace {

// A cluster's likelihood depends only on its summed counts and exposures.
struct Cluster {
  double y = 0.0;      // sum of counts
  double e = 0.0;      // sum of exposures
  double c = 0.0;      // sum of y*log(exposure) - lgamma(y+1)
  std::size_t n = 0;
};

struct ClusterData {
  std::vector<Cluster> clusters;
  std::size_t observations = 0;
  double total_y = 0.0;
  double total_e = 0.0;
};

ClusterData group_clusters(std::span<const double> counts, std::span<const double> exposures,
                           std::span<const std::string> cluster_ids) {
  if (counts.size() != exposures.size() || counts.size() != cluster_ids.size()) {
    throw Error(ErrorCode::LengthMismatch, "counts, exposures and cluster ids differ in length");
  }
  std::map<std::string_view, std::size_t> index;
  ClusterData data;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double y = counts[i];
    const double e = exposures[i];
    if (!(y >= 0.0) || !std::isfinite(y)) throw Error(ErrorCode::InvalidArgument, "counts must be finite and >= 0");
    if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "exposures must be finite and > 0");
    const auto [it, inserted] = index.emplace(cluster_ids[i], data.clusters.size());
    if (inserted) data.clusters.emplace_back();
    Cluster& cl = data.clusters[it->second];
    cl.y += y;
    cl.e += e;
    cl.c += y * std::log(e) - std::lgamma(y + 1.0);
    ++cl.n;
    data.total_y += y;
    data.total_e += e;
  }
  data.observations = counts.size();
  return data;
}

struct Evaluation {
  double loglik = 0.0;
  double d_intercept = 0.0;
  double d_log_sigma2 = 0.0;
};

// Mode of y*u - a*exp(u) - u^2/(2 s2). The score is strictly decreasing, and
// the root is bracketed by 0 and s2*(y - a).
double posterior_mode(double y, double a, double s2) {
  double lo = std::min(0.0, s2 * (y - a));
  double hi = std::max(0.0, s2 * (y - a));
  double u = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double eu = a * std::exp(u);
    const double f = y - eu - u / s2;
    if (f > 0) lo = u; else hi = u;
    const double fp = -eu - 1.0 / s2;
    double next = u - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) < 1e-12 * (1.0 + std::abs(u))) return next;
    u = next;
  }
  return u;
}

Evaluation evaluate(const ClusterData& data, double b0, double theta, const GaussHermite& gh, bool gradient) {
  Evaluation ev;
  const double s2 = std::exp(theta);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  const std::size_t q = gh.nodes.size();
  std::vector<double> log_terms(q);
  std::vector<double> us(q);
  for (const Cluster& cl : data.clusters) {
    const double a = cl.e * std::exp(b0);
    const double mode = posterior_mode(cl.y, a, s2);
    const double scale = 1.0 / std::sqrt(a * std::exp(mode) + 1.0 / s2);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < q; ++k) {
      const double x = gh.nodes[k];
      const double u = mode + std::numbers::sqrt2 * scale * x;
      us[k] = u;
      log_terms[k] = std::log(gh.weights[k]) + x * x + cl.y * (b0 + u) - a * std::exp(u) - u * u / (2.0 * s2);
      peak = std::max(peak, log_terms[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < q; ++k) sum += std::exp(log_terms[k] - peak);
    ev.loglik += cl.c + log_norm + std::log(std::numbers::sqrt2 * scale) + peak + std::log(sum);
    if (gradient) {
      // Exact derivative of this quadrature value: the posterior-weighted score
      // plus the terms through the mode and scale, which move with (b0, theta).
      double e_b0 = 0.0, e_theta = 0.0, e_du = 0.0, e_du_x = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        const double w = std::exp(log_terms[k] - peak) / sum;
        const double au = a * std::exp(us[k]);
        const double du = cl.y - au - us[k] / s2;
        e_b0 += w * (cl.y - au);
        e_theta += w * (us[k] * us[k] / (2.0 * s2) - 0.5);
        e_du += w * du;
        e_du_x += w * du * std::numbers::sqrt2 * gh.nodes[k];
      }
      const double am = a * std::exp(mode);
      const double tau2 = scale * scale;
      const double dm_db0 = -am * tau2;
      const double dm_dtheta = mode * tau2 / s2;
      const double dtau_db0 = -0.5 * scale * tau2 * am * (1.0 + dm_db0);
      const double dtau_dtheta = -0.5 * scale * tau2 * (am * dm_dtheta - 1.0 / s2);
      const double d_scale = 1.0 / scale + e_du_x;
      ev.d_intercept += e_b0 + e_du * dm_db0 + d_scale * dtau_db0;
      ev.d_log_sigma2 += e_theta + e_du * dm_dtheta + d_scale * dtau_dtheta;
    }
  }
  return ev;
}

double poisson_loglik(const ClusterData& data, double b0) {
  double ll = 0.0;
  for (const Cluster& cl : data.clusters) ll += cl.c + cl.y * b0 - cl.e * std::exp(b0);
  return ll;
}

constexpr double kMinLogSigma2 = -25.0;
constexpr double kMaxLogSigma2 = 6.0;

double projected_norm(double g0, double g1, double theta) {
  if (theta <= kMinLogSigma2 && g1 < 0) g1 = 0.0;
  if (theta >= kMaxLogSigma2 && g1 > 0) g1 = 0.0;
  return std::hypot(g0, g1);
}

MixedFit newton_ascent(const ClusterData& data, const GaussHermite& gh, double b0, double theta,
                       const MixedOptions& options) {
  MixedFit fit;
  Evaluation ev = evaluate(data, b0, theta, gh, true);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    fit.iterations = iter;
    const double gnorm = projected_norm(ev.d_intercept, ev.d_log_sigma2, theta);
    if (gnorm < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    // Hessian by central differences of the analytic gradient.
    Eigen::Matrix2d h;
    const double hs[2] = {1e-5 * std::max(1.0, std::abs(b0)), 1e-5 * std::max(1.0, std::abs(theta))};
    for (int j = 0; j < 2; ++j) {
      const double db = j == 0 ? hs[0] : 0.0;
      const double dt = j == 1 ? hs[1] : 0.0;
      const Evaluation plus = evaluate(data, b0 + db, theta + dt, gh, true);
      const Evaluation minus = evaluate(data, b0 - db, theta - dt, gh, true);
      h(0, j) = (plus.d_intercept - minus.d_intercept) / (2.0 * hs[j]);
      h(1, j) = (plus.d_log_sigma2 - minus.d_log_sigma2) / (2.0 * hs[j]);
    }
    h = 0.5 * (h + h.transpose()).eval();
    const Eigen::Vector2d g(ev.d_intercept, ev.d_log_sigma2);
    Eigen::Vector2d step;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
    if (eig.eigenvalues().maxCoeff() < 0.0) {
      step = -h.ldlt().solve(g);
    } else {
      // Not concave here: ascend along the gradient, scaled by the curvature magnitude.
      const double curv = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
      step = g / curv;
    }
    const double cap = std::max(std::abs(step[0]), std::abs(step[1])) / 5.0;
    if (cap > 1.0) step /= cap;

    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
      const double nb = b0 + t * step[0];
      const double nt = std::clamp(theta + t * step[1], kMinLogSigma2, kMaxLogSigma2);
      const Evaluation trial = evaluate(data, nb, nt, gh, true);
      const double expected = 1e-4 * (g[0] * (nb - b0) + g[1] * (nt - theta));
      if (std::isfinite(trial.loglik) && trial.loglik >= ev.loglik + expected) {
        b0 = nb;
        theta = nt;
        ev = trial;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  fit.intercept = b0;
  fit.sigma2 = std::exp(theta);
  fit.loglik = ev.loglik;
  fit.gradient_norm = projected_norm(ev.d_intercept, ev.d_log_sigma2, theta);
  if (fit.gradient_norm < options.gradient_tolerance) fit.converged = true;
  return fit;
}

}  // namespace

double random_intercept_loglik(std::span<const double> counts, std::span<const double> exposures,
                               std::span<const std::string> cluster_ids, double intercept, double sigma2,
                               int quadrature_points) {
  if (sigma2 < 0.0) throw Error(ErrorCode::NegativeVariance, "sigma2 must be >= 0");
  const ClusterData data = group_clusters(counts, exposures, cluster_ids);
  if (sigma2 == 0.0) return poisson_loglik(data, intercept);
  return evaluate(data, intercept, std::log(sigma2), gauss_hermite(quadrature_points), false).loglik;
}

MixedFit fit_random_intercept_poisson(std::span<const double> counts, std::span<const double> exposures,
                                      std::span<const std::string> cluster_ids, const MixedOptions& options) {
  const ClusterData data = group_clusters(counts, exposures, cluster_ids);
  if (data.clusters.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "random-intercept model needs at least 2 clusters");
  }
  if (std::all_of(data.clusters.begin(), data.clusters.end(), [](const Cluster& c) { return c.n == 1; })) {
    throw Error(ErrorCode::DegenerateClusters,
                "every cluster has one observation; the random-intercept variance is not identifiable");
  }
  if (data.total_y == 0.0) throw Error(ErrorCode::AllZeroOutcome, "all outcome counts are zero");

  const GaussHermite gh = gauss_hermite(options.quadrature_points);
  const double b0 = std::log(data.total_y / data.total_e);
  std::optional<MixedFit> best;
  for (double s2 : options.start_sigma2) {
    if (!(s2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "start sigma2 values must be > 0");
    MixedFit fit = newton_ascent(data, gh, b0, std::log(s2), options);
    const bool better = !best || (fit.converged && !best->converged) ||
                        (fit.converged == best->converged && fit.loglik > best->loglik);
    if (better) best = fit;
  }
  MixedFit fit = *best;
  if (!fit.converged) {
    throw Error(ErrorCode::NotConverged, "random-intercept fit did not converge (gradient norm " +
                                             std::to_string(fit.gradient_norm) + ")");
  }
  fit.quadrature_points = options.quadrature_points;
  fit.n_clusters = data.clusters.size();
  fit.n_observations = data.observations;
  fit.median_irr = median_irr(fit.sigma2);
  return fit;
}

MixedSummary fit_clustering(std::span<const NoteOutcomeRow> notes, EntityLevel level, Outcome outcome,
                            const MixedOptions& options) {
  MixedSummary summary;
  summary.level = level;
  summary.outcome = outcome;
  std::vector<double> counts;
  std::vector<double> exposures;
  std::vector<std::string> ids;
  for (const auto& n : notes) {
    const std::string& id = level == EntityLevel::Patient ? n.patient_id : n.provider_id;
    if (id.empty()) continue;
    const bool present = outcome == Outcome::Stigma ? n.flags.stigma_present : n.flags.doubt_present;
    counts.push_back(present ? 1.0 : 0.0);
    exposures.push_back(1.0);
    ids.push_back(id);
  }
  try {
    summary.fit = fit_random_intercept_poisson(counts, exposures, ids, options);
  } catch (const Error& e) {
    summary.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return summary;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "quantile probability must lie in [0, 1]");
  }
  // Acklam (2003) coefficients; relative error below 1.15e-9 before refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step on Phi(x) - p.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double median_irr(double sigma2) {
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::NegativeVariance, "sigma2 must be >= 0");
  static const double z75 = normal_quantile(0.75);
  return std::exp(std::sqrt(2.0 * sigma2) * z75);
}

}  // namespace stigscan
