#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "stigscan/classifier.hpp"

namespace fixtures {

// Doubt-marker sentences whose label is decided by one context word; the two
// cue sets are disjoint so the problem is linearly separable.
inline std::vector<stigscan::AnnotatedSentence> separable_annotations(std::size_t n, std::uint64_t seed) {
  const std::vector<std::string> terms{"claimed", "insists", "allegedly", "adamant"};
  const std::vector<std::string> positive_cues{"falsely", "supposedly", "dramatically", "repeatedly"};
  const std::vector<std::string> negative_cues{"correctly", "calmly", "accurately", "clearly"};
  const std::vector<std::string> filler{"patient", "pain", "today", "was", "the", "after", "dose", "night"};
  oracle::SplitMix rng{seed};
  std::vector<stigscan::AnnotatedSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    const auto& cues = positive ? positive_cues : negative_cues;
    const std::string term = terms[rng.below(terms.size())];
    std::string s = filler[rng.below(filler.size())] + " " + cues[rng.below(cues.size())] + " " + term;
    for (std::size_t k = 0; k < 3; ++k) s += " " + filler[rng.below(filler.size())];
    stigscan::AnnotatedSentence a;
    a.sentence = s;
    a.term = term;
    a.lexicon = stigscan::LexiconKind::DoubtMarkers;
    a.gold_positive = positive;
    out.push_back(std::move(a));
  }
  return out;
}

struct GlmProblem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd offset;
};

// Intercept plus one categorical predictor with `levels` levels (reference 0)
// and an optional binary covariate; every level keeps at least one event.
inline GlmProblem random_glm_problem(oracle::SplitMix& rng) {
  const std::size_t n = 20 + rng.below(181);
  const std::size_t levels = 2 + rng.below(4);
  const bool binary = rng.below(2) == 0;
  const std::size_t p = levels + (binary ? 1 : 0);
  std::vector<double> effect(levels, 0.0);
  for (std::size_t l = 1; l < levels; ++l) effect[l] = (rng.uniform() - 0.5) * 1.5;
  const double b_bin = (rng.uniform() - 0.5);
  GlmProblem g;
  for (int attempt = 0;; ++attempt) {
    g.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    g.y.resize(static_cast<Eigen::Index>(n));
    g.offset.resize(static_cast<Eigen::Index>(n));
    std::vector<double> events(levels, 0.0), bin_events(2, 0.0), bin_rows(2, 0.0);
    std::vector<std::size_t> rows(levels, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const std::size_t level = i < levels ? i : rng.below(levels);
      const double charts = 1.0 + static_cast<double>(rng.below(30));
      g.x(r, 0) = 1.0;
      if (level > 0) g.x(r, static_cast<Eigen::Index>(level)) = 1.0;
      double eta = std::log(0.2) + effect[level] + std::log(charts);
      int b = 0;
      if (binary) {
        b = static_cast<int>(rng.below(2));
        g.x(r, static_cast<Eigen::Index>(levels)) = b;
        eta += b_bin * b;
      }
      g.offset(r) = std::log(charts);
      g.y(r) = oracle::SplitMix{rng.next()}.poisson(std::exp(eta));
      events[level] += g.y(r);
      ++rows[level];
      bin_events[b] += g.y(r);
      bin_rows[b] += 1;
    }
    bool ok = true;
    for (std::size_t l = 0; l < levels; ++l) ok = ok && events[l] > 0;
    if (binary) ok = ok && bin_events[0] > 0 && bin_events[1] > 0 && bin_rows[0] > 0 && bin_rows[1] > 0;
    if (ok) break;
  }
  return g;
}

inline oracle::Matrix to_rows(const Eigen::MatrixXd& x) {
  oracle::Matrix out(static_cast<std::size_t>(x.rows()), std::vector<double>(static_cast<std::size_t>(x.cols())));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
  }
  return out;
}

inline std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct ClusterData {
  std::vector<double> counts;
  std::vector<double> exposures;
  std::vector<std::string> ids;
};

// Per-note Poisson counts with a Gaussian random intercept per cluster.
inline ClusterData simulate_clusters(std::size_t clusters, std::size_t per_cluster, double intercept, double sigma2,
                                     std::uint64_t seed) {
  oracle::SplitMix rng{seed};
  ClusterData d;
  for (std::size_t c = 0; c < clusters; ++c) {
    const double u = std::sqrt(sigma2) * rng.normal();
    for (std::size_t k = 0; k < per_cluster; ++k) {
      d.counts.push_back(rng.poisson(std::exp(intercept + u)));
      d.exposures.push_back(1.0);
      d.ids.push_back("c" + std::to_string(c));
    }
  }
  return d;
}

}  // namespace fixtures
