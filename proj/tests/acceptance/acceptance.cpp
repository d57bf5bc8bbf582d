// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stigscan/aggregation.hpp"
#include "stigscan/classifier.hpp"
#include "stigscan/corpus.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/lexicon.hpp"
#include "stigscan/pipeline.hpp"
#include "stigscan/report.hpp"
#include "stigscan/stats.hpp"
#include "stigscan/synth.hpp"
#include "stigscan/util.hpp"

using namespace stigscan;

namespace {

struct Outcome_ {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<void(Outcome_&)>& body) {
  Outcome_ o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && secs > budget_seconds) {
    o.pass = false;
    o.detail << " [over time budget " << budget_seconds << " s]";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %s:%s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(), secs);
  std::fflush(stdout);
}

std::vector<Lexicon> shipped_lexicons() {
  return {Lexicon::shipped(LexiconKind::StigmatizingLabels), Lexicon::shipped(LexiconKind::DoubtMarkers)};
}

bool covers_one(const RateRatio& r) { return r.diverging || (r.ci_low <= 1.0 && 1.0 <= r.ci_high); }

}  // namespace

int main() {
  criterion(1, "lexicon fidelity", 1.0, [](Outcome_& o) {
    const auto doubt = Lexicon::shipped(LexiconKind::DoubtMarkers);
    const auto stigma = Lexicon::shipped(LexiconKind::StigmatizingLabels);
    o.detail << " entries " << doubt.entry_count() << "/" << stigma.entry_count() << ", distinct "
             << doubt.terms().size() << "/" << stigma.terms().size() << ", stems " << doubt.declared_stems().size()
             << "/" << stigma.declared_stems().size() << " declared, " << doubt.matchable_stems().size() << "/"
             << stigma.matchable_stems().size() << " matchable";
    o.require(doubt.entry_count() == 58, "58 doubt entries");
    o.require(stigma.entry_count() == 127, "127 stigma entries");
    o.require(doubt.declared_stems().size() == 6, "6 doubt stems");
    o.require(stigma.declared_stems().size() == 18, "18 stigma stems");
  });

  criterion(2, "matcher oracle", 30.0, [](Outcome_& o) {
    const auto lex = shipped_lexicons();
    const Matcher m = Matcher::build(lex);
    std::vector<std::string> vocab{"patient", "was", "pain", "the", "and", "seeking", "drug", "high", "very", "not"};
    for (const auto& l : lex) {
      for (const auto& t : l.terms()) vocab.insert(vocab.end(), t.tokens.begin(), t.tokens.end());
    }
    oracle::SplitMix rng{1};
    std::size_t mismatches = 0, total_matches = 0;
    for (int s = 0; s < 10000; ++s) {
      std::string sentence;
      const std::size_t n = 1 + rng.below(25);
      for (std::size_t i = 0; i < n; ++i) sentence += vocab[rng.below(vocab.size())] + " ";
      const auto tokens = normalize_tokens(sentence);
      const auto got = m.match(tokens);
      const auto want = oracle::naive_scan(tokens, lex);
      total_matches += got.size();
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].term == want[i].term && got[i].lexicon == want[i].lexicon &&
               got[i].token_begin == want[i].begin && got[i].token_end == want[i].end;
      }
      mismatches += !same;
    }
    o.detail << " 10000 sentences, " << total_matches << " matches, " << mismatches << " mismatches";
    o.require(mismatches == 0, "identical to naive scan");
  });

  criterion(3, "intro sentence", 0, [](Outcome_& o) {
    const auto lex = shipped_lexicons();
    const Matcher m = Matcher::build(lex);
    const auto sentences = segment_sentences("patient claimed their pain was 10/10");
    o.require(sentences.size() == 1, "one sentence");
    const auto hits = m.match(sentences.at(0));
    o.detail << " " << hits.size() << " match(es)";
    o.require(hits.size() == 1, "exactly one match");
    o.require(!hits.empty() && hits[0].term == "claimed" && hits[0].lexicon == LexiconKind::DoubtMarkers,
              "doubt marker 'claimed'");
  });

  criterion(4, "GLM closed form", 0, [](Outcome_& o) {
    std::vector<EntityOutcome> e;
    const std::int64_t counts[] = {1, 2, 3, 6}, charts[] = {10, 10, 15, 15};
    for (int i = 0; i < 4; ++i) {
      EntityOutcome x;
      x.entity_id = std::to_string(i);
      x.stigma_count = counts[i];
      x.chart_total = charts[i];
      x.covariates["gender"] = i < 2 ? "Female" : "Male";
      e.push_back(x);
    }
    ModelSpec spec;
    spec.predictors = {"gender"};
    const auto rows = rate_ratios(fit_poisson_glm(e, spec));
    const double rr = rows.at(0).rr;
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);
    Eigen::VectorXd y(2), off = Eigen::VectorXd::Zero(2);
    y << 2, 4;
    const double b0 = fit_poisson_irls(x, y, off).beta(0);
    o.detail << " RR " << format_double(rr) << ", beta0 - ln3 = " << b0 - std::log(3.0);
    o.require(std::fabs(rr - 2.0) <= 1e-6, "RR 2 +- 1e-6");
    o.require(std::fabs(b0 - std::log(3.0)) <= 1e-8, "beta0 ln 3 +- 1e-8");
  });

  criterion(5, "GLM oracle equivalence", 60.0, [](Outcome_& o) {
    oracle::SplitMix rng{555};
    double worst_beta = 0.0, worst_se = 0.0;
    for (int t = 0; t < 50; ++t) {
      const auto g = fixtures::random_glm_problem(rng);
      const auto fit = fit_poisson_irls(g.x, g.y, g.offset);
      const auto ref = oracle::poisson_newton(fixtures::to_rows(g.x), fixtures::to_vec(g.y), fixtures::to_vec(g.offset));
      o.require(fit.converged && ref.converged, "both converge");
      for (Eigen::Index j = 0; j < g.x.cols(); ++j) {
        worst_beta = std::max(worst_beta, std::fabs(fit.beta(j) - ref.beta[static_cast<std::size_t>(j)]));
        worst_se = std::max(worst_se, std::fabs(std::sqrt(fit.covariance(j, j)) - ref.se[static_cast<std::size_t>(j)]));
      }
    }
    o.detail << " 50 problems, max |dbeta| " << worst_beta << ", max |dse| " << worst_se;
    o.require(worst_beta <= 1e-6 && worst_se <= 1e-6, "agreement to 1e-6");
  });

  criterion(6, "offset invariance", 0, [](Outcome_& o) {
    oracle::SplitMix rng{66};
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto g = fixtures::random_glm_problem(rng);
      const Eigen::VectorXd scaled = g.offset.array() + std::log(7.0);
      const auto a = fit_poisson_irls(g.x, g.y, g.offset);
      const auto b = fit_poisson_irls(g.x, g.y, scaled);
      for (Eigen::Index j = 1; j < g.x.cols(); ++j) worst = std::max(worst, std::fabs(a.beta(j) - b.beta(j)));
    }
    o.detail << " 20 problems, max non-intercept change " << worst;
    o.require(worst <= 1e-8, "change <= 1e-8");
  });

  criterion(7, "median IRR formula", 0, [](Outcome_& o) {
    const double a = median_irr(0.0), b = median_irr(1.0), c = median_irr(4.2106);
    o.detail << " " << a << ", " << format_fixed(b, 6) << ", " << format_fixed(c, 4);
    o.require(a == 1.0, "exactly 1 at 0");
    o.require(std::fabs(b - 2.5959) <= 1e-3, "2.5959 at 1");
    o.require(std::fabs(c - 7.08) <= 0.01, "7.08 at 4.2106");
  });

  criterion(8, "mixed-model recovery", 300.0, [](Outcome_& o) {
    const auto clustered = fixtures::simulate_clusters(500, 20, std::log(0.3), 1.0, 8001);
    const auto fit = fit_random_intercept_poisson(clustered.counts, clustered.exposures, clustered.ids);
    const auto null = fixtures::simulate_clusters(500, 20, std::log(0.3), 0.0, 8002);
    const auto fit0 = fit_random_intercept_poisson(null.counts, null.exposures, null.ids);
    const double d1 = std::fabs(
        random_intercept_loglik(clustered.counts, clustered.exposures, clustered.ids, fit.intercept, fit.sigma2, 31) -
        fit.loglik);
    const double probe = std::max(fit0.sigma2, 0.01);
    const double d0 =
        std::fabs(random_intercept_loglik(null.counts, null.exposures, null.ids, fit0.intercept, probe, 31) -
                  random_intercept_loglik(null.counts, null.exposures, null.ids, fit0.intercept, probe, 15));
    o.detail << " sigma2 " << format_fixed(fit.sigma2, 4) << " (true 1), null sigma2 " << format_fixed(fit0.sigma2, 5)
             << ", |ll31-ll15| " << d1 << " / " << d0;
    o.require(fit.converged && fit0.converged, "converged");
    o.require(fit.sigma2 >= 0.7 && fit.sigma2 <= 1.3, "sigma2 in [0.7, 1.3]");
    o.require(fit0.sigma2 < 0.05, "null sigma2 < 0.05");
    o.require(d1 < 1e-4 && d0 < 1e-4, "quadrature refinement < 1e-4");
  });

  criterion(9, "end-to-end RR recovery", 300.0, [](Outcome_& o) {
    SynthConfig config;
    config.seed = 909;
    config.n_patients = 2000;
    config.rate_ratios["stigma"]["gender"]["Male"] = 2.0;
    const auto synth = generate(config);
    const auto corpus = dedup_and_filter(link_tables(synth_tables(synth)));
    const auto lex = shipped_lexicons();
    ScanOptions opts;
    opts.threads = 4;
    const auto scan = scan_notes(corpus.notes, Matcher::build(lex), AbbreviationList::defaults(), opts);
    const auto agg = aggregate_corpus(corpus, scan.note_flags, CountingMode::FlaggedCharts);
    std::size_t null_rows = 0, null_miss = 0;
    std::string misses;
    const RateRatio* male = nullptr;
    std::vector<BlockFit> all;
    for (auto outcome : {Outcome::Stigma, Outcome::Doubt}) {
      auto fits = fit_model_set(agg.patients, EntityLevel::Patient, outcome, ModelMode::PerPredictor, 1);
      all.insert(all.end(), fits.begin(), fits.end());
    }
    for (const auto& block : all) {
      for (const auto& r : block.rows) {
        if (block.outcome == Outcome::Stigma && r.predictor == "gender" && r.level == "Male") {
          male = &r;
          continue;
        }
        ++null_rows;
        if (!covers_one(r)) {
          ++null_miss;
          misses += " " + std::string(to_string(block.outcome)) + ":" + r.predictor + "=" + r.level + " " +
                    format_rate_ratio_cell(r);
        }
      }
    }
    o.require(male != nullptr, "Male row present");
    if (male) {
      o.detail << " Male RR " << format_rate_ratio_cell(*male);
      o.require(male->rr >= 1.7 && male->rr <= 2.3, "RR in [1.7, 2.3]");
      o.require(male->ci_low > 1.0, "CI excludes 1");
    }
    o.detail << "; null rows covering 1: " << null_rows - null_miss << "/" << null_rows;
    if (null_miss) o.detail << " (not covering:" << misses << ")";
    o.require(null_miss == 0, "every null CI covers 1");
  });

  criterion(10, "classifier sanity", 0, [](Outcome_& o) {
    oracle::SplitMix rng{10};
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::size_t features = 4 + rng.below(5);
      std::vector<SparseRow> rows(15 + rng.below(15));
      std::vector<double> labels;
      for (auto& r : rows) {
        for (std::uint32_t j = 0; j < features; ++j) {
          if (rng.below(2)) r.active.push_back(j);
        }
        labels.push_back(static_cast<double>(rng.below(2)));
      }
      std::vector<double> params(features + 1);
      for (auto& p : params) p = rng.normal();
      std::vector<double> grad;
      logistic_objective(rows, labels, params, 0.05, &grad);
      for (std::size_t j = 0; j < params.size(); ++j) {
        auto plus = params, minus = params;
        plus[j] += 1e-5;
        minus[j] -= 1e-5;
        const double fd = (logistic_objective(rows, labels, plus, 0.05, nullptr) -
                           logistic_objective(rows, labels, minus, 0.05, nullptr)) /
                          2e-5;
        worst = std::max(worst, std::fabs(fd - grad[j]) / std::max(1e-8, std::fabs(fd)));
      }
    }
    const auto model = train(fixtures::separable_annotations(300, 21), LexiconKind::DoubtMarkers);
    const auto held_out = fixtures::separable_annotations(200, 22);
    const auto m = evaluate(model, held_out);
    std::vector<int> gold, pred;
    for (const auto& a : held_out) {
      gold.push_back(a.gold_positive);
      pred.push_back(predict(model, a).positive);
    }
    const auto c = oracle::recount(gold, pred);
    const bool recount_ok = c.tp == m.tp && c.fp == m.fp && c.tn == m.tn && c.fn == m.fn &&
                            m.accuracy == static_cast<double>(c.tp + c.tn) / static_cast<double>(gold.size());
    o.detail << " max gradient rel. error " << worst << ", held-out macro-F1 " << format_fixed(m.macro_f1, 4);
    o.require(worst < 1e-4, "gradient check");
    o.require(m.macro_f1 >= 0.95, "macro-F1 >= 0.95");
    o.require(recount_ok, "metrics equal recount");
  });

  criterion(11, "Spearman", 0, [](Outcome_& o) {
    const std::vector<double> x{1, 2, 3};
    const double up = spearman(x, std::vector<double>{2, 4, 6}).rho;
    const double down = spearman(x, std::vector<double>{3, 2, 1}).rho;
    const std::vector<double> tx{1, 2, 2, 4}, ty{1, 3, 2, 4};
    const double tied = spearman(tx, ty).rho, ref = oracle::spearman_rho(tx, ty);
    o.detail << " rho " << up << ", " << down << ", tied " << format_double(tied) << " vs " << format_double(ref);
    o.require(up == 1.0 && down == -1.0, "exact +-1");
    o.require(std::fabs(tied - ref) <= 1e-12, "tied case to 1e-12");
  });

  criterion(12, "report formatting", 0, [](Outcome_& o) {
    const auto cell = format_rate_ratio_cell(1.164, 1.081, 1.252, 5e-5);
    o.detail << " cell \"" << cell << "\"";
    o.require(cell == "1.16 (1.08, 1.25)**", "Table 2 cell format");
    SynthConfig config;
    config.seed = 12;
    config.n_patients = 150;
    config.base_rate_stigma = 0.15;
    config.prevalence["provider_type"]["Pharmacist"] = 0.1;
    const auto corpus = dedup_and_filter(link_tables(synth_tables(generate(config))));
    const auto lex = shipped_lexicons();
    const auto scan = scan_notes(corpus.notes, Matcher::build(lex));
    const auto agg = aggregate_corpus(corpus, scan.note_flags, CountingMode::FlaggedCharts);
    RunManifest manifest;
    const auto results = analyze(agg, ModelMode::PerPredictor, manifest.id());
    const auto report = emit_report(manifest, results);
    bool excluded = true;
    std::size_t provider_rows = 0;
    for (const auto& b : results.fits) {
      if (b.level != EntityLevel::Provider) continue;
      for (const auto& r : b.rows) {
        ++provider_rows;
        excluded = excluded && r.level != "Pharmacist" && r.level != "Unknown";
      }
    }
    const bool csv_ok = report.csv.find(",provider,provider_type,Pharmacist,") == std::string::npos &&
                        report.csv.find(",provider,provider_type,Unknown,") == std::string::npos;
    const bool note_ok = report.markdown.find("Pharmacists removed from regression analyses") != std::string::npos;
    o.detail << "; " << provider_rows << " provider rows, Pharmacist/Unknown excluded";
    o.require(provider_rows > 0 && excluded && csv_ok, "provider table excludes Pharmacist and Unknown");
    o.require(note_ok, "exclusion note rendered");
  });

  {
    // Built before the timer: 100k notes of ~200 tokens from filler plus lexicon terms.
    const auto lex = shipped_lexicons();
    std::vector<const Lexicon*> ptrs{&lex[0], &lex[1]};
    const auto filler = filler_vocabulary(2000, 13, ptrs);
    std::vector<std::string> terms;
    for (const auto& l : lex) {
      for (const auto& t : l.terms()) terms.push_back(t.text);
    }
    oracle::SplitMix rng{13};
    std::vector<Note> notes(100000);
    for (std::size_t i = 0; i < notes.size(); ++i) {
      notes[i].note_id = std::to_string(i);
      notes[i].patient_id = "P" + std::to_string(i % 5000);
      std::string text;
      std::size_t tokens = 0, in_sentence = 0;
      while (tokens < 200) {
        text += rng.below(50) == 0 ? terms[rng.below(terms.size())] : filler[rng.below(filler.size())];
        ++tokens;
        if (++in_sentence >= 8 + rng.below(10)) {
          text += ". ";
          in_sentence = 0;
        } else {
          text += ' ';
        }
      }
      notes[i].text = std::move(text);
    }
    const Matcher m = Matcher::build(lex);
    criterion(13, "throughput", 60.0, [&](Outcome_& o) {
      ScanOptions opts;
      opts.threads = 4;
      const auto start = std::chrono::steady_clock::now();
      const auto r = scan_notes(notes, m, AbbreviationList::defaults(), opts);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      o.detail << " " << notes.size() << " notes, " << r.tokens << " tokens, " << r.sentences << " sentences, "
               << r.matches << " matches, " << format_fixed(static_cast<double>(r.tokens) / secs / 1e6, 2)
               << "M tokens/s on 4 threads (" << std::thread::hardware_concurrency() << " cores)";
      o.require(r.tokens >= 100000 * 200, "~200 tokens per note");
    });
  }

  std::printf("%d/13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
