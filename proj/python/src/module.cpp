#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "stigscan/errors.hpp"
#include "stigscan/lexicon.hpp"
#include "stigscan/report.hpp"
#include "stigscan/stats.hpp"
#include "stigscan/synth.hpp"
#include "stigscan/text.hpp"

namespace py = pybind11;
using namespace stigscan;

namespace {

py::dict lexicon_summary(const Lexicon& lexicon) {
  py::dict out;
  out["kind"] = std::string(to_string(lexicon.kind()));
  out["entries"] = lexicon.entry_count();
  std::vector<std::string> terms;
  for (const Term& term : lexicon.terms()) terms.push_back(term.text);
  out["terms"] = terms;
  out["stems"] = lexicon.declared_stems();
  out["matchable_stems"] = lexicon.matchable_stems();
  return out;
}

// Shipped lexicons by default; immutable once built.
class Scanner {
 public:
  Scanner(const std::string& stigma_text, const std::string& doubt_text) {
    lexicons_.push_back(stigma_text.empty() ? Lexicon::shipped(LexiconKind::StigmatizingLabels)
                                            : Lexicon::parse(stigma_text, LexiconKind::StigmatizingLabels));
    lexicons_.push_back(doubt_text.empty() ? Lexicon::shipped(LexiconKind::DoubtMarkers)
                                           : Lexicon::parse(doubt_text, LexiconKind::DoubtMarkers));
    matcher_ = Matcher::build(lexicons_);
  }

  py::list scan(const std::string& text) const {
    py::list out;
    for (const Sentence& sentence : segment_sentences(text)) {
      for (const Match& m : matcher_.match(sentence)) {
        py::dict row;
        row["sentence"] = sentence.index;
        row["term"] = m.term;
        row["lexicon"] = std::string(to_string(m.lexicon));
        row["begin"] = sentence.tokens[m.token_begin].begin;
        row["end"] = sentence.tokens[m.token_end - 1].end;
        out.append(row);
      }
    }
    return out;
  }

  std::size_t pattern_count() const { return matcher_.pattern_count(); }

 private:
  std::vector<Lexicon> lexicons_;
  Matcher matcher_;
};

}  // namespace

PYBIND11_MODULE(_stigscan, m) {
  m.doc() = "Lexicon scanning and rate-ratio modelling for clinical notes";
  m.attr("__version__") = std::string(tool_version());

  // Library errors surface as StigscanError with a .code attribute.
  m.attr("StigscanError") = py::reinterpret_steal<py::object>(
      PyErr_NewException("stigscan.StigscanError", PyExc_RuntimeError, nullptr));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("stigscan._stigscan").attr("StigscanError");
      py::object exc = type(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("normalize_token", &normalize_token, py::arg("chunk"));
  m.def(
      "segment",
      [](const std::string& text) {
        py::list out;
        for (const Sentence& s : segment_sentences(text)) {
          std::vector<std::string> tokens;
          for (const Token& t : s.tokens) tokens.push_back(t.norm);
          out.append(py::make_tuple(s.begin, s.end, tokens));
        }
        return out;
      },
      py::arg("text"), "Sentences as (begin, end, normalized tokens).");

  m.def(
      "shipped_lexicon",
      [](const std::string& kind) { return lexicon_summary(Lexicon::shipped(parse_lexicon_kind(kind))); },
      py::arg("kind"));

  py::class_<Scanner>(m, "Scanner")
      .def(py::init<const std::string&, const std::string&>(), py::arg("stigma_lexicon") = "",
           py::arg("doubt_lexicon") = "")
      .def("scan", &Scanner::scan, py::arg("text"))
      .def_property_readonly("pattern_count", &Scanner::pattern_count);

  m.def(
      "fit_poisson",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& offset) {
        GlmFit fit = fit_poisson_irls(x, y, offset);
        py::dict out;
        out["beta"] = fit.beta;
        out["covariance"] = fit.covariance;
        out["deviance"] = fit.deviance;
        out["iterations"] = fit.iterations;
        out["converged"] = fit.converged;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("offset"), "Poisson log-link IRLS; x carries its own intercept column.");

  m.def(
      "fit_random_intercept",
      [](const std::vector<double>& counts, const std::vector<double>& exposures,
         const std::vector<std::string>& clusters) {
        MixedFit fit = fit_random_intercept_poisson(counts, exposures, clusters);
        py::dict out;
        out["intercept"] = fit.intercept;
        out["sigma2"] = fit.sigma2;
        out["median_irr"] = fit.median_irr;
        out["loglik"] = fit.loglik;
        out["converged"] = fit.converged;
        return out;
      },
      py::arg("counts"), py::arg("exposures"), py::arg("clusters"));

  m.def("median_irr", &median_irr, py::arg("sigma2"));
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        CorrelationResult r = spearman(x, y);
        return py::make_tuple(r.rho, r.p_value);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "gauss_hermite",
      [](int points) {
        GaussHermite gh = gauss_hermite(points);
        return py::make_tuple(gh.nodes, gh.weights);
      },
      py::arg("points"));
  m.def("format_cell", py::overload_cast<double, double, double, double>(&format_rate_ratio_cell), py::arg("rr"),
        py::arg("ci_low"), py::arg("ci_high"), py::arg("p_value"));

  m.def(
      "synthesize",
      [](const std::string& config_text) {
        SynthCorpus corpus = generate(SynthConfig::parse(config_text));
        py::dict out;
        out["NOTEEVENTS.csv"] = corpus.notes_csv;
        out["PATIENTS.csv"] = corpus.patients_csv;
        out["ADMISSIONS.csv"] = corpus.admissions_csv;
        out["CAREGIVERS.csv"] = corpus.caregivers_csv;
        out["DIAGNOSES_ICD.csv"] = corpus.diagnoses_csv;
        out["truth.jsonl"] = corpus.truth_jsonl;
        return out;
      },
      py::arg("config") = "", "Generates an in-memory corpus from config text.");
}
