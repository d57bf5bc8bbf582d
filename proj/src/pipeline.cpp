#include "stigscan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

unsigned resolve_threads(std::optional<unsigned> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("STIGMA_SCAN_THREADS")) {
    const std::string value(trim(env));
    if (!value.empty()) {
      try {
        std::size_t used = 0;
        const long n = std::stol(value, &used);
        if (used == value.size() && n > 0) return static_cast<unsigned>(n);
      } catch (const std::exception&) {
      }
      throw Error(ErrorCode::InvalidArgument, "STIGMA_SCAN_THREADS must be a positive integer, got '" + value + "'");
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct LexiconVerdict {
  bool hit = false;
  bool positive = false;
  double probability = 0.0;
  std::string terms;
};

void add_match(LexiconVerdict& v, const ClassifierModel* model, const Sentence& sentence, const Match& m) {
  double p = 1.0;
  bool positive = true;
  if (model) {
    const Prediction pred = predict(*model, sentence.tokens, m);
    p = pred.probability;
    positive = pred.positive;
  }
  if (!v.terms.empty()) v.terms += ';';
  v.terms += m.term;
  v.probability = v.hit ? std::max(v.probability, p) : p;
  v.positive = v.positive || positive;
  v.hit = true;
}

}  // namespace

std::optional<SentenceLabel> label_sentence(const Sentence& sentence, const Matcher& matcher,
                                            const ScanOptions& options) {
  const auto matches = matcher.match(sentence);
  if (matches.empty()) return std::nullopt;
  LexiconVerdict stigma, doubt;
  for (const auto& m : matches) {
    if (m.lexicon == LexiconKind::StigmatizingLabels) {
      add_match(stigma, options.stigma_model, sentence, m);
    } else {
      add_match(doubt, options.doubt_model, sentence, m);
    }
  }
  SentenceLabel label;
  label.note_id = sentence.note_id;
  label.sentence_index = sentence.index;
  label.begin = sentence.begin;
  label.end = sentence.end;
  label.stigma_hit = stigma.hit;
  label.stigma_positive = stigma.positive;
  label.stigma_probability = stigma.probability;
  label.stigma_terms = std::move(stigma.terms);
  label.doubt_hit = doubt.hit;
  label.doubt_positive = doubt.positive;
  label.doubt_probability = doubt.probability;
  label.doubt_terms = std::move(doubt.terms);
  return label;
}

ScanResult scan_notes(std::span<const Note> notes, const Matcher& matcher, const AbbreviationList& abbreviations,
                      const ScanOptions& options) {
  if (options.stigma_model && options.stigma_model->lexicon() != LexiconKind::StigmatizingLabels) {
    throw Error(ErrorCode::LexiconMismatch, "stigma classifier was trained for another lexicon");
  }
  if (options.doubt_model && options.doubt_model->lexicon() != LexiconKind::DoubtMarkers) {
    throw Error(ErrorCode::LexiconMismatch, "doubt classifier was trained for another lexicon");
  }
  struct NoteScan {
    std::vector<SentenceLabel> labels;
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::size_t matches = 0;
  };
  std::vector<NoteScan> per_note(notes.size());
  auto scan_one = [&](std::size_t i) {
    NoteScan& out = per_note[i];
    for (const auto& sentence : segment_sentences(notes[i].text, abbreviations, notes[i].note_id)) {
      ++out.sentences;
      out.tokens += sentence.tokens.size();
      if (auto label = label_sentence(sentence, matcher, options)) {
        // Terms are joined one per match.
        for (const auto* terms : {&label->stigma_terms, &label->doubt_terms}) {
          if (!terms->empty()) out.matches += 1 + static_cast<std::size_t>(std::count(terms->begin(), terms->end(), ';'));
        }
        out.labels.push_back(std::move(*label));
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(notes.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < notes.size(); ++i) scan_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    constexpr std::size_t kChunk = 64;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t begin = next.fetch_add(kChunk);
          if (begin >= notes.size()) break;
          const std::size_t end = std::min(notes.size(), begin + kChunk);
          for (std::size_t i = begin; i < end; ++i) scan_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  ScanResult result;
  result.note_flags.reserve(notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    NoteScan& s = per_note[i];
    result.note_flags.push_back(aggregate_note(notes[i].note_id, s.labels));
    result.sentences += s.sentences;
    result.tokens += s.tokens;
    result.matches += s.matches;
    std::move(s.labels.begin(), s.labels.end(), std::back_inserter(result.labels));
  }
  return result;
}

}  // namespace stigscan
