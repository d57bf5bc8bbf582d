#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stigscan/aggregation.hpp"
#include "stigscan/classifier.hpp"
#include "stigscan/corpus.hpp"
#include "stigscan/lexicon.hpp"
#include "stigscan/text.hpp"

namespace stigscan {

// --threads, then STIGMA_SCAN_THREADS, then hardware concurrency (at least 1).
unsigned resolve_threads(std::optional<unsigned> requested = std::nullopt);

struct ScanOptions {
  unsigned threads = 1;
  // Null means lexicon-only mode: every match counts as positive.
  const ClassifierModel* stigma_model = nullptr;
  const ClassifierModel* doubt_model = nullptr;
};

struct ScanResult {
  std::vector<SentenceLabel> labels;    // sentences with a match, in note then sentence order
  std::vector<NoteFlags> note_flags;    // parallel to the scanned notes
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t matches = 0;
};

// Labels one sentence; nullopt when no lexicon term matches.
std::optional<SentenceLabel> label_sentence(const Sentence& sentence, const Matcher& matcher,
                                            const ScanOptions& options);

// Segments, matches and classifies every note. Output is identical for any
// thread count.
ScanResult scan_notes(std::span<const Note> notes, const Matcher& matcher,
                      const AbbreviationList& abbreviations = AbbreviationList::defaults(),
                      const ScanOptions& options = {});

}  // namespace stigscan
