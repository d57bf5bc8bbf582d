#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stigscan/text.hpp"

namespace stigscan {

enum class LexiconKind { DoubtMarkers, StigmatizingLabels };

std::string_view to_string(LexiconKind kind);  // "doubt_markers" / "stigmatizing_labels"
LexiconKind parse_lexicon_kind(std::string_view name);

// A normalized term: the token sequence a sentence must contain.
struct Term {
  std::string text;                 // tokens joined by single spaces
  std::vector<std::string> tokens;
  std::string raw;                  // line as written in the lexicon file
  int line = 0;
};

struct NormalizationCollision {
  std::string normalized;
  std::string kept_raw;
  int kept_line = 0;
  std::string dropped_raw;
  int dropped_line = 0;
};

class Lexicon {
 public:
  // Parses lexicon text: one term per line, '#' comments, '@stem <word>' lines
  // declaring the seed words the list was expanded from. Throws EmptyLexicon.
  static Lexicon parse(std::string_view text, LexiconKind kind, std::string source = "<memory>");
  static Lexicon shipped(LexiconKind kind);

  LexiconKind kind() const { return kind_; }
  const std::string& source() const { return source_; }

  // Every term line in file order, repeats included (the published list length).
  std::size_t entry_count() const { return entry_count_; }
  // Distinct normalized terms, first occurrence kept.
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<NormalizationCollision>& collisions() const { return collisions_; }

  const std::vector<std::string>& declared_stems() const { return stems_; }
  // Declared stems that are also matchable terms.
  std::vector<std::string> matchable_stems() const;

  bool contains(std::string_view normalized_term) const;

 private:
  LexiconKind kind_ = LexiconKind::DoubtMarkers;
  std::string source_;
  std::size_t entry_count_ = 0;
  std::vector<Term> terms_;
  std::vector<NormalizationCollision> collisions_;
  std::vector<std::string> stems_;
};

Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind expected_kind);

// Splits a raw term into normalized tokens using the note tokenizer rules.
std::vector<std::string> normalize_term(std::string_view raw);

struct Match {
  std::string term;
  LexiconKind lexicon = LexiconKind::DoubtMarkers;
  std::size_t token_begin = 0;  // [begin, end) within the sentence tokens
  std::size_t token_end = 0;

  bool operator==(const Match&) const = default;
};

// Token-level trie over all terms of all lexicons. Scanning is leftmost-longest
// and resumes after each match; immutable after build and safe to share.
class Matcher {
 public:
  static Matcher build(std::span<const Lexicon> lexicons);

  std::vector<Match> match(std::span<const Token> tokens) const;
  std::vector<Match> match(const Sentence& sentence) const { return match(sentence.tokens); }

  std::size_t pattern_count() const { return patterns_.size(); }
  std::size_t max_term_tokens() const { return max_len_; }

 private:
  struct Pattern {
    std::string text;
    std::vector<LexiconKind> lexicons;
  };
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  std::uint32_t child(std::uint32_t node, std::uint32_t token) const;

  std::unordered_map<std::string, std::uint32_t> vocab_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<std::uint32_t> node_pattern_;  // per trie node, kNone when not terminal
  std::vector<Pattern> patterns_;
  std::size_t max_len_ = 0;
};

inline std::vector<Match> match_sentence(const Matcher& matcher, const Sentence& sentence) {
  return matcher.match(sentence);
}

}  // namespace stigscan
