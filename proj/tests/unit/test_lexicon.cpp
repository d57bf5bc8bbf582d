#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/lexicon.hpp"
#include "stigscan/util.hpp"

using namespace stigscan;

namespace {

std::vector<std::string> terms_of(const std::vector<Match>& matches) {
  std::vector<std::string> out;
  for (const auto& m : matches) out.push_back(m.term);
  return out;
}

const Matcher& shipped_matcher() {
  static const Matcher m = [] {
    const std::vector<Lexicon> lex{Lexicon::shipped(LexiconKind::StigmatizingLabels),
                                   Lexicon::shipped(LexiconKind::DoubtMarkers)};
    return Matcher::build(lex);
  }();
  return m;
}

std::vector<Match> match_text(const Matcher& m, std::string_view text) { return m.match(normalize_tokens(text)); }

}  // namespace

TEST_CASE("shipped lexicons") {
  const Lexicon doubt = Lexicon::shipped(LexiconKind::DoubtMarkers);
  const Lexicon stigma = Lexicon::shipped(LexiconKind::StigmatizingLabels);
  CHECK(doubt.entry_count() == 58);
  CHECK(stigma.entry_count() == 127);
  CHECK(doubt.terms().size() == 52);
  CHECK(stigma.terms().size() == 118);
  CHECK(doubt.declared_stems().size() == 6);
  CHECK(stigma.declared_stems().size() == 18);
  CHECK(doubt.matchable_stems().size() == 6);
  for (const auto* lex : {&doubt, &stigma}) {
    std::set<std::string> seen;
    for (const auto& t : lex->terms()) {
      CHECK(t.text == to_lower(t.text));
      CHECK(seen.insert(t.text).second);
    }
  }
  CHECK(stigma.contains("junkie's"));
  CHECK(stigma.contains("frequent-flier"));
  CHECK(shipped_matcher().pattern_count() == 170);
}

TEST_CASE("lexicon parsing") {
  const Lexicon l = Lexicon::parse("# comment\nAdamant\nadamant\n\"Insists\"\n", LexiconKind::DoubtMarkers);
  CHECK(l.terms().size() == 2);
  CHECK(l.entry_count() == 3);
  REQUIRE(l.collisions().size() == 1);
  CHECK(l.collisions()[0].normalized == "adamant");
  CHECK(l.collisions()[0].kept_raw == "Adamant");
  CHECK(l.contains("insists"));
  CHECK_THROWS_AS(Lexicon::parse("# nothing\n\n", LexiconKind::DoubtMarkers), Error);
}

TEST_CASE("match_sentence examples") {
  const auto& m = shipped_matcher();
  const auto intro = match_text(m, "patient claimed their pain was 10/10");
  REQUIRE(intro.size() == 1);
  CHECK(intro[0].term == "claimed");
  CHECK(intro[0].lexicon == LexiconKind::DoubtMarkers);
  CHECK(terms_of(match_text(m, "pt is a frequent-flier and noncompliant")) ==
        std::vector<std::string>{"frequent-flier", "noncompliant"});
  CHECK(match_text(m, "patient resting comfortably").empty());
  CHECK(match_text(m, "high maintenance patient").size() == 1);
  // Token-exact: "refused" is not the listed "refuse".
  const auto refused = match_text(m, "he refused");
  CHECK(std::none_of(refused.begin(), refused.end(), [](const Match& x) { return x.term == "refuse"; }));
}

TEST_CASE("longest match wins and scanning resumes after it") {
  const std::vector<Lexicon> lex{Lexicon::parse("drug\ndrug addict\naddict\n", LexiconKind::StigmatizingLabels)};
  const Matcher m = Matcher::build(lex);
  const auto hits = match_text(m, "known drug addict and drug user");
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].term == "drug addict");
  CHECK(hits[0].token_begin == 1);
  CHECK(hits[0].token_end == 3);
  CHECK(hits[1].term == "drug");
}

TEST_CASE("single-term lexicon matches exactly that term") {
  const std::vector<Lexicon> lex{Lexicon::parse("adamant\n", LexiconKind::DoubtMarkers)};
  const Matcher m = Matcher::build(lex);
  CHECK(m.pattern_count() == 1);
  CHECK(match_text(m, "she was adamant, very adamant").size() == 2);
  CHECK(match_text(m, "adamantly").empty());
}

TEST_CASE("matcher equals naive scan on random sentences") {
  const std::vector<Lexicon> lex{Lexicon::shipped(LexiconKind::StigmatizingLabels),
                                 Lexicon::shipped(LexiconKind::DoubtMarkers)};
  const Matcher& m = shipped_matcher();
  std::vector<std::string> vocab{"the", "patient", "was", "pain", "and", "drug", "high", "very", "seeking"};
  for (const auto& l : lex) {
    for (const auto& t : l.terms()) vocab.insert(vocab.end(), t.tokens.begin(), t.tokens.end());
  }
  oracle::SplitMix rng{11};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string sentence;
    const std::size_t n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) sentence += vocab[rng.below(vocab.size())] + (i + 1 < n ? " " : "");
    const auto tokens = normalize_tokens(sentence);
    const auto got = m.match(tokens);
    const auto want = oracle::naive_scan(tokens, lex);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].term == want[i].term);
      CHECK(got[i].lexicon == want[i].lexicon);
      CHECK(got[i].token_begin == want[i].begin);
      CHECK(got[i].token_end == want[i].end);
    }
    for (const auto& match : got) {
      std::string joined;
      for (std::size_t k = match.token_begin; k < match.token_end; ++k) {
        joined += (k == match.token_begin ? "" : " ") + tokens[k].norm;
      }
      CHECK(joined == match.term);
    }
  }
}
