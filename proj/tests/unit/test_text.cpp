#include <doctest.h>

#include "oracles.hpp"
#include "stigscan/text.hpp"
#include "stigscan/util.hpp"

using namespace stigscan;

namespace {

std::vector<std::string> norms(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.norm);
  return out;
}

}  // namespace

TEST_CASE("segment_sentences examples") {
  CHECK(segment_sentences("Pain 10/10. Pt resting.").size() == 2);
  CHECK(segment_sentences("BP 120/80\n\nPt agitated overnight").size() == 2);
  CHECK(segment_sentences("").empty());
  CHECK(segment_sentences("   \n ").empty());
  CHECK(segment_sentences("Temp 10.5 today. Stable").size() == 2);
  CHECK(segment_sentences("Seen by Dr. Smith today. Pt. stable q.d. dosing.").size() == 2);
  CHECK(segment_sentences("Is he ok? Yes! Fine").size() == 3);
  CHECK(segment_sentences("Plan:\n- aspirin\n- heparin").size() >= 3);
}

TEST_CASE("sentence spans are ordered and cover all text") {
  const std::string text = "Pt seen. Claims pain 8/10!  Dr. Lee aware\n\n- follow up\nok";
  const auto sentences = segment_sentences(text, AbbreviationList::defaults(), "n1");
  std::size_t last_end = 0;
  std::string covered;
  for (const auto& s : sentences) {
    CHECK(s.note_id == "n1");
    CHECK(s.begin >= last_end);
    CHECK(s.begin < s.end);
    last_end = s.end;
    covered += text.substr(s.begin, s.end - s.begin);
    for (const auto& t : s.tokens) CHECK(text.substr(t.begin, t.end - t.begin) == t.surface);
  }
  auto strip = [](std::string s) {
    std::erase_if(s, [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    return s;
  };
  CHECK(strip(covered) == strip(text));
}

TEST_CASE("normalize_tokens") {
  CHECK(norms(normalize_tokens("Pt. was ADAMANT!")) == std::vector<std::string>{"pt", "was", "adamant"});
  CHECK(norms(normalize_tokens("frequent-flier,")) == std::vector<std::string>{"frequent-flier"});
  CHECK(norms(normalize_tokens("junkie's")) == std::vector<std::string>{"junkie's"});
  CHECK(norms(normalize_tokens("\"irrational\"")) == std::vector<std::string>{"irrational"});
  CHECK(norms(normalize_tokens("10/10 -- ok")) == std::vector<std::string>{"10/10", "ok"});
  for (const auto& t : normalize_tokens("A B-c, d's (e) F/G! ...")) {
    CHECK_FALSE(t.norm.empty());
    CHECK(t.norm == to_lower(t.norm));
  }
}

TEST_CASE("segmentation is deterministic") {
  const std::string text = "Pt states pain 9/10. Reports he was told. Denies!\n\nNo distress";
  const auto a = segment_sentences(text);
  const auto b = segment_sentences(text);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].begin == b[i].begin);
    CHECK(norms(a[i].tokens) == norms(b[i].tokens));
  }
}

TEST_CASE("sentence count equals naive boundary count") {
  oracle::SplitMix rng{7};
  const auto& abbrev = AbbreviationList::defaults();
  const char* ends[] = {".", "!", "?"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    std::size_t boundaries = 0;
    const std::size_t words = 1 + rng.below(40);
    for (std::size_t w = 0; w < words; ++w) {
      std::string word;
      do {
        word.clear();
        const std::size_t len = 4 + rng.below(5);
        for (std::size_t i = 0; i < len; ++i) word += static_cast<char>('a' + rng.below(26));
      } while (abbrev.contains(word + "."));
      text += word;
      if (w + 1 == words) break;
      if (rng.below(5) == 0) {
        text += ends[rng.below(3)];
        ++boundaries;
      }
      text += ' ';
    }
    CHECK(segment_sentences(text).size() == boundaries + 1);
  }
}
