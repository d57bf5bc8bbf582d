#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace stigscan {

struct Token {
  std::string surface;  // original bytes
  std::string norm;     // lowercased, edge punctuation stripped
  std::size_t begin = 0;  // byte offsets into the text passed to the tokenizer
  std::size_t end = 0;
};

struct Sentence {
  std::string note_id;
  std::size_t index = 0;
  std::size_t begin = 0;  // byte span in the note
  std::size_t end = 0;
  std::vector<Token> tokens;
};

// Tokens ending in '.' that never close a sentence ("Dr.", "pt.", "q.d.").
class AbbreviationList {
 public:
  static AbbreviationList parse(std::string_view text);
  static const AbbreviationList& defaults();

  bool contains(std::string_view token) const;  // case-insensitive
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

// Lowercase + strip leading/trailing punctuation; word-internal characters
// (hyphens, slashes, apostrophes, periods) are preserved. Returns an empty
// string for tokens made only of punctuation.
std::string normalize_token(std::string_view chunk);

std::vector<Token> normalize_tokens(std::string_view text);

std::vector<Sentence> segment_sentences(std::string_view text,
                                        const AbbreviationList& abbreviations = AbbreviationList::defaults(),
                                        std::string_view note_id = {});

}  // namespace stigscan
