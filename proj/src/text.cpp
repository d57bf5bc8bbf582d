#include "stigscan/text.hpp"

#include <array>
#include <cctype>

#include "stigscan/default_data.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

// Multi-byte punctuation that commonly wraps words in pasted clinical text.
constexpr std::array<std::string_view, 9> kUtf8EdgePunct{
    "\xE2\x80\x9C",  // left double quote
    "\xE2\x80\x9D",  // right double quote
    "\xE2\x80\x98",  // left single quote
    "\xE2\x80\x99",  // right single quote
    "\xE2\x80\xA6",  // ellipsis
    "\xE2\x80\xA2",  // bullet
    "\xE2\x80\x93",  // en dash
    "\xE2\x80\x94",  // em dash
    "\xC2\xAB",      // guillemet
};

std::size_t leading_punct(std::string_view s) {
  if (s.empty()) return 0;
  if (is_ascii_punct(s.front())) return 1;
  for (auto p : kUtf8EdgePunct) {
    if (s.substr(0, p.size()) == p) return p.size();
  }
  return 0;
}

std::size_t trailing_punct(std::string_view s) {
  if (s.empty()) return 0;
  if (is_ascii_punct(s.back())) return 1;
  for (auto p : kUtf8EdgePunct) {
    if (s.size() >= p.size() && s.substr(s.size() - p.size()) == p) return p.size();
  }
  return 0;
}

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

std::vector<Chunk> split_chunks(std::string_view text) {
  std::vector<Chunk> chunks;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    chunks.push_back({start, i});
  }
  return chunks;
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool is_bullet(std::string_view chunk) {
  if (chunk.empty()) return false;
  char c = chunk.front();
  if (c == '-' || c == '*' || c == '+') return true;
  if (chunk.substr(0, 3) == "\xE2\x80\xA2") return true;
  // "1." / "12)" list numbering
  if (chunk.size() >= 2 && chunk.size() <= 4 && (chunk.back() == '.' || chunk.back() == ')') &&
      all_digits(chunk.substr(0, chunk.size() - 1)))
    return true;
  return false;
}

}  // namespace

AbbreviationList AbbreviationList::parse(std::string_view text) {
  AbbreviationList list;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    list.entries_.insert(to_lower(line));
  }
  return list;
}

const AbbreviationList& AbbreviationList::defaults() {
  static const AbbreviationList list = parse(default_data::abbreviations);
  return list;
}

bool AbbreviationList::contains(std::string_view token) const {
  return entries_.count(to_lower(token)) != 0;
}

std::string normalize_token(std::string_view chunk) {
  while (auto k = leading_punct(chunk)) chunk.remove_prefix(k);
  while (auto k = trailing_punct(chunk)) chunk.remove_suffix(k);
  return to_lower(chunk);
}

std::vector<Token> normalize_tokens(std::string_view text) {
  std::vector<Token> tokens;
  for (const auto& c : split_chunks(text)) {
    auto surface = text.substr(c.begin, c.end - c.begin);
    auto norm = normalize_token(surface);
    if (norm.empty()) continue;
    tokens.push_back(Token{std::string(surface), std::move(norm), c.begin, c.end});
  }
  return tokens;
}

std::vector<Sentence> segment_sentences(std::string_view text, const AbbreviationList& abbreviations,
                                        std::string_view note_id) {
  std::vector<Sentence> sentences;
  const auto chunks = split_chunks(text);
  if (chunks.empty()) return sentences;

  auto newlines_between = [&](std::size_t from, std::size_t to) {
    int count = 0;
    for (std::size_t i = from; i < to; ++i) count += text[i] == '\n';
    return count;
  };

  auto emit = [&](std::size_t first, std::size_t last) {
    Sentence s;
    s.note_id = std::string(note_id);
    s.index = sentences.size();
    s.begin = chunks[first].begin;
    s.end = chunks[last].end;
    s.tokens = normalize_tokens(text.substr(s.begin, s.end - s.begin));
    for (auto& t : s.tokens) {
      t.begin += s.begin;
      t.end += s.begin;
    }
    sentences.push_back(std::move(s));
  };

  std::size_t first = 0;
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const auto chunk = text.substr(chunks[k].begin, chunks[k].end - chunks[k].begin);
    const bool line_start = k == 0 || newlines_between(chunks[k - 1].end, chunks[k].begin) > 0;

    bool boundary_after = false;
    if (k + 1 < chunks.size()) {
      // Terminal punctuation (possibly followed by closing quotes/brackets).
      std::size_t p = chunk.size();
      while (p > 0 && is_closer(chunk[p - 1])) --p;
      if (p > 0 && is_terminal(chunk[p - 1])) {
        boundary_after = true;
        if (chunk[p - 1] == '.' && (p < 2 || !is_terminal(chunk[p - 2]))) {
          auto word = chunk.substr(0, p);
          while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\''))
            word.remove_prefix(1);
          if (abbreviations.contains(word)) boundary_after = false;
          if (line_start && all_digits(word.substr(0, word.size() - 1))) boundary_after = false;
        }
      }
      const auto gap_newlines = newlines_between(chunks[k].end, chunks[k + 1].begin);
      if (gap_newlines >= 2) boundary_after = true;
      if (gap_newlines >= 1) {
        auto next = text.substr(chunks[k + 1].begin, chunks[k + 1].end - chunks[k + 1].begin);
        if (is_bullet(next)) boundary_after = true;
      }
    }
    if (boundary_after || k + 1 == chunks.size()) {
      emit(first, k);
      first = k + 1;
    }
  }
  return sentences;
}

}  // namespace stigscan
