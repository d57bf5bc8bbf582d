#include "stigscan/lexicon.hpp"

#include <algorithm>
#include <unordered_set>

#include "stigscan/default_data.hpp"
#include "stigscan/errors.hpp"
#include "stigscan/util.hpp"

namespace stigscan {

std::string_view to_string(LexiconKind kind) {
  return kind == LexiconKind::DoubtMarkers ? "doubt_markers" : "stigmatizing_labels";
}

LexiconKind parse_lexicon_kind(std::string_view name) {
  auto n = trim(name);
  if (iequals(n, "doubt_markers") || iequals(n, "doubt")) return LexiconKind::DoubtMarkers;
  if (iequals(n, "stigmatizing_labels") || iequals(n, "stigma")) return LexiconKind::StigmatizingLabels;
  throw Error(ErrorCode::InvalidArgument, "unknown lexicon name '" + std::string(n) + "'");
}

std::vector<std::string> normalize_term(std::string_view raw) {
  std::vector<std::string> out;
  for (auto& t : normalize_tokens(raw)) out.push_back(std::move(t.norm));
  return out;
}

Lexicon Lexicon::parse(std::string_view text, LexiconKind kind, std::string source) {
  Lexicon lex;
  lex.kind_ = kind;
  lex.source_ = std::move(source);
  std::unordered_map<std::string, std::size_t> index;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.substr(0, 6) == "@stem ") {
      auto stem = normalize_term(line.substr(6));
      if (!stem.empty()) {
        std::string joined = stem.front();
        for (std::size_t i = 1; i < stem.size(); ++i) joined += " " + stem[i];
        lex.stems_.push_back(std::move(joined));
      }
      continue;
    }
    ++lex.entry_count_;
    Term term;
    term.raw = std::string(line);
    term.line = line_no;
    term.tokens = normalize_term(line);
    if (term.tokens.empty()) {
      throw Error(ErrorCode::Parse, lex.source_ + ":" + std::to_string(line_no) +
                                        ": term '" + term.raw + "' is empty after normalization");
    }
    term.text = term.tokens.front();
    for (std::size_t i = 1; i < term.tokens.size(); ++i) term.text += " " + term.tokens[i];
    auto [it, inserted] = index.emplace(term.text, lex.terms_.size());
    if (!inserted) {
      const auto& kept = lex.terms_[it->second];
      lex.collisions_.push_back({term.text, kept.raw, kept.line, term.raw, term.line});
      continue;
    }
    lex.terms_.push_back(std::move(term));
  }
  if (lex.terms_.empty()) throw Error(ErrorCode::EmptyLexicon, "lexicon " + lex.source_ + " has no terms");
  return lex;
}

Lexicon Lexicon::shipped(LexiconKind kind) {
  if (kind == LexiconKind::DoubtMarkers)
    return parse(default_data::doubt_markers_lexicon, kind, "shipped:doubt_markers.txt");
  return parse(default_data::stigmatizing_labels_lexicon, kind, "shipped:stigmatizing_labels.txt");
}

std::vector<std::string> Lexicon::matchable_stems() const {
  std::vector<std::string> out;
  for (const auto& s : stems_) {
    if (contains(s)) out.push_back(s);
  }
  return out;
}

bool Lexicon::contains(std::string_view normalized_term) const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [&](const Term& t) { return t.text == normalized_term; });
}

Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind expected_kind) {
  return Lexicon::parse(read_file(path), expected_kind, path.string());
}

Matcher Matcher::build(std::span<const Lexicon> lexicons) {
  Matcher m;
  m.node_pattern_.push_back(kNone);  // root
  std::unordered_map<std::string, std::uint32_t> pattern_index;
  for (const auto& lex : lexicons) {
    for (const auto& term : lex.terms()) {
      std::uint32_t node = 0;
      for (const auto& tok : term.tokens) {
        auto [vit, _] = m.vocab_.emplace(tok, static_cast<std::uint32_t>(m.vocab_.size()));
        const std::uint64_t key = (static_cast<std::uint64_t>(node) << 32) | vit->second;
        auto eit = m.edges_.find(key);
        if (eit == m.edges_.end()) {
          auto next = static_cast<std::uint32_t>(m.node_pattern_.size());
          m.node_pattern_.push_back(kNone);
          eit = m.edges_.emplace(key, next).first;
        }
        node = eit->second;
      }
      m.max_len_ = std::max(m.max_len_, term.tokens.size());
      auto [pit, inserted] = pattern_index.emplace(term.text, static_cast<std::uint32_t>(m.patterns_.size()));
      if (inserted) {
        m.patterns_.push_back({term.text, {}});
        m.node_pattern_[node] = pit->second;
      }
      auto& kinds = m.patterns_[pit->second].lexicons;
      if (std::find(kinds.begin(), kinds.end(), lex.kind()) == kinds.end()) kinds.push_back(lex.kind());
    }
  }
  for (auto& p : m.patterns_) std::sort(p.lexicons.begin(), p.lexicons.end());
  return m;
}

std::uint32_t Matcher::child(std::uint32_t node, std::uint32_t token) const {
  auto it = edges_.find((static_cast<std::uint64_t>(node) << 32) | token);
  return it == edges_.end() ? kNone : it->second;
}

std::vector<Match> Matcher::match(std::span<const Token> tokens) const {
  std::vector<Match> out;
  const std::size_t n = tokens.size();
  std::vector<std::uint32_t> ids(n, kNone);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = vocab_.find(tokens[i].norm);
    if (it != vocab_.end()) ids[i] = it->second;
  }
  std::size_t i = 0;
  while (i < n) {
    std::uint32_t node = 0;
    std::uint32_t best_pattern = kNone;
    std::size_t best_end = i;
    for (std::size_t j = i; j < n && ids[j] != kNone; ++j) {
      node = child(node, ids[j]);
      if (node == kNone) break;
      if (node_pattern_[node] != kNone) {
        best_pattern = node_pattern_[node];
        best_end = j + 1;
      }
    }
    if (best_pattern == kNone) {
      ++i;
      continue;
    }
    for (LexiconKind kind : patterns_[best_pattern].lexicons) {
      out.push_back(Match{patterns_[best_pattern].text, kind, i, best_end});
    }
    i = best_end;
  }
  return out;
}

}  // namespace stigscan
