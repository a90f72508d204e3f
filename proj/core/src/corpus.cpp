#include "cssam/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cssam/error.hpp"

namespace cssam::corpus {
namespace {

bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
// Non-ASCII bytes are treated as caseless letters so UTF-8 words stay intact.
bool is_letter(unsigned char c) { return is_upper(c) || is_lower(c) || c >= 0x80; }
bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (is_upper(static_cast<unsigned char>(c))) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Splits a run of letters at camel-case boundaries.
void split_camel(std::string_view run, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < run.size(); ++i) {
    const auto prev = static_cast<unsigned char>(run[i - 1]);
    const auto cur = static_cast<unsigned char>(run[i]);
    bool boundary = false;
    if (is_upper(cur) && !is_upper(prev)) {
      boundary = true;  // fooBar
    } else if (is_upper(prev) && is_upper(cur) && i + 1 < run.size() &&
               is_lower(static_cast<unsigned char>(run[i + 1]))) {
      boundary = true;  // HTTPServer: split before the 'S'
    }
    if (boundary) {
      out.push_back(lower(run.substr(start, i - start)));
      start = i;
    }
  }
  out.push_back(lower(run.substr(start)));
}

TokenSequence as_sequence(std::vector<std::string> tokens) {
  TokenSequence seq;
  seq.ids.assign(tokens.size(), kUnkId);
  seq.mask.assign(tokens.size(), Slot::kReal);
  seq.tokens = std::move(tokens);
  return seq;
}

}  // namespace

std::size_t TokenSequence::real_length() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), Slot::kReal));
}

std::vector<std::string> code_tokens(std::string_view source) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < source.size()) {
    const auto c = static_cast<unsigned char>(source[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_letter(c)) {
      std::size_t j = i;
      while (j < source.size() && is_letter(static_cast<unsigned char>(source[j]))) ++j;
      split_camel(source.substr(i, j - i), out);
      i = j;
    } else if (is_digit(c)) {
      std::size_t j = i;
      while (j < source.size() && is_digit(static_cast<unsigned char>(source[j]))) ++j;
      out.emplace_back(source.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

std::vector<std::string> query_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_letter(c) || is_digit(c)) {
      std::size_t j = i;
      while (j < text.size() && (is_letter(static_cast<unsigned char>(text[j])) ||
                                 is_digit(static_cast<unsigned char>(text[j])))) {
        ++j;
      }
      out.push_back(lower(text.substr(i, j - i)));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

TokenSequence tokenize_code(std::string_view source) { return as_sequence(code_tokens(source)); }

TokenSequence tokenize_query(std::string_view text) { return as_sequence(query_tokens(text)); }

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() : tokens_{std::string(kPadToken), std::string(kUnkToken)} {
  index_.emplace(tokens_[0], kPadId);
  index_.emplace(tokens_[1], kUnkId);
}

Vocab Vocab::from_counts(const std::unordered_map<std::string, std::size_t>& counts,
                         std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  v.min_count_ = min_count;
  for (auto& [tok, n] : kept) {
    v.index_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(tok));
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw DataError("vocab must start with <PAD>, <UNK>");
  }
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  for (auto& tok : tokens) {
    if (!v.index_.emplace(tok, static_cast<int>(v.tokens_.size())).second) {
      throw DataError("duplicate vocab entry: " + tok);
    }
    v.tokens_.push_back(std::move(tok));
  }
  return v;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("vocab index out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

void Vocab::index(TokenSequence& seq) const {
  seq.ids.resize(seq.tokens.size());
  seq.mask.resize(seq.tokens.size(), Slot::kReal);
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    seq.ids[i] = seq.mask[i] == Slot::kPad ? kPadId : id(seq.tokens[i]);
  }
}

std::vector<int> Vocab::ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

nlohmann::json Vocab::to_json() const { return nlohmann::json(tokens_); }

Vocab Vocab::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("vocab file must hold a JSON array");
  return from_tokens(j.get<std::vector<std::string>>());
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Corpus files

LoadResult parse_pairs(std::string_view jsonl, std::size_t min_doc_tokens) {
  LoadResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON line: ") + e.what(), line_no, 1);
    }
    if (!j.is_object() || !j.contains("code") || !j.contains("docstring") ||
        !j["code"].is_string() || !j["docstring"].is_string()) {
      throw ParseError("record needs string fields code and docstring", line_no, 1);
    }
    CodeDocPair p;
    p.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                   : std::to_string(line_no);
    p.code = j["code"].get<std::string>();
    p.docstring = j["docstring"].get<std::string>();
    p.lang = j.value("lang", std::string("java"));
    if (p.code.empty() || query_tokens(p.docstring).size() < min_doc_tokens) {
      ++result.dropped;
      continue;
    }
    result.pairs.push_back(std::move(p));
  }
  return result;
}

LoadResult load_pairs(const std::filesystem::path& path, std::size_t min_doc_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pairs(buf.str(), min_doc_tokens);
}

void save_pairs(const std::filesystem::path& path, const std::vector<CodeDocPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    nlohmann::json j = {{"id", p.id}, {"code", p.code}, {"docstring", p.docstring}, {"lang", p.lang}};
    out << j.dump() << '\n';
  }
}

std::pair<Vocab, Vocab> build_vocab(const std::vector<CodeDocPair>& pairs, std::size_t min_count) {
  if (pairs.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, std::size_t> code_counts;
  std::unordered_map<std::string, std::size_t> query_counts;
  for (const auto& p : pairs) {
    for (auto& t : code_tokens(p.code)) ++code_counts[std::move(t)];
    for (auto& t : query_tokens(p.docstring)) ++query_counts[std::move(t)];
  }
  return {Vocab::from_counts(code_counts, min_count), Vocab::from_counts(query_counts, min_count)};
}

TokenSequence pad_or_truncate(const TokenSequence& seq, std::size_t target_len) {
  if (target_len < 1) throw ConfigError("pad_or_truncate: target length must be >= 1");
  TokenSequence out;
  const std::size_t keep = std::min(seq.size(), target_len);
  out.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(keep));
  out.ids.assign(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(std::min(keep, seq.ids.size())));
  out.ids.resize(keep, kUnkId);
  out.mask.assign(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(std::min(keep, seq.mask.size())));
  out.mask.resize(keep, Slot::kReal);
  out.tokens.resize(target_len, std::string(kPadToken));
  out.ids.resize(target_len, kPadId);
  out.mask.resize(target_len, Slot::kPad);
  return out;
}

}  // namespace cssam::corpus
