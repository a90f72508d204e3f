#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cssam::corpus {

// One training/evaluation record.
struct CodeDocPair {
  std::string id;
  std::string code;
  std::string docstring;
  std::string lang;
};

enum class Slot : std::uint8_t { kPad = 0, kReal = 1 };

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";

// Lowercased tokens with their vocabulary ids and a real/pad mask. Sequences
// fresh out of a tokenizer carry kUnkId until indexed by a Vocab.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<int> ids;
  std::vector<Slot> mask;

  std::size_t size() const { return tokens.size(); }
  std::size_t real_length() const;
  bool operator==(const TokenSequence&) const = default;
};

// Splits source code into lowercase sub-tokens: identifiers are broken at
// camel-case and letter/digit boundaries; every non-space symbol is kept as a
// single-character token.
TokenSequence tokenize_code(std::string_view source);

// Natural-language tokenizer: lowercase, split on whitespace and punctuation,
// punctuation discarded.
TokenSequence tokenize_query(std::string_view text);

// Same as tokenize_*().tokens, without the sequence bookkeeping.
std::vector<std::string> code_tokens(std::string_view source);
std::vector<std::string> query_tokens(std::string_view text);

class Vocab {
 public:
  Vocab();

  // Index assignment is (frequency desc, token asc); tokens below min_count
  // are left out and map to <UNK>.
  static Vocab from_counts(const std::unordered_map<std::string, std::size_t>& counts,
                           std::size_t min_count);
  // Tokens in index order; the first two entries must be <PAD>, <UNK>.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t min_count() const { return min_count_; }

  // Fills seq.ids from seq.tokens; pad slots keep kPadId.
  void index(TokenSequence& seq) const;
  std::vector<int> ids(const std::vector<std::string>& tokens) const;

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t min_count_ = 1;
};

struct LoadResult {
  std::vector<CodeDocPair> pairs;
  std::size_t dropped = 0;
};

// Docstrings need more than two words to survive ingestion.
inline constexpr std::size_t kDefaultMinDocTokens = 3;

// Reads a JSON-lines corpus: {"id"?: str, "code": str, "docstring": str,
// "lang": str}. Records with empty code or fewer than min_doc_tokens
// docstring tokens are dropped and counted. Missing ids default to the
// 1-based line number.
LoadResult load_pairs(const std::filesystem::path& path,
                      std::size_t min_doc_tokens = kDefaultMinDocTokens);
LoadResult parse_pairs(std::string_view jsonl,
                       std::size_t min_doc_tokens = kDefaultMinDocTokens);

void save_pairs(const std::filesystem::path& path,
                const std::vector<CodeDocPair>& pairs);

// Returns (code vocab, query vocab).
std::pair<Vocab, Vocab> build_vocab(const std::vector<CodeDocPair>& pairs,
                                    std::size_t min_count);

TokenSequence pad_or_truncate(const TokenSequence& seq, std::size_t target_len);

}  // namespace cssam::corpus
