#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cssam/corpus.hpp"
#include "cssam/error.hpp"

namespace cssam::corpus {
namespace {

using Tokens = std::vector<std::string>;

TEST(LoadPairs, EmptyInputGivesNoRecords) {
  const LoadResult r = parse_pairs("");
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.dropped, 0u);
}

TEST(LoadPairs, OneLineRoundTrips) {
  const LoadResult r = parse_pairs(R"({"id":"x1","code":"int a = 1;","docstring":"set a to one","lang":"java"})");
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].id, "x1");
  EXPECT_EQ(r.pairs[0].code, "int a = 1;");
  EXPECT_EQ(r.pairs[0].docstring, "set a to one");
  EXPECT_EQ(r.pairs[0].lang, "java");
}

TEST(LoadPairs, ShortDocstringIsDropped) {
  const LoadResult r = parse_pairs(R"({"code":"int a = 1;","docstring":"ok","lang":"java"})");
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.dropped, 1u);
}

TEST(LoadPairs, MissingIdDefaultsToLineNumber) {
  const LoadResult r = parse_pairs(
      "{\"code\":\"a = 1\",\"docstring\":\"one two three\",\"lang\":\"toy\"}\n"
      "{\"code\":\"b = 2\",\"docstring\":\"four five six\",\"lang\":\"toy\"}\n");
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[1].id, "2");
}

TEST(LoadPairs, MalformedLineReportsPosition) {
  try {
    parse_pairs("{\"code\":\"a\",\"docstring\":\"one two three\",\"lang\":\"toy\"}\n{broken");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadPairs, MissingFileIsAnIoError) {
  EXPECT_THROW(load_pairs("/nonexistent/corpus.jsonl"), IoError);
}

TEST(LoadPairs, SaveThenLoadIsIdentity) {
  const auto path = std::filesystem::temp_directory_path() / "cssam_corpus_roundtrip.jsonl";
  const std::vector<CodeDocPair> pairs = {{"p1", "x = 1", "assign one to x", "toy"},
                                          {"p2", "y = x", "copy x into y", "toy"}};
  save_pairs(path, pairs);
  const LoadResult r = load_pairs(path);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[1].id, "p2");
  EXPECT_EQ(r.pairs[1].docstring, "copy x into y");
  std::filesystem::remove(path);
}

TEST(TokenizeCode, SplitsCamelCase) { EXPECT_EQ(code_tokens("getFileName"), (Tokens{"get", "file", "name"})); }

TEST(TokenizeCode, KeepsSymbols) {
  EXPECT_EQ(code_tokens("x = a + b;"), (Tokens{"x", "=", "a", "+", "b", ";"}));
}

TEST(TokenizeCode, EmptyInput) { EXPECT_TRUE(code_tokens("").empty()); }

TEST(TokenizeCode, AcronymAndDigitBoundaries) {
  EXPECT_EQ(code_tokens("HTTPServer2"), (Tokens{"http", "server", "2"}));
}

TEST(TokenizeCode, UnderscoreIsASymbol) {
  const TokenSequence seq = tokenize_code("max_value");
  EXPECT_EQ(seq.tokens, (Tokens{"max", "_", "value"}));
  EXPECT_EQ(seq.real_length(), 3u);
}

TEST(TokenizeQuery, WhitespaceSplit) {
  EXPECT_EQ(query_tokens("Save string into the file"), (Tokens{"save", "string", "into", "the", "file"}));
}

TEST(TokenizeQuery, PunctuationSplits) {
  EXPECT_EQ(query_tokens("converts hex-string"), (Tokens{"converts", "hex", "string"}));
}

TEST(TokenizeQuery, EmptyInput) { EXPECT_TRUE(query_tokens("").empty()); }

TEST(VocabTest, MinCountFilters) {
  const Vocab v = Vocab::from_counts({{"a", 2}, {"b", 1}}, 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("b"), kUnkId);
}

TEST(VocabTest, MinCountOneKeepsEverything) {
  const Vocab v = Vocab::from_counts({{"a", 2}, {"b", 1}}, 1);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("b"));
  EXPECT_EQ(v.size(), 4u);
}

TEST(VocabTest, ReservedEntriesFirst) {
  const Vocab v = Vocab::from_counts({{"z", 1}}, 1);
  EXPECT_EQ(v.token(kPadId), kPadToken);
  EXPECT_EQ(v.token(kUnkId), kUnkToken);
}

TEST(VocabTest, EqualFrequencyTieBreaksLexicographically) {
  const Vocab v = Vocab::from_counts({{"beta", 3}, {"alpha", 3}, {"gamma", 5}}, 1);
  EXPECT_LT(v.id("gamma"), v.id("alpha"));
  EXPECT_LT(v.id("alpha"), v.id("beta"));
}

TEST(VocabTest, JsonRoundTrip) {
  const Vocab v = Vocab::from_counts({{"a", 3}, {"b", 2}, {"c", 2}}, 1);
  const Vocab back = Vocab::from_json(v.to_json());
  EXPECT_EQ(back.tokens(), v.tokens());
}

TEST(VocabTest, BuildFromPairs) {
  const auto [code, query] = build_vocab({{"1", "getName()", "get the name", "java"}}, 1);
  EXPECT_TRUE(code.contains("get"));
  EXPECT_TRUE(code.contains("("));
  EXPECT_TRUE(query.contains("the"));
  EXPECT_FALSE(query.contains("("));
}

TEST(PadOrTruncate, PadsToTarget) {
  TokenSequence seq;
  seq.tokens = {"a", "b"};
  seq.ids = {5, 6};
  seq.mask = {Slot::kReal, Slot::kReal};
  const TokenSequence out = pad_or_truncate(seq, 4);
  EXPECT_EQ(out.tokens, (Tokens{"a", "b", std::string(kPadToken), std::string(kPadToken)}));
  EXPECT_EQ(out.mask, (std::vector<Slot>{Slot::kReal, Slot::kReal, Slot::kPad, Slot::kPad}));
  EXPECT_EQ(out.ids[2], kPadId);
}

TEST(PadOrTruncate, TruncatesToPrefix) {
  TokenSequence seq = tokenize_query("a b c");
  EXPECT_EQ(pad_or_truncate(seq, 2).tokens, (Tokens{"a", "b"}));
}

TEST(PadOrTruncate, EmptyBecomesAllPad) {
  const TokenSequence out = pad_or_truncate(TokenSequence{}, 2);
  EXPECT_EQ(out.tokens, (Tokens{std::string(kPadToken), std::string(kPadToken)}));
  EXPECT_EQ(out.real_length(), 0u);
}

}  // namespace
}  // namespace cssam::corpus
