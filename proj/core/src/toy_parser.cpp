// Toy language used by hermetic tests:
//
//   program    := statement*
//   statement  := NAME '=' expr [';'] | 'return' expr [';'] | expr [';']
//   expr       := term (('+' | '-') term)*
//   term       := factor (('*' | '/') factor)*
//   factor     := NUMBER | NAME | NAME '(' [expr (',' expr)*] ')' | '(' expr ')' | '-' factor

#include <algorithm>
#include <cctype>

#include "cssam/error.hpp"
#include "parse_tree.hpp"

namespace cssam::graph::detail {
namespace {

struct ToyToken {
  enum Kind { kName, kNumber, kSymbol, kEof } kind;
  std::string text;
  std::size_t begin;
  std::size_t end;
};

class ToyParser {
 public:
  explicit ToyParser(std::string_view src) : src_(src) { lex(); }

  ParseNode parse_program() {
    ParseNode program = ParseNode::make_inner("program");
    while (peek().kind != ToyToken::kEof) program.add(parse_statement());
    return program;
  }

 private:
  void lex() {
    std::size_t i = 0;
    while (i < src_.size()) {
      const auto c = static_cast<unsigned char>(src_[i]);
      const std::size_t start = i;
      if (std::isspace(c)) {
        ++i;
      } else if (std::isalpha(c) || c == '_') {
        while (i < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_')) ++i;
        toks_.push_back({ToyToken::kName, std::string(src_.substr(start, i - start)), start, i});
      } else if (std::isdigit(c)) {
        while (i < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[i])) || src_[i] == '.')) ++i;
        toks_.push_back({ToyToken::kNumber, std::string(src_.substr(start, i - start)), start, i});
      } else if (std::string_view("=+-*/();,").find(static_cast<char>(c)) != std::string_view::npos) {
        toks_.push_back({ToyToken::kSymbol, std::string(1, static_cast<char>(c)), start, start + 1});
        ++i;
      } else {
        auto [line, col] = line_col(src_, i);
        throw ParseError("toy: unexpected character", line, col);
      }
    }
    toks_.push_back({ToyToken::kEof, "", src_.size(), src_.size()});
  }

  const ToyToken& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == ToyToken::kSymbol && peek(ahead).text == s;
  }
  [[noreturn]] void error(const std::string& what) const {
    auto [line, col] = line_col(src_, peek().begin);
    throw ParseError("toy: " + what, line, col);
  }
  ParseNode take(std::string_view kind) {
    const ToyToken& t = toks_[pos_++];
    return ParseNode::make_leaf(kind, t.text, t.begin, t.end);
  }
  ParseNode expect(std::string_view sym, std::string_view kind) {
    if (!is_sym(sym)) error("expected '" + std::string(sym) + "'");
    return take(kind);
  }

  ParseNode parse_statement() {
    ParseNode stmt = ParseNode::make_inner("expression_statement");
    if (peek().kind == ToyToken::kName && is_sym("=", 1)) {
      stmt = ParseNode::make_inner("assignment");
      stmt.add(take(leaf_kind::kDefinedName));
      stmt.add(take(leaf_kind::kOperator));
      stmt.add(parse_expr());
    } else if (peek().kind == ToyToken::kName && peek().text == "return") {
      stmt = ParseNode::make_inner("return_statement");
      stmt.add(take(leaf_kind::kKeyword));
      stmt.add(parse_expr());
    } else {
      stmt.add(parse_expr());
    }
    if (is_sym(";")) stmt.add(take(leaf_kind::kPunctuation));
    return stmt;
  }

  ParseNode parse_expr() {
    ParseNode lhs = parse_term();
    while (is_sym("+") || is_sym("-")) {
      ParseNode bin = ParseNode::make_inner("binary_expression");
      bin.add(std::move(lhs));
      bin.add(take(leaf_kind::kOperator));
      bin.add(parse_term());
      lhs = std::move(bin);
    }
    return lhs;
  }

  ParseNode parse_term() {
    ParseNode lhs = parse_factor();
    while (is_sym("*") || is_sym("/")) {
      ParseNode bin = ParseNode::make_inner("binary_expression");
      bin.add(std::move(lhs));
      bin.add(take(leaf_kind::kOperator));
      bin.add(parse_factor());
      lhs = std::move(bin);
    }
    return lhs;
  }

  ParseNode parse_factor() {
    if (++depth_ > 400) error("nesting too deep");
    struct Exit {
      int& d;
      ~Exit() { --d; }
    } exit{depth_};
    const ToyToken& t = peek();
    if (t.kind == ToyToken::kNumber) return take(leaf_kind::kNumber);
    if (t.kind == ToyToken::kName) {
      if (!is_sym("(", 1)) return take(leaf_kind::kIdentifier);
      ParseNode call = ParseNode::make_inner("call_expression");
      call.add(take(leaf_kind::kMethodName));
      ParseNode args = ParseNode::make_inner("argument_list");
      args.add(take(leaf_kind::kPunctuation));
      if (!is_sym(")")) {
        args.add(parse_expr());
        while (is_sym(",")) {
          args.add(take(leaf_kind::kPunctuation));
          args.add(parse_expr());
        }
      }
      args.add(expect(")", leaf_kind::kPunctuation));
      call.add(std::move(args));
      return call;
    }
    if (is_sym("(")) {
      ParseNode paren = ParseNode::make_inner("parenthesized_expression");
      paren.add(take(leaf_kind::kPunctuation));
      paren.add(parse_expr());
      paren.add(expect(")", leaf_kind::kPunctuation));
      return paren;
    }
    if (is_sym("-")) {
      ParseNode unary = ParseNode::make_inner("unary_expression");
      unary.add(take(leaf_kind::kOperator));
      unary.add(parse_factor());
      return unary;
    }
    error(t.kind == ToyToken::kEof ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  std::string_view src_;
  std::vector<ToyToken> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

ParseNode parse_toy(std::string_view source) {
  ToyParser parser(source);
  return parser.parse_program();
}

}  // namespace cssam::graph::detail
