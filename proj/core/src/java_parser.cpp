// Recursive-descent parser for the Java subset found in method-level code
// search corpora: type and member declarations, the full statement set minus
// modules and records, and the complete expression grammar including lambdas,
// method references and generic types.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <optional>
#include <unordered_set>

#include "cssam/error.hpp"
#include "parse_tree.hpp"

namespace cssam::graph::detail {
namespace {

enum class TokKind { kIdent, kKeyword, kNumber, kString, kChar, kBoolean, kNull, kOp, kEof };

struct Token {
  TokKind kind;
  std::string text;
  std::size_t begin;
  std::size_t end;
};

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "abstract", "assert",     "boolean",   "break",      "byte",      "case",
      "catch",    "char",       "class",     "const",      "continue",  "default",
      "do",       "double",     "else",      "enum",       "extends",   "final",
      "finally",  "float",      "for",       "goto",       "if",        "implements",
      "import",   "instanceof", "int",       "interface",  "long",      "native",
      "new",      "package",    "private",   "protected",  "public",    "return",
      "short",    "static",     "strictfp",  "super",      "switch",    "synchronized",
      "this",     "throw",      "throws",    "transient",  "try",       "void",
      "volatile", "while"};
  return kw;
}

bool is_primitive(std::string_view s) {
  return s == "boolean" || s == "byte" || s == "char" || s == "short" || s == "int" ||
         s == "long" || s == "float" || s == "double";
}

bool is_modifier(std::string_view s) {
  return s == "public" || s == "private" || s == "protected" || s == "static" ||
         s == "final" || s == "abstract" || s == "native" || s == "synchronized" ||
         s == "transient" || s == "volatile" || s == "strictfp" || s == "default";
}

bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}
bool ident_part(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(unsigned char c) { return c >= '0' && c <= '9'; }

// '>' is always lexed alone; the expression parser glues adjacent ones into
// shift and comparison operators so that nested generics close cleanly.
constexpr std::array<std::string_view, 25> kOperators = {
    ">>>=", "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=",
    "-=",   "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", "=",  "<",  "!",  "~"};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const char* what, std::size_t at) {
    auto [line, col] = line_col(src, at);
    throw ParseError(std::string("java lexer: ") + what, line, col);
  };
  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (src.compare(i, 2, "//") == 0) {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (src.compare(i, 2, "/*") == 0) {
      const std::size_t close = src.find("*/", i + 2);
      if (close == std::string_view::npos) fail("unterminated comment", i);
      i = close + 2;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < src.size() && ident_part(static_cast<unsigned char>(src[i]))) ++i;
      std::string text(src.substr(start, i - start));
      TokKind kind = TokKind::kIdent;
      if (text == "true" || text == "false") {
        kind = TokKind::kBoolean;
      } else if (text == "null") {
        kind = TokKind::kNull;
      } else if (keywords().count(text)) {
        kind = TokKind::kKeyword;
      }
      out.push_back({kind, std::move(text), start, i});
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < src.size() && digit(static_cast<unsigned char>(src[i + 1])))) {
      if (c == '0' && i + 1 < src.size() && (src[i + 1] == 'x' || src[i + 1] == 'X' ||
                                             src[i + 1] == 'b' || src[i + 1] == 'B')) {
        i += 2;
        while (i < src.size() && (std::isxdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      } else {
        while (i < src.size() && (digit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
        if (i < src.size() && src[i] == '.' && !(i + 1 < src.size() && src[i + 1] == '.')) {
          ++i;
          while (i < src.size() && (digit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
        }
        if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
          ++i;
          if (i < src.size() && (src[i] == '+' || src[i] == '-')) ++i;
          while (i < src.size() && digit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      if (i < src.size() && std::strchr("lLfFdD", src[i]) != nullptr && src[i] != '\0') ++i;
      out.push_back({TokKind::kNumber, std::string(src.substr(start, i - start)), start, i});
      continue;
    }
    if (c == '"') {
      if (src.compare(i, 3, "\"\"\"") == 0) {
        const std::size_t close = src.find("\"\"\"", i + 3);
        if (close == std::string_view::npos) fail("unterminated text block", i);
        i = close + 3;
      } else {
        ++i;
        while (i < src.size() && src[i] != '"') {
          if (src[i] == '\n') fail("unterminated string literal", start);
          i += src[i] == '\\' ? 2 : 1;
        }
        if (i >= src.size()) fail("unterminated string literal", start);
        ++i;
      }
      out.push_back({TokKind::kString, std::string(src.substr(start, i - start)), start, i});
      continue;
    }
    if (c == '\'') {
      ++i;
      while (i < src.size() && src[i] != '\'') {
        if (src[i] == '\n') fail("unterminated char literal", start);
        i += src[i] == '\\' ? 2 : 1;
      }
      if (i >= src.size()) fail("unterminated char literal", start);
      ++i;
      out.push_back({TokKind::kChar, std::string(src.substr(start, i - start)), start, i});
      continue;
    }
    bool matched = false;
    for (std::string_view op : kOperators) {
      if (src.compare(i, op.size(), op) == 0) {
        out.push_back({TokKind::kOp, std::string(op), i, i + op.size()});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::strchr("><?:+-*/&|^%@.,;()[]{}", static_cast<char>(c)) != nullptr && c != 0) {
      out.push_back({TokKind::kOp, std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
      continue;
    }
    fail("unexpected character", i);
  }
  out.push_back({TokKind::kEof, "", src.size(), src.size()});
  return out;
}

struct Backtrack {};

class JavaParser {
 public:
  explicit JavaParser(std::string_view src) : src_(src), toks_(lex(src)) {}

  ParseNode parse_program() {
    ParseNode program = ParseNode::make_inner("program");
    while (!at_eof()) {
      if (is_kw("package") || is_kw("import")) {
        program.add(parse_package_or_import());
        continue;
      }
      const std::size_t save = pos_;
      try {
        program.add(parse_member(/*top_level=*/true));
        continue;
      } catch (const Backtrack&) {
        pos_ = save;
      }
      program.add(parse_statement());
    }
    return program;
  }

 private:
  // -- token helpers ------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_eof() const { return peek().kind == TokKind::kEof; }
  bool is_op(std::string_view op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokKind::kOp && t.text == op;
  }
  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokKind::kKeyword && t.text == kw;
  }
  bool is_ident(std::size_t ahead = 0) const { return peek(ahead).kind == TokKind::kIdent; }
  bool joined(std::size_t ahead) const { return peek(ahead).end == peek(ahead + 1).begin; }

  [[noreturn]] void error(const std::string& what) const {
    auto [line, col] = line_col(src_, peek().begin);
    std::string near = at_eof() ? "end of input" : "'" + peek().text + "'";
    throw ParseError("java: " + what + " near " + near, line, col);
  }

  ParseNode take(std::string_view kind) {
    const Token& t = toks_[pos_];
    ++pos_;
    return ParseNode::make_leaf(kind, t.text, t.begin, t.end);
  }
  ParseNode take_token() {
    switch (peek().kind) {
      case TokKind::kIdent: return take(leaf_kind::kIdentifier);
      case TokKind::kKeyword: return take(leaf_kind::kKeyword);
      case TokKind::kNumber: return take(leaf_kind::kNumber);
      case TokKind::kString: return take(leaf_kind::kString);
      case TokKind::kChar: return take(leaf_kind::kChar);
      case TokKind::kBoolean: return take(leaf_kind::kBoolean);
      case TokKind::kNull: return take(leaf_kind::kNull);
      case TokKind::kOp: return take(is_punct(peek().text) ? leaf_kind::kPunctuation : leaf_kind::kOperator);
      case TokKind::kEof: break;
    }
    error("unexpected end of input");
  }
  static bool is_punct(std::string_view t) {
    return t == "(" || t == ")" || t == "[" || t == "]" || t == "{" || t == "}" || t == ";" ||
           t == "," || t == "." || t == "@" || t == "..." || t == "::";
  }
  ParseNode expect_op(std::string_view op) {
    if (!is_op(op)) error("expected '" + std::string(op) + "'");
    return take(is_punct(op) ? leaf_kind::kPunctuation : leaf_kind::kOperator);
  }
  ParseNode expect_kw(std::string_view kw) {
    if (!is_kw(kw)) error("expected '" + std::string(kw) + "'");
    return take(leaf_kind::kKeyword);
  }
  ParseNode expect_ident(std::string_view kind) {
    if (!is_ident()) error("expected identifier");
    return take(kind);
  }

  struct DepthGuard {
    explicit DepthGuard(JavaParser& p) : p(p) {
      if (++p.depth_ > 400) p.error("nesting too deep");
    }
    ~DepthGuard() { --p.depth_; }
    JavaParser& p;
  };

  // -- declarations ---------------------------------------------------------
  ParseNode parse_package_or_import() {
    ParseNode n = ParseNode::make_inner(is_kw("package") ? "package_declaration" : "import_declaration");
    n.add(take(leaf_kind::kKeyword));
    if (is_kw("static")) n.add(take(leaf_kind::kKeyword));
    n.add(expect_ident(leaf_kind::kIdentifier));
    while (is_op(".")) {
      n.add(take(leaf_kind::kPunctuation));
      if (is_op("*")) {
        n.add(take(leaf_kind::kOperator));
        break;
      }
      n.add(expect_ident(leaf_kind::kIdentifier));
    }
    n.add(expect_op(";"));
    return n;
  }

  bool at_annotation() const { return is_op("@") && !is_kw("interface", 1); }

  ParseNode parse_annotation() {
    ParseNode n = ParseNode::make_inner("annotation");
    n.add(expect_op("@"));
    n.add(expect_ident(leaf_kind::kTypeIdentifier));
    while (is_op(".") && is_ident(1)) {
      n.add(take(leaf_kind::kPunctuation));
      n.add(take(leaf_kind::kTypeIdentifier));
    }
    if (is_op("(")) {
      // Element values are kept as flat leaves: they never carry data flow.
      ParseNode args = ParseNode::make_inner("annotation_argument_list");
      int depth = 0;
      do {
        if (is_op("(")) ++depth;
        if (is_op(")")) --depth;
        if (at_eof()) error("unterminated annotation");
        args.add(take_token());
      } while (depth > 0);
      n.add(std::move(args));
    }
    return n;
  }

  std::optional<ParseNode> parse_modifiers() {
    ParseNode mods = ParseNode::make_inner("modifiers");
    while (true) {
      if (at_annotation()) {
        mods.add(parse_annotation());
      } else if (peek().kind == TokKind::kKeyword && is_modifier(peek().text)) {
        mods.add(take(leaf_kind::kKeyword));
      } else {
        break;
      }
    }
    if (mods.children.empty()) return std::nullopt;
    return mods;
  }

  ParseNode parse_type_parameters() {
    ParseNode n = ParseNode::make_inner("type_parameters");
    n.add(expect_op("<"));
    while (true) {
      ParseNode p = ParseNode::make_inner("type_parameter");
      while (at_annotation()) p.add(parse_annotation());
      p.add(expect_ident(leaf_kind::kTypeIdentifier));
      if (is_kw("extends")) {
        p.add(take(leaf_kind::kKeyword));
        p.add(parse_type());
        while (is_op("&")) {
          p.add(take(leaf_kind::kOperator));
          p.add(parse_type());
        }
      }
      n.add(std::move(p));
      if (!is_op(",")) break;
      n.add(take(leaf_kind::kPunctuation));
    }
    n.add(expect_op(">"));
    return n;
  }

  bool at_type_decl() const {
    return is_kw("class") || is_kw("interface") || is_kw("enum") ||
           (is_op("@") && is_kw("interface", 1)) ||
           (is_ident() && peek().text == "record" && is_ident(1) && is_op("(", 2));
  }

  // Member of a class body, or a top-level declaration. Throws Backtrack if
  // the tokens do not start a declaration.
  ParseNode parse_member(bool top_level) {
    const std::size_t start = pos_;
    auto mods = parse_modifiers();
    if (at_type_decl()) return parse_type_declaration(std::move(mods));
    if (is_op("{") && !top_level) {
      ParseNode init = ParseNode::make_inner("initializer");
      if (mods) init.add(std::move(*mods));
      init.add(parse_block());
      return init;
    }
    std::optional<ParseNode> type_params;
    if (is_op("<")) type_params = parse_type_parameters();

    // Constructor: Name '(' ... ')' followed by a body or throws clause.
    if (is_ident() && is_op("(", 1) && (!top_level || looks_like_constructor())) {
      ParseNode ctor = ParseNode::make_inner("constructor_declaration");
      if (mods) ctor.add(std::move(*mods));
      if (type_params) ctor.add(std::move(*type_params));
      ctor.add(take(leaf_kind::kMethodName));
      ctor.add(parse_formal_parameters());
      if (is_kw("throws")) ctor.add(parse_throws());
      ctor.add(parse_block());
      return ctor;
    }

    std::optional<ParseNode> result_type;
    if (is_kw("void")) {
      result_type = take(leaf_kind::kKeyword);
    } else {
      const std::size_t before = pos_;
      try {
        result_type = parse_type();
      } catch (const ParseError&) {
        pos_ = before;
      }
    }
    if (!result_type || !is_ident()) {
      pos_ = start;
      throw Backtrack{};
    }
    if (is_op("(", 1)) {
      ParseNode m = ParseNode::make_inner("method_declaration");
      if (mods) m.add(std::move(*mods));
      if (type_params) m.add(std::move(*type_params));
      m.add(std::move(*result_type));
      m.add(take(leaf_kind::kMethodName));
      m.add(parse_formal_parameters());
      while (is_op("[")) m.add(parse_dims());
      if (is_kw("throws")) m.add(parse_throws());
      if (is_kw("default")) {
        m.add(take(leaf_kind::kKeyword));
        m.add(parse_expression());
      }
      if (is_op(";")) {
        m.add(take(leaf_kind::kPunctuation));
      } else {
        m.add(parse_block());
      }
      return m;
    }
    // Bare top-level declarations are parsed as local variables instead.
    if (type_params || (top_level && !mods) ||
        !(is_op("=", 1) || is_op(";", 1) || is_op(",", 1) || is_op("[", 1))) {
      pos_ = start;
      throw Backtrack{};
    }
    ParseNode field = ParseNode::make_inner("field_declaration");
    if (mods) field.add(std::move(*mods));
    field.add(std::move(*result_type));
    parse_declarators(field);
    field.add(expect_op(";"));
    return field;
  }

  bool looks_like_constructor() const {
    std::size_t depth = 0;
    for (std::size_t k = 1;; ++k) {
      const Token& t = peek(k);
      if (t.kind == TokKind::kEof) return false;
      if (t.kind == TokKind::kOp && t.text == "(") ++depth;
      if (t.kind == TokKind::kOp && t.text == ")" && --depth == 0) {
        return is_op("{", k + 1) || is_kw("throws", k + 1);
      }
    }
  }

  ParseNode parse_type_declaration(std::optional<ParseNode> mods) {
    std::string_view kind = "class_declaration";
    if (is_kw("interface")) kind = "interface_declaration";
    if (is_kw("enum")) kind = "enum_declaration";
    if (is_op("@")) kind = "annotation_type_declaration";
    if (is_ident() && peek().text == "record") kind = "record_declaration";
    ParseNode decl = ParseNode::make_inner(kind);
    if (mods) decl.add(std::move(*mods));
    if (is_op("@")) decl.add(take(leaf_kind::kPunctuation));
    decl.add(take(is_ident() ? leaf_kind::kIdentifier : leaf_kind::kKeyword));
    decl.add(expect_ident(leaf_kind::kTypeIdentifier));
    if (is_op("<")) decl.add(parse_type_parameters());
    if (kind == "record_declaration") decl.add(parse_formal_parameters());
    while (is_kw("extends") || is_kw("implements")) {
      ParseNode clause = ParseNode::make_inner(is_kw("extends") ? "superclass" : "super_interfaces");
      clause.add(take(leaf_kind::kKeyword));
      clause.add(parse_type());
      while (is_op(",")) {
        clause.add(take(leaf_kind::kPunctuation));
        clause.add(parse_type());
      }
      decl.add(std::move(clause));
    }
    decl.add(kind == "enum_declaration" ? parse_enum_body() : parse_class_body());
    return decl;
  }

  ParseNode parse_class_body() {
    DepthGuard guard(*this);
    ParseNode body = ParseNode::make_inner("class_body");
    body.add(expect_op("{"));
    while (!is_op("}")) {
      if (at_eof()) error("unterminated class body");
      if (is_op(";")) {
        body.add(take(leaf_kind::kPunctuation));
        continue;
      }
      try {
        body.add(parse_member(/*top_level=*/false));
      } catch (const Backtrack&) {
        error("expected member declaration");
      }
    }
    body.add(expect_op("}"));
    return body;
  }

  ParseNode parse_enum_body() {
    ParseNode body = ParseNode::make_inner("enum_body");
    body.add(expect_op("{"));
    while (is_ident() || at_annotation()) {
      ParseNode c = ParseNode::make_inner("enum_constant");
      while (at_annotation()) c.add(parse_annotation());
      c.add(take(leaf_kind::kIdentifier));
      if (is_op("(")) c.add(parse_arguments());
      if (is_op("{")) c.add(parse_class_body());
      body.add(std::move(c));
      if (!is_op(",")) break;
      body.add(take(leaf_kind::kPunctuation));
    }
    if (is_op(";")) {
      body.add(take(leaf_kind::kPunctuation));
      while (!is_op("}")) {
        if (at_eof()) error("unterminated enum body");
        if (is_op(";")) {
          body.add(take(leaf_kind::kPunctuation));
          continue;
        }
        try {
          body.add(parse_member(false));
        } catch (const Backtrack&) {
          error("expected member declaration");
        }
      }
    }
    body.add(expect_op("}"));
    return body;
  }

  ParseNode parse_formal_parameters() {
    ParseNode n = ParseNode::make_inner("formal_parameters");
    n.add(expect_op("("));
    if (!is_op(")")) {
      while (true) {
        n.add(parse_formal_parameter());
        if (!is_op(",")) break;
        n.add(take(leaf_kind::kPunctuation));
      }
    }
    n.add(expect_op(")"));
    return n;
  }

  ParseNode parse_formal_parameter() {
    ParseNode p = ParseNode::make_inner("formal_parameter");
    if (auto mods = parse_modifiers()) p.add(std::move(*mods));
    p.add(parse_type());
    if (is_op("...")) p.add(take(leaf_kind::kPunctuation));
    if (is_kw("this")) {
      p.add(take(leaf_kind::kKeyword));
      return p;
    }
    p.add(expect_ident(leaf_kind::kDefinedName));
    while (is_op("[")) p.add(parse_dims());
    return p;
  }

  ParseNode parse_throws() {
    ParseNode n = ParseNode::make_inner("throws");
    n.add(expect_kw("throws"));
    n.add(parse_type());
    while (is_op(",")) {
      n.add(take(leaf_kind::kPunctuation));
      n.add(parse_type());
    }
    return n;
  }

  ParseNode parse_dims() {
    ParseNode d = ParseNode::make_inner("dimensions");
    while (is_op("[") && is_op("]", 1)) {
      d.add(take(leaf_kind::kPunctuation));
      d.add(take(leaf_kind::kPunctuation));
    }
    if (d.children.empty()) error("expected '[]'");
    return d;
  }

  // -- types ---------------------------------------------------------------
  ParseNode parse_type() {
    DepthGuard guard(*this);
    std::optional<ParseNode> base;
    while (at_annotation()) parse_annotation();  // type annotations are dropped
    if (peek().kind == TokKind::kKeyword && is_primitive(peek().text)) {
      base = take("primitive_type");
    } else if (is_ident()) {
      base = parse_class_type();
    } else {
      error("expected type");
    }
    if (is_op("[") && is_op("]", 1)) {
      ParseNode arr = ParseNode::make_inner("array_type");
      arr.add(std::move(*base));
      arr.add(parse_dims());
      return arr;
    }
    return std::move(*base);
  }

  ParseNode parse_class_type() {
    ParseNode segment = parse_type_segment();
    if (!is_op(".") || !is_ident(1)) return segment;
    ParseNode scoped = ParseNode::make_inner("scoped_type_identifier");
    scoped.add(std::move(segment));
    while (is_op(".") && is_ident(1)) {
      scoped.add(take(leaf_kind::kPunctuation));
      scoped.add(parse_type_segment());
    }
    return scoped;
  }

  ParseNode parse_type_segment() {
    ParseNode name = expect_ident(leaf_kind::kTypeIdentifier);
    if (!is_op("<")) return name;
    ParseNode generic = ParseNode::make_inner("generic_type");
    generic.add(std::move(name));
    generic.add(parse_type_arguments());
    return generic;
  }

  ParseNode parse_type_arguments() {
    ParseNode args = ParseNode::make_inner("type_arguments");
    args.add(expect_op("<"));
    if (!is_op(">")) {
      while (true) {
        if (is_op("?")) {
          ParseNode w = ParseNode::make_inner("wildcard");
          w.add(take(leaf_kind::kOperator));
          if (is_kw("extends") || is_kw("super")) {
            w.add(take(leaf_kind::kKeyword));
            w.add(parse_type());
          }
          args.add(std::move(w));
        } else {
          args.add(parse_type());
        }
        if (!is_op(",")) break;
        args.add(take(leaf_kind::kPunctuation));
      }
    }
    args.add(expect_op(">"));
    return args;
  }

  // -- statements ------------------------------------------------------------
  ParseNode parse_block() {
    DepthGuard guard(*this);
    ParseNode block = ParseNode::make_inner("block");
    block.add(expect_op("{"));
    while (!is_op("}")) {
      if (at_eof()) error("unterminated block");
      block.add(parse_statement());
    }
    block.add(expect_op("}"));
    return block;
  }

  ParseNode wrap(std::string_view kind, ParseNode child) {
    ParseNode n = ParseNode::make_inner(kind);
    n.add(std::move(child));
    return n;
  }

  ParseNode parse_statement() {
    DepthGuard guard(*this);
    if (is_op("{")) return parse_block();
    if (is_op(";")) return wrap("empty_statement", take(leaf_kind::kPunctuation));
    if (peek().kind == TokKind::kKeyword) {
      const std::string& kw = peek().text;
      if (kw == "if") return parse_if();
      if (kw == "while") return parse_while();
      if (kw == "do") return parse_do();
      if (kw == "for") return parse_for();
      if (kw == "return" || kw == "throw") {
        ParseNode n = ParseNode::make_inner(kw == "return" ? "return_statement" : "throw_statement");
        n.add(take(leaf_kind::kKeyword));
        if (!is_op(";")) n.add(parse_expression());
        n.add(expect_op(";"));
        return n;
      }
      if (kw == "break" || kw == "continue") {
        ParseNode n = ParseNode::make_inner(kw == "break" ? "break_statement" : "continue_statement");
        n.add(take(leaf_kind::kKeyword));
        if (is_ident()) n.add(take(leaf_kind::kIdentifier));
        n.add(expect_op(";"));
        return n;
      }
      if (kw == "try") return parse_try();
      if (kw == "switch") return parse_switch();
      if (kw == "synchronized" && is_op("(", 1)) {
        ParseNode n = ParseNode::make_inner("synchronized_statement");
        n.add(take(leaf_kind::kKeyword));
        n.add(parse_parenthesized());
        n.add(parse_block());
        return n;
      }
      if (kw == "assert") {
        ParseNode n = ParseNode::make_inner("assert_statement");
        n.add(take(leaf_kind::kKeyword));
        n.add(parse_expression());
        if (is_op(":")) {
          n.add(take(leaf_kind::kOperator));
          n.add(parse_expression());
        }
        n.add(expect_op(";"));
        return n;
      }
      if (kw == "class" || kw == "interface" || kw == "enum" ||
          ((kw == "abstract" || kw == "final" || kw == "static") &&
           (is_kw("class", 1) || is_kw("interface", 1)))) {
        auto mods = parse_modifiers();
        return parse_type_declaration(std::move(mods));
      }
    }
    if (is_ident() && peek().text == "yield" && !is_op("=", 1) && !is_op("(", 1) && !is_op(".", 1)) {
      ParseNode n = ParseNode::make_inner("yield_statement");
      n.add(take(leaf_kind::kKeyword));
      n.add(parse_expression());
      n.add(expect_op(";"));
      return n;
    }
    if (is_ident() && is_op(":", 1)) {
      ParseNode n = ParseNode::make_inner("labeled_statement");
      n.add(take(leaf_kind::kIdentifier));
      n.add(take(leaf_kind::kOperator));
      n.add(parse_statement());
      return n;
    }
    if (auto decl = try_local_declaration()) {
      decl->add(expect_op(";"));
      return std::move(*decl);
    }
    ParseNode stmt = ParseNode::make_inner("expression_statement");
    stmt.add(parse_expression());
    stmt.add(expect_op(";"));
    return stmt;
  }

  // `[modifiers] Type name ...` without the trailing ';'. Returns nullopt and
  // restores the position when the tokens are not a declaration.
  std::optional<ParseNode> try_local_declaration() {
    const std::size_t save = pos_;
    const bool starts_like_decl =
        is_ident() || at_annotation() || is_kw("final") ||
        (peek().kind == TokKind::kKeyword && is_primitive(peek().text));
    if (!starts_like_decl) return std::nullopt;
    try {
      ParseNode decl = ParseNode::make_inner("local_variable_declaration");
      if (auto mods = parse_modifiers()) decl.add(std::move(*mods));
      decl.add(parse_type());
      if (!is_ident() ||
          !(is_op("=", 1) || is_op(";", 1) || is_op(",", 1) || is_op("[", 1) || is_op(":", 1))) {
        pos_ = save;
        return std::nullopt;
      }
      if (is_op(":", 1)) {
        // Only valid inside an enhanced for header; let the caller decide.
        pos_ = save;
        return std::nullopt;
      }
      parse_declarators(decl);
      return decl;
    } catch (const ParseError&) {
      pos_ = save;
      return std::nullopt;
    }
  }

  void parse_declarators(ParseNode& parent) {
    while (true) {
      ParseNode d = ParseNode::make_inner("variable_declarator");
      d.add(expect_ident(leaf_kind::kDefinedName));
      while (is_op("[")) d.add(parse_dims());
      if (is_op("=")) {
        d.add(take(leaf_kind::kOperator));
        d.add(is_op("{") ? parse_array_initializer() : parse_expression());
      }
      parent.add(std::move(d));
      if (!is_op(",")) break;
      parent.add(take(leaf_kind::kPunctuation));
    }
  }

  ParseNode parse_parenthesized() {
    ParseNode n = ParseNode::make_inner("parenthesized_expression");
    n.add(expect_op("("));
    n.add(parse_expression());
    n.add(expect_op(")"));
    return n;
  }

  ParseNode parse_if() {
    ParseNode n = ParseNode::make_inner("if_statement");
    n.add(take(leaf_kind::kKeyword));
    n.add(parse_parenthesized());
    n.add(parse_statement());
    if (is_kw("else")) {
      n.add(take(leaf_kind::kKeyword));
      n.add(parse_statement());
    }
    return n;
  }

  ParseNode parse_while() {
    ParseNode n = ParseNode::make_inner("while_statement");
    n.add(take(leaf_kind::kKeyword));
    n.add(parse_parenthesized());
    n.add(parse_statement());
    return n;
  }

  ParseNode parse_do() {
    ParseNode n = ParseNode::make_inner("do_statement");
    n.add(take(leaf_kind::kKeyword));
    n.add(parse_statement());
    n.add(expect_kw("while"));
    n.add(parse_parenthesized());
    n.add(expect_op(";"));
    return n;
  }

  ParseNode parse_for() {
    const std::size_t save = pos_;
    // Enhanced for: for ( [mods] Type name : expr ) stmt
    {
      ParseNode n = ParseNode::make_inner("enhanced_for_statement");
      n.add(take(leaf_kind::kKeyword));
      n.add(expect_op("("));
      try {
        if (auto mods = parse_modifiers()) n.add(std::move(*mods));
        ParseNode type = parse_type();
        if (is_ident() && is_op(":", 1)) {
          n.add(std::move(type));
          n.add(take(leaf_kind::kDefinedName));
          n.add(take(leaf_kind::kOperator));
          n.add(parse_expression());
          n.add(expect_op(")"));
          n.add(parse_statement());
          return n;
        }
      } catch (const ParseError&) {
      }
      pos_ = save;
    }
    ParseNode n = ParseNode::make_inner("for_statement");
    n.add(take(leaf_kind::kKeyword));
    n.add(expect_op("("));
    if (!is_op(";")) {
      if (auto decl = try_local_declaration()) {
        n.add(std::move(*decl));
      } else {
        n.add(parse_expression());
        while (is_op(",")) {
          n.add(take(leaf_kind::kPunctuation));
          n.add(parse_expression());
        }
      }
    }
    n.add(expect_op(";"));
    if (!is_op(";")) n.add(parse_expression());
    n.add(expect_op(";"));
    if (!is_op(")")) {
      n.add(parse_expression());
      while (is_op(",")) {
        n.add(take(leaf_kind::kPunctuation));
        n.add(parse_expression());
      }
    }
    n.add(expect_op(")"));
    n.add(parse_statement());
    return n;
  }

  ParseNode parse_try() {
    ParseNode n = ParseNode::make_inner("try_statement");
    n.add(take(leaf_kind::kKeyword));
    if (is_op("(")) {
      n.kind = n.label = "try_with_resources_statement";
      ParseNode res = ParseNode::make_inner("resource_specification");
      res.add(take(leaf_kind::kPunctuation));
      while (!is_op(")")) {
        if (auto decl = try_local_declaration()) {
          ParseNode r = ParseNode::make_inner("resource");
          r.add(std::move(*decl));
          res.add(std::move(r));
        } else {
          res.add(parse_expression());
        }
        if (is_op(";")) {
          res.add(take(leaf_kind::kPunctuation));
        } else {
          break;
        }
      }
      res.add(expect_op(")"));
      n.add(std::move(res));
    }
    n.add(parse_block());
    while (is_kw("catch")) {
      ParseNode c = ParseNode::make_inner("catch_clause");
      c.add(take(leaf_kind::kKeyword));
      c.add(expect_op("("));
      ParseNode param = ParseNode::make_inner("catch_formal_parameter");
      if (auto mods = parse_modifiers()) param.add(std::move(*mods));
      param.add(parse_type());
      while (is_op("|")) {
        param.add(take(leaf_kind::kOperator));
        param.add(parse_type());
      }
      param.add(expect_ident(leaf_kind::kDefinedName));
      c.add(std::move(param));
      c.add(expect_op(")"));
      c.add(parse_block());
      n.add(std::move(c));
    }
    if (is_kw("finally")) {
      ParseNode f = ParseNode::make_inner("finally_clause");
      f.add(take(leaf_kind::kKeyword));
      f.add(parse_block());
      n.add(std::move(f));
    }
    return n;
  }

  ParseNode parse_switch() {
    ParseNode n = ParseNode::make_inner("switch_statement");
    n.add(take(leaf_kind::kKeyword));
    n.add(parse_parenthesized());
    n.add(parse_switch_block());
    return n;
  }

  ParseNode parse_switch_block() {
    ParseNode block = ParseNode::make_inner("switch_block");
    block.add(expect_op("{"));
    while (!is_op("}")) {
      if (at_eof()) error("unterminated switch");
      if (is_kw("case") || is_kw("default")) {
        ParseNode label = ParseNode::make_inner("switch_label");
        const bool is_default = is_kw("default");
        label.add(take(leaf_kind::kKeyword));
        if (!is_default) {
          label.add(parse_ternary());
          while (is_op(",")) {
            label.add(take(leaf_kind::kPunctuation));
            label.add(parse_ternary());
          }
        }
        if (is_op("->")) {
          label.add(take(leaf_kind::kOperator));
          block.add(std::move(label));
          if (is_op("{")) {
            block.add(parse_block());
          } else if (is_kw("throw")) {
            block.add(parse_statement());
          } else {
            ParseNode stmt = ParseNode::make_inner("expression_statement");
            stmt.add(parse_expression());
            stmt.add(expect_op(";"));
            block.add(std::move(stmt));
          }
          continue;
        }
        label.add(expect_op(":"));
        block.add(std::move(label));
        continue;
      }
      block.add(parse_statement());
    }
    block.add(expect_op("}"));
    return block;
  }

  // -- expressions -------------------------------------------------------------
  ParseNode parse_expression() {
    DepthGuard guard(*this);
    if (auto lambda = try_lambda()) return std::move(*lambda);
    ParseNode lhs = parse_ternary();
    if (auto op = assignment_operator()) {
      ParseNode n = ParseNode::make_inner("assignment_expression");
      if (!lhs.leaf || lhs.kind != leaf_kind::kIdentifier) {
        n.add(std::move(lhs));
      } else {
        lhs.kind = std::string(leaf_kind::kDefinedName);
        n.add(std::move(lhs));
      }
      n.add(take_glued(*op));
      n.add(is_op("{") ? parse_array_initializer() : parse_expression());
      return n;
    }
    return lhs;
  }

  // Composite operator built from glued '>' tokens, or a plain operator token.
  struct GluedOp {
    std::string text;
    std::size_t count;
  };

  std::optional<GluedOp> glued_greater() const {
    if (!is_op(">")) return std::nullopt;
    std::string text = ">";
    std::size_t n = 1;
    while (n < 3 && joined(n - 1) && is_op(">", n)) {
      text += ">";
      ++n;
    }
    if (joined(n - 1) && is_op("=", n)) {
      text += "=";
      ++n;
    } else if (joined(n - 1) && is_op("==", n)) {
      // ">==" cannot occur in valid Java.
      return std::nullopt;
    }
    return GluedOp{text, n};
  }

  std::optional<GluedOp> assignment_operator() const {
    static const std::unordered_set<std::string_view> ops = {
        "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>>="};
    if (peek().kind == TokKind::kOp && ops.count(peek().text)) return GluedOp{peek().text, 1};
    if (auto g = glued_greater(); g && (g->text == ">>=" || g->text == ">>>=")) return g;
    return std::nullopt;
  }

  ParseNode take_glued(const GluedOp& op) {
    const std::size_t begin = peek().begin;
    const std::size_t end = peek(op.count - 1).end;
    pos_ += op.count;
    return ParseNode::make_leaf(leaf_kind::kOperator, op.text, begin, end);
  }

  std::optional<ParseNode> try_lambda() {
    if (is_ident() && is_op("->", 1)) {
      ParseNode n = ParseNode::make_inner("lambda_expression");
      n.add(take(leaf_kind::kDefinedName));
      n.add(take(leaf_kind::kOperator));
      n.add(is_op("{") ? parse_block() : parse_expression());
      return n;
    }
    if (!is_op("(")) return std::nullopt;
    // Find the matching ')' and check for '->'.
    std::size_t depth = 0;
    std::size_t k = 0;
    for (;; ++k) {
      const Token& t = peek(k);
      if (t.kind == TokKind::kEof) return std::nullopt;
      if (t.kind == TokKind::kOp && t.text == "(") ++depth;
      if (t.kind == TokKind::kOp && t.text == ")" && --depth == 0) break;
    }
    if (!is_op("->", k + 1)) return std::nullopt;
    ParseNode n = ParseNode::make_inner("lambda_expression");
    ParseNode params = ParseNode::make_inner("formal_parameters");
    params.add(take(leaf_kind::kPunctuation));
    if (!is_op(")")) {
      const bool inferred = is_ident() && (is_op(",", 1) || is_op(")", 1));
      while (true) {
        if (inferred) {
          params.add(expect_ident(leaf_kind::kDefinedName));
        } else {
          params.add(parse_formal_parameter());
        }
        if (!is_op(",")) break;
        params.add(take(leaf_kind::kPunctuation));
      }
    }
    params.add(expect_op(")"));
    n.add(std::move(params));
    n.add(take(leaf_kind::kOperator));
    n.add(is_op("{") ? parse_block() : parse_expression());
    return n;
  }

  ParseNode parse_ternary() {
    ParseNode cond = parse_binary(0);
    if (!is_op("?")) return cond;
    ParseNode n = ParseNode::make_inner("ternary_expression");
    n.add(std::move(cond));
    n.add(take(leaf_kind::kOperator));
    n.add(parse_expression_no_assign());
    n.add(expect_op(":"));
    n.add(parse_expression_no_assign());
    return n;
  }

  ParseNode parse_expression_no_assign() {
    if (auto lambda = try_lambda()) return std::move(*lambda);
    return parse_ternary();
  }

  // Binary operator at the cursor with its precedence (higher binds tighter).
  std::optional<std::pair<GluedOp, int>> binary_operator() const {
    if (is_kw("instanceof")) return std::pair{GluedOp{"instanceof", 1}, 7};
    if (auto g = glued_greater()) {
      if (g->text == ">") return std::pair{*g, 7};
      if (g->text == ">=") return std::pair{*g, 7};
      if (g->text == ">>" || g->text == ">>>") return std::pair{*g, 8};
      return std::nullopt;  // shift-assignment
    }
    if (peek().kind != TokKind::kOp) return std::nullopt;
    static const std::array<std::pair<std::string_view, int>, 16> table = {{
        {"||", 1}, {"&&", 2}, {"|", 3}, {"^", 4}, {"&", 5}, {"==", 6}, {"!=", 6}, {"<", 7},
        {"<=", 7}, {"<<", 8}, {"+", 9}, {"-", 9}, {"*", 10}, {"/", 10}, {"%", 10}, {"", 0}}};
    for (const auto& [op, prec] : table) {
      if (!op.empty() && peek().text == op) return std::pair{GluedOp{std::string(op), 1}, prec};
    }
    return std::nullopt;
  }

  ParseNode parse_binary(int min_prec) {
    DepthGuard guard(*this);
    ParseNode lhs = parse_unary();
    while (true) {
      auto op = binary_operator();
      if (!op || op->second < min_prec) break;
      const int prec = op->second;
      if (op->first.text == "instanceof") {
        ParseNode n = ParseNode::make_inner("instanceof_expression");
        n.add(std::move(lhs));
        n.add(take(leaf_kind::kKeyword));
        if (is_kw("final")) n.add(take(leaf_kind::kKeyword));
        n.add(parse_type());
        if (is_ident()) n.add(take(leaf_kind::kDefinedName));
        lhs = std::move(n);
        continue;
      }
      ParseNode n = ParseNode::make_inner("binary_expression");
      n.add(std::move(lhs));
      n.add(take_glued(op->first));
      n.add(parse_binary(prec + 1));
      lhs = std::move(n);
    }
    return lhs;
  }

  bool starts_operand_after_cast() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::kIdent:
      case TokKind::kNumber:
      case TokKind::kString:
      case TokKind::kChar:
      case TokKind::kBoolean:
      case TokKind::kNull:
        return true;
      case TokKind::kKeyword:
        return t.text == "this" || t.text == "new" || t.text == "super" || is_primitive(t.text);
      case TokKind::kOp:
        return t.text == "(" || t.text == "!" || t.text == "~";
      case TokKind::kEof:
        return false;
    }
    return false;
  }

  ParseNode parse_unary() {
    DepthGuard guard(*this);
    if (is_op("++") || is_op("--")) {
      ParseNode n = ParseNode::make_inner("update_expression");
      n.add(take(leaf_kind::kOperator));
      n.add(mark_target(parse_unary()));
      return n;
    }
    if (is_op("+") || is_op("-") || is_op("!") || is_op("~")) {
      ParseNode n = ParseNode::make_inner("unary_expression");
      n.add(take(leaf_kind::kOperator));
      n.add(parse_unary());
      return n;
    }
    if (is_op("(")) {
      if (auto cast = try_cast()) return std::move(*cast);
    }
    ParseNode e = parse_postfix();
    return e;
  }

  static ParseNode mark_target(ParseNode operand) {
    if (operand.leaf && operand.kind == leaf_kind::kIdentifier) {
      operand.kind = std::string(leaf_kind::kDefinedName);
    }
    return operand;
  }

  std::optional<ParseNode> try_cast() {
    const std::size_t save = pos_;
    try {
      ParseNode n = ParseNode::make_inner("cast_expression");
      n.add(take(leaf_kind::kPunctuation));
      const bool primitive = peek().kind == TokKind::kKeyword && is_primitive(peek().text);
      n.add(parse_type());
      while (is_op("&")) {
        n.add(take(leaf_kind::kOperator));
        n.add(parse_type());
      }
      if (!is_op(")")) throw Backtrack{};
      n.add(take(leaf_kind::kPunctuation));
      if (primitive ? !(starts_operand_after_cast() || is_op("+") || is_op("-"))
                    : !starts_operand_after_cast()) {
        throw Backtrack{};
      }
      if (auto lambda = try_lambda()) {
        n.add(std::move(*lambda));
      } else {
        n.add(parse_unary());
      }
      return n;
    } catch (const Backtrack&) {
    } catch (const ParseError&) {
    }
    pos_ = save;
    return std::nullopt;
  }

  ParseNode parse_postfix() {
    ParseNode e = parse_primary();
    while (true) {
      if (is_op(".")) {
        ParseNode dot = take(leaf_kind::kPunctuation);
        if (is_kw("class")) {
          ParseNode n = ParseNode::make_inner("class_literal");
          n.add(std::move(e));
          n.add(std::move(dot));
          n.add(take(leaf_kind::kKeyword));
          e = std::move(n);
          continue;
        }
        if (is_kw("new")) {
          ParseNode n = parse_creator();
          ParseNode outer = ParseNode::make_inner("qualified_creation_expression");
          outer.add(std::move(e));
          outer.add(std::move(dot));
          outer.add(std::move(n));
          e = std::move(outer);
          continue;
        }
        if (is_kw("this") || is_kw("super")) {
          ParseNode n = ParseNode::make_inner("field_access");
          n.add(std::move(e));
          n.add(std::move(dot));
          n.add(take(leaf_kind::kKeyword));
          e = std::move(n);
          continue;
        }
        std::optional<ParseNode> targs;
        if (is_op("<")) targs = parse_type_arguments();
        if (!is_ident()) error("expected member name");
        if (is_op("(", 1)) {
          ParseNode n = ParseNode::make_inner("method_invocation");
          n.add(std::move(e));
          n.add(std::move(dot));
          if (targs) n.add(std::move(*targs));
          n.add(take(leaf_kind::kMethodName));
          n.add(parse_arguments());
          e = std::move(n);
        } else {
          ParseNode n = ParseNode::make_inner("field_access");
          n.add(std::move(e));
          n.add(std::move(dot));
          n.add(take(leaf_kind::kFieldName));
          e = std::move(n);
        }
        continue;
      }
      if (is_op("[")) {
        ParseNode n = ParseNode::make_inner("array_access");
        n.add(std::move(e));
        n.add(take(leaf_kind::kPunctuation));
        n.add(parse_expression());
        n.add(expect_op("]"));
        e = std::move(n);
        continue;
      }
      if (is_op("::")) {
        ParseNode n = ParseNode::make_inner("method_reference");
        n.add(std::move(e));
        n.add(take(leaf_kind::kPunctuation));
        if (is_kw("new")) {
          n.add(take(leaf_kind::kKeyword));
        } else {
          n.add(expect_ident(leaf_kind::kMethodName));
        }
        e = std::move(n);
        continue;
      }
      if (is_op("++") || is_op("--")) {
        ParseNode n = ParseNode::make_inner("update_expression");
        n.add(mark_target(std::move(e)));
        n.add(take(leaf_kind::kOperator));
        e = std::move(n);
        continue;
      }
      break;
    }
    return e;
  }

  ParseNode parse_arguments() {
    ParseNode args = ParseNode::make_inner("argument_list");
    args.add(expect_op("("));
    if (!is_op(")")) {
      while (true) {
        args.add(parse_expression());
        if (!is_op(",")) break;
        args.add(take(leaf_kind::kPunctuation));
      }
    }
    args.add(expect_op(")"));
    return args;
  }

  ParseNode parse_array_initializer() {
    DepthGuard guard(*this);
    ParseNode n = ParseNode::make_inner("array_initializer");
    n.add(expect_op("{"));
    while (!is_op("}")) {
      n.add(is_op("{") ? parse_array_initializer() : parse_expression());
      if (!is_op(",")) break;
      n.add(take(leaf_kind::kPunctuation));
    }
    n.add(expect_op("}"));
    return n;
  }

  ParseNode parse_creator() {
    ParseNode newkw = expect_kw("new");
    // Type without array dims; dims are parsed here so they can hold sizes.
    std::optional<ParseNode> type;
    if (peek().kind == TokKind::kKeyword && is_primitive(peek().text)) {
      type = take("primitive_type");
    } else {
      type = parse_class_type();
    }
    if (is_op("[")) {
      ParseNode n = ParseNode::make_inner("array_creation_expression");
      n.add(std::move(newkw));
      n.add(std::move(*type));
      while (is_op("[")) {
        ParseNode dim = ParseNode::make_inner("dimensions_expr");
        dim.add(take(leaf_kind::kPunctuation));
        if (!is_op("]")) dim.add(parse_expression());
        dim.add(expect_op("]"));
        n.add(std::move(dim));
      }
      if (is_op("{")) n.add(parse_array_initializer());
      return n;
    }
    ParseNode n = ParseNode::make_inner("object_creation_expression");
    n.add(std::move(newkw));
    n.add(std::move(*type));
    n.add(parse_arguments());
    if (is_op("{")) n.add(parse_class_body());
    return n;
  }

  ParseNode parse_primary() {
    DepthGuard guard(*this);
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::kNumber: return take(leaf_kind::kNumber);
      case TokKind::kString: return take(leaf_kind::kString);
      case TokKind::kChar: return take(leaf_kind::kChar);
      case TokKind::kBoolean: return take(leaf_kind::kBoolean);
      case TokKind::kNull: return take(leaf_kind::kNull);
      case TokKind::kIdent: {
        if (is_op("(", 1)) {
          ParseNode n = ParseNode::make_inner("method_invocation");
          n.add(take(leaf_kind::kMethodName));
          n.add(parse_arguments());
          return n;
        }
        // Generic type used as method-reference qualifier: List<String>::new
        return take(leaf_kind::kIdentifier);
      }
      case TokKind::kKeyword: {
        if (t.text == "this" || t.text == "super") {
          if (is_op("(", 1)) {
            ParseNode n = ParseNode::make_inner("explicit_constructor_invocation");
            n.add(take(leaf_kind::kKeyword));
            n.add(parse_arguments());
            return n;
          }
          return take(leaf_kind::kKeyword);
        }
        if (t.text == "new") return parse_creator();
        if (is_primitive(t.text) || t.text == "void") {
          // int.class, int[].class, int[]::new
          ParseNode type = t.text == "void" ? take(leaf_kind::kKeyword) : parse_type();
          if (is_op("::")) return type;
          if (!is_op(".") || !is_kw("class", 1)) error("expected '.class'");
          ParseNode n = ParseNode::make_inner("class_literal");
          n.add(std::move(type));
          n.add(take(leaf_kind::kPunctuation));
          n.add(take(leaf_kind::kKeyword));
          return n;
        }
        if (t.text == "switch") {
          ParseNode n = ParseNode::make_inner("switch_expression");
          n.add(take(leaf_kind::kKeyword));
          n.add(parse_parenthesized());
          n.add(parse_switch_block());
          return n;
        }
        break;
      }
      case TokKind::kOp:
        if (t.text == "(") return parse_parenthesized();
        break;
      case TokKind::kEof:
        break;
    }
    error("expected expression");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

ParseNode parse_java(std::string_view source) {
  JavaParser parser(source);
  return parser.parse_program();
}

}  // namespace cssam::graph::detail
