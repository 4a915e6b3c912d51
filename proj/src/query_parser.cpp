#include <charconv>
#include <cmath>
#include <set>

#include "ctkg/error.hpp"
#include "ctkg/lexical.hpp"
#include "ctkg/query.hpp"

namespace ctkg {

namespace {

enum class Tok {
  LParen, RParen, LBracket, RBracket, Colon, Comma, Dot, Minus, Star,
  Lt, Le, Gt, Ge, Eq, Ne,
  Ident, String, Integer, Decimal,
  End, Invalid,
};

struct Token {
  Tok kind;
  std::string text;  // identifier name, unescaped string, or raw number
  int line;
  int column;
};

const std::set<std::string_view> kKeywords = {"MATCH", "WHERE", "AND", "RETURN", "COUNT", "true", "false"};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::End || t.kind == Tok::Invalid) break;
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r'))
      advance();
  }

  static bool digit(char c) { return c >= '0' && c <= '9'; }
  static bool ident_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || digit(c);
  }

  Token next() {
    int line = line_, col = col_;
    auto make = [&](Tok kind, std::string text = {}) { return Token{kind, std::move(text), line, col}; };
    if (pos_ >= src_.size()) return make(Tok::End);

    char c = peek();
    auto single = [&](Tok kind) {
      advance();
      return make(kind, std::string(1, c));
    };
    switch (c) {
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case '[': return single(Tok::LBracket);
      case ']': return single(Tok::RBracket);
      case ':': return single(Tok::Colon);
      case ',': return single(Tok::Comma);
      case '.': return single(Tok::Dot);
      case '*': return single(Tok::Star);
      case '=': return single(Tok::Eq);
      case '<':
        if (peek(1) == '=') { advance(); advance(); return make(Tok::Le, "<="); }
        return single(Tok::Lt);
      case '>':
        if (peek(1) == '=') { advance(); advance(); return make(Tok::Ge, ">="); }
        return single(Tok::Gt);
      case '!':
        if (peek(1) == '=') { advance(); advance(); return make(Tok::Ne, "!="); }
        return single(Tok::Invalid);
      case '"': return string_literal(line, col);
      default: break;
    }
    if (c == '-' && !digit(peek(1))) return single(Tok::Minus);
    if (c == '-' || digit(c)) return number(line, col);
    if (ident_char(c)) {
      std::string text;
      while (pos_ < src_.size() && ident_char(peek())) {
        text += peek();
        advance();
      }
      return make(Tok::Ident, std::move(text));
    }
    return single(Tok::Invalid);
  }

  Token number(int line, int col) {
    std::string text;
    bool decimal = false;
    if (peek() == '-') { text += '-'; advance(); }
    while (digit(peek())) { text += peek(); advance(); }
    if (peek() == '.' && digit(peek(1))) {
      decimal = true;
      text += '.';
      advance();
      while (digit(peek())) { text += peek(); advance(); }
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      decimal = true;
      text += peek();
      advance();
      if (peek() == '+' || peek() == '-') { text += peek(); advance(); }
      while (digit(peek())) { text += peek(); advance(); }
    }
    return Token{decimal ? Tok::Decimal : Tok::Integer, std::move(text), line, col};
  }

  Token string_literal(int line, int col) {
    advance();  // opening quote
    std::string text;
    while (true) {
      if (pos_ >= src_.size()) return Token{Tok::Invalid, "unterminated string", line, col};
      char c = peek();
      if (c == '"') { advance(); break; }
      if (c == '\\') {
        char e = peek(1);
        if (e != '"' && e != '\\') return Token{Tok::Invalid, "bad escape", line_, col_};
        text += e;
        advance();
        advance();
        continue;
      }
      text += c;
      advance();
    }
    return Token{Tok::String, std::move(text), line, col};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Invalid: return t.text.empty() ? "invalid character" : t.text;
    case Tok::String: return "string literal";
    default: return "'" + t.text + "'";
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Query run() {
    Query q;
    keyword("MATCH");
    q.nodes.push_back(node());
    while (at(Tok::Minus) || at(Tok::Lt)) {
      q.edges.push_back(edge());
      q.nodes.push_back(node());
    }
    if (at_keyword("WHERE")) {
      ++pos_;
      q.where.push_back(condition());
      while (at_keyword("AND")) {
        ++pos_;
        q.where.push_back(condition());
      }
      if (!at_keyword("RETURN")) fail({"'AND'", "'RETURN'"});
    } else if (!at_keyword("RETURN")) {
      fail({"'-['", "'<-['", "'WHERE'", "'RETURN'"});
    }
    ++pos_;
    if (at_keyword("COUNT")) {
      ++pos_;
      expect(Tok::LParen, "'('");
      q.returns.push_back(variable_ref());
      expect(Tok::RParen, "')'");
      q.count = true;
    } else {
      q.returns.push_back(variable_ref());
      while (at(Tok::Comma)) {
        ++pos_;
        q.returns.push_back(variable_ref());
      }
    }
    if (!at(Tok::End)) {
      if (q.count) fail({"end of input"});
      fail({"','", "end of input"});
    }
    check_bindings(q);
    return q;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok kind) const { return cur().kind == kind; }
  bool at_keyword(std::string_view kw) const { return at(Tok::Ident) && cur().text == kw; }

  [[noreturn]] void fail(std::vector<std::string> expected, const Token* where = nullptr) {
    const Token& t = where ? *where : cur();
    std::string msg = "unexpected " + describe(t) + "; expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? " or " : "") + expected[i];
    Error err(Errc::ParseError, msg);
    err.line = t.line;
    err.column = t.column;
    err.expected = std::move(expected);
    throw err;
  }

  [[noreturn]] void fail_at(const Token& t, const std::string& msg) {
    Error err(Errc::ParseError, msg);
    err.line = t.line;
    err.column = t.column;
    throw err;
  }

  void expect(Tok kind, const char* what) {
    if (!at(kind)) fail({what});
    ++pos_;
  }

  void keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail({"'" + std::string(kw) + "'"});
    ++pos_;
  }

  std::string identifier(const char* what) {
    if (!at(Tok::Ident) || kKeywords.contains(cur().text)) fail({what});
    return toks_[pos_++].text;
  }

  std::string variable_ref() {
    refs_.push_back(pos_);
    return identifier("variable");
  }

  NodePattern node() {
    expect(Tok::LParen, "'('");
    std::string first = identifier("variable or concept");
    NodePattern n;
    if (at(Tok::Colon)) {
      ++pos_;
      n.variable = std::move(first);
      n.concept_name = identifier("concept");
      bound_.insert(*n.variable);
    } else if (at(Tok::RParen)) {
      n.concept_name = std::move(first);
    } else {
      fail({"':'", "')'"});
    }
    expect(Tok::RParen, "')'");
    return n;
  }

  EdgePattern edge() {
    EdgePattern e;
    if (at(Tok::Lt)) {
      ++pos_;
      expect(Tok::Minus, "'-'");
      e.direction = EdgeDirection::Reverse;
    } else {
      expect(Tok::Minus, "'-'");
    }
    expect(Tok::LBracket, "'['");
    e.kind = identifier("relation kind");
    if (at(Tok::Star)) {
      ++pos_;
      e.closure = true;
    } else if (!at(Tok::RBracket)) {
      fail({"'*'", "']'"});
    }
    expect(Tok::RBracket, "']'");
    expect(Tok::Minus, "'-'");
    if (e.direction == EdgeDirection::Forward) expect(Tok::Gt, "'>'");
    return e;
  }

  Condition condition() {
    Condition c;
    c.variable = variable_ref();
    expect(Tok::Dot, "'.'");
    if (!at(Tok::Ident)) fail({"attribute name"});
    c.attr = toks_[pos_++].text;
    switch (cur().kind) {
      case Tok::Eq: c.op = CompareOp::Eq; break;
      case Tok::Ne: c.op = CompareOp::Ne; break;
      case Tok::Lt: c.op = CompareOp::Lt; break;
      case Tok::Le: c.op = CompareOp::Le; break;
      case Tok::Gt: c.op = CompareOp::Gt; break;
      case Tok::Ge: c.op = CompareOp::Ge; break;
      default: fail({"'='", "'!='", "'<'", "'<='", "'>'", "'>='"});
    }
    ++pos_;
    c.literal = literal();
    return c;
  }

  Value literal() {
    const Token& t = cur();
    static const std::vector<std::string> kExpected = {"string", "integer", "decimal", "'true'", "'false'"};
    switch (t.kind) {
      case Tok::String:
        ++pos_;
        return t.text;
      case Tok::Integer: {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size())
          fail_at(t, "integer literal " + t.text + " out of range");
        ++pos_;
        return v;
      }
      case Tok::Decimal: {
        auto v = parse_decimal(t.text);
        if (!v) fail_at(t, "decimal literal " + t.text + " out of range");
        ++pos_;
        return *v;
      }
      case Tok::Ident:
        if (t.text == "true" || t.text == "false") {
          ++pos_;
          return t.text == "true";
        }
        [[fallthrough]];
      default:
        fail(kExpected);
    }
  }

  void check_bindings(const Query&) {
    for (auto idx : refs_) {
      const Token& t = toks_[idx];
      if (!bound_.contains(t.text)) fail_at(t, "variable '" + t.text + "' is not bound in the pattern");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> bound_;
  std::vector<std::size_t> refs_;
};

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_literal(const Value& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&v)) return format_decimal(*d);
  return quote(std::get<std::string>(v));
}

}  // namespace

std::string_view to_string(CompareOp op) noexcept {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "=";
}

Query parse_query(std::string_view text) {
  auto tokens = Lexer(text).run();
  return Parser(std::move(tokens)).run();
}

std::string format_query(const Query& q) {
  std::string out = "MATCH ";
  auto node = [&](const NodePattern& n) {
    out += '(';
    if (n.variable) out += *n.variable + ":";
    out += n.concept_name + ")";
  };
  node(q.nodes.front());
  for (std::size_t i = 0; i < q.edges.size(); ++i) {
    const auto& e = q.edges[i];
    out += e.direction == EdgeDirection::Forward ? "-[" : "<-[";
    out += e.kind;
    if (e.closure) out += '*';
    out += e.direction == EdgeDirection::Forward ? "]->" : "]-";
    node(q.nodes[i + 1]);
  }
  for (std::size_t i = 0; i < q.where.size(); ++i) {
    const auto& c = q.where[i];
    out += i == 0 ? " WHERE " : " AND ";
    out += c.variable + "." + c.attr + " " + std::string(to_string(c.op)) + " " +
           format_literal(c.literal);
  }
  out += " RETURN ";
  if (q.count) {
    out += "COUNT(" + q.returns.front() + ")";
  } else {
    for (std::size_t i = 0; i < q.returns.size(); ++i) out += (i ? ", " : "") + q.returns[i];
  }
  return out;
}

}  // namespace ctkg
