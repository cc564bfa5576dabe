#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string>

#include "stab/expr.hpp"

namespace stab {

namespace {

struct Token {
  enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };
  Kind kind;
  std::size_t offset;
  double number = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.offset = pos_;
    tok_.text.clear();
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::End;
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = Token::Kind::Plus; ++pos_; return;
      case '-': tok_.kind = Token::Kind::Minus; ++pos_; return;
      case '*': tok_.kind = Token::Kind::Star; ++pos_; return;
      case '/': tok_.kind = Token::Kind::Slash; ++pos_; return;
      case '^': tok_.kind = Token::Kind::Caret; ++pos_; return;
      case '(': tok_.kind = Token::Kind::LParen; ++pos_; return;
      case ')': tok_.kind = Token::Kind::RParen; ++pos_; return;
      case ',': tok_.kind = Token::Kind::Comma; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", pos_);
      tok_.kind = Token::Kind::Number;
      tok_.number = v;
      pos_ += static_cast<std::size_t>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      tok_.kind = Token::Kind::Ident;
      tok_.text.assign(src_, pos_, end - pos_);
      pos_ = end;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

bool unary_fn_by_name(const std::string& name, UnaryFn* fn) {
  if (name == "sin") *fn = UnaryFn::Sin;
  else if (name == "cos") *fn = UnaryFn::Cos;
  else if (name == "exp") *fn = UnaryFn::Exp;
  else if (name == "log") *fn = UnaryFn::Log;
  else if (name == "sqrt") *fn = UnaryFn::Sqrt;
  else if (name == "tanh") *fn = UnaryFn::Tanh;
  else return false;
  return true;
}

// Grammar:
//   expr   := term { ("+"|"-") term }
//   term   := factor { ("*"|"/") factor }
//   factor := "-" factor | power
//   power  := atom [ "^" factor ]
//   atom   := number | ident | ident "(" expr ")" | "(" expr ")"
class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> vars) : lex_(src), vars_(vars) {}

  ScalarExpr run() {
    ScalarExpr e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::End) throw ParseError("syntax error: trailing input", t.offset);
    return e;
  }

 private:
  ScalarExpr expr() {
    ScalarExpr e = term();
    for (;;) {
      const Token::Kind k = lex_.peek().kind;
      if (k == Token::Kind::Plus) {
        lex_.take();
        e = ScalarExpr::binary(BinaryOp::Add, std::move(e), term());
      } else if (k == Token::Kind::Minus) {
        lex_.take();
        e = ScalarExpr::binary(BinaryOp::Sub, std::move(e), term());
      } else {
        return e;
      }
    }
  }

  ScalarExpr term() {
    ScalarExpr e = factor();
    for (;;) {
      const Token::Kind k = lex_.peek().kind;
      if (k == Token::Kind::Star) {
        lex_.take();
        e = ScalarExpr::binary(BinaryOp::Mul, std::move(e), factor());
      } else if (k == Token::Kind::Slash) {
        lex_.take();
        e = ScalarExpr::binary(BinaryOp::Div, std::move(e), factor());
      } else {
        return e;
      }
    }
  }

  ScalarExpr factor() {
    if (lex_.peek().kind == Token::Kind::Minus) {
      lex_.take();
      return ScalarExpr::unary(UnaryFn::Neg, factor());
    }
    return power();
  }

  ScalarExpr power() {
    ScalarExpr base = atom();
    if (lex_.peek().kind == Token::Kind::Caret) {
      lex_.take();
      return ScalarExpr::binary(BinaryOp::Pow, std::move(base), factor());
    }
    return base;
  }

  ScalarExpr atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Number:
        return ScalarExpr::constant(t.number);
      case Token::Kind::LParen: {
        ScalarExpr e = expr();
        expect(Token::Kind::RParen, "expected ')'");
        return e;
      }
      case Token::Kind::Ident: {
        if (lex_.peek().kind == Token::Kind::LParen) {
          UnaryFn fn;
          if (!unary_fn_by_name(t.text, &fn))
            throw ParseError("unknown function '" + t.text + "'", t.offset);
          lex_.take();  // (
          ScalarExpr arg = expr();
          if (lex_.peek().kind == Token::Kind::Comma)
            throw ParseError("function '" + t.text + "' takes exactly one argument",
                             lex_.peek().offset);
          expect(Token::Kind::RParen, "expected ')'");
          return ScalarExpr::unary(fn, std::move(arg));
        }
        for (std::size_t i = 0; i < vars_.size(); ++i)
          if (vars_[i] == t.text) return ScalarExpr::variable(static_cast<int>(i));
        throw ParseError("unknown identifier '" + t.text + "'", t.offset);
      }
      default:
        throw ParseError("syntax error: expected an operand", t.offset);
    }
  }

  void expect(Token::Kind k, const char* msg) {
    const Token& t = lex_.peek();
    if (t.kind != k) throw ParseError(msg, t.offset);
    lex_.take();
  }

  Lexer lex_;
  std::span<const std::string> vars_;
};

}  // namespace

ScalarExpr parse(std::string_view src, std::span<const std::string> vars) {
  if (src.empty()) throw ParseError("empty expression", 0);
  return Parser(src, vars).run();
}

}  // namespace stab
