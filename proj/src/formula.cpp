#include "compsyn/formula.hpp"

#include <cctype>
#include <stdexcept>

namespace compsyn {

FormulaPtr Formula::mk_true() { return std::make_shared<Formula>(Formula{FOp::True}); }
FormulaPtr Formula::mk_false() { return std::make_shared<Formula>(Formula{FOp::False}); }
FormulaPtr Formula::atom_(int i) { return std::make_shared<Formula>(Formula{FOp::Atom, i}); }
FormulaPtr Formula::natom(int i) { return std::make_shared<Formula>(Formula{FOp::NotAtom, i}); }
FormulaPtr Formula::conj(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{FOp::And, -1, std::move(a), std::move(b)});
}
FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{FOp::Or, -1, std::move(a), std::move(b)});
}
FormulaPtr Formula::next(FormulaPtr a) {
  return std::make_shared<Formula>(Formula{FOp::Next, -1, std::move(a), nullptr});
}
FormulaPtr Formula::until(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{FOp::Until, -1, std::move(a), std::move(b)});
}

std::string to_string(const Formula& f, const std::vector<std::string>& names) {
  switch (f.op) {
    case FOp::True: return "true";
    case FOp::False: return "false";
    case FOp::Atom: return names[f.atom];
    case FOp::NotAtom: return "!" + names[f.atom];
    case FOp::And:
      return "(" + to_string(*f.lhs, names) + " & " + to_string(*f.rhs, names) + ")";
    case FOp::Or:
      return "(" + to_string(*f.lhs, names) + " | " + to_string(*f.rhs, names) + ")";
    case FOp::Next: return "X " + to_string(*f.lhs, names);
    case FOp::Until:
      return "(" + to_string(*f.lhs, names) + " U " + to_string(*f.rhs, names) + ")";
  }
  return "?";
}

namespace {

struct Token {
  enum Kind { Ident, TTrue, TFalse, Not, And, Or, Next, Fut, Glob, Until, LParen, RParen,
              LBracket, RBracket, Comma, Number, End } kind;
  std::string text;
  std::size_t pos;
  long num = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    const std::size_t at = i_;
    if (i_ >= s_.size()) return {Token::End, "", at};
    const char ch = s_[i_];
    if (ch == '!') { ++i_; return {Token::Not, "!", at}; }
    if (ch == '&') { ++i_; return {Token::And, "&", at}; }
    if (ch == '|') { ++i_; return {Token::Or, "|", at}; }
    if (ch == '(') { ++i_; return {Token::LParen, "(", at}; }
    if (ch == ')') { ++i_; return {Token::RParen, ")", at}; }
    if (ch == '[') { ++i_; return {Token::LBracket, "[", at}; }
    if (ch == ']') { ++i_; return {Token::RBracket, "]", at}; }
    if (ch == ',') { ++i_; return {Token::Comma, ",", at}; }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i_;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      Token t{Token::Number, s_.substr(i_, j - i_), at};
      t.num = std::stol(t.text);
      i_ = j;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i_;
      while (j < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
        ++j;
      std::string w = s_.substr(i_, j - i_);
      i_ = j;
      if (w == "true") return {Token::TTrue, w, at};
      if (w == "false") return {Token::TFalse, w, at};
      if (w == "X") return {Token::Next, w, at};
      if (w == "F") return {Token::Fut, w, at};
      if (w == "G") return {Token::Glob, w, at};
      if (w == "U") return {Token::Until, w, at};
      return {Token::Ident, w, at};
    }
    throw std::invalid_argument("formula: unexpected character '" + std::string(1, ch) +
                                "' at position " + std::to_string(at));
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;
};

class Parser {
 public:
  Parser(const std::string& text, const std::optional<std::vector<std::string>>& declared)
      : lex_(text), declared_(declared) {
    if (declared_) atoms_ = *declared_;
    advance();
  }

  ParsedSpec run() {
    FormulaPtr f = parse_until();
    expect(Token::End, "end of input");
    return {std::move(f), std::move(atoms_)};
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("formula: " + what + " at position " + std::to_string(cur_.pos));
  }

  void advance() { cur_ = lex_.next(); }

  void expect(Token::Kind k, const char* what) {
    if (cur_.kind != k) fail(std::string("expected ") + what);
    advance();
  }

  int atom_id(const std::string& name, std::size_t pos) {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i] == name) return static_cast<int>(i);
    if (declared_)
      throw std::invalid_argument("formula: unknown atom '" + name + "' at position " +
                                  std::to_string(pos));
    atoms_.push_back(name);
    return static_cast<int>(atoms_.size() - 1);
  }

  FormulaPtr parse_until() {
    FormulaPtr lhs = parse_or();
    if (cur_.kind == Token::Until) {
      advance();
      return Formula::until(std::move(lhs), parse_until());  // right-assoc
    }
    return lhs;
  }

  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (cur_.kind == Token::Or) {
      advance();
      f = Formula::disj(std::move(f), parse_and());
    }
    return f;
  }

  FormulaPtr parse_and() {
    FormulaPtr f = parse_unary();
    while (cur_.kind == Token::And) {
      advance();
      f = Formula::conj(std::move(f), parse_unary());
    }
    return f;
  }

  FormulaPtr parse_unary() {
    switch (cur_.kind) {
      case Token::Not: {
        advance();
        if (cur_.kind != Token::Ident) fail("negation applies to atoms only");
        int id = atom_id(cur_.text, cur_.pos);
        advance();
        return Formula::natom(id);
      }
      case Token::Next:
        advance();
        return Formula::next(parse_unary());
      case Token::Fut:
        advance();
        return Formula::until(Formula::mk_true(), parse_unary());
      case Token::Glob: {
        advance();
        expect(Token::LBracket, "'[' after G");
        if (cur_.kind != Token::Number || cur_.num != 0) fail("G bounds must start at 0");
        advance();
        expect(Token::Comma, "','");
        if (cur_.kind != Token::Number) fail("expected depth bound");
        const long k = cur_.num;
        advance();
        expect(Token::RBracket, "']'");
        FormulaPtr body = parse_unary();
        FormulaPtr f = body;
        for (long i = 0; i < k; ++i) f = Formula::conj(body, Formula::next(std::move(f)));
        return f;
      }
      default:
        return parse_primary();
    }
  }

  FormulaPtr parse_primary() {
    switch (cur_.kind) {
      case Token::TTrue: advance(); return Formula::mk_true();
      case Token::TFalse: advance(); return Formula::mk_false();
      case Token::Ident: {
        int id = atom_id(cur_.text, cur_.pos);
        advance();
        return Formula::atom_(id);
      }
      case Token::LParen: {
        advance();
        FormulaPtr f = parse_until();
        expect(Token::RParen, "')'");
        return f;
      }
      default:
        fail("expected a formula");
    }
  }

  Lexer lex_;
  Token cur_{Token::End, "", 0};
  const std::optional<std::vector<std::string>>& declared_;
  std::vector<std::string> atoms_;
};

bool sat_at(const Formula& f, const std::vector<std::uint32_t>& w, std::size_t i) {
  const std::size_t n = w.size();
  switch (f.op) {
    case FOp::True: return true;
    case FOp::False: return false;
    case FOp::Atom: return i < n && ((w[i] >> f.atom) & 1u);
    case FOp::NotAtom: return i < n && !((w[i] >> f.atom) & 1u);
    case FOp::And: return sat_at(*f.lhs, w, i) && sat_at(*f.rhs, w, i);
    case FOp::Or: return sat_at(*f.lhs, w, i) || sat_at(*f.rhs, w, i);
    case FOp::Next: return i + 1 < n && sat_at(*f.lhs, w, i + 1);
    case FOp::Until:
      for (std::size_t j = i; j < n; ++j) {
        if (sat_at(*f.rhs, w, j)) return true;
        if (!sat_at(*f.lhs, w, j)) return false;
      }
      return false;
  }
  return false;
}

}  // namespace

ParsedSpec parse_scltl(const std::string& text,
                       const std::optional<std::vector<std::string>>& declared_atoms) {
  Parser p(text, declared_atoms);
  return p.run();
}

bool word_satisfies(const Formula& f, const std::vector<std::uint32_t>& word) {
  return sat_at(f, word, 0);
}

}  // namespace compsyn
