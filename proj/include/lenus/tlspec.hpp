#pragma once

#include <cstddef>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace lenus {

/// Named visual event evaluated per frame window.
struct Proposition {
  std::string name;
  int index = -1;

  friend bool operator==(const Proposition& a, const Proposition& b) {
    return a.name == b.name && a.index == b.index;
  }
};

/// Ordered, duplicate-free set of propositions. Order is first-occurrence
/// order of the input and stays stable.
class PropositionSet {
public:
  int add(std::string_view name) {
    auto it = by_name_.find(std::string(name));
    if (it != by_name_.end()) return it->second;
    int idx = static_cast<int>(items_.size());
    items_.push_back(Proposition{std::string(name), idx});
    by_name_.emplace(std::string(name), idx);
    return idx;
  }

  int find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? -1 : it->second;
  }

  const Proposition& at(int idx) const { return items_.at(static_cast<size_t>(idx)); }
  const std::vector<Proposition>& items() const { return items_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(p.name);
    return out;
  }

private:
  std::vector<Proposition> items_;
  std::unordered_map<std::string, int> by_name_;
};

enum class NodeKind { Atom, Not, And, Or, Eventually, Always, Until, Next };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Immutable AST node of a temporal-logic specification.
struct Formula {
  NodeKind kind;
  std::string atom_name;  // Atom only
  int atom_index = -1;    // Atom only, position in the accompanying set
  FormulaPtr lhs;
  FormulaPtr rhs;  // binary operators only
};

inline FormulaPtr make_atom(std::string name, int index) {
  auto f = std::make_shared<Formula>();
  f->kind = NodeKind::Atom;
  f->atom_name = std::move(name);
  f->atom_index = index;
  return f;
}

inline FormulaPtr make_unary(NodeKind k, FormulaPtr x) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->lhs = std::move(x);
  return f;
}

inline FormulaPtr make_binary(NodeKind k, FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->lhs = std::move(a);
  f->rhs = std::move(b);
  return f;
}

inline FormulaPtr make_not(FormulaPtr x) { return make_unary(NodeKind::Not, std::move(x)); }
inline FormulaPtr make_and(FormulaPtr a, FormulaPtr b) { return make_binary(NodeKind::And, std::move(a), std::move(b)); }
inline FormulaPtr make_or(FormulaPtr a, FormulaPtr b) { return make_binary(NodeKind::Or, std::move(a), std::move(b)); }
inline FormulaPtr make_eventually(FormulaPtr x) { return make_unary(NodeKind::Eventually, std::move(x)); }
inline FormulaPtr make_always(FormulaPtr x) { return make_unary(NodeKind::Always, std::move(x)); }
inline FormulaPtr make_until(FormulaPtr a, FormulaPtr b) { return make_binary(NodeKind::Until, std::move(a), std::move(b)); }
inline FormulaPtr make_next(FormulaPtr x) { return make_unary(NodeKind::Next, std::move(x)); }

/// Structural equality. Atom indices participate, so formulas from different
/// proposition sets compare unequal even when names match positionally.
inline bool equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Atom:
      return a->atom_name == b->atom_name && a->atom_index == b->atom_index;
    case NodeKind::Not:
    case NodeKind::Eventually:
    case NodeKind::Always:
    case NodeKind::Next:
      return equal(a->lhs, b->lhs);
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Until:
      return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
  }
  return false;
}

/// Syntax error with the byte offset of the offending token and the set of
/// tokens that would have been accepted there.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string msg, size_t offset, std::vector<std::string> expected)
      : std::runtime_error(format(msg, offset, expected)),
        offset_(offset),
        expected_(std::move(expected)) {}

  size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

private:
  static std::string format(const std::string& msg, size_t offset,
                            const std::vector<std::string>& expected) {
    std::ostringstream os;
    os << msg << " at byte " << offset;
    if (!expected.empty()) {
      os << " (expected ";
      for (size_t i = 0; i < expected.size(); ++i) {
        if (i) os << ", ";
        os << expected[i];
      }
      os << ")";
    }
    return os.str();
  }

  size_t offset_;
  std::vector<std::string> expected_;
};

struct ParsedSpec {
  FormulaPtr formula;
  PropositionSet props;
};

namespace detail {

enum class TokKind { Atom, Not, And, Or, Until, Eventually, Always, Next, LParen, RParen, End };

struct Token {
  TokKind kind;
  std::string text;
  size_t offset;
};

inline bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
inline bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    size_t start = i;
    switch (c) {
      case '!': out.push_back({TokKind::Not, "!", start}); ++i; continue;
      case '&': out.push_back({TokKind::And, "&", start}); ++i; continue;
      case '|': out.push_back({TokKind::Or, "|", start}); ++i; continue;
      case '(': out.push_back({TokKind::LParen, "(", start}); ++i; continue;
      case ')': out.push_back({TokKind::RParen, ")", start}); ++i; continue;
      case 'U': out.push_back({TokKind::Until, "U", start}); ++i; continue;
      case 'F': out.push_back({TokKind::Eventually, "F", start}); ++i; continue;
      case 'G': out.push_back({TokKind::Always, "G", start}); ++i; continue;
      case 'X': out.push_back({TokKind::Next, "X", start}); ++i; continue;
      default: break;
    }
    if (is_ident_start(c)) {
      while (i < text.size() && is_ident_char(text[i])) ++i;
      out.push_back({TokKind::Atom, std::string(text.substr(start, i - start)), start});
      continue;
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", start,
                     {"identifier", "operator", "'('"});
  }
  out.push_back({TokKind::End, "", text.size()});
  return out;
}

class Parser {
public:
  Parser(std::vector<Token> toks, PropositionSet& props)
      : toks_(std::move(toks)), props_(props) {}

  // or := and ('|' and)*
  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (peek().kind == TokKind::Or) {
      advance();
      f = make_or(f, parse_and());
    }
    return f;
  }

private:
  // and := until ('&' until)*
  FormulaPtr parse_and() {
    FormulaPtr f = parse_until();
    while (peek().kind == TokKind::And) {
      advance();
      f = make_and(f, parse_until());
    }
    return f;
  }

  // until := unary ('U' until)?   -- right-associative
  FormulaPtr parse_until() {
    FormulaPtr f = parse_unary();
    if (peek().kind == TokKind::Until) {
      advance();
      f = make_until(f, parse_until());
    }
    return f;
  }

  FormulaPtr parse_unary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Not: advance(); return make_not(parse_unary());
      case TokKind::Eventually: advance(); return make_eventually(parse_unary());
      case TokKind::Always: advance(); return make_always(parse_unary());
      case TokKind::Next: advance(); return make_next(parse_unary());
      case TokKind::LParen: {
        advance();
        FormulaPtr f = parse_or();
        expect(TokKind::RParen, "')'");
        return f;
      }
      case TokKind::Atom: {
        advance();
        int idx = props_.add(t.text);
        return make_atom(t.text, idx);
      }
      default:
        throw ParseError("unexpected token '" + t.text + "'", t.offset,
                         {"identifier", "'!'", "'F'", "'G'", "'X'", "'('"});
    }
  }

  const Token& peek() const { return toks_[pos_]; }
  void advance() { ++pos_; }

  void expect(TokKind k, const std::string& what) {
    if (peek().kind != k) {
      throw ParseError("unexpected token '" + (peek().kind == TokKind::End ? std::string("<end>") : peek().text) + "'",
                       peek().offset, {what});
    }
    advance();
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  PropositionSet& props_;

public:
  void expect_end() {
    if (peek().kind != TokKind::End) {
      throw ParseError("trailing input '" + peek().text + "'", peek().offset, {"<end>"});
    }
  }
};

}  // namespace detail

/// Parse TL source text. Grammar: atoms are lowercase identifiers; unary
/// `!` `F` `G` `X`; binary `&` `|` `U`; precedence unary > U > & > |;
/// `U` right-associative; parentheses allowed.
inline ParsedSpec parse_spec(std::string_view text) {
  bool blank = true;
  for (char c : text) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') { blank = false; break; }
  }
  if (blank) throw ParseError("empty specification", 0, {"formula"});
  ParsedSpec out;
  detail::Parser p(detail::tokenize(text), out.props);
  out.formula = p.parse_or();
  p.expect_end();
  return out;
}

/// Canonical fully parenthesized form; parse_spec(print_spec(f)) == f.
inline std::string print_spec(const FormulaPtr& f) {
  switch (f->kind) {
    case NodeKind::Atom: return f->atom_name;
    case NodeKind::Not: return "(! " + print_spec(f->lhs) + ")";
    case NodeKind::Eventually: return "(F " + print_spec(f->lhs) + ")";
    case NodeKind::Always: return "(G " + print_spec(f->lhs) + ")";
    case NodeKind::Next: return "(X " + print_spec(f->lhs) + ")";
    case NodeKind::And: return "(" + print_spec(f->lhs) + " & " + print_spec(f->rhs) + ")";
    case NodeKind::Or: return "(" + print_spec(f->lhs) + " | " + print_spec(f->rhs) + ")";
    case NodeKind::Until: return "(" + print_spec(f->lhs) + " U " + print_spec(f->rhs) + ")";
  }
  return {};
}

namespace detail {
inline void collect_atoms(const FormulaPtr& f, PropositionSet& out) {
  if (!f) return;
  if (f->kind == NodeKind::Atom) {
    out.add(f->atom_name);
    return;
  }
  collect_atoms(f->lhs, out);
  collect_atoms(f->rhs, out);
}
}  // namespace detail

/// Distinct atoms in leftmost first-occurrence order.
inline PropositionSet free_propositions(const FormulaPtr& f) {
  PropositionSet out;
  detail::collect_atoms(f, out);
  return out;
}

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Atom: return "atom";
    case NodeKind::Not: return "not";
    case NodeKind::And: return "and";
    case NodeKind::Or: return "or";
    case NodeKind::Eventually: return "eventually";
    case NodeKind::Always: return "always";
    case NodeKind::Until: return "until";
    case NodeKind::Next: return "next";
  }
  return "?";
}

inline nlohmann::json formula_to_json(const FormulaPtr& f) {
  nlohmann::json j;
  j["kind"] = node_kind_name(f->kind);
  if (f->kind == NodeKind::Atom) {
    j["name"] = f->atom_name;
    j["index"] = f->atom_index;
  } else {
    nlohmann::json children = nlohmann::json::array();
    children.push_back(formula_to_json(f->lhs));
    if (f->rhs) children.push_back(formula_to_json(f->rhs));
    j["children"] = std::move(children);
  }
  return j;
}

}  // namespace lenus
