#pragma once

// Requirements tables: data model, the line-oriented `.rt` text format and
// static validation.
//
//   table <ident>
//   inputs  <ident> ("," <ident>)*
//   outputs <ident> ("," <ident>)*
//   init    <ident> "=" <number>
//   req <int>
//     pre    <boolexpr> | "-"
//     dur    <number>   | "-"
//     post   <boolexpr> | "-"
//     action <ident> "=" <arithexpr>
//
// `#` starts a comment.  Boolean operators are `&`, `|`, `~`; relational
// operators `>`, `<`, `>=`, `<=`, `==`, `!=`; `t` is the simulation time and
// `prev(s)` the value of `s` at the previous step.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rtfalsify/expr.hpp"

namespace rtfalsify {

struct Assignment {
  std::string target;
  Arith value;

  bool operator==(const Assignment&) const = default;
};

struct Requirement {
  int index = 0;
  std::optional<Bool> precondition;  // absent: always satisfied
  std::optional<double> duration;    // seconds
  std::optional<Bool> postcondition;
  std::vector<Assignment> actions;
  int line = 0;  // source line, 0 when built in code

  bool operator==(const Requirement& o) const {
    return index == o.index && precondition == o.precondition && duration == o.duration &&
           postcondition == o.postcondition && actions == o.actions;
  }
};

struct RequirementsTable {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, double> initial_values;
  std::vector<Requirement> requirements;

  bool operator==(const RequirementsTable&) const = default;

  [[nodiscard]] bool is_input(const std::string& s) const {
    return std::find(inputs.begin(), inputs.end(), s) != inputs.end();
  }
  [[nodiscard]] bool is_output(const std::string& s) const {
    return std::find(outputs.begin(), outputs.end(), s) != outputs.end();
  }
};

enum class DiagnosticKind {
  syntax_error,
  duplicate_index,
  non_contiguous_index,
  unknown_signal,
  missing_initial_value,
  negative_duration,
  duration_without_precondition,
  empty_requirement,
};

inline const char* to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::syntax_error: return "SyntaxError";
    case DiagnosticKind::duplicate_index: return "DuplicateIndex";
    case DiagnosticKind::non_contiguous_index: return "NonContiguousIndex";
    case DiagnosticKind::unknown_signal: return "UnknownSignal";
    case DiagnosticKind::missing_initial_value: return "MissingInitialValue";
    case DiagnosticKind::negative_duration: return "NegativeDuration";
    case DiagnosticKind::duration_without_precondition: return "DurationWithoutPrecondition";
    case DiagnosticKind::empty_requirement: return "EmptyRequirement";
  }
  return "Unknown";
}

struct Diagnostic {
  DiagnosticKind kind;
  int requirement = 0;  // 0 for table-level diagnostics
  int line = 0;
  int column = 0;
  std::string message;
};

inline std::string format(const Diagnostic& d) {
  std::ostringstream os;
  if (d.line > 0) {
    os << d.line << ':' << d.column << ": ";
  }
  os << to_string(d.kind);
  if (d.requirement > 0) os << " (req " << d.requirement << ")";
  os << ": " << d.message;
  return os.str();
}

class TableError : public std::runtime_error {
 public:
  explicit TableError(Diagnostic d) : std::runtime_error(format(d)), diag_(std::move(d)) {}

  [[nodiscard]] const Diagnostic& diagnostic() const noexcept { return diag_; }
  [[nodiscard]] DiagnosticKind kind() const noexcept { return diag_.kind; }

 private:
  Diagnostic diag_;
};

namespace detail {

enum class Tok {
  ident,
  number,
  comma,
  assign,
  lparen,
  rparen,
  plus,
  minus,
  star,
  slash,
  amp,
  bar,
  tilde,
  gt,
  lt,
  ge,
  le,
  eq,
  ne,
  end,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int column = 0;  // 1-based
};

[[noreturn]] inline void syntax_error(int line, int column, std::string msg) {
  throw TableError(Diagnostic{DiagnosticKind::syntax_error, 0, line, column, std::move(msg)});
}

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

/// Tokenizes one line (comment already stripped).  `offset` is the column of
/// `text[0]` minus one.
inline std::vector<Token> tokenize(std::string_view text, int line, int offset) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const int col = offset + static_cast<int>(i) + 1;
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      out.push_back({Tok::ident, std::string(text.substr(i, j - i)), 0.0, col});
      i = j;
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < text.size() && digit(text[i + 1]))) {
      std::size_t j = i;
      while (j < text.size() && (digit(text[j]) || text[j] == '.')) ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && digit(text[k])) {
          while (k < text.size() && digit(text[k])) ++k;
          j = k;
        }
      }
      const std::string_view lit = text.substr(i, j - i);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), v);
      if (ec != std::errc{} || ptr != lit.data() + lit.size()) {
        syntax_error(line, col, "malformed number '" + std::string(lit) + "'");
      }
      out.push_back({Tok::number, std::string(lit), v, col});
      i = j;
      continue;
    }
    auto two = [&](char next) { return i + 1 < text.size() && text[i + 1] == next; };
    Tok kind;
    std::size_t len = 1;
    switch (c) {
      case ',': kind = Tok::comma; break;
      case '(': kind = Tok::lparen; break;
      case ')': kind = Tok::rparen; break;
      case '+': kind = Tok::plus; break;
      case '-': kind = Tok::minus; break;
      case '*': kind = Tok::star; break;
      case '/': kind = Tok::slash; break;
      case '&': kind = Tok::amp; break;
      case '|': kind = Tok::bar; break;
      case '~': kind = Tok::tilde; break;
      case '>':
        kind = two('=') ? Tok::ge : Tok::gt;
        len  = two('=') ? 2 : 1;
        break;
      case '<':
        kind = two('=') ? Tok::le : Tok::lt;
        len  = two('=') ? 2 : 1;
        break;
      case '=':
        kind = two('=') ? Tok::eq : Tok::assign;
        len  = two('=') ? 2 : 1;
        break;
      case '!':
        if (!two('=')) syntax_error(line, col, "expected '!='");
        kind = Tok::ne;
        len  = 2;
        break;
      default: syntax_error(line, col, std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, std::string(text.substr(i, len)), 0.0, col});
    i += len;
  }
  out.push_back({Tok::end, "", 0.0, offset + static_cast<int>(text.size()) + 1});
  return out;
}

inline bool reserved(const std::string& s) { return s == "t" || s == "prev"; }

/// Recursive-descent parser over the tokens of a single line.
class ExprParser {
 public:
  ExprParser(std::vector<Token> toks, int line) : toks_(std::move(toks)), line_(line) {}

  Bool parse_bool_all() {
    Bool e = parse_or();
    expect_end();
    return e;
  }

  Arith parse_arith_all() {
    Arith e = parse_arith();
    expect_end();
    return e;
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  void expect_end() {
    if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "'");
  }

  [[noreturn]] void fail(const Token& at, std::string msg) const { syntax_error(line_, at.column, std::move(msg)); }

 private:
  static constexpr int kMaxDepth = 200;

  struct DepthGuard {
    ExprParser& p;
    explicit DepthGuard(ExprParser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail(p.peek(), "expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  Bool parse_or() {
    Bool lhs = parse_and();
    while (peek().kind == Tok::bar) {
      next();
      lhs = disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Bool parse_and() {
    Bool lhs = parse_unary();
    while (peek().kind == Tok::amp) {
      next();
      lhs = conj(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Bool parse_unary() {
    DepthGuard guard(*this);
    if (peek().kind == Tok::tilde) {
      next();
      return negate(parse_unary());
    }
    if (peek().kind != Tok::lparen) return parse_rel();

    // "(" opens either an arithmetic operand of a relation or a grouped
    // Boolean expression.  Try the relation first; keep the deeper error.
    const std::size_t start = pos_;
    try {
      return parse_rel();
    } catch (const TableError& rel_error) {
      pos_ = start;
      try {
        next();
        Bool inner = parse_or();
        if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
        next();
        return inner;
      } catch (const TableError& group_error) {
        if (group_error.diagnostic().column >= rel_error.diagnostic().column) throw;
        throw rel_error;
      }
    }
  }

  Bool parse_rel() {
    Arith lhs = parse_arith();
    RelOp op;
    switch (peek().kind) {
      case Tok::gt: op = RelOp::gt; break;
      case Tok::lt: op = RelOp::lt; break;
      case Tok::ge: op = RelOp::ge; break;
      case Tok::le: op = RelOp::le; break;
      case Tok::eq: op = RelOp::eq; break;
      case Tok::ne: op = RelOp::ne; break;
      default: fail(peek(), "expected relational operator");
    }
    next();
    return relation(op, std::move(lhs), parse_arith());
  }

  Arith parse_arith() {
    Arith lhs = parse_term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const ArithOp op = next().kind == Tok::plus ? ArithOp::add : ArithOp::sub;
      lhs              = binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  Arith parse_term() {
    Arith lhs = parse_factor();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const ArithOp op = next().kind == Tok::star ? ArithOp::mul : ArithOp::div;
      lhs              = binary(op, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  Arith parse_factor() {
    DepthGuard guard(*this);
    const Token& tok = peek();
    switch (tok.kind) {
      case Tok::number: next(); return constant(tok.number);
      case Tok::minus: {
        next();
        if (peek().kind == Tok::number) return constant(-next().number);
        return binary(ArithOp::sub, constant(0.0), parse_factor());
      }
      case Tok::lparen: {
        next();
        Arith inner = parse_arith();
        if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
        next();
        return inner;
      }
      case Tok::ident: {
        next();
        if (tok.text == "t") return time_var();
        if (tok.text == "prev") {
          if (peek().kind != Tok::lparen) fail(peek(), "expected '(' after prev");
          next();
          const Token& name = peek();
          if (name.kind != Tok::ident || reserved(name.text)) fail(name, "expected signal name in prev(...)");
          next();
          if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
          next();
          return prev_of(name.text);
        }
        return var(tok.text);
      }
      default: fail(tok, tok.kind == Tok::end ? "unexpected end of line" : "unexpected '" + tok.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
  int depth_ = 0;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses the text format without semantic validation.  Throws TableError
/// (syntax_error) with a line/column on malformed input.
inline RequirementsTable parse_table_syntax(std::string_view text) {
  using detail::ExprParser;
  using detail::Tok;
  using detail::Token;

  RequirementsTable table;
  bool seen_table = false, seen_inputs = false, seen_outputs = false;
  Requirement* current = nullptr;
  std::set<std::string> seen_fields;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<Token> toks = detail::tokenize(line, line_no, 0);
    if (toks.front().kind == Tok::end) continue;
    if (toks.front().kind != Tok::ident) detail::syntax_error(line_no, toks.front().column, "expected keyword");

    const std::string keyword = toks.front().text;
    const int kw_col          = toks.front().column;
    // Expression parsers see only the tokens after the keyword.
    std::vector<Token> rest(toks.begin() + 1, toks.end());
    ExprParser p(rest, line_no);

    auto expect_ident = [&](const char* what) {
      const Token& tok = p.peek();
      if (tok.kind != Tok::ident) p.fail(tok, std::string("expected ") + what);
      if (detail::reserved(tok.text)) p.fail(tok, "'" + tok.text + "' is reserved");
      return p.next().text;
    };
    auto is_dash = [&] { return rest.size() == 2 && rest[0].kind == Tok::minus; };
    auto signal_list = [&](std::vector<std::string>& into) {
      into.push_back(expect_ident("signal name"));
      while (p.peek().kind == Tok::comma) {
        p.next();
        into.push_back(expect_ident("signal name"));
      }
      p.expect_end();
    };
    auto signed_number = [&]() {
      double sign = 1.0;
      if (p.peek().kind == Tok::minus) {
        p.next();
        sign = -1.0;
      }
      if (p.peek().kind != Tok::number) p.fail(p.peek(), "expected number");
      return sign * p.next().number;
    };
    auto header_only = [&]() {
      if (current != nullptr) detail::syntax_error(line_no, kw_col, "'" + keyword + "' must precede the first req");
    };
    auto in_req = [&]() {
      if (current == nullptr) detail::syntax_error(line_no, kw_col, "'" + keyword + "' outside of a req block");
      if (!seen_fields.insert(keyword).second) {
        detail::syntax_error(line_no, kw_col, "duplicate '" + keyword + "' in req " + std::to_string(current->index));
      }
    };

    if (keyword == "table") {
      header_only();
      if (seen_table) detail::syntax_error(line_no, kw_col, "duplicate 'table'");
      seen_table = true;
      table.name = expect_ident("table name");
      p.expect_end();
    } else if (keyword == "inputs") {
      header_only();
      if (seen_inputs) detail::syntax_error(line_no, kw_col, "duplicate 'inputs'");
      seen_inputs = true;
      signal_list(table.inputs);
    } else if (keyword == "outputs") {
      header_only();
      if (seen_outputs) detail::syntax_error(line_no, kw_col, "duplicate 'outputs'");
      seen_outputs = true;
      signal_list(table.outputs);
    } else if (keyword == "init") {
      header_only();
      const Token at      = p.peek();
      std::string name    = expect_ident("signal name");
      if (p.peek().kind != Tok::assign) p.fail(p.peek(), "expected '='");
      p.next();
      const double value = signed_number();
      p.expect_end();
      if (!table.initial_values.emplace(name, value).second) p.fail(at, "duplicate init for '" + name + "'");
    } else if (keyword == "req") {
      if (p.peek().kind != Tok::number) p.fail(p.peek(), "expected requirement index");
      const Token idx = p.next();
      p.expect_end();
      if (idx.text.find_first_not_of("0123456789") != std::string::npos || idx.number < 1 || idx.number > 1e6) {
        p.fail(idx, "requirement index must be a positive integer");
      }
      Requirement r;
      r.index = static_cast<int>(idx.number);
      r.line  = line_no;
      table.requirements.push_back(std::move(r));
      current = &table.requirements.back();
      seen_fields.clear();
    } else if (keyword == "pre" || keyword == "post") {
      in_req();
      if (!is_dash()) {
        (keyword == "pre" ? current->precondition : current->postcondition) = p.parse_bool_all();
      }
    } else if (keyword == "dur") {
      in_req();
      if (!is_dash()) {
        current->duration = signed_number();
        p.expect_end();
      }
    } else if (keyword == "action") {
      if (current == nullptr) detail::syntax_error(line_no, kw_col, "'action' outside of a req block");
      std::string target = expect_ident("output name");
      if (p.peek().kind != Tok::assign) p.fail(p.peek(), "expected '='");
      p.next();
      current->actions.push_back({std::move(target), p.parse_arith_all()});
    } else {
      detail::syntax_error(line_no, kw_col, "unknown keyword '" + keyword + "'");
    }
  }

  if (!seen_table) detail::syntax_error(1, 1, "missing 'table' line");

  std::set<std::string> names;
  for (const auto* list : {&table.inputs, &table.outputs}) {
    for (const auto& s : *list) {
      if (!names.insert(s).second) detail::syntax_error(1, 1, "signal '" + s + "' declared twice");
    }
  }
  return table;
}

/// Checks every semantic rule of a parsed table.  Returns an empty list iff
/// the table is valid.
inline std::vector<Diagnostic> validate(const RequirementsTable& table) {
  std::vector<Diagnostic> out;
  auto report = [&](DiagnosticKind kind, const Requirement* r, std::string msg) {
    out.push_back(Diagnostic{kind, r ? r->index : 0, r ? r->line : 0, r && r->line ? 1 : 0, std::move(msg)});
  };

  auto known = [&](const std::string& s) { return table.is_input(s) || table.is_output(s); };

  for (const auto& [name, value] : table.initial_values) {
    if (!known(name)) report(DiagnosticKind::unknown_signal, nullptr, "init for undeclared signal '" + name + "'");
  }

  std::set<int> indexes;
  for (const auto& r : table.requirements) {
    if (!indexes.insert(r.index).second) {
      report(DiagnosticKind::duplicate_index, &r, "requirement index " + std::to_string(r.index) + " repeated");
    }
  }
  if (out.empty() || std::none_of(out.begin(), out.end(), [](const Diagnostic& d) {
        return d.kind == DiagnosticKind::duplicate_index;
      })) {
    int expected = 1;
    for (int idx : indexes) {
      if (idx != expected) {
        out.push_back(Diagnostic{DiagnosticKind::non_contiguous_index, idx, 0, 0,
                                 "indexes must be contiguous from 1; expected " + std::to_string(expected)});
        break;
      }
      ++expected;
    }
  }

  auto check_prev = [&](const Requirement& r, const References& refs, const char* where) {
    for (const auto& s : refs.prev) {
      if (!known(s)) {
        report(DiagnosticKind::unknown_signal, &r, std::string(where) + " uses prev of undeclared signal '" + s + "'");
      } else if (!table.initial_values.count(s)) {
        report(DiagnosticKind::missing_initial_value, &r, "prev(" + s + ") requires 'init " + s + " = ...'");
      }
    }
  };

  for (const auto& r : table.requirements) {
    if (!r.postcondition && r.actions.empty()) {
      report(DiagnosticKind::empty_requirement, &r, "requirement has neither postcondition nor actions");
    }
    if (r.duration) {
      if (*r.duration < 0.0) {
        report(DiagnosticKind::negative_duration, &r, "duration must be >= 0");
      }
      if (!r.precondition) {
        report(DiagnosticKind::duration_without_precondition, &r, "duration requires a precondition");
      }
    }
    if (r.precondition) {
      const References refs = references(*r.precondition);
      for (const auto& s : refs.signals) {
        if (!table.is_input(s)) {
          report(DiagnosticKind::unknown_signal, &r, "precondition references '" + s + "', which is not an input");
        }
      }
      check_prev(r, refs, "precondition");
    }
    if (r.postcondition) {
      const References refs = references(*r.postcondition);
      for (const auto& s : refs.signals) {
        if (!known(s)) report(DiagnosticKind::unknown_signal, &r, "postcondition references undeclared '" + s + "'");
      }
      check_prev(r, refs, "postcondition");
    }
    for (const auto& a : r.actions) {
      if (!table.is_output(a.target)) {
        report(DiagnosticKind::unknown_signal, &r, "action assigns '" + a.target + "', which is not an output");
      } else if (!table.initial_values.count(a.target)) {
        report(DiagnosticKind::missing_initial_value, &r, "action target '" + a.target + "' needs an init value");
      }
      const References refs = references(a.value);
      for (const auto& s : refs.signals) {
        if (!table.is_input(s)) {
          report(DiagnosticKind::unknown_signal, &r,
                 "action reads '" + s + "'; actions may read inputs, t and prev(...) only");
        }
      }
      check_prev(r, refs, "action");
    }
  }
  return out;
}

/// Parses and validates.  Throws TableError carrying the first diagnostic.
inline RequirementsTable parse_table(std::string_view text) {
  RequirementsTable table = parse_table_syntax(text);
  auto diags              = validate(table);
  if (!diags.empty()) throw TableError(std::move(diags.front()));
  return table;
}

/// Canonical text form; parse(to_text(t)) is structurally equal to t.
inline std::string to_text(const RequirementsTable& table) {
  std::ostringstream os;
  auto list = [&](const char* kw, const std::vector<std::string>& names) {
    if (names.empty()) return;
    os << kw;
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : " ") << names[i];
    os << '\n';
  };
  os << "table " << table.name << '\n';
  list("inputs ", table.inputs);
  list("outputs", table.outputs);
  for (const auto& [name, value] : table.initial_values) {
    os << "init    " << name << " = " << format_number(value) << '\n';
  }
  for (const auto& r : table.requirements) {
    os << "req " << r.index << '\n';
    os << "  pre    " << (r.precondition ? to_string(*r.precondition) : "-") << '\n';
    os << "  dur    " << (r.duration ? format_number(*r.duration) : "-") << '\n';
    os << "  post   " << (r.postcondition ? to_string(*r.postcondition) : "-") << '\n';
    for (const auto& a : r.actions) os << "  action " << a.target << " = " << to_string(a.value) << '\n';
  }
  return os.str();
}

}  // namespace rtfalsify
