#pragma once

// Expression trees shared by the table parser and the monitor.
//
// Arithmetic expressions range over signals, the simulation time `t`,
// constants and one-step-delayed signal reads `prev(s)`.  Boolean expressions
// are conjunctions/disjunctions/negations of relational atoms.  A Boolean
// expression has two readings: the classical truth value (`eval_bool`) and a
// signed satisfaction degree (`degree`) whose sign agrees with the truth value
// away from zero.

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>

namespace rtfalsify {

/// Extended real used for satisfaction degrees and fitness values.
using Degree = double;

inline constexpr Degree kTop    = std::numeric_limits<double>::infinity();
inline constexpr Degree kBottom = -kTop;

class EvalError : public std::runtime_error {
 public:
  enum class Kind { unbound_name, division_by_zero };

  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Valuation used for evaluation: current signal values, one-step-delayed
/// values and the simulation time in seconds.
struct Env {
  std::unordered_map<std::string, double> signals;
  std::unordered_map<std::string, double> prev;
  double t = 0.0;
};

enum class ArithOp { add, sub, mul, div };
enum class RelOp { gt, lt, le, ge, eq, ne };

class Arith;
class Bool;

namespace node {

struct Const {
  double value;
  bool operator==(const Const&) const = default;
};
struct SignalRef {
  std::string name;
  bool operator==(const SignalRef&) const = default;
};
struct TimeVar {
  bool operator==(const TimeVar&) const = default;
};
struct PrevRef {
  std::string name;
  bool operator==(const PrevRef&) const = default;
};
struct BinaryArith;
struct Rel;
struct And;
struct Or;
struct Not;

using ArithNode = std::variant<Const, SignalRef, TimeVar, PrevRef, BinaryArith>;
using BoolNode  = std::variant<Rel, And, Or, Not>;

}  // namespace node

/// Immutable arithmetic expression handle.  Copies share the tree.
class Arith {
 public:
  explicit Arith(node::ArithNode n);

  [[nodiscard]] const node::ArithNode& node() const noexcept;

 private:
  std::shared_ptr<const node::ArithNode> node_;
};

/// Immutable Boolean expression handle.  Leaves are always relational atoms.
class Bool {
 public:
  explicit Bool(node::BoolNode n);

  [[nodiscard]] const node::BoolNode& node() const noexcept;

 private:
  std::shared_ptr<const node::BoolNode> node_;
};

namespace node {

struct BinaryArith {
  ArithOp op;
  Arith lhs;
  Arith rhs;
};
struct Rel {
  RelOp op;
  Arith lhs;
  Arith rhs;
};
struct And {
  Bool lhs;
  Bool rhs;
};
struct Or {
  Bool lhs;
  Bool rhs;
};
struct Not {
  Bool operand;
};

}  // namespace node

inline Arith::Arith(node::ArithNode n) : node_(std::make_shared<const node::ArithNode>(std::move(n))) {}
inline Bool::Bool(node::BoolNode n) : node_(std::make_shared<const node::BoolNode>(std::move(n))) {}
inline const node::ArithNode& Arith::node() const noexcept { return *node_; }
inline const node::BoolNode& Bool::node() const noexcept { return *node_; }

// Structural equality.
bool operator==(const Arith& a, const Arith& b);
bool operator==(const Bool& a, const Bool& b);

namespace node {
inline bool operator==(const BinaryArith& a, const BinaryArith& b) {
  return a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs;
}
inline bool operator==(const Rel& a, const Rel& b) {
  return a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs;
}
inline bool operator==(const And& a, const And& b) { return a.lhs == b.lhs && a.rhs == b.rhs; }
inline bool operator==(const Or& a, const Or& b) { return a.lhs == b.lhs && a.rhs == b.rhs; }
inline bool operator==(const Not& a, const Not& b) { return a.operand == b.operand; }
}  // namespace node

inline bool operator==(const Arith& a, const Arith& b) {
  return &a.node() == &b.node() || a.node() == b.node();
}
inline bool operator==(const Bool& a, const Bool& b) {
  return &a.node() == &b.node() || a.node() == b.node();
}

// Construction helpers.

inline Arith constant(double v) { return Arith{node::Const{v}}; }
inline Arith var(std::string name) { return Arith{node::SignalRef{std::move(name)}}; }
inline Arith time_var() { return Arith{node::TimeVar{}}; }
inline Arith prev_of(std::string name) { return Arith{node::PrevRef{std::move(name)}}; }

inline Arith binary(ArithOp op, Arith lhs, Arith rhs) {
  return Arith{node::BinaryArith{op, std::move(lhs), std::move(rhs)}};
}
inline Bool relation(RelOp op, Arith lhs, Arith rhs) {
  return Bool{node::Rel{op, std::move(lhs), std::move(rhs)}};
}
inline Bool conj(Bool lhs, Bool rhs) { return Bool{node::And{std::move(lhs), std::move(rhs)}}; }
inline Bool disj(Bool lhs, Bool rhs) { return Bool{node::Or{std::move(lhs), std::move(rhs)}}; }
inline Bool negate(Bool operand) { return Bool{node::Not{std::move(operand)}}; }

inline Arith operator+(Arith a, Arith b) { return binary(ArithOp::add, std::move(a), std::move(b)); }
inline Arith operator-(Arith a, Arith b) { return binary(ArithOp::sub, std::move(a), std::move(b)); }
inline Arith operator*(Arith a, Arith b) { return binary(ArithOp::mul, std::move(a), std::move(b)); }
inline Arith operator/(Arith a, Arith b) { return binary(ArithOp::div, std::move(a), std::move(b)); }
inline Arith operator+(Arith a, double b) { return std::move(a) + constant(b); }
inline Arith operator-(Arith a, double b) { return std::move(a) - constant(b); }
inline Arith operator+(double a, Arith b) { return constant(a) + std::move(b); }

inline Bool operator>(Arith a, Arith b) { return relation(RelOp::gt, std::move(a), std::move(b)); }
inline Bool operator<(Arith a, Arith b) { return relation(RelOp::lt, std::move(a), std::move(b)); }
inline Bool operator<=(Arith a, Arith b) { return relation(RelOp::le, std::move(a), std::move(b)); }
inline Bool operator>=(Arith a, Arith b) { return relation(RelOp::ge, std::move(a), std::move(b)); }
inline Bool operator>(Arith a, double b) { return std::move(a) > constant(b); }
inline Bool operator<(Arith a, double b) { return std::move(a) < constant(b); }
inline Bool operator<=(Arith a, double b) { return std::move(a) <= constant(b); }
inline Bool operator>=(Arith a, double b) { return std::move(a) >= constant(b); }
inline Bool eq(Arith a, Arith b) { return relation(RelOp::eq, std::move(a), std::move(b)); }
inline Bool ne(Arith a, Arith b) { return relation(RelOp::ne, std::move(a), std::move(b)); }

inline Bool operator&(Bool a, Bool b) { return conj(std::move(a), std::move(b)); }
inline Bool operator|(Bool a, Bool b) { return disj(std::move(a), std::move(b)); }
inline Bool operator~(Bool a) { return negate(std::move(a)); }

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline double lookup(const std::unordered_map<std::string, double>& m, const std::string& name,
                     const char* what) {
  auto it = m.find(name);
  if (it == m.end()) {
    throw EvalError(EvalError::Kind::unbound_name, std::string("unbound ") + what + " '" + name + "'");
  }
  return it->second;
}

}  // namespace detail

inline double eval_arith(const Arith& e, const Env& env) {
  return std::visit(
      detail::overloaded{
          [](const node::Const& c) { return c.value; },
          [&](const node::SignalRef& s) { return detail::lookup(env.signals, s.name, "signal"); },
          [&](const node::TimeVar&) { return env.t; },
          [&](const node::PrevRef& p) { return detail::lookup(env.prev, p.name, "prev value of"); },
          [&](const node::BinaryArith& b) {
            const double l = eval_arith(b.lhs, env);
            const double r = eval_arith(b.rhs, env);
            switch (b.op) {
              case ArithOp::add: return l + r;
              case ArithOp::sub: return l - r;
              case ArithOp::mul: return l * r;
              case ArithOp::div:
                if (r == 0.0) throw EvalError(EvalError::Kind::division_by_zero, "division by zero");
                return l / r;
            }
            return 0.0;
          },
      },
      e.node());
}

inline bool compare(RelOp op, double l, double r) {
  switch (op) {
    case RelOp::gt: return l > r;
    case RelOp::lt: return l < r;
    case RelOp::le: return l <= r;
    case RelOp::ge: return l >= r;
    case RelOp::eq: return l == r;
    case RelOp::ne: return l != r;
  }
  return false;
}

/// Classical two-valued semantics.
inline bool eval_bool(const Bool& e, const Env& env) {
  return std::visit(
      detail::overloaded{
          [&](const node::Rel& r) { return compare(r.op, eval_arith(r.lhs, env), eval_arith(r.rhs, env)); },
          [&](const node::And& a) {
            const bool l = eval_bool(a.lhs, env);
            const bool r = eval_bool(a.rhs, env);
            return l && r;
          },
          [&](const node::Or& o) {
            const bool l = eval_bool(o.lhs, env);
            const bool r = eval_bool(o.rhs, env);
            return l || r;
          },
          [&](const node::Not& n) { return !eval_bool(n.operand, env); },
      },
      e.node());
}

/// Degree of a single relational atom.  `>`/`>=` map to lhs - rhs, `<`/`<=`
/// to rhs - lhs, `==` to -|lhs - rhs| and `!=` to |lhs - rhs|.
inline Degree atom_degree(RelOp op, double l, double r) {
  switch (op) {
    case RelOp::gt:
    case RelOp::ge: return l - r;
    case RelOp::lt:
    case RelOp::le: return r - l;
    case RelOp::eq: return -std::fabs(l - r);
    case RelOp::ne: return std::fabs(l - r);
  }
  return 0.0;
}

/// Quantitative semantics: `&` is min, `|` is max, `~` negates.
inline Degree degree(const Bool& e, const Env& env) {
  return std::visit(
      detail::overloaded{
          [&](const node::Rel& r) { return atom_degree(r.op, eval_arith(r.lhs, env), eval_arith(r.rhs, env)); },
          [&](const node::And& a) {
            const Degree l = degree(a.lhs, env);
            const Degree r = degree(a.rhs, env);
            return l < r ? l : r;
          },
          [&](const node::Or& o) {
            const Degree l = degree(o.lhs, env);
            const Degree r = degree(o.rhs, env);
            return l > r ? l : r;
          },
          [&](const node::Not& n) { return -degree(n.operand, env); },
      },
      e.node());
}

// Reference collection.

struct References {
  std::set<std::string> signals;
  std::set<std::string> prev;
  bool uses_time = false;

  void merge(const References& o) {
    signals.insert(o.signals.begin(), o.signals.end());
    prev.insert(o.prev.begin(), o.prev.end());
    uses_time = uses_time || o.uses_time;
  }
};

inline void collect(const Arith& e, References& out) {
  std::visit(detail::overloaded{
                 [](const node::Const&) {},
                 [&](const node::SignalRef& s) { out.signals.insert(s.name); },
                 [&](const node::TimeVar&) { out.uses_time = true; },
                 [&](const node::PrevRef& p) { out.prev.insert(p.name); },
                 [&](const node::BinaryArith& b) {
                   collect(b.lhs, out);
                   collect(b.rhs, out);
                 },
             },
             e.node());
}

inline void collect(const Bool& e, References& out) {
  std::visit(detail::overloaded{
                 [&](const node::Rel& r) {
                   collect(r.lhs, out);
                   collect(r.rhs, out);
                 },
                 [&](const node::And& a) {
                   collect(a.lhs, out);
                   collect(a.rhs, out);
                 },
                 [&](const node::Or& o) {
                   collect(o.lhs, out);
                   collect(o.rhs, out);
                 },
                 [&](const node::Not& n) { collect(n.operand, out); },
             },
             e.node());
}

template <class Expr>
References references(const Expr& e) {
  References r;
  collect(e, r);
  return r;
}

// Printing.  Binary nodes are fully parenthesized so the text reparses to a
// structurally equal tree.

/// Shortest round-trip decimal form; infinities print as `inf`/`-inf`.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline const char* symbol(ArithOp op) {
  switch (op) {
    case ArithOp::add: return "+";
    case ArithOp::sub: return "-";
    case ArithOp::mul: return "*";
    case ArithOp::div: return "/";
  }
  return "?";
}

inline const char* symbol(RelOp op) {
  switch (op) {
    case RelOp::gt: return ">";
    case RelOp::lt: return "<";
    case RelOp::le: return "<=";
    case RelOp::ge: return ">=";
    case RelOp::eq: return "==";
    case RelOp::ne: return "!=";
  }
  return "?";
}

inline std::string to_string(const Arith& e) {
  return std::visit(detail::overloaded{
                        [](const node::Const& c) { return format_number(c.value); },
                        [](const node::SignalRef& s) { return s.name; },
                        [](const node::TimeVar&) { return std::string("t"); },
                        [](const node::PrevRef& p) { return "prev(" + p.name + ")"; },
                        [](const node::BinaryArith& b) {
                          return "(" + to_string(b.lhs) + " " + symbol(b.op) + " " + to_string(b.rhs) + ")";
                        },
                    },
                    e.node());
}

inline std::string to_string(const Bool& e) {
  return std::visit(detail::overloaded{
                        [](const node::Rel& r) {
                          return to_string(r.lhs) + " " + symbol(r.op) + " " + to_string(r.rhs);
                        },
                        [](const node::And& a) { return "(" + to_string(a.lhs) + " & " + to_string(a.rhs) + ")"; },
                        [](const node::Or& o) { return "(" + to_string(o.lhs) + " | " + to_string(o.rhs) + ")"; },
                        [](const node::Not& n) { return "~(" + to_string(n.operand) + ")"; },
                    },
                    e.node());
}

}  // namespace rtfalsify
