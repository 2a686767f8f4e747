#pragma once

// Hash-consed first-order terms over Int, Real and Bool, printable as SMT-LIB2.
// A TermFactory is owned by one verification task and is not thread-safe.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bagcheck/number.hpp"

namespace bagcheck {

enum class Sort { Int, Real, Bool };

std::string_view to_string(Sort sort);

enum class TermOp {
  Var,
  Num,  // Int or Real literal
  BoolLit,
  Add,
  Sub,
  Mul,
  RealDiv,
  IntDiv,  // SMT-LIB `div`
  IntMod,  // SMT-LIB `mod`
  Neg,
  ToReal,
  Lt,
  Le,
  Gt,
  Ge,
  Eq,
  And,
  Or,
  Not,
  Ite,
  Apply,
};

struct TermNode {
  TermOp op;
  Sort sort;
  std::vector<const TermNode*> args;
  std::string name;  // Var, Apply
  Rational value;    // Num; BoolLit stores 0/1
  std::uint32_t id;
};
using Term = const TermNode*;

struct UfSignature {
  std::vector<Sort> args;
  Sort result;

  friend bool operator==(const UfSignature&, const UfSignature&) = default;
};

class TermFactory {
 public:
  TermFactory() = default;
  TermFactory(const TermFactory&) = delete;
  TermFactory& operator=(const TermFactory&) = delete;

  /// Named variable; the same name always yields the same term.
  Term var(const std::string& name, Sort sort);
  /// Variable named `<prefix><counter>`, unique within this factory.
  Term fresh(std::string_view prefix, Sort sort);

  Term num(Rational value, Sort sort);
  Term int_lit(std::int64_t value) { return num(Rational(value), Sort::Int); }
  Term boolean(bool value);
  Term truth() { return boolean(true); }
  Term falsity() { return boolean(false); }

  // Arithmetic coerces Int operands to Real when the other side is Real.
  Term add(Term a, Term b);
  Term sub(Term a, Term b);
  Term mul(Term a, Term b);
  Term real_div(Term a, Term b);
  Term int_div(Term a, Term b);
  Term int_mod(Term a, Term b);
  Term neg(Term a);
  Term to_real(Term a);

  Term lt(Term a, Term b);
  Term le(Term a, Term b);
  Term gt(Term a, Term b);
  Term ge(Term a, Term b);
  Term eq(Term a, Term b);

  Term and_(Term a, Term b);
  Term and_(const std::vector<Term>& parts);
  Term or_(Term a, Term b);
  Term or_(const std::vector<Term>& parts);
  Term not_(Term a);
  Term implies(Term a, Term b) { return or_(not_(a), b); }
  Term iff(Term a, Term b) { return eq(a, b); }
  Term ite(Term c, Term a, Term b);

  /// Uninterpreted function application; the name must always be used with one signature.
  Term apply(const std::string& name, std::vector<Term> args, Sort result);
  const std::map<std::string, UfSignature>& functions() const { return functions_; }

  /// Replace variables according to `mapping`, rebuilding through the simplifier.
  Term substitute(Term t, const std::unordered_map<Term, Term>& mapping);

  std::size_t size() const { return nodes_.size(); }

 private:
  Term make(TermOp op, Sort sort, std::vector<Term> args, std::string name = {}, Rational value = {});
  std::pair<Term, Term> unify(Term a, Term b);
  Term compare(TermOp op, Term a, Term b);

  std::deque<TermNode> nodes_;
  std::unordered_map<std::string, Term> index_;
  std::map<std::string, UfSignature> functions_;
  std::uint64_t counter_ = 0;
};

/// Free variables in first-occurrence order.
std::vector<Term> free_variables(const std::vector<Term>& roots);
bool mentions(Term t, Term variable);

/// SMT-LIB2 rendering of `t`, using `(/ n d)` and `(- x)` for rational literals.
std::string to_smtlib(Term t);

/// Declarations, shared-subterm definitions and one assert per formula.
std::string smtlib_script(const TermFactory& factory, const std::vector<Term>& assertions);

/// Concrete evaluation. Variables must be bound; `uf` interprets applications
/// (throws std::invalid_argument when absent and an application is reached).
/// Division by zero, which SMT-LIB leaves unspecified, evaluates to 0.
using ConcreteValue = std::variant<Rational, bool>;
using UfInterpretation = std::function<ConcreteValue(const std::string&, const std::vector<ConcreteValue>&)>;
ConcreteValue evaluate(Term t, const std::unordered_map<Term, ConcreteValue>& bindings, const UfInterpretation& uf = {});

}  // namespace bagcheck
