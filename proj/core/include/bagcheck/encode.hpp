#pragma once

// Symbolic tuples and the three-valued encoding of predicates and projection
// expressions over them.

#include <chrono>
#include <span>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/smt.hpp"
#include "bagcheck/term.hpp"

namespace bagcheck {

/// One column: its value and whether it is NULL. When `isnull` holds the value is meaningless.
struct SymCol {
  Term val = nullptr;
  Term isnull = nullptr;
};
using SymTuple = std::vector<SymCol>;

/// Query Pair Symbolic Representation: whenever `cond` and `assign` hold, the
/// row `cols1` of one query corresponds to the row `cols2` of the other.
struct Qpsr {
  SymTuple cols1;
  SymTuple cols2;
  Term cond = nullptr;
  Term assign = nullptr;
};

/// Kleene encoding of a predicate: `truth` is meaningful only when `null` is false.
struct PredCode {
  Term truth = nullptr;
  Term null = nullptr;
  Term assign = nullptr;
};

inline Sort sort_of(SqlType type) { return is_real(type) ? Sort::Real : Sort::Int; }

class Encoder {
 public:
  explicit Encoder(TermFactory& terms) : terms_(terms) {}

  TermFactory& terms() { return terms_; }

  /// Fresh variables per column; non-nullable columns get isnull = false.
  SymTuple fresh_tuple(std::span<const SqlType> types, const std::vector<bool>& nullable);
  SymTuple fresh_tuple(const TableSchema& schema);
  SymCol fresh_col(Sort sort, bool nullable = true);

  PredCode const_pred(const Pred& p, const SymTuple& t);
  /// The row filter: truth ∧ ¬null.
  Term filter(const PredCode& code);

  /// Returns the projected tuple and the conjunction of auxiliary definitions.
  std::pair<SymTuple, Term> const_expr(std::span<const ExprPtr> exprs, const SymTuple& t);
  SymCol encode_expr(const Expr& e, const SymTuple& t, std::vector<Term>& assign);

  /// NULL-equal column equality: n1 = n2 ∧ (n1 ∨ v1 = v2).
  Term col_equal(const SymCol& a, const SymCol& b);
  Term tuple_equal(const SymTuple& a, const SymTuple& b);

  /// Name of the solver symbol standing for a scalar function or predicate.
  static std::string function_symbol(const std::string& name, std::span<const Sort> args, Sort result);
  static std::string predicate_symbol(const std::string& name, std::span<const Sort> args);

 private:
  PredCode encode_pred(const Pred& p, const SymTuple& t, std::vector<Term>& assign);

  TermFactory& terms_;
};

/// Literal value of a constant in the solver's domain.
Term encode_literal(TermFactory& terms, const Literal& value);

/// Checks whether `f` is unsatisfiable.
SolverVerdict check_unsat(SmtSession& session, const TermFactory& terms, Term f, std::chrono::milliseconds budget,
                          bool want_model = false);

enum class FullCheck { Proven, Refuted, Unknown };

/// Submits COND ∧ ASSIGN ∧ ¬(COLS1 = COLS2); Proven iff Unsat.
FullCheck check_full_equivalence(SmtSession& session, Encoder& encoder, const Qpsr& q,
                                 std::chrono::milliseconds budget, Model* counterexample = nullptr);

/// Arity, sorting and variable-closure checks on a Qpsr. Empty when well-formed.
std::vector<std::string> qpsr_problems(const Qpsr& q);

}  // namespace bagcheck
