#pragma once

// Four-category query tree (Table / SPJ / Aggregate / Union, plus the EmptyTable
// produced by normalization) and the scalar expression and predicate grammars.
// All nodes are immutable and shared through shared_ptr<const T>.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/number.hpp"

namespace bagcheck {

struct Expr;
struct Pred;
struct Query;
using ExprPtr = std::shared_ptr<const Expr>;
using PredPtr = std::shared_ptr<const Pred>;
using QueryPtr = std::shared_ptr<const Query>;

struct Literal {
  enum class Kind { Int, Dec, Bool, Str };

  Kind kind = Kind::Int;
  Rational number;    // Int, Dec, and Bool (0/1)
  std::string text;   // Str

  static Literal integer(std::int64_t v) { return {Kind::Int, Rational(v), {}}; }
  static Literal decimal(Rational v) { return {Kind::Dec, v, {}}; }
  static Literal boolean(bool v) { return {Kind::Bool, Rational(v ? 1 : 0), {}}; }
  static Literal string(std::string v) { return {Kind::Str, Rational(0), std::move(v)}; }

  SqlType type() const;
  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Stable integer code for a string literal. Oracle values and solver terms
/// both compare strings through this code.
std::int64_t string_code(std::string_view text);

enum class ArithOp { Add, Sub, Mul, Div, Mod };
enum class CmpOp { Gt, Lt, Eq, Le, Ge };
enum class AggKind { Count, Sum, Min, Max, Avg };

std::string_view to_string(ArithOp op);
std::string_view to_string(CmpOp op);
std::string_view to_string(AggKind kind);

namespace expr {
struct Column {
  std::size_t index = 0;
};
struct Const {
  Literal value;
};
struct Null {};
struct Arith {
  ArithOp op = ArithOp::Add;
  ExprPtr lhs;
  ExprPtr rhs;
};
/// Uninterpreted scalar function.
struct Func {
  std::string name;
  std::vector<ExprPtr> args;
};
struct Case {
  std::vector<std::pair<PredPtr, ExprPtr>> branches;  // at least one
  ExprPtr otherwise;
};
}  // namespace expr

struct Expr {
  std::variant<expr::Column, expr::Const, expr::Null, expr::Arith, expr::Func, expr::Case> node;
};

/// Payload of an EXISTS-style predicate: does `input` contain a row r such that
/// `on` is TRUE over (args ++ r)? Columns 0..|args|-1 of `on` address the
/// predicate arguments, the rest address the input row.
struct ExistsBody {
  QueryPtr input;
  PredPtr on;
};

namespace pred {
struct Cmp {
  CmpOp op = CmpOp::Eq;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct And {
  PredPtr lhs;
  PredPtr rhs;
};
struct Or {
  PredPtr lhs;
  PredPtr rhs;
};
struct Not {
  PredPtr operand;
};
struct IsNull {
  ExprPtr operand;
};
/// Uninterpreted predicate. When `body` is set the symbol stands for EXISTS over
/// the body; the symbolic layer still treats it as uninterpreted.
struct Uninterpreted {
  std::string name;
  std::vector<ExprPtr> args;
  std::shared_ptr<const ExistsBody> body;
};
struct True {};
struct False {};
}  // namespace pred

struct Pred {
  std::variant<pred::Cmp, pred::And, pred::Or, pred::Not, pred::IsNull, pred::Uninterpreted, pred::True,
               pred::False>
      node;
};

struct AggFunc {
  static constexpr std::int64_t kStar = -1;  // COUNT(*)

  AggKind kind = AggKind::Count;
  std::int64_t operand = kStar;

  friend bool operator==(const AggFunc&, const AggFunc&) = default;
};

namespace plan {
struct Table {
  std::string name;
  std::shared_ptr<const TableSchema> schema;
};
struct Spj {
  std::vector<QueryPtr> inputs;
  PredPtr predicate;
  std::vector<ExprPtr> projections;
};
struct Agg {
  QueryPtr input;
  std::vector<std::size_t> group_by;
  std::vector<AggFunc> aggs;
};
struct Union {
  std::vector<QueryPtr> inputs;
};
/// Always evaluates to the empty bag; introduced only by normalization.
struct Empty {
  std::size_t arity = 0;
};
}  // namespace plan

struct Query {
  std::variant<plan::Table, plan::Spj, plan::Agg, plan::Union, plan::Empty> node;
};

// ---- construction helpers -------------------------------------------------

ExprPtr col(std::size_t index);
ExprPtr lit(Literal value);
ExprPtr lit_int(std::int64_t value);
ExprPtr null_expr();
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr func(std::string name, std::vector<ExprPtr> args);
ExprPtr case_expr(std::vector<std::pair<PredPtr, ExprPtr>> branches, ExprPtr otherwise);

PredPtr cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs);
PredPtr and_pred(PredPtr lhs, PredPtr rhs);
PredPtr or_pred(PredPtr lhs, PredPtr rhs);
PredPtr not_pred(PredPtr operand);
PredPtr is_null(ExprPtr operand);
PredPtr uf_pred(std::string name, std::vector<ExprPtr> args, std::shared_ptr<const ExistsBody> body = nullptr);
PredPtr true_pred();
PredPtr false_pred();

/// And-conjunction that drops TRUE operands and collapses on FALSE.
PredPtr conjoin(PredPtr lhs, PredPtr rhs);
PredPtr conjoin(const std::vector<PredPtr>& parts);
/// Splits nested Ands into their leaves, left to right.
std::vector<PredPtr> conjuncts(const PredPtr& p);

QueryPtr table(const Catalog& catalog, std::string_view name);
QueryPtr table(std::shared_ptr<const TableSchema> schema);
QueryPtr spj(std::vector<QueryPtr> inputs, PredPtr predicate, std::vector<ExprPtr> projections);
QueryPtr agg(QueryPtr input, std::vector<std::size_t> group_by, std::vector<AggFunc> aggs);
QueryPtr union_all(std::vector<QueryPtr> inputs);
QueryPtr empty_table(std::size_t arity);

/// Identity projection list [col(0) .. col(n-1)].
std::vector<ExprPtr> identity_projections(std::size_t n);

template <class T>
const T* as(const Query& q) {
  return std::get_if<T>(&q.node);
}
template <class T>
const T* as(const QueryPtr& q) {
  return std::get_if<T>(&q->node);
}
template <class T>
const T* as(const ExprPtr& e) {
  return std::get_if<T>(&e->node);
}
template <class T>
const T* as(const PredPtr& p) {
  return std::get_if<T>(&p->node);
}

// ---- structural queries ---------------------------------------------------

std::size_t arity(const Query& q);
inline std::size_t arity(const QueryPtr& q) { return arity(*q); }

/// Static column types of a node's output.
std::vector<SqlType> output_types(const Query& q);
SqlType expr_type(const Expr& e, std::span<const SqlType> input);

/// Concatenated input types of an SPJ node.
std::vector<SqlType> spj_input_types(const plan::Spj& s);

bool same(const QueryPtr& a, const QueryPtr& b);
bool same(const ExprPtr& a, const ExprPtr& b);
bool same(const PredPtr& a, const PredPtr& b);

std::size_t node_count(const Query& q);
/// Base tables referenced anywhere in the tree, including EXISTS bodies.
std::set<std::string> footprint(const Query& q);

/// Every invariant checked recursively; empty result means valid.
std::vector<std::string> validate(const Query& q, const Catalog& catalog);
/// Throws ValidationError listing all violations.
void require_valid(const Query& q, const Catalog& catalog);

// ---- rewriting helpers shared by the parser and the normalizer -------------

/// Substitute each Column(i) by replacement[i].
ExprPtr substitute(const ExprPtr& e, std::span<const ExprPtr> replacement);
PredPtr substitute(const PredPtr& p, std::span<const ExprPtr> replacement);
/// Add `offset` to every column index.
ExprPtr shift(const ExprPtr& e, std::size_t offset);
PredPtr shift(const PredPtr& p, std::size_t offset);
/// Column indices referenced (EXISTS bodies only through their arguments).
void collect_columns(const ExprPtr& e, std::set<std::size_t>& out);
void collect_columns(const PredPtr& p, std::set<std::size_t>& out);

}  // namespace bagcheck
