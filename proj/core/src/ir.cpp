#include "bagcheck/ir.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

#include "bagcheck/error.hpp"
#include "overloaded.hpp"

namespace bagcheck {

namespace {

using detail::overloaded;

ExprPtr make_expr(auto node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }
PredPtr make_pred(auto node) { return std::make_shared<const Pred>(Pred{std::move(node)}); }
QueryPtr make_query(auto node) { return std::make_shared<const Query>(Query{std::move(node)}); }

SqlType numeric_join(SqlType a, SqlType b) {
  return (is_real(a) || is_real(b)) ? SqlType::Decimal : a;
}

}  // namespace

SqlType Literal::type() const {
  switch (kind) {
    case Kind::Int:
      return SqlType::Int;
    case Kind::Dec:
      return SqlType::Decimal;
    case Kind::Bool:
      return SqlType::Bool;
    case Kind::Str:
      return SqlType::Varchar;
  }
  return SqlType::Int;
}

std::int64_t string_code(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<std::int64_t>(h & 0x7fffffffull);
}

std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add:
      return "+";
    case ArithOp::Sub:
      return "-";
    case ArithOp::Mul:
      return "*";
    case ArithOp::Div:
      return "/";
    case ArithOp::Mod:
      return "%";
  }
  return "?";
}

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Gt:
      return ">";
    case CmpOp::Lt:
      return "<";
    case CmpOp::Eq:
      return "=";
    case CmpOp::Le:
      return "<=";
    case CmpOp::Ge:
      return ">=";
  }
  return "?";
}

std::string_view to_string(AggKind kind) {
  switch (kind) {
    case AggKind::Count:
      return "COUNT";
    case AggKind::Sum:
      return "SUM";
    case AggKind::Min:
      return "MIN";
    case AggKind::Max:
      return "MAX";
    case AggKind::Avg:
      return "AVG";
  }
  return "?";
}

// ---- construction ---------------------------------------------------------

ExprPtr col(std::size_t index) { return make_expr(expr::Column{index}); }
ExprPtr lit(Literal value) { return make_expr(expr::Const{std::move(value)}); }
ExprPtr lit_int(std::int64_t value) { return lit(Literal::integer(value)); }
ExprPtr null_expr() { return make_expr(expr::Null{}); }
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs) {
  return make_expr(expr::Arith{op, std::move(lhs), std::move(rhs)});
}
ExprPtr func(std::string name, std::vector<ExprPtr> args) {
  return make_expr(expr::Func{std::move(name), std::move(args)});
}
ExprPtr case_expr(std::vector<std::pair<PredPtr, ExprPtr>> branches, ExprPtr otherwise) {
  return make_expr(expr::Case{std::move(branches), std::move(otherwise)});
}

PredPtr cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs) { return make_pred(pred::Cmp{op, std::move(lhs), std::move(rhs)}); }
PredPtr and_pred(PredPtr lhs, PredPtr rhs) { return make_pred(pred::And{std::move(lhs), std::move(rhs)}); }
PredPtr or_pred(PredPtr lhs, PredPtr rhs) { return make_pred(pred::Or{std::move(lhs), std::move(rhs)}); }
PredPtr not_pred(PredPtr operand) { return make_pred(pred::Not{std::move(operand)}); }
PredPtr is_null(ExprPtr operand) { return make_pred(pred::IsNull{std::move(operand)}); }
PredPtr uf_pred(std::string name, std::vector<ExprPtr> args, std::shared_ptr<const ExistsBody> body) {
  return make_pred(pred::Uninterpreted{std::move(name), std::move(args), std::move(body)});
}
PredPtr true_pred() {
  static const PredPtr p = make_pred(pred::True{});
  return p;
}
PredPtr false_pred() {
  static const PredPtr p = make_pred(pred::False{});
  return p;
}

PredPtr conjoin(PredPtr lhs, PredPtr rhs) {
  if (as<pred::True>(lhs)) return rhs;
  if (as<pred::True>(rhs)) return lhs;
  if (as<pred::False>(lhs) || as<pred::False>(rhs)) return false_pred();
  return and_pred(std::move(lhs), std::move(rhs));
}

PredPtr conjoin(const std::vector<PredPtr>& parts) {
  PredPtr out = true_pred();
  for (const auto& p : parts) out = conjoin(out, p);
  return out;
}

std::vector<PredPtr> conjuncts(const PredPtr& p) {
  std::vector<PredPtr> out;
  std::vector<PredPtr> stack{p};
  while (!stack.empty()) {
    PredPtr top = stack.back();
    stack.pop_back();
    if (const auto* a = as<pred::And>(top)) {
      stack.push_back(a->rhs);
      stack.push_back(a->lhs);
    } else if (!as<pred::True>(top)) {
      out.push_back(top);
    }
  }
  return out;
}

QueryPtr table(const Catalog& catalog, std::string_view name) {
  return table(std::make_shared<const TableSchema>(catalog.resolve(name)));
}
QueryPtr table(std::shared_ptr<const TableSchema> schema) {
  std::string name = schema->name;
  return make_query(plan::Table{std::move(name), std::move(schema)});
}
QueryPtr spj(std::vector<QueryPtr> inputs, PredPtr predicate, std::vector<ExprPtr> projections) {
  return make_query(plan::Spj{std::move(inputs), std::move(predicate), std::move(projections)});
}
QueryPtr agg(QueryPtr input, std::vector<std::size_t> group_by, std::vector<AggFunc> aggs) {
  return make_query(plan::Agg{std::move(input), std::move(group_by), std::move(aggs)});
}
QueryPtr union_all(std::vector<QueryPtr> inputs) { return make_query(plan::Union{std::move(inputs)}); }
QueryPtr empty_table(std::size_t arity) { return make_query(plan::Empty{arity}); }

std::vector<ExprPtr> identity_projections(std::size_t n) {
  std::vector<ExprPtr> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(col(i));
  return out;
}

// ---- structure ------------------------------------------------------------

std::size_t arity(const Query& q) {
  return std::visit(overloaded{
                        [](const plan::Table& t) { return t.schema->arity(); },
                        [](const plan::Spj& s) { return s.projections.size(); },
                        [](const plan::Agg& a) { return a.group_by.size() + a.aggs.size(); },
                        [](const plan::Union& u) { return u.inputs.empty() ? std::size_t{0} : arity(u.inputs[0]); },
                        [](const plan::Empty& e) { return e.arity; },
                    },
                    q.node);
}

SqlType expr_type(const Expr& e, std::span<const SqlType> input) {
  return std::visit(overloaded{
                        [&](const expr::Column& c) { return c.index < input.size() ? input[c.index] : SqlType::Int; },
                        [](const expr::Const& c) { return c.value.type(); },
                        [](const expr::Null&) { return SqlType::Int; },
                        [&](const expr::Arith& a) {
                          SqlType l = expr_type(*a.lhs, input);
                          SqlType r = expr_type(*a.rhs, input);
                          return (is_real(l) || is_real(r)) ? SqlType::Decimal : SqlType::Int;
                        },
                        [](const expr::Func&) { return SqlType::Int; },
                        [&](const expr::Case& c) {
                          std::optional<SqlType> out;
                          auto merge = [&](const ExprPtr& value) {
                            if (as<expr::Null>(value)) return;
                            SqlType t = expr_type(*value, input);
                            out = out ? numeric_join(*out, t) : t;
                          };
                          for (const auto& [_, value] : c.branches) merge(value);
                          merge(c.otherwise);
                          return out.value_or(SqlType::Int);
                        },
                    },
                    e.node);
}

std::vector<SqlType> spj_input_types(const plan::Spj& s) {
  std::vector<SqlType> types;
  for (const auto& in : s.inputs) {
    auto t = output_types(*in);
    types.insert(types.end(), t.begin(), t.end());
  }
  return types;
}

std::vector<SqlType> output_types(const Query& q) {
  return std::visit(
      overloaded{
          [](const plan::Table& t) {
            std::vector<SqlType> out;
            for (const auto& c : t.schema->columns) out.push_back(c.type);
            return out;
          },
          [](const plan::Spj& s) {
            auto in = spj_input_types(s);
            std::vector<SqlType> out;
            for (const auto& p : s.projections) out.push_back(expr_type(*p, in));
            return out;
          },
          [](const plan::Agg& a) {
            auto in = output_types(*a.input);
            std::vector<SqlType> out;
            for (std::size_t g : a.group_by) out.push_back(g < in.size() ? in[g] : SqlType::Int);
            for (const auto& f : a.aggs) {
              switch (f.kind) {
                case AggKind::Count:
                  out.push_back(SqlType::Int);
                  break;
                case AggKind::Avg:
                  out.push_back(SqlType::Decimal);
                  break;
                default:
                  out.push_back(f.operand >= 0 && static_cast<std::size_t>(f.operand) < in.size()
                                    ? in[static_cast<std::size_t>(f.operand)]
                                    : SqlType::Int);
              }
            }
            return out;
          },
          [](const plan::Union& u) {
            std::vector<SqlType> out;
            for (const auto& in : u.inputs) {
              auto t = output_types(*in);
              if (out.empty()) {
                out = t;
                continue;
              }
              for (std::size_t i = 0; i < out.size() && i < t.size(); ++i) out[i] = numeric_join(out[i], t[i]);
            }
            return out;
          },
          [](const plan::Empty& e) { return std::vector<SqlType>(e.arity, SqlType::Int); },
      },
      q.node);
}

// ---- structural equality --------------------------------------------------

namespace {

template <class T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

bool same(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const expr::Column& x) { return x.index == as<expr::Column>(b)->index; },
          [&](const expr::Const& x) { return x.value == as<expr::Const>(b)->value; },
          [&](const expr::Null&) { return true; },
          [&](const expr::Arith& x) {
            const auto* y = as<expr::Arith>(b);
            return x.op == y->op && same(x.lhs, y->lhs) && same(x.rhs, y->rhs);
          },
          [&](const expr::Func& x) {
            const auto* y = as<expr::Func>(b);
            return x.name == y->name && same_list(x.args, y->args);
          },
          [&](const expr::Case& x) {
            const auto* y = as<expr::Case>(b);
            if (x.branches.size() != y->branches.size() || !same(x.otherwise, y->otherwise)) return false;
            for (std::size_t i = 0; i < x.branches.size(); ++i) {
              if (!same(x.branches[i].first, y->branches[i].first) ||
                  !same(x.branches[i].second, y->branches[i].second)) {
                return false;
              }
            }
            return true;
          },
      },
      a->node);
}

bool same(const PredPtr& a, const PredPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->node.index() != b->node.index()) return false;
  return std::visit(
      overloaded{
          [&](const pred::Cmp& x) {
            const auto* y = as<pred::Cmp>(b);
            return x.op == y->op && same(x.lhs, y->lhs) && same(x.rhs, y->rhs);
          },
          [&](const pred::And& x) {
            const auto* y = as<pred::And>(b);
            return same(x.lhs, y->lhs) && same(x.rhs, y->rhs);
          },
          [&](const pred::Or& x) {
            const auto* y = as<pred::Or>(b);
            return same(x.lhs, y->lhs) && same(x.rhs, y->rhs);
          },
          [&](const pred::Not& x) { return same(x.operand, as<pred::Not>(b)->operand); },
          [&](const pred::IsNull& x) { return same(x.operand, as<pred::IsNull>(b)->operand); },
          [&](const pred::Uninterpreted& x) {
            const auto* y = as<pred::Uninterpreted>(b);
            if (x.name != y->name || !same_list(x.args, y->args)) return false;
            if (!x.body || !y->body) return !x.body && !y->body;
            return same(x.body->input, y->body->input) && same(x.body->on, y->body->on);
          },
          [&](const pred::True&) { return true; },
          [&](const pred::False&) { return true; },
      },
      a->node);
}

bool same(const QueryPtr& a, const QueryPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->node.index() != b->node.index()) return false;
  return std::visit(overloaded{
                        [&](const plan::Table& x) { return x.name == as<plan::Table>(b)->name; },
                        [&](const plan::Spj& x) {
                          const auto* y = as<plan::Spj>(b);
                          return same_list(x.inputs, y->inputs) && same(x.predicate, y->predicate) &&
                                 same_list(x.projections, y->projections);
                        },
                        [&](const plan::Agg& x) {
                          const auto* y = as<plan::Agg>(b);
                          return x.group_by == y->group_by && x.aggs == y->aggs && same(x.input, y->input);
                        },
                        [&](const plan::Union& x) { return same_list(x.inputs, as<plan::Union>(b)->inputs); },
                        [&](const plan::Empty& x) { return x.arity == as<plan::Empty>(b)->arity; },
                    },
                    a->node);
}

// ---- traversal ------------------------------------------------------------

namespace {

void visit_subqueries(const Pred& p, const std::function<void(const Query&)>& fn);

void visit_subqueries(const Expr& e, const std::function<void(const Query&)>& fn) {
  std::visit(overloaded{
                 [&](const expr::Arith& a) {
                   visit_subqueries(*a.lhs, fn);
                   visit_subqueries(*a.rhs, fn);
                 },
                 [&](const expr::Func& f) {
                   for (const auto& x : f.args) visit_subqueries(*x, fn);
                 },
                 [&](const expr::Case& c) {
                   for (const auto& [w, t] : c.branches) {
                     visit_subqueries(*w, fn);
                     visit_subqueries(*t, fn);
                   }
                   visit_subqueries(*c.otherwise, fn);
                 },
                 [](const auto&) {},
             },
             e.node);
}

void visit_subqueries(const Pred& p, const std::function<void(const Query&)>& fn) {
  std::visit(overloaded{
                 [&](const pred::Cmp& c) {
                   visit_subqueries(*c.lhs, fn);
                   visit_subqueries(*c.rhs, fn);
                 },
                 [&](const pred::And& a) {
                   visit_subqueries(*a.lhs, fn);
                   visit_subqueries(*a.rhs, fn);
                 },
                 [&](const pred::Or& a) {
                   visit_subqueries(*a.lhs, fn);
                   visit_subqueries(*a.rhs, fn);
                 },
                 [&](const pred::Not& n) { visit_subqueries(*n.operand, fn); },
                 [&](const pred::IsNull& n) { visit_subqueries(*n.operand, fn); },
                 [&](const pred::Uninterpreted& u) {
                   for (const auto& x : u.args) visit_subqueries(*x, fn);
                   if (u.body) {
                     fn(*u.body->input);
                     visit_subqueries(*u.body->on, fn);
                   }
                 },
                 [](const auto&) {},
             },
             p.node);
}

}  // namespace

std::size_t node_count(const Query& q) {
  return std::visit(overloaded{
                        [](const plan::Spj& s) {
                          std::size_t n = 1;
                          for (const auto& in : s.inputs) n += node_count(*in);
                          return n;
                        },
                        [](const plan::Agg& a) { return 1 + node_count(*a.input); },
                        [](const plan::Union& u) {
                          std::size_t n = 1;
                          for (const auto& in : u.inputs) n += node_count(*in);
                          return n;
                        },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    q.node);
}

std::set<std::string> footprint(const Query& q) {
  std::set<std::string> out;
  std::function<void(const Query&)> walk = [&](const Query& n) {
    std::visit(overloaded{
                   [&](const plan::Table& t) { out.insert(t.name); },
                   [&](const plan::Spj& s) {
                     for (const auto& in : s.inputs) walk(*in);
                     visit_subqueries(*s.predicate, walk);
                     for (const auto& p : s.projections) visit_subqueries(*p, walk);
                   },
                   [&](const plan::Agg& a) { walk(*a.input); },
                   [&](const plan::Union& u) {
                     for (const auto& in : u.inputs) walk(*in);
                   },
                   [](const plan::Empty&) {},
               },
               n.node);
  };
  walk(q);
  return out;
}

// ---- validation -----------------------------------------------------------

namespace {

class Validator {
 public:
  explicit Validator(const Catalog& catalog) : catalog_(catalog) {}

  std::vector<std::string> violations;

  void query(const Query& q, const std::string& path) {
    std::visit(overloaded{
                   [&](const plan::Table& t) {
                     const TableSchema* s = catalog_.find(t.name);
                     if (!s) {
                       fail(path, "unknown table " + t.name);
                     } else if (!t.schema || t.schema->arity() != s->arity()) {
                       fail(path, "table " + t.name + " does not match the catalog schema");
                     }
                   },
                   [&](const plan::Spj& s) {
                     if (s.inputs.empty()) fail(path, "spj without inputs");
                     std::size_t width = 0;
                     for (std::size_t i = 0; i < s.inputs.size(); ++i) {
                       query(*s.inputs[i], path + "/spj[" + std::to_string(i) + "]");
                       width += arity(*s.inputs[i]);
                     }
                     if (!s.predicate) {
                       fail(path, "spj without predicate");
                     } else {
                       predicate(*s.predicate, width, path + "/predicate");
                     }
                     if (s.projections.empty()) fail(path, "spj without projections");
                     for (const auto& p : s.projections) expression(*p, width, path + "/projection");
                   },
                   [&](const plan::Agg& a) {
                     query(*a.input, path + "/agg");
                     std::size_t width = arity(*a.input);
                     for (std::size_t g : a.group_by) {
                       if (g >= width) fail(path, "group_by index out of range: " + std::to_string(g));
                     }
                     if (a.group_by.empty() && a.aggs.empty()) fail(path, "aggregate with no output columns");
                     for (const auto& f : a.aggs) {
                       if (f.operand == AggFunc::kStar) {
                         if (f.kind != AggKind::Count) fail(path, "only COUNT accepts *");
                       } else if (f.operand < 0 || static_cast<std::size_t>(f.operand) >= width) {
                         fail(path, "aggregate operand index out of range: " + std::to_string(f.operand));
                       }
                     }
                   },
                   [&](const plan::Union& u) {
                     if (u.inputs.empty()) {
                       fail(path, "union without inputs");
                       return;
                     }
                     std::size_t first = arity(*u.inputs[0]);
                     if (first == 0) fail(path, "union of zero-arity inputs");
                     for (std::size_t i = 0; i < u.inputs.size(); ++i) {
                       query(*u.inputs[i], path + "/union[" + std::to_string(i) + "]");
                       if (arity(*u.inputs[i]) != first) fail(path, "arity mismatch between union inputs");
                     }
                   },
                   [&](const plan::Empty& e) {
                     if (e.arity == 0) fail(path, "empty table of arity 0");
                   },
               },
               q.node);
  }

  void expression(const Expr& e, std::size_t width, const std::string& path) {
    std::visit(overloaded{
                   [&](const expr::Column& c) {
                     if (c.index >= width) fail(path, "index out of range: " + std::to_string(c.index));
                   },
                   [&](const expr::Arith& a) {
                     expression(*a.lhs, width, path);
                     expression(*a.rhs, width, path);
                   },
                   [&](const expr::Func& f) {
                     if (f.name.empty()) fail(path, "function with empty name");
                     for (const auto& x : f.args) expression(*x, width, path);
                   },
                   [&](const expr::Case& c) {
                     if (c.branches.empty()) fail(path, "case without branches");
                     for (const auto& [w, t] : c.branches) {
                       predicate(*w, width, path);
                       expression(*t, width, path);
                     }
                     expression(*c.otherwise, width, path);
                   },
                   [](const auto&) {},
               },
               e.node);
  }

  void predicate(const Pred& p, std::size_t width, const std::string& path) {
    std::visit(overloaded{
                   [&](const pred::Cmp& c) {
                     expression(*c.lhs, width, path);
                     expression(*c.rhs, width, path);
                   },
                   [&](const pred::And& a) {
                     predicate(*a.lhs, width, path);
                     predicate(*a.rhs, width, path);
                   },
                   [&](const pred::Or& a) {
                     predicate(*a.lhs, width, path);
                     predicate(*a.rhs, width, path);
                   },
                   [&](const pred::Not& n) { predicate(*n.operand, width, path); },
                   [&](const pred::IsNull& n) { expression(*n.operand, width, path); },
                   [&](const pred::Uninterpreted& u) {
                     if (u.name.empty()) fail(path, "predicate with empty name");
                     for (const auto& x : u.args) expression(*x, width, path);
                     if (u.body) {
                       query(*u.body->input, path + "/exists");
                       predicate(*u.body->on, u.args.size() + arity(*u.body->input), path + "/exists");
                     }
                   },
                   [](const auto&) {},
               },
               p.node);
  }

 private:
  void fail(const std::string& path, const std::string& what) {
    violations.push_back((path.empty() ? std::string("/") : path) + ": " + what);
  }

  const Catalog& catalog_;
};

}  // namespace

std::vector<std::string> validate(const Query& q, const Catalog& catalog) {
  Validator v(catalog);
  v.query(q, "");
  return std::move(v.violations);
}

void require_valid(const Query& q, const Catalog& catalog) {
  auto violations = validate(q, catalog);
  if (violations.empty()) return;
  std::ostringstream out;
  out << "invalid plan:";
  for (const auto& v : violations) out << "\n  " << v;
  throw ValidationError(out.str());
}

// ---- rewriting ------------------------------------------------------------

ExprPtr substitute(const ExprPtr& e, std::span<const ExprPtr> replacement) {
  return std::visit(overloaded{
                        [&](const expr::Column& c) -> ExprPtr {
                          if (c.index >= replacement.size()) throw Error("substitute: column out of range");
                          return replacement[c.index];
                        },
                        [&](const expr::Arith& a) -> ExprPtr {
                          return arith(a.op, substitute(a.lhs, replacement), substitute(a.rhs, replacement));
                        },
                        [&](const expr::Func& f) -> ExprPtr {
                          std::vector<ExprPtr> args;
                          for (const auto& x : f.args) args.push_back(substitute(x, replacement));
                          return func(f.name, std::move(args));
                        },
                        [&](const expr::Case& c) -> ExprPtr {
                          std::vector<std::pair<PredPtr, ExprPtr>> branches;
                          for (const auto& [w, t] : c.branches) {
                            branches.emplace_back(substitute(w, replacement), substitute(t, replacement));
                          }
                          return case_expr(std::move(branches), substitute(c.otherwise, replacement));
                        },
                        [&](const auto&) -> ExprPtr { return e; },
                    },
                    e->node);
}

PredPtr substitute(const PredPtr& p, std::span<const ExprPtr> replacement) {
  return std::visit(overloaded{
                        [&](const pred::Cmp& c) -> PredPtr {
                          return cmp(c.op, substitute(c.lhs, replacement), substitute(c.rhs, replacement));
                        },
                        [&](const pred::And& a) -> PredPtr {
                          return and_pred(substitute(a.lhs, replacement), substitute(a.rhs, replacement));
                        },
                        [&](const pred::Or& a) -> PredPtr {
                          return or_pred(substitute(a.lhs, replacement), substitute(a.rhs, replacement));
                        },
                        [&](const pred::Not& n) -> PredPtr { return not_pred(substitute(n.operand, replacement)); },
                        [&](const pred::IsNull& n) -> PredPtr { return is_null(substitute(n.operand, replacement)); },
                        [&](const pred::Uninterpreted& u) -> PredPtr {
                          // The body addresses its own argument positions, so it is left untouched.
                          std::vector<ExprPtr> args;
                          for (const auto& x : u.args) args.push_back(substitute(x, replacement));
                          return uf_pred(u.name, std::move(args), u.body);
                        },
                        [&](const auto&) -> PredPtr { return p; },
                    },
                    p->node);
}

namespace {

std::vector<ExprPtr> shifted_columns(const std::set<std::size_t>& used, std::size_t offset) {
  std::size_t top = used.empty() ? 0 : *used.rbegin() + 1;
  std::vector<ExprPtr> out(top);
  for (std::size_t i : used) out[i] = col(i + offset);
  return out;
}

}  // namespace

ExprPtr shift(const ExprPtr& e, std::size_t offset) {
  if (offset == 0) return e;
  std::set<std::size_t> used;
  collect_columns(e, used);
  auto repl = shifted_columns(used, offset);
  return substitute(e, repl);
}

PredPtr shift(const PredPtr& p, std::size_t offset) {
  if (offset == 0) return p;
  std::set<std::size_t> used;
  collect_columns(p, used);
  auto repl = shifted_columns(used, offset);
  return substitute(p, repl);
}

void collect_columns(const ExprPtr& e, std::set<std::size_t>& out) {
  std::visit(overloaded{
                 [&](const expr::Column& c) { out.insert(c.index); },
                 [&](const expr::Arith& a) {
                   collect_columns(a.lhs, out);
                   collect_columns(a.rhs, out);
                 },
                 [&](const expr::Func& f) {
                   for (const auto& x : f.args) collect_columns(x, out);
                 },
                 [&](const expr::Case& c) {
                   for (const auto& [w, t] : c.branches) {
                     collect_columns(w, out);
                     collect_columns(t, out);
                   }
                   collect_columns(c.otherwise, out);
                 },
                 [](const auto&) {},
             },
             e->node);
}

void collect_columns(const PredPtr& p, std::set<std::size_t>& out) {
  std::visit(overloaded{
                 [&](const pred::Cmp& c) {
                   collect_columns(c.lhs, out);
                   collect_columns(c.rhs, out);
                 },
                 [&](const pred::And& a) {
                   collect_columns(a.lhs, out);
                   collect_columns(a.rhs, out);
                 },
                 [&](const pred::Or& a) {
                   collect_columns(a.lhs, out);
                   collect_columns(a.rhs, out);
                 },
                 [&](const pred::Not& n) { collect_columns(n.operand, out); },
                 [&](const pred::IsNull& n) { collect_columns(n.operand, out); },
                 [&](const pred::Uninterpreted& u) {
                   for (const auto& x : u.args) collect_columns(x, out);
                 },
                 [](const auto&) {},
             },
             p->node);
}

}  // namespace bagcheck
