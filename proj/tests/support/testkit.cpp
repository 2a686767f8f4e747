#include "testkit.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "bagcheck/plan_io.hpp"
#include "bagcheck/sql_parser.hpp"
#include "json.hpp"

#ifndef BAGCHECK_CORPUS_DIR
#error "BAGCHECK_CORPUS_DIR must point at tests/corpus"
#endif

namespace bagcheck::testkit {

using nlohmann::json;

// ---- corpus ---------------------------------------------------------------

std::string corpus_path(const std::string& relative) { return std::string(BAGCHECK_CORPUS_DIR) + "/" + relative; }

Catalog corpus_catalog() { return load_catalog_file(corpus_path("catalog.json")); }

QueryPtr corpus_query(const std::string& relative, const Catalog& catalog) {
  std::ifstream in(corpus_path(relative));
  if (!in) throw std::runtime_error("missing corpus file " + relative);
  std::stringstream text;
  text << in.rdbuf();
  return parse_sql(text.str(), catalog);
}

std::vector<CorpusPair> load_corpus(const Catalog& catalog) {
  std::ifstream in(corpus_path("manifest.json"));
  json manifest = json::parse(in);
  std::vector<CorpusPair> out;
  for (const auto& p : manifest.at("pairs")) {
    CorpusPair pair;
    pair.id = p.at("id").get<std::string>();
    pair.category = p.value("category", "");
    pair.rules_only = p.value("rules_only", false);
    pair.q1 = corpus_query(p.at("q1").get<std::string>(), catalog);
    pair.q2 = corpus_query(p.at("q2").get<std::string>(), catalog);
    out.push_back(std::move(pair));
  }
  return out;
}

Catalog fuzz_catalog() {
  return load_catalog(R"({"tables": [
    {"name": "R", "columns": [{"name": "A", "type": "INT"}, {"name": "B", "type": "INT"},
                              {"name": "C", "type": "DECIMAL"}]},
    {"name": "S", "columns": [{"name": "A", "type": "INT", "nullable": false}, {"name": "D", "type": "INT"}],
     "primary_key": ["A"]},
    {"name": "T", "columns": [{"name": "E", "type": "INT"}, {"name": "F", "type": "VARCHAR"},
                              {"name": "G", "type": "BOOL"}]}
  ]})");
}

// ---- generation -----------------------------------------------------------

namespace {

const char* const kWords[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};

bool numeric(SqlType t) { return t == SqlType::Int || t == SqlType::Decimal || t == SqlType::Date; }

std::vector<std::size_t> columns_where(std::span<const SqlType> types, const std::function<bool(SqlType)>& keep) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (keep(types[i])) out.push_back(i);
  }
  return out;
}

CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Gt:
      return CmpOp::Lt;
    case CmpOp::Lt:
      return CmpOp::Gt;
    case CmpOp::Le:
      return CmpOp::Ge;
    case CmpOp::Ge:
      return CmpOp::Le;
    case CmpOp::Eq:
      return CmpOp::Eq;
  }
  return op;
}

/// The comparison whose Kleene value is the negation of `op`'s; nullopt for Eq.
std::optional<CmpOp> complement(CmpOp op) {
  switch (op) {
    case CmpOp::Gt:
      return CmpOp::Le;
    case CmpOp::Lt:
      return CmpOp::Ge;
    case CmpOp::Le:
      return CmpOp::Gt;
    case CmpOp::Ge:
      return CmpOp::Lt;
    case CmpOp::Eq:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

Generator::Generator(const Catalog& catalog, std::uint64_t seed, GenOptions options)
    : catalog_(catalog), rng_(seed), options_(options) {}

std::size_t Generator::pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

bool Generator::chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

QueryPtr Generator::base_table() {
  std::vector<std::string> names;
  for (const auto& [name, _] : catalog_.tables()) names.push_back(name);
  return table(catalog_, names[pick(names.size())]);
}

ExprPtr Generator::atom(std::span<const SqlType> types) {
  auto nums = columns_where(types, numeric);
  if (!nums.empty() && chance(0.8)) return col(nums[pick(nums.size())]);
  if (chance(0.15)) return lit(Literal::decimal(Rational(static_cast<std::int64_t>(pick(19)), std::int64_t{2})));
  return lit_int(static_cast<std::int64_t>(pick(10)));
}

ExprPtr Generator::expression(std::span<const SqlType> types, int depth, bool linear) {
  if (depth <= 0 || chance(0.55)) {
    if (!linear && chance(0.03)) return null_expr();
    return atom(types);
  }
  if (!linear) {
    if (options_.case_exprs && chance(0.12)) {
      return case_expr({{predicate(types, 0, false), expression(types, depth - 1, false)}},
                       expression(types, depth - 1, false));
    }
    if (options_.functions && chance(0.08)) return func("F", {expression(types, depth - 1, false)});
  }
  if (linear) {
    switch (pick(3)) {
      case 0:
        return arith(ArithOp::Add, expression(types, depth - 1, true), expression(types, depth - 1, true));
      case 1:
        return arith(ArithOp::Sub, expression(types, depth - 1, true), expression(types, depth - 1, true));
      default:
        return arith(ArithOp::Mul, lit_int(static_cast<std::int64_t>(pick(4))), expression(types, depth - 1, true));
    }
  }
  static const ArithOp ops[] = {ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Mod};
  ArithOp op = ops[pick(options_.division ? 5 : 3)];
  return arith(op, expression(types, depth - 1, false), expression(types, depth - 1, false));
}

PredPtr Generator::predicate(std::span<const SqlType> types, int depth, bool linear) {
  if (depth <= 0 || chance(0.5)) {
    static const CmpOp ops[] = {CmpOp::Gt, CmpOp::Lt, CmpOp::Eq, CmpOp::Le, CmpOp::Ge};
    CmpOp op = ops[pick(5)];
    if (!linear) {
      if (chance(0.12) && !types.empty()) return is_null(col(pick(types.size())));
      auto strings = columns_where(types, [](SqlType t) { return t == SqlType::Varchar; });
      if (!strings.empty() && chance(0.15)) {
        ExprPtr rhs = strings.size() > 1 && chance(0.3) ? col(strings[pick(strings.size())])
                                                         : lit(Literal::string(kWords[pick(10)]));
        return cmp(chance(0.7) ? CmpOp::Eq : op, col(strings[pick(strings.size())]), rhs);
      }
      auto bools = columns_where(types, [](SqlType t) { return t == SqlType::Bool; });
      if (!bools.empty() && chance(0.1)) {
        return cmp(CmpOp::Eq, col(bools[pick(bools.size())]), lit(Literal::boolean(chance(0.5))));
      }
      if (options_.functions && chance(0.05) && !types.empty()) return uf_pred("P", {col(pick(types.size()))});
      if (chance(0.03)) return chance(0.5) ? true_pred() : false_pred();
    }
    return cmp(op, expression(types, 1, linear), expression(types, 1, linear));
  }
  if (linear) {
    return chance(0.75) ? and_pred(predicate(types, depth - 1, true), predicate(types, depth - 1, true))
                        : or_pred(predicate(types, depth - 1, true), predicate(types, depth - 1, true));
  }
  switch (pick(3)) {
    case 0:
      return and_pred(predicate(types, depth - 1, false), predicate(types, depth - 1, false));
    case 1:
      return or_pred(predicate(types, depth - 1, false), predicate(types, depth - 1, false));
    default:
      return not_pred(predicate(types, depth - 1, false));
  }
}

QueryPtr Generator::with_arity(int depth, std::size_t arity) {
  QueryPtr input = tree(depth);
  auto types = output_types(*input);
  std::vector<ExprPtr> projections;
  for (std::size_t i = 0; i < arity; ++i) projections.push_back(chance(0.8) ? col(pick(types.size())) : atom(types));
  PredPtr p = chance(0.5) ? predicate(types, 1, false) : true_pred();
  return spj({input}, p, std::move(projections));
}

QueryPtr Generator::tree(int depth) {
  if (depth <= 0) return base_table();
  double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (options_.aggregates && roll < 0.2) {
    QueryPtr input = tree(depth - 1);
    auto types = output_types(*input);
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (chance(0.3) && group.size() < 2) group.push_back(i);
    }
    std::vector<AggFunc> aggs;
    std::size_t count = pick(3);
    auto nums = columns_where(types, [](SqlType t) { return t == SqlType::Int || t == SqlType::Decimal; });
    for (std::size_t i = 0; i < count; ++i) {
      static const AggKind kinds[] = {AggKind::Count, AggKind::Sum, AggKind::Min, AggKind::Max, AggKind::Avg};
      AggKind kind = kinds[pick(5)];
      if ((kind == AggKind::Sum || kind == AggKind::Avg) && nums.empty()) kind = AggKind::Count;
      if (kind == AggKind::Count && chance(0.4)) {
        aggs.push_back({kind, AggFunc::kStar});
      } else if (kind == AggKind::Sum || kind == AggKind::Avg) {
        aggs.push_back({kind, static_cast<std::int64_t>(nums[pick(nums.size())])});
      } else {
        aggs.push_back({kind, static_cast<std::int64_t>(pick(types.size()))});
      }
    }
    if (group.empty() && aggs.empty()) aggs.push_back({AggKind::Count, AggFunc::kStar});
    return agg(input, std::move(group), std::move(aggs));
  }
  if (options_.unions && roll < 0.35) {
    std::size_t arity = 1 + pick(2);
    return union_all({with_arity(depth - 1, arity), with_arity(depth - 1, arity)});
  }
  if (options_.outer_joins && roll < 0.45) {
    QueryPtr left = tree(depth - 1);
    QueryPtr right = depth > 1 && chance(0.3) ? tree(depth - 2) : base_table();
    auto types = output_types(*left);
    auto rtypes = output_types(*right);
    std::size_t l = types.size();
    types.insert(types.end(), rtypes.begin(), rtypes.end());
    auto lnum = columns_where(std::span(types).first(l), numeric);
    auto rnum = columns_where(std::span(types).subspan(l), numeric);
    PredPtr on;
    if (!lnum.empty() && !rnum.empty()) {
      on = cmp(CmpOp::Eq, col(lnum[pick(lnum.size())]), col(l + rnum[pick(rnum.size())]));
      if (chance(0.3)) on = and_pred(on, predicate(types, 0, false));
    } else {
      on = predicate(types, 1, false);
    }
    return desugar_left_outer_join(left, right, on);
  }
  if (roll < 0.5) return base_table();

  std::vector<QueryPtr> inputs{tree(depth - 1)};
  if (chance(0.4)) inputs.push_back(tree(depth - 1));
  std::vector<SqlType> types;
  for (const auto& in : inputs) {
    auto t = output_types(*in);
    types.insert(types.end(), t.begin(), t.end());
  }
  PredPtr p = chance(0.8) ? predicate(types, 2, false) : true_pred();
  std::vector<ExprPtr> projections;
  std::size_t width = 1 + pick(3);
  for (std::size_t i = 0; i < width; ++i) {
    projections.push_back(chance(0.7) ? col(pick(types.size())) : expression(types, 2, false));
  }
  return spj(std::move(inputs), p, std::move(projections));
}

QueryPtr Generator::linear_spj() {
  std::vector<QueryPtr> inputs;
  std::size_t n = 1 + pick(3);
  for (std::size_t i = 0; i < n; ++i) inputs.push_back(base_table());
  std::vector<SqlType> types;
  for (const auto& in : inputs) {
    auto t = output_types(*in);
    types.insert(types.end(), t.begin(), t.end());
  }
  std::vector<PredPtr> parts;
  std::size_t conj = 1 + pick(3);
  for (std::size_t i = 0; i < conj; ++i) parts.push_back(predicate(types, 1, true));
  std::vector<ExprPtr> projections;
  std::size_t width = 1 + pick(3);
  for (std::size_t i = 0; i < width; ++i) {
    projections.push_back(chance(0.7) ? col(pick(types.size())) : expression(types, 1, true));
  }
  return spj(std::move(inputs), conjoin(parts), std::move(projections));
}

// ---- rewriting ------------------------------------------------------------

namespace {

std::vector<QueryPtr> child_list(const Query& q) {
  if (const auto* s = as<plan::Spj>(q)) return s->inputs;
  if (const auto* a = as<plan::Agg>(q)) return {a->input};
  if (const auto* u = as<plan::Union>(q)) return u->inputs;
  return {};
}

QueryPtr with_children(const QueryPtr& q, std::vector<QueryPtr> kids) {
  if (const auto* s = as<plan::Spj>(q)) return spj(std::move(kids), s->predicate, s->projections);
  if (const auto* a = as<plan::Agg>(q)) return agg(kids[0], a->group_by, a->aggs);
  if (as<plan::Union>(q)) return union_all(std::move(kids));
  return q;
}

std::size_t count_nodes(const QueryPtr& q) {
  std::size_t n = 1;
  for (const auto& c : child_list(*q)) n += count_nodes(c);
  return n;
}

/// Replaces the pre-order node number `target` by fn(node).
QueryPtr replace_at(const QueryPtr& q, std::size_t& counter, std::size_t target,
                    const std::function<QueryPtr(const QueryPtr&)>& fn) {
  if (counter++ == target) return fn(q);
  auto kids = child_list(*q);
  bool changed = false;
  for (auto& k : kids) {
    QueryPtr next = replace_at(k, counter, target, fn);
    changed |= next != k;
    k = next;
  }
  return changed ? with_children(q, std::move(kids)) : q;
}

PredPtr rewrite_comparison(const PredPtr& p, std::span<const SqlType> types, std::mt19937_64& rng) {
  const auto* c = as<pred::Cmp>(p);
  if (!c) return p;
  switch (rng() % 3) {
    case 0:
      return cmp(flip(c->op), c->rhs, c->lhs);
    case 1:
      if (auto op = complement(c->op)) return not_pred(cmp(*op, c->lhs, c->rhs));
      return not_pred(not_pred(p));
    default: {
      if (!numeric(expr_type(*c->lhs, types)) || !numeric(expr_type(*c->rhs, types))) return p;
      ExprPtr k = lit_int(static_cast<std::int64_t>(1 + rng() % 5));
      return cmp(c->op, arith(ArithOp::Add, c->lhs, k), arith(ArithOp::Add, c->rhs, k));
    }
  }
}

QueryPtr rewrite_spj(const plan::Spj& s, std::mt19937_64& rng) {
  auto types = spj_input_types(s);
  auto parts = conjuncts(s.predicate);
  switch (rng() % 4) {
    case 0: {
      // Split the conjuncts between an inner identity Spj and the outer one.
      std::vector<PredPtr> inner;
      std::vector<PredPtr> outer;
      for (const auto& c : parts) (rng() % 2 ? inner : outer).push_back(c);
      QueryPtr in = spj(s.inputs, conjoin(inner), identity_projections(types.size()));
      return spj({in}, conjoin(outer), s.projections);
    }
    case 1: {
      // Permute the inputs and re-address the columns.
      std::vector<std::size_t> order(s.inputs.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::size_t> offset_old;
      std::size_t w = 0;
      for (const auto& in : s.inputs) {
        offset_old.push_back(w);
        w += arity(*in);
      }
      std::vector<ExprPtr> mapping(w);
      std::vector<QueryPtr> inputs;
      std::size_t at = 0;
      for (std::size_t k : order) {
        inputs.push_back(s.inputs[k]);
        for (std::size_t j = 0; j < arity(*s.inputs[k]); ++j) mapping[offset_old[k] + j] = col(at + j);
        at += arity(*s.inputs[k]);
      }
      std::vector<ExprPtr> projections;
      for (const auto& p : s.projections) projections.push_back(substitute(p, mapping));
      return spj(std::move(inputs), substitute(s.predicate, mapping), std::move(projections));
    }
    case 2: {
      std::shuffle(parts.begin(), parts.end(), rng);
      return spj(s.inputs, conjoin(parts), s.projections);
    }
    default: {
      if (parts.empty()) return spj(s.inputs, s.predicate, s.projections);
      std::size_t i = rng() % parts.size();
      parts[i] = rewrite_comparison(parts[i], types, rng);
      return spj(s.inputs, conjoin(parts), s.projections);
    }
  }
}

}  // namespace

QueryPtr rewrite(const QueryPtr& q, std::mt19937_64& rng, int steps) {
  QueryPtr cur = q;
  for (int i = 0; i < steps; ++i) {
    std::size_t target = rng() % count_nodes(cur);
    std::size_t counter = 0;
    cur = replace_at(cur, counter, target, [&](const QueryPtr& n) -> QueryPtr {
      if (const auto* s = as<plan::Spj>(n); s && rng() % 4 != 0) return rewrite_spj(*s, rng);
      if (const auto* u = as<plan::Union>(n); u && rng() % 2 == 0) {
        auto kids = u->inputs;
        std::shuffle(kids.begin(), kids.end(), rng);
        return union_all(std::move(kids));
      }
      if (rng() % 3 == 0) return union_all({n});
      return spj({n}, true_pred(), identity_projections(arity(*n)));
    });
  }
  return cur;
}

QueryPtr mutate(const QueryPtr& q, std::mt19937_64& rng) {
  std::size_t n = count_nodes(q);
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::size_t target = rng() % n;
    std::size_t counter = 0;
    bool done = false;
    QueryPtr out = replace_at(q, counter, target, [&](const QueryPtr& node) -> QueryPtr {
      if (const auto* s = as<plan::Spj>(node)) {
        auto parts = conjuncts(s->predicate);
        for (auto& c : parts) {
          if (const auto* cm = as<pred::Cmp>(c)) {
            static const CmpOp ops[] = {CmpOp::Gt, CmpOp::Lt, CmpOp::Eq, CmpOp::Le, CmpOp::Ge};
            CmpOp op = ops[rng() % 5];
            if (op == cm->op) op = flip(op) == op ? CmpOp::Gt : flip(op);
            c = cmp(op, cm->lhs, cm->rhs);
            done = true;
            return spj(s->inputs, conjoin(parts), s->projections);
          }
        }
        auto types = spj_input_types(*s);
        auto projections = s->projections;
        std::size_t i = rng() % projections.size();
        projections[i] = arith(ArithOp::Add, projections[i], lit_int(1));
        if (!numeric(expr_type(*s->projections[i], types))) return node;
        done = true;
        return spj(s->inputs, s->predicate, std::move(projections));
      }
      if (const auto* a = as<plan::Agg>(node); a && !a->aggs.empty()) {
        auto aggs = a->aggs;
        auto& f = aggs[rng() % aggs.size()];
        if (f.operand == AggFunc::kStar) return node;
        f.kind = f.kind == AggKind::Max ? AggKind::Min : AggKind::Max;
        done = true;
        return agg(a->input, a->group_by, std::move(aggs));
      }
      return node;
    });
    if (done) return out;
  }
  auto types = output_types(*q);
  return spj({q}, cmp(CmpOp::Gt, col(0), lit_int(static_cast<std::int64_t>(rng() % 10))),
             identity_projections(types.size()));
}

// ---- reference evaluators -------------------------------------------------

namespace {

std::optional<Rational> reference_value(const Expr& e, const Row& row) {
  if (const auto* c = std::get_if<expr::Column>(&e.node)) {
    const Value& v = row.at(c->index);
    if (v.is_null()) return std::nullopt;
    return v.number();
  }
  if (const auto* c = std::get_if<expr::Const>(&e.node)) {
    if (c->value.kind == Literal::Kind::Str) return Rational(string_code(c->value.text));
    return c->value.number;
  }
  if (std::get_if<expr::Null>(&e.node)) return std::nullopt;
  if (const auto* a = std::get_if<expr::Arith>(&e.node)) {
    auto l = reference_value(*a->lhs, row);
    auto r = reference_value(*a->rhs, row);
    if (!l || !r) return std::nullopt;
    switch (a->op) {
      case ArithOp::Add:
        return *l + *r;
      case ArithOp::Sub:
        return *l - *r;
      case ArithOp::Mul:
        return *l * *r;
      default:
        break;
    }
  }
  throw std::invalid_argument("reference_predicate: unsupported expression");
}

}  // namespace

Truth reference_predicate(const Pred& p, const Row& row) {
  auto both = [&](const PredPtr& a, const PredPtr& b, bool conj) {
    Truth x = reference_predicate(*a, row);
    Truth y = reference_predicate(*b, row);
    Truth dominant = conj ? Truth::False : Truth::True;
    if (x == dominant || y == dominant) return dominant;
    if (x == Truth::Unknown || y == Truth::Unknown) return Truth::Unknown;
    return conj ? Truth::True : Truth::False;
  };
  if (const auto* c = std::get_if<pred::Cmp>(&p.node)) {
    auto l = reference_value(*c->lhs, row);
    auto r = reference_value(*c->rhs, row);
    if (!l || !r) return Truth::Unknown;
    bool b = false;
    switch (c->op) {
      case CmpOp::Gt:
        b = *l > *r;
        break;
      case CmpOp::Lt:
        b = *l < *r;
        break;
      case CmpOp::Eq:
        b = *l == *r;
        break;
      case CmpOp::Le:
        b = *l <= *r;
        break;
      case CmpOp::Ge:
        b = *l >= *r;
        break;
    }
    return b ? Truth::True : Truth::False;
  }
  if (const auto* a = std::get_if<pred::And>(&p.node)) return both(a->lhs, a->rhs, true);
  if (const auto* o = std::get_if<pred::Or>(&p.node)) return both(o->lhs, o->rhs, false);
  if (const auto* n = std::get_if<pred::Not>(&p.node)) {
    Truth t = reference_predicate(*n->operand, row);
    return t == Truth::Unknown ? t : (t == Truth::True ? Truth::False : Truth::True);
  }
  if (const auto* n = std::get_if<pred::IsNull>(&p.node)) {
    return reference_value(*n->operand, row) ? Truth::False : Truth::True;
  }
  if (std::get_if<pred::True>(&p.node)) return Truth::True;
  if (std::get_if<pred::False>(&p.node)) return Truth::False;
  throw std::invalid_argument("reference_predicate: unsupported predicate");
}

Bag reference_left_join(const Bag& left, const Bag& right, const Pred& on, std::size_t right_arity) {
  Bag out;
  for (const auto& [l, ln] : left) {
    bool matched = false;
    for (const auto& [r, rn] : right) {
      Row joined = l;
      joined.insert(joined.end(), r.begin(), r.end());
      if (reference_predicate(on, joined) != Truth::True) continue;
      matched = true;
      out[joined] += ln * rn;
    }
    if (!matched) {
      Row padded = l;
      padded.resize(l.size() + right_arity, Value::null());
      out[padded] += ln;
    }
  }
  return out;
}

bool small_domain_satisfiable(Term formula) {
  auto vars = free_variables({formula});
  std::unordered_map<Term, ConcreteValue> bindings;
  std::vector<int> digit(vars.size(), 0);
  static const std::int64_t domain[] = {-1, 0, 1, 2};
  for (;;) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i]->sort == Sort::Bool) {
        bindings[vars[i]] = digit[i] % 2 == 1;
      } else {
        bindings[vars[i]] = Rational(domain[digit[i]]);
      }
    }
    if (std::get<bool>(evaluate(formula, bindings))) return true;
    std::size_t i = 0;
    for (; i < vars.size(); ++i) {
      int limit = vars[i]->sort == Sort::Bool ? 2 : 4;
      if (++digit[i] < limit) break;
      digit[i] = 0;
    }
    if (i == vars.size()) return false;
  }
}

}  // namespace bagcheck::testkit
