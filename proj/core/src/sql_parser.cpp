#include "bagcheck/sql_parser.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bagcheck/error.hpp"
#include "bagcheck/plan_io.hpp"
#include "sql_lexer.hpp"

namespace bagcheck {

// ---- LEFT OUTER JOIN ------------------------------------------------------

namespace {

std::string hash_name(std::string_view prefix, std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(prefix) + buf;
}

}  // namespace

QueryPtr desugar_left_outer_join(const QueryPtr& left, const QueryPtr& right, const PredPtr& on) {
  std::size_t l = arity(*left);
  std::size_t r = arity(*right);

  std::set<std::size_t> used;
  collect_columns(on, used);
  std::vector<std::size_t> outer;
  for (std::size_t c : used) {
    if (c < l) outer.push_back(c);
  }

  // Re-address ON over (outer columns ++ right row).
  std::vector<ExprPtr> mapping(l + r, col(0));
  std::vector<ExprPtr> args;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    mapping[outer[i]] = col(i);
    args.push_back(col(outer[i]));
  }
  for (std::size_t j = 0; j < r; ++j) mapping[l + j] = col(outer.size() + j);
  PredPtr body_on = substitute(on, mapping);

  std::string name = hash_name("exists_", dump_plan(*right) + "|" + dump_pred(*body_on));
  auto body = std::make_shared<const ExistsBody>(ExistsBody{right, body_on});

  std::vector<ExprPtr> padded = identity_projections(l);
  for (std::size_t j = 0; j < r; ++j) padded.push_back(null_expr());

  QueryPtr inner = spj({left, right}, on, identity_projections(l + r));
  QueryPtr anti = spj({left}, not_pred(uf_pred(std::move(name), std::move(args), std::move(body))), std::move(padded));
  return union_all({inner, anti});
}

// ---- parser ---------------------------------------------------------------

namespace {

using sql::Token;
using sql::TokenKind;

[[noreturn]] void fail(SqlError::Kind kind, const std::string& msg, std::size_t pos) { throw SqlError(kind, msg, pos); }

struct Ast;
using AstPtr = std::shared_ptr<Ast>;

struct Ast {
  enum class Kind {
    Column,
    Int,
    Dec,
    Str,
    Bool,
    Null,
    Neg,
    Arith,
    Cmp,
    And,
    Or,
    Not,
    IsNull,
    Between,
    In,
    Like,
    Case,
    Call,
  };

  Kind kind = Kind::Null;
  std::size_t pos = 0;
  std::string qualifier;  // Column
  std::string name;       // Column name, Call name, literal text
  bool negated = false;   // <>, IS NOT NULL, NOT BETWEEN, NOT IN, NOT LIKE
  bool star = false;      // COUNT(*)
  ArithOp aop = ArithOp::Add;
  CmpOp cop = CmpOp::Eq;
  std::vector<AstPtr> kids;
  // Case: optional operand, WHEN/THEN pairs, ELSE.
  AstPtr operand;
  std::vector<std::pair<AstPtr, AstPtr>> whens;
  AstPtr otherwise;
};

AstPtr make(Ast::Kind kind, std::size_t pos) {
  auto a = std::make_shared<Ast>();
  a->kind = kind;
  a->pos = pos;
  return a;
}

std::optional<AggKind> aggregate_kind(const std::string& name) {
  if (name == "COUNT") return AggKind::Count;
  if (name == "SUM") return AggKind::Sum;
  if (name == "MIN") return AggKind::Min;
  if (name == "MAX") return AggKind::Max;
  if (name == "AVG") return AggKind::Avg;
  return std::nullopt;
}

bool is_aggregate_call(const Ast& a) { return a.kind == Ast::Kind::Call && aggregate_kind(a.name).has_value(); }

bool contains_aggregate(const AstPtr& a) {
  if (!a) return false;
  if (is_aggregate_call(*a)) return true;
  for (const auto& k : a->kids) {
    if (contains_aggregate(k)) return true;
  }
  if (contains_aggregate(a->operand) || contains_aggregate(a->otherwise)) return true;
  for (const auto& [w, t] : a->whens) {
    if (contains_aggregate(w) || contains_aggregate(t)) return true;
  }
  return false;
}

bool is_predicate_kind(Ast::Kind k) {
  switch (k) {
    case Ast::Kind::Cmp:
    case Ast::Kind::And:
    case Ast::Kind::Or:
    case Ast::Kind::Not:
    case Ast::Kind::IsNull:
    case Ast::Kind::Between:
    case Ast::Kind::In:
    case Ast::Kind::Like:
      return true;
    default:
      return false;
  }
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = {
      "SELECT", "FROM",   "WHERE",  "GROUP", "BY",     "HAVING",    "ORDER",  "LIMIT", "OFFSET", "UNION",
      "ALL",    "DISTINCT", "JOIN", "INNER", "LEFT",   "RIGHT",     "FULL",   "OUTER", "CROSS",  "NATURAL",
      "ON",     "USING",  "AS",     "AND",   "OR",     "NOT",       "IS",     "NULL",  "IN",     "BETWEEN",
      "LIKE",   "CASE",   "WHEN",   "THEN",  "ELSE",   "END",       "TRUE",   "FALSE", "EXISTS", "CAST",
      "INTERSECT", "EXCEPT", "WINDOW", "OVER", "FETCH", "WITH"};
  return words;
}

struct ScopeColumn {
  std::string qualifier;
  std::string name;  // empty when the column cannot be named
  SqlType type = SqlType::Int;
};

struct Compiled {
  QueryPtr query;
  std::vector<ScopeColumn> columns;  // qualifier unset
};

/// Output of GROUP BY planning that select items and HAVING compile against.
struct Grouping {
  std::vector<ExprPtr> keys;                          // over the FROM scope
  std::vector<std::pair<AggKind, ExprPtr>> aggs;      // operand null for COUNT(*)
  std::vector<SqlType> output;                        // aggregate output row
};

struct Context {
  const std::vector<ScopeColumn>* scope = nullptr;
  const Grouping* grouping = nullptr;
};

class Parser {
 public:
  Parser(std::string_view text, const Catalog& catalog) : tokens_(sql::tokenize(text)), catalog_(catalog) {}

  QueryPtr run() {
    Compiled c = query();
    accept_symbol(";");
    if (peek().kind != TokenKind::End) {
      unsupported_tail();
      fail(SqlError::Kind::Syntax, "unexpected '" + peek().text + "'", peek().position);
    }
    require_valid(*c.query, catalog_);
    return c.query;
  }

 private:
  // ---- token helpers ----

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool accept(std::string_view keyword) {
    if (!peek().is_keyword(keyword)) return false;
    ++pos_;
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek().is_symbol(s)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view keyword) {
    if (!accept(keyword)) syntax_expected(keyword);
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) syntax_expected(s);
  }
  [[noreturn]] void syntax_expected(std::string_view what) const {
    const Token& t = peek();
    std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    fail(SqlError::Kind::Syntax, "expected " + std::string(what) + ", found " + got, t.position);
  }
  bool is_identifier(const Token& t) const {
    if (t.kind == TokenKind::QuotedIdentifier) return true;
    return t.kind == TokenKind::Identifier && !reserved().count(t.text);
  }
  std::string identifier() {
    if (!is_identifier(peek())) syntax_expected("identifier");
    return next().text;
  }

  void unsupported_tail() const {
    const Token& t = peek();
    for (std::string_view w : {"ORDER", "LIMIT", "OFFSET", "FETCH", "INTERSECT", "EXCEPT", "WINDOW"}) {
      if (t.is_keyword(w)) fail(SqlError::Kind::Unsupported, t.text, t.position);
    }
  }

  // ---- statements ----

  Compiled query() {
    std::size_t start = peek().position;
    if (peek().is_keyword("WITH")) fail(SqlError::Kind::Unsupported, "WITH", start);
    Compiled first = query_term();
    std::vector<QueryPtr> branches{first.query};
    bool distinct = false;
    while (peek().is_keyword("UNION")) {
      std::size_t at = next().position;
      if (!accept("ALL")) {
        accept("DISTINCT");
        distinct = true;
      }
      Compiled more = query_term();
      if (more.columns.size() != first.columns.size()) {
        fail(SqlError::Kind::Syntax, "UNION branches have different column counts", at);
      }
      branches.push_back(more.query);
    }
    unsupported_tail();
    if (branches.size() == 1) return first;
    QueryPtr u = union_all(std::move(branches));
    if (distinct) u = distinct_of(u);
    auto types = output_types(*u);
    for (std::size_t i = 0; i < first.columns.size(); ++i) first.columns[i].type = types[i];
    return {u, first.columns};
  }

  Compiled query_term() {
    if (peek().is_symbol("(")) {
      next();
      Compiled c = query();
      expect_symbol(")");
      return c;
    }
    return select();
  }

  static QueryPtr distinct_of(const QueryPtr& q) {
    std::vector<std::size_t> all(arity(*q));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return agg(q, std::move(all), {});
  }

  struct SelectItem {
    AstPtr expr;               // null for a star
    std::string star_qualifier;
    std::string alias;
    std::size_t pos = 0;
  };

  struct FromState {
    std::vector<QueryPtr> inputs;
    std::vector<ScopeColumn> columns;
    std::vector<PredPtr> pending;
  };

  Compiled select() {
    std::size_t start = peek().position;
    expect("SELECT");
    bool distinct = false;
    if (accept("DISTINCT")) {
      distinct = true;
      if (peek().is_keyword("ON")) fail(SqlError::Kind::Unsupported, "DISTINCT ON", peek().position);
    } else {
      accept("ALL");
    }

    std::vector<SelectItem> items;
    do {
      items.push_back(select_item());
    } while (accept_symbol(","));

    if (!accept("FROM")) fail(SqlError::Kind::Unsupported, "SELECT without FROM", start);
    FromState from = from_clause();

    AstPtr where;
    if (accept("WHERE")) where = expression();
    std::vector<AstPtr> group;
    if (accept("GROUP")) {
      expect("BY");
      do {
        std::size_t at = peek().position;
        AstPtr g = expression();
        if (g->kind == Ast::Kind::Int) fail(SqlError::Kind::Unsupported, "GROUP BY ordinal", at);
        group.push_back(g);
      } while (accept_symbol(","));
    }
    AstPtr having;
    if (accept("HAVING")) having = expression();

    Context base{&from.columns, nullptr};
    if (where) {
      if (contains_aggregate(where)) fail(SqlError::Kind::Syntax, "aggregate in WHERE", where->pos);
      from.pending.push_back(compile_pred(where, base));
    }
    PredPtr filter = conjoin(from.pending);

    bool aggregated = !group.empty() || having;
    for (const auto& it : items) aggregated |= it.expr && contains_aggregate(it.expr);

    Compiled out;
    if (!aggregated) {
      std::vector<ExprPtr> projections;
      expand_items(items, base, projections, out.columns);
      out.query = spj(from.inputs, filter, std::move(projections));
    } else {
      Grouping grouping;
      for (const auto& g : group) {
        if (contains_aggregate(g)) fail(SqlError::Kind::Syntax, "aggregate in GROUP BY", g->pos);
        grouping.keys.push_back(compile_expr(g, base));
      }
      for (const auto& it : items) {
        if (it.expr) collect_aggregates(it.expr, base, grouping);
      }
      if (having) collect_aggregates(having, base, grouping);

      std::vector<ExprPtr> inner = grouping.keys;
      std::vector<AggFunc> funcs;
      for (const auto& [kind, operand] : grouping.aggs) {
        if (!operand) {
          funcs.push_back({kind, AggFunc::kStar});
          continue;
        }
        std::size_t slot = inner.size();
        for (std::size_t i = grouping.keys.size(); i < inner.size(); ++i) {
          if (same(inner[i], operand)) slot = i;
        }
        if (slot == inner.size()) inner.push_back(operand);
        funcs.push_back({kind, static_cast<std::int64_t>(slot)});
      }
      if (inner.empty()) inner.push_back(lit_int(1));
      std::vector<std::size_t> keys(grouping.keys.size());
      for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
      QueryPtr grouped = agg(spj(from.inputs, filter, std::move(inner)), std::move(keys), std::move(funcs));

      // Select items and HAVING read the aggregate's output row.
      grouping.output = output_types(*grouped);
      Context post{&from.columns, &grouping};
      std::vector<ExprPtr> projections;
      for (const auto& it : items) {
        if (!it.expr) fail(SqlError::Kind::Syntax, "* is not allowed with GROUP BY", it.pos);
        ExprPtr e = compile_expr(it.expr, post);
        out.columns.push_back({"", item_name(it), expr_type(*e, grouping.output)});
        projections.push_back(std::move(e));
      }
      PredPtr having_pred = having ? compile_pred(having, post) : true_pred();
      out.query = spj({grouped}, having_pred, std::move(projections));
    }
    if (distinct) out.query = distinct_of(out.query);
    return out;
  }

  static std::vector<SqlType> types_of(const std::vector<ScopeColumn>& cols) {
    std::vector<SqlType> out;
    for (const auto& c : cols) out.push_back(c.type);
    return out;
  }

  static std::string item_name(const SelectItem& it) {
    if (!it.alias.empty()) return it.alias;
    if (it.expr && it.expr->kind == Ast::Kind::Column) return it.expr->name;
    return "";
  }

  SelectItem select_item() {
    SelectItem it;
    it.pos = peek().position;
    if (accept_symbol("*")) return it;
    if (is_identifier(peek()) && peek(1).is_symbol(".") && peek(2).is_symbol("*")) {
      it.star_qualifier = next().text;
      next();
      next();
      return it;
    }
    it.expr = expression();
    if (accept("AS")) {
      it.alias = identifier();
    } else if (is_identifier(peek())) {
      it.alias = next().text;
    }
    return it;
  }

  void expand_items(const std::vector<SelectItem>& items, const Context& ctx, std::vector<ExprPtr>& projections,
                    std::vector<ScopeColumn>& columns) {
    const auto& scope = *ctx.scope;
    auto types = types_of(scope);
    for (const auto& it : items) {
      if (!it.expr) {
        bool any = false;
        for (std::size_t i = 0; i < scope.size(); ++i) {
          if (!it.star_qualifier.empty() && scope[i].qualifier != it.star_qualifier) continue;
          projections.push_back(col(i));
          columns.push_back({"", scope[i].name, scope[i].type});
          any = true;
        }
        if (!any) fail(SqlError::Kind::Name, "unknown table alias " + it.star_qualifier, it.pos);
        continue;
      }
      ExprPtr e = compile_expr(it.expr, ctx);
      columns.push_back({"", item_name(it), expr_type(*e, types)});
      projections.push_back(std::move(e));
    }
  }

  // ---- FROM ----

  FromState from_clause() {
    FromState st;
    std::set<std::string> aliases;
    add_item(st, from_item(aliases));
    for (;;) {
      const Token& t = peek();
      if (accept_symbol(",")) {
        add_item(st, from_item(aliases));
      } else if (t.is_keyword("CROSS")) {
        next();
        expect("JOIN");
        add_item(st, from_item(aliases));
      } else if (t.is_keyword("JOIN") || t.is_keyword("INNER")) {
        if (accept("INNER")) {
          expect("JOIN");
        } else {
          next();
        }
        add_item(st, from_item(aliases));
        st.pending.push_back(on_clause(st.columns));
      } else if (t.is_keyword("LEFT")) {
        next();
        accept("OUTER");
        expect("JOIN");
        Compiled right = from_item(aliases);
        QueryPtr left = st.inputs.size() == 1 && st.pending.empty()
                            ? st.inputs[0]
                            : spj(st.inputs, conjoin(st.pending), identity_projections(st.columns.size()));
        std::vector<ScopeColumn> joined = st.columns;
        joined.insert(joined.end(), right.columns.begin(), right.columns.end());
        PredPtr on = on_clause(joined);
        st.inputs = {desugar_left_outer_join(left, right.query, on)};
        st.pending.clear();
        st.columns = std::move(joined);
      } else if (t.is_keyword("RIGHT") || t.is_keyword("FULL") || t.is_keyword("NATURAL")) {
        fail(SqlError::Kind::Unsupported, t.text + " JOIN", t.position);
      } else {
        break;
      }
    }
    return st;
  }

  static void add_item(FromState& st, Compiled item) {
    st.inputs.push_back(item.query);
    st.columns.insert(st.columns.end(), item.columns.begin(), item.columns.end());
  }

  PredPtr on_clause(const std::vector<ScopeColumn>& scope) {
    if (peek().is_keyword("USING")) fail(SqlError::Kind::Unsupported, "JOIN USING", peek().position);
    expect("ON");
    AstPtr on = expression();
    if (contains_aggregate(on)) fail(SqlError::Kind::Syntax, "aggregate in ON", on->pos);
    return compile_pred(on, Context{&scope, nullptr});
  }

  Compiled from_item(std::set<std::string>& aliases) {
    const Token& t = peek();
    std::size_t at = t.position;
    Compiled item;
    std::string alias;
    if (t.is_symbol("(")) {
      if (!peek(1).is_keyword("SELECT") && !peek(1).is_symbol("(")) {
        fail(SqlError::Kind::Unsupported, "parenthesized join", at);
      }
      next();
      item = query();
      expect_symbol(")");
      accept("AS");
      if (!is_identifier(peek())) fail(SqlError::Kind::Syntax, "subquery in FROM needs an alias", peek().position);
      alias = next().text;
    } else {
      std::string name = identifier();
      const TableSchema* schema = catalog_.find(name);
      if (!schema) fail(SqlError::Kind::Name, "unknown table " + name, at);
      item.query = table(catalog_, name);
      for (const auto& c : schema->columns) item.columns.push_back({"", c.name, c.type});
      alias = schema->name;
      if (accept("AS")) {
        alias = identifier();
      } else if (is_identifier(peek())) {
        alias = next().text;
      }
    }
    if (peek().is_symbol("(")) fail(SqlError::Kind::Unsupported, "column alias list", peek().position);
    if (!aliases.insert(alias).second) fail(SqlError::Kind::Name, "duplicate table alias " + alias, at);
    for (auto& c : item.columns) c.qualifier = alias;
    return item;
  }

  // ---- expressions ----

  AstPtr expression() { return or_expr(); }

  AstPtr or_expr() {
    AstPtr lhs = and_expr();
    while (peek().is_keyword("OR")) {
      auto node = make(Ast::Kind::Or, next().position);
      node->kids = {lhs, and_expr()};
      lhs = node;
    }
    return lhs;
  }

  AstPtr and_expr() {
    AstPtr lhs = not_expr();
    while (peek().is_keyword("AND")) {
      auto node = make(Ast::Kind::And, next().position);
      node->kids = {lhs, not_expr()};
      lhs = node;
    }
    return lhs;
  }

  AstPtr not_expr() {
    if (peek().is_keyword("NOT")) {
      auto node = make(Ast::Kind::Not, next().position);
      node->kids = {not_expr()};
      return node;
    }
    return comparison();
  }

  AstPtr comparison() {
    if (peek().is_keyword("EXISTS")) fail(SqlError::Kind::Unsupported, "EXISTS subquery", peek().position);
    AstPtr lhs = additive();
    const Token& t = peek();
    static const std::pair<std::string_view, std::pair<CmpOp, bool>> ops[] = {
        {"=", {CmpOp::Eq, false}},  {"<>", {CmpOp::Eq, true}}, {"!=", {CmpOp::Eq, true}}, {"<", {CmpOp::Lt, false}},
        {"<=", {CmpOp::Le, false}}, {">", {CmpOp::Gt, false}}, {">=", {CmpOp::Ge, false}},
    };
    for (const auto& [sym, op] : ops) {
      if (t.is_symbol(sym)) {
        auto node = make(Ast::Kind::Cmp, next().position);
        node->cop = op.first;
        node->negated = op.second;
        if (peek().is_keyword("ANY") || peek().is_keyword("ALL") || peek().is_keyword("SOME")) {
          fail(SqlError::Kind::Unsupported, "quantified comparison", peek().position);
        }
        node->kids = {lhs, additive()};
        return node;
      }
    }
    if (t.is_keyword("IS")) {
      auto node = make(Ast::Kind::IsNull, next().position);
      node->negated = accept("NOT");
      if (!accept("NULL")) fail(SqlError::Kind::Unsupported, "IS " + peek().text, peek().position);
      node->kids = {lhs};
      return node;
    }
    bool negated = false;
    std::size_t at = t.position;
    if (t.is_keyword("NOT") &&
        (peek(1).is_keyword("BETWEEN") || peek(1).is_keyword("IN") || peek(1).is_keyword("LIKE"))) {
      next();
      negated = true;
    }
    if (accept("BETWEEN")) {
      auto node = make(Ast::Kind::Between, at);
      node->negated = negated;
      AstPtr lo = additive();
      expect("AND");
      node->kids = {lhs, lo, additive()};
      return node;
    }
    if (accept("IN")) {
      auto node = make(Ast::Kind::In, at);
      node->negated = negated;
      expect_symbol("(");
      if (peek().is_keyword("SELECT")) fail(SqlError::Kind::Unsupported, "IN subquery", peek().position);
      node->kids.push_back(lhs);
      do {
        node->kids.push_back(additive());
      } while (accept_symbol(","));
      expect_symbol(")");
      return node;
    }
    if (accept("LIKE")) {
      auto node = make(Ast::Kind::Like, at);
      node->negated = negated;
      node->kids = {lhs, additive()};
      return node;
    }
    return lhs;
  }

  AstPtr additive() {
    AstPtr lhs = multiplicative();
    for (;;) {
      const Token& t = peek();
      if (!t.is_symbol("+") && !t.is_symbol("-") && !t.is_symbol("||")) return lhs;
      next();
      if (t.text == "||") {
        auto node = make(Ast::Kind::Call, t.position);
        node->name = "CONCAT";
        node->kids = {lhs, multiplicative()};
        lhs = node;
        continue;
      }
      auto node = make(Ast::Kind::Arith, t.position);
      node->aop = t.text == "+" ? ArithOp::Add : ArithOp::Sub;
      node->kids = {lhs, multiplicative()};
      lhs = node;
    }
  }

  AstPtr multiplicative() {
    AstPtr lhs = unary();
    for (;;) {
      const Token& t = peek();
      if (!t.is_symbol("*") && !t.is_symbol("/") && !t.is_symbol("%")) return lhs;
      next();
      auto node = make(Ast::Kind::Arith, t.position);
      node->aop = t.text == "*" ? ArithOp::Mul : t.text == "/" ? ArithOp::Div : ArithOp::Mod;
      node->kids = {lhs, unary()};
      lhs = node;
    }
  }

  AstPtr unary() {
    if (peek().is_symbol("-")) {
      std::size_t at = next().position;
      AstPtr operand = unary();
      if (operand->kind == Ast::Kind::Int || operand->kind == Ast::Kind::Dec) {
        operand->name = operand->name[0] == '-' ? operand->name.substr(1) : "-" + operand->name;
        operand->pos = at;
        return operand;
      }
      auto node = make(Ast::Kind::Neg, at);
      node->kids = {operand};
      return node;
    }
    if (accept_symbol("+")) return unary();
    return primary();
  }

  AstPtr primary() {
    const Token& t = peek();
    std::size_t at = t.position;
    switch (t.kind) {
      case TokenKind::Integer: {
        auto node = make(Ast::Kind::Int, at);
        node->name = next().text;
        return node;
      }
      case TokenKind::Decimal: {
        auto node = make(Ast::Kind::Dec, at);
        node->name = next().text;
        return node;
      }
      case TokenKind::String: {
        auto node = make(Ast::Kind::Str, at);
        node->name = next().text;
        return node;
      }
      case TokenKind::End:
        syntax_expected("expression");
      default:
        break;
    }
    if (accept_symbol("(")) {
      if (peek().is_keyword("SELECT")) fail(SqlError::Kind::Unsupported, "scalar subquery", peek().position);
      AstPtr inner = expression();
      expect_symbol(")");
      return inner;
    }
    if (t.is_keyword("NULL")) {
      next();
      return make(Ast::Kind::Null, at);
    }
    if (t.is_keyword("TRUE") || t.is_keyword("FALSE")) {
      auto node = make(Ast::Kind::Bool, at);
      node->name = next().text;
      return node;
    }
    if (t.is_keyword("CASE")) return parse_case();
    if (t.is_keyword("CAST")) fail(SqlError::Kind::Unsupported, "CAST", at);
    if (t.is_keyword("EXISTS")) fail(SqlError::Kind::Unsupported, "EXISTS subquery", at);
    if ((t.is_keyword("DATE") || t.is_keyword("INTERVAL") || t.is_keyword("TIMESTAMP")) &&
        peek(1).kind == TokenKind::String) {
      fail(SqlError::Kind::Unsupported, t.text + " literal", at);
    }
    if (t.kind == TokenKind::Identifier && !is_identifier(t) && !peek(1).is_symbol("(")) {
      syntax_expected("expression");
    }
    if (t.kind != TokenKind::Identifier && t.kind != TokenKind::QuotedIdentifier) syntax_expected("expression");

    std::string first = next().text;
    if (accept_symbol("(")) return call(first, at);
    auto node = make(Ast::Kind::Column, at);
    if (accept_symbol(".")) {
      node->qualifier = first;
      node->name = identifier();
    } else {
      node->name = first;
    }
    return node;
  }

  AstPtr call(const std::string& name, std::size_t at) {
    auto node = make(Ast::Kind::Call, at);
    node->name = name;
    if (accept_symbol("*")) {
      node->star = true;
      expect_symbol(")");
    } else if (!accept_symbol(")")) {
      if (peek().is_keyword("DISTINCT")) fail(SqlError::Kind::Unsupported, name + "(DISTINCT ...)", peek().position);
      accept("ALL");
      do {
        node->kids.push_back(expression());
      } while (accept_symbol(","));
      expect_symbol(")");
    }
    if (peek().is_keyword("OVER")) fail(SqlError::Kind::Unsupported, "window function", peek().position);
    if (node->star && name != "COUNT") fail(SqlError::Kind::Syntax, "only COUNT accepts *", at);
    if (aggregate_kind(name) && !node->star && node->kids.size() != 1) {
      fail(SqlError::Kind::Syntax, name + " takes one argument", at);
    }
    return node;
  }

  AstPtr parse_case() {
    auto node = make(Ast::Kind::Case, next().position);
    if (!peek().is_keyword("WHEN")) node->operand = expression();
    while (accept("WHEN")) {
      AstPtr when = expression();
      expect("THEN");
      node->whens.emplace_back(when, expression());
    }
    if (node->whens.empty()) syntax_expected("WHEN");
    if (accept("ELSE")) node->otherwise = expression();
    expect("END");
    return node;
  }

  // ---- compilation ----

  std::size_t resolve(const Ast& a, const std::vector<ScopeColumn>& scope) const {
    std::optional<std::size_t> hit;
    bool qualifier_seen = a.qualifier.empty();
    for (std::size_t i = 0; i < scope.size(); ++i) {
      if (!a.qualifier.empty()) {
        if (scope[i].qualifier != a.qualifier) continue;
        qualifier_seen = true;
      }
      if (scope[i].name != a.name) continue;
      if (hit) fail(SqlError::Kind::Name, "ambiguous column " + a.name, a.pos);
      hit = i;
    }
    if (!qualifier_seen) fail(SqlError::Kind::Name, "unknown table alias " + a.qualifier, a.pos);
    if (!hit) {
      std::string full = a.qualifier.empty() ? a.name : a.qualifier + "." + a.name;
      fail(SqlError::Kind::Name, "unknown column " + full, a.pos);
    }
    return *hit;
  }

  void collect_aggregates(const AstPtr& a, const Context& base, Grouping& g) {
    if (!a) return;
    if (is_aggregate_call(*a)) {
      AggKind kind = *aggregate_kind(a->name);
      ExprPtr operand;
      if (!a->star) {
        if (contains_aggregate(a->kids[0])) fail(SqlError::Kind::Unsupported, "nested aggregate", a->pos);
        operand = compile_expr(a->kids[0], base);
      }
      for (const auto& [k, o] : g.aggs) {
        if (k == kind && ((!o && !operand) || (o && operand && same(o, operand)))) return;
      }
      g.aggs.emplace_back(kind, operand);
      return;
    }
    for (const auto& k : a->kids) collect_aggregates(k, base, g);
    collect_aggregates(a->operand, base, g);
    collect_aggregates(a->otherwise, base, g);
    for (const auto& [w, t] : a->whens) {
      collect_aggregates(w, base, g);
      collect_aggregates(t, base, g);
    }
  }

  /// Post-aggregation lookup: an aggregate call or a grouping key becomes a
  /// column of the aggregate's output.
  std::optional<ExprPtr> grouped_column(const AstPtr& a, const Context& ctx) {
    const Grouping& g = *ctx.grouping;
    Context base{ctx.scope, nullptr};
    if (is_aggregate_call(*a)) {
      AggKind kind = *aggregate_kind(a->name);
      ExprPtr operand = a->star ? nullptr : compile_expr(a->kids[0], base);
      for (std::size_t j = 0; j < g.aggs.size(); ++j) {
        const auto& [k, o] = g.aggs[j];
        if (k == kind && ((!o && !operand) || (o && operand && same(o, operand)))) return col(g.keys.size() + j);
      }
      return std::nullopt;
    }
    if (contains_aggregate(a) || is_predicate_kind(a->kind)) return std::nullopt;
    ExprPtr e = compile_expr(a, base);
    for (std::size_t i = 0; i < g.keys.size(); ++i) {
      if (same(e, g.keys[i])) return col(i);
    }
    std::set<std::size_t> used;
    collect_columns(e, used);
    if (used.empty()) return e;
    if (a->kind == Ast::Kind::Column) {
      fail(SqlError::Kind::Name, "column " + a->name + " must appear in GROUP BY or an aggregate", a->pos);
    }
    return std::nullopt;
  }

  ExprPtr compile_expr(const AstPtr& a, const Context& ctx) {
    if (ctx.grouping) {
      if (auto hit = grouped_column(a, ctx)) return *hit;
    }
    using K = Ast::Kind;
    switch (a->kind) {
      case K::Column:
        return col(resolve(*a, *ctx.scope));
      case K::Int:
        try {
          return lit(Literal::integer(Rational::parse(a->name).num()));
        } catch (const std::exception&) {
          fail(SqlError::Kind::Unsupported, "integer literal out of range", a->pos);
        }
      case K::Dec:
        try {
          return lit(Literal::decimal(Rational::parse(a->name)));
        } catch (const std::exception&) {
          fail(SqlError::Kind::Unsupported, "decimal literal out of range", a->pos);
        }
      case K::Str:
        return lit(Literal::string(a->name));
      case K::Bool:
        return lit(Literal::boolean(a->name == "TRUE"));
      case K::Null:
        return null_expr();
      case K::Neg:
        return arith(ArithOp::Sub, lit_int(0), compile_expr(a->kids[0], ctx));
      case K::Arith:
        return arith(a->aop, compile_expr(a->kids[0], ctx), compile_expr(a->kids[1], ctx));
      case K::Case: {
        std::vector<std::pair<PredPtr, ExprPtr>> branches;
        ExprPtr subject = a->operand ? compile_expr(a->operand, ctx) : nullptr;
        for (const auto& [w, t] : a->whens) {
          PredPtr p = subject ? cmp(CmpOp::Eq, subject, compile_expr(w, ctx)) : compile_pred(w, ctx);
          branches.emplace_back(p, compile_expr(t, ctx));
        }
        ExprPtr otherwise = a->otherwise ? compile_expr(a->otherwise, ctx) : null_expr();
        return case_expr(std::move(branches), std::move(otherwise));
      }
      case K::Call: {
        if (is_aggregate_call(*a)) fail(SqlError::Kind::Syntax, "aggregate not allowed here", a->pos);
        std::vector<ExprPtr> args;
        for (const auto& k : a->kids) args.push_back(compile_expr(k, ctx));
        if (a->name == "COALESCE" && !args.empty()) {
          std::vector<std::pair<PredPtr, ExprPtr>> branches;
          for (std::size_t i = 0; i + 1 < args.size(); ++i) branches.emplace_back(not_pred(is_null(args[i])), args[i]);
          if (branches.empty()) return args[0];
          return case_expr(std::move(branches), args.back());
        }
        return func(a->name, std::move(args));
      }
      default: {
        // A predicate in value position: TRUE, FALSE, or NULL when unknown.
        PredPtr p = compile_pred(a, ctx);
        return case_expr({{p, lit(Literal::boolean(true))}, {not_pred(p), lit(Literal::boolean(false))}},
                         null_expr());
      }
    }
  }

  PredPtr compile_pred(const AstPtr& a, const Context& ctx) {
    using K = Ast::Kind;
    auto negate_if = [&](PredPtr p) { return a->negated ? not_pred(std::move(p)) : p; };
    switch (a->kind) {
      case K::And:
        return and_pred(compile_pred(a->kids[0], ctx), compile_pred(a->kids[1], ctx));
      case K::Or:
        return or_pred(compile_pred(a->kids[0], ctx), compile_pred(a->kids[1], ctx));
      case K::Not:
        return not_pred(compile_pred(a->kids[0], ctx));
      case K::Cmp:
        return negate_if(cmp(a->cop, compile_expr(a->kids[0], ctx), compile_expr(a->kids[1], ctx)));
      case K::IsNull:
        return negate_if(is_null(compile_expr(a->kids[0], ctx)));
      case K::Between: {
        ExprPtr x = compile_expr(a->kids[0], ctx);
        return negate_if(and_pred(cmp(CmpOp::Ge, x, compile_expr(a->kids[1], ctx)),
                                  cmp(CmpOp::Le, x, compile_expr(a->kids[2], ctx))));
      }
      case K::In: {
        ExprPtr x = compile_expr(a->kids[0], ctx);
        PredPtr any;
        for (std::size_t i = 1; i < a->kids.size(); ++i) {
          PredPtr eq = cmp(CmpOp::Eq, x, compile_expr(a->kids[i], ctx));
          any = any ? or_pred(any, eq) : eq;
        }
        return negate_if(any);
      }
      case K::Like:
        return negate_if(uf_pred("LIKE", {compile_expr(a->kids[0], ctx), compile_expr(a->kids[1], ctx)}));
      case K::Bool:
        return a->name == "TRUE" ? true_pred() : false_pred();
      default: {
        ExprPtr e = compile_expr(a, ctx);
        // Boolean values are 0/1 codes; a bare boolean operand means "= TRUE".
        std::vector<SqlType> types = ctx.grouping ? ctx.grouping->output : types_of(*ctx.scope);
        if (as<expr::Null>(e)) return cmp(CmpOp::Eq, e, lit(Literal::boolean(true)));
        if (expr_type(*e, types) != SqlType::Bool) fail(SqlError::Kind::Syntax, "expected a predicate", a->pos);
        return cmp(CmpOp::Eq, e, lit(Literal::boolean(true)));
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const Catalog& catalog_;
};

}  // namespace

QueryPtr parse_sql(std::string_view text, const Catalog& catalog) {
  bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) throw SqlError(SqlError::Kind::Syntax, "empty query", 0);
  return Parser(text, catalog).run();
}

}  // namespace bagcheck
