#include "bagcheck/plan_io.hpp"

#include <fstream>
#include <sstream>

#include "bagcheck/error.hpp"
#include "json.hpp"
#include "overloaded.hpp"

namespace bagcheck {

using detail::overloaded;
using nlohmann::json;

namespace {

// ---- writing --------------------------------------------------------------

json write_query(const Query& q);
json write_pred(const Pred& p);

const char* arith_tag(ArithOp op) {
  switch (op) {
    case ArithOp::Add:
      return "add";
    case ArithOp::Sub:
      return "sub";
    case ArithOp::Mul:
      return "mul";
    case ArithOp::Div:
      return "div";
    case ArithOp::Mod:
      return "mod";
  }
  return "?";
}

const char* cmp_tag(CmpOp op) {
  switch (op) {
    case CmpOp::Gt:
      return "gt";
    case CmpOp::Lt:
      return "lt";
    case CmpOp::Eq:
      return "eq";
    case CmpOp::Le:
      return "le";
    case CmpOp::Ge:
      return "ge";
  }
  return "?";
}

json write_literal(const Literal& l) {
  switch (l.kind) {
    case Literal::Kind::Int:
      return {{"int", l.number.num()}};
    case Literal::Kind::Dec:
      return {{"dec", l.number.to_string()}};
    case Literal::Kind::Bool:
      return {{"bool", !l.number.is_zero()}};
    case Literal::Kind::Str:
      return {{"str", l.text}};
  }
  return nullptr;
}

json write_expr(const Expr& e) {
  return std::visit(overloaded{
                        [](const expr::Column& c) -> json { return {{"col", c.index}}; },
                        [](const expr::Const& c) -> json { return {{"const", write_literal(c.value)}}; },
                        [](const expr::Null&) -> json { return "null"; },
                        [](const expr::Arith& a) -> json {
                          return {{"binop", {{"op", arith_tag(a.op)}, {"lhs", write_expr(*a.lhs)}, {"rhs", write_expr(*a.rhs)}}}};
                        },
                        [](const expr::Func& f) -> json {
                          json args = json::array();
                          for (const auto& x : f.args) args.push_back(write_expr(*x));
                          return {{"func", {{"name", f.name}, {"args", args}}}};
                        },
                        [](const expr::Case& c) -> json {
                          json branches = json::array();
                          for (const auto& [w, t] : c.branches) {
                            branches.push_back({{"when", write_pred(*w)}, {"then", write_expr(*t)}});
                          }
                          return {{"case", {{"branches", branches}, {"else", write_expr(*c.otherwise)}}}};
                        },
                    },
                    e.node);
}

json write_pred(const Pred& p) {
  return std::visit(overloaded{
                        [](const pred::Cmp& c) -> json {
                          return {{"cmp", {{"op", cmp_tag(c.op)}, {"lhs", write_expr(*c.lhs)}, {"rhs", write_expr(*c.rhs)}}}};
                        },
                        [](const pred::And& a) -> json {
                          return {{"and", json::array({write_pred(*a.lhs), write_pred(*a.rhs)})}};
                        },
                        [](const pred::Or& a) -> json {
                          return {{"or", json::array({write_pred(*a.lhs), write_pred(*a.rhs)})}};
                        },
                        [](const pred::Not& n) -> json { return {{"not", write_pred(*n.operand)}}; },
                        [](const pred::IsNull& n) -> json { return {{"isnull", write_expr(*n.operand)}}; },
                        [](const pred::Uninterpreted& u) -> json {
                          json args = json::array();
                          for (const auto& x : u.args) args.push_back(write_expr(*x));
                          json body = {{"name", u.name}, {"args", args}};
                          if (u.body) body["exists"] = {{"input", write_query(*u.body->input)}, {"on", write_pred(*u.body->on)}};
                          return {{"ufpred", body}};
                        },
                        [](const pred::True&) -> json { return "true"; },
                        [](const pred::False&) -> json { return "false"; },
                    },
                    p.node);
}

json write_query(const Query& q) {
  return std::visit(overloaded{
                        [](const plan::Table& t) -> json { return {{"table", t.name}}; },
                        [](const plan::Spj& s) -> json {
                          json inputs = json::array();
                          for (const auto& in : s.inputs) inputs.push_back(write_query(*in));
                          json projections = json::array();
                          for (const auto& p : s.projections) projections.push_back(write_expr(*p));
                          return {{"spj",
                                   {{"inputs", inputs}, {"predicate", write_pred(*s.predicate)}, {"projections", projections}}}};
                        },
                        [](const plan::Agg& a) -> json {
                          json aggs = json::array();
                          for (const auto& f : a.aggs) {
                            aggs.push_back({{"kind", std::string(to_string(f.kind))}, {"operand", f.operand}});
                          }
                          return {{"agg", {{"input", write_query(*a.input)}, {"group_by", a.group_by}, {"aggs", aggs}}}};
                        },
                        [](const plan::Union& u) -> json {
                          json inputs = json::array();
                          for (const auto& in : u.inputs) inputs.push_back(write_query(*in));
                          return {{"union", inputs}};
                        },
                        [](const plan::Empty& e) -> json { return {{"empty", e.arity}}; },
                    },
                    q.node);
}

// ---- reading --------------------------------------------------------------

[[noreturn]] void bad(const std::string& what) { throw ParseError("plan: " + what); }

/// Single-key object {"tag": payload}; returns the tag.
const std::string& tag_of(const json& j, const char* what) {
  if (!j.is_object() || j.size() != 1) bad(std::string("expected a single-key ") + what + " object");
  return j.begin().key();
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::size_t index_of(const json& j) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) bad("expected a non-negative column index");
  return j.get<std::size_t>();
}

ArithOp parse_arith(const std::string& s) {
  if (s == "add" || s == "+") return ArithOp::Add;
  if (s == "sub" || s == "-") return ArithOp::Sub;
  if (s == "mul" || s == "*") return ArithOp::Mul;
  if (s == "div" || s == "/") return ArithOp::Div;
  if (s == "mod" || s == "%") return ArithOp::Mod;
  bad("unknown arithmetic operator '" + s + "'");
}

CmpOp parse_cmp(const std::string& s) {
  if (s == "gt" || s == ">") return CmpOp::Gt;
  if (s == "lt" || s == "<") return CmpOp::Lt;
  if (s == "eq" || s == "=") return CmpOp::Eq;
  if (s == "le" || s == "<=") return CmpOp::Le;
  if (s == "ge" || s == ">=") return CmpOp::Ge;
  bad("unknown comparison operator '" + s + "'");
}

AggKind parse_agg_kind(const std::string& s) {
  std::string k = canonical_identifier(s);
  if (k == "COUNT") return AggKind::Count;
  if (k == "SUM") return AggKind::Sum;
  if (k == "MIN") return AggKind::Min;
  if (k == "MAX") return AggKind::Max;
  if (k == "AVG") return AggKind::Avg;
  bad("unknown aggregate kind '" + s + "'");
}

class Reader {
 public:
  explicit Reader(const Catalog& catalog) : catalog_(catalog) {}

  QueryPtr query(const json& j) {
    const std::string& tag = tag_of(j, "plan node");
    const json& body = j.begin().value();
    if (tag == "table") {
      if (!body.is_string()) bad("table name must be a string");
      const TableSchema* s = catalog_.find(body.get<std::string>());
      if (!s) throw UnknownTable(body.get<std::string>());
      return table(std::make_shared<const TableSchema>(*s));
    }
    if (tag == "spj") {
      std::vector<QueryPtr> inputs;
      for (const auto& in : array(field(body, "inputs"))) inputs.push_back(query(in));
      std::vector<ExprPtr> projections;
      for (const auto& p : array(field(body, "projections"))) projections.push_back(expression(p));
      return spj(std::move(inputs), predicate(field(body, "predicate")), std::move(projections));
    }
    if (tag == "agg") {
      std::vector<std::size_t> group_by;
      for (const auto& g : array(field(body, "group_by"))) group_by.push_back(index_of(g));
      std::vector<AggFunc> aggs;
      for (const auto& f : array(field(body, "aggs"))) {
        const json& operand = field(f, "operand");
        if (!operand.is_number_integer()) bad("aggregate operand must be an integer");
        aggs.push_back({parse_agg_kind(field(f, "kind").get<std::string>()), operand.get<std::int64_t>()});
      }
      return agg(query(field(body, "input")), std::move(group_by), std::move(aggs));
    }
    if (tag == "union") {
      std::vector<QueryPtr> inputs;
      for (const auto& in : array(body)) inputs.push_back(query(in));
      return union_all(std::move(inputs));
    }
    if (tag == "empty") return empty_table(index_of(body));
    bad("unknown node tag '" + tag + "'");
  }

  ExprPtr expression(const json& j) {
    if (j.is_string()) {
      if (j.get<std::string>() == "null") return null_expr();
      bad("unknown expression '" + j.get<std::string>() + "'");
    }
    const std::string& tag = tag_of(j, "expression");
    const json& body = j.begin().value();
    if (tag == "col") return col(index_of(body));
    if (tag == "const") return lit(literal(body));
    if (tag == "binop") {
      return arith(parse_arith(field(body, "op").get<std::string>()), expression(field(body, "lhs")),
                   expression(field(body, "rhs")));
    }
    if (tag == "func") {
      std::vector<ExprPtr> args;
      for (const auto& a : array(field(body, "args"))) args.push_back(expression(a));
      return func(field(body, "name").get<std::string>(), std::move(args));
    }
    if (tag == "case") {
      std::vector<std::pair<PredPtr, ExprPtr>> branches;
      for (const auto& b : array(field(body, "branches"))) {
        branches.emplace_back(predicate(field(b, "when")), expression(field(b, "then")));
      }
      return case_expr(std::move(branches), expression(field(body, "else")));
    }
    bad("unknown expression tag '" + tag + "'");
  }

  PredPtr predicate(const json& j) {
    if (j.is_string()) {
      if (j.get<std::string>() == "true") return true_pred();
      if (j.get<std::string>() == "false") return false_pred();
      bad("unknown predicate '" + j.get<std::string>() + "'");
    }
    const std::string& tag = tag_of(j, "predicate");
    const json& body = j.begin().value();
    if (tag == "cmp") {
      return cmp(parse_cmp(field(body, "op").get<std::string>()), expression(field(body, "lhs")),
                 expression(field(body, "rhs")));
    }
    if (tag == "and" || tag == "or") {
      const json& parts = array(body);
      if (parts.size() != 2) bad(tag + " takes exactly two operands");
      PredPtr l = predicate(parts[0]);
      PredPtr r = predicate(parts[1]);
      return tag == "and" ? and_pred(l, r) : or_pred(l, r);
    }
    if (tag == "not") return not_pred(predicate(body));
    if (tag == "isnull") return is_null(expression(body));
    if (tag == "ufpred") {
      std::vector<ExprPtr> args;
      for (const auto& a : array(field(body, "args"))) args.push_back(expression(a));
      std::shared_ptr<const ExistsBody> exists;
      if (body.contains("exists")) {
        const json& e = body.at("exists");
        exists = std::make_shared<const ExistsBody>(ExistsBody{query(field(e, "input")), predicate(field(e, "on"))});
      }
      return uf_pred(field(body, "name").get<std::string>(), std::move(args), std::move(exists));
    }
    bad("unknown predicate tag '" + tag + "'");
  }

 private:
  static const json& array(const json& j) {
    if (!j.is_array()) bad("expected an array");
    return j;
  }

  static Literal literal(const json& j) {
    const std::string& tag = tag_of(j, "literal");
    const json& v = j.begin().value();
    if (tag == "int" && v.is_number_integer()) return Literal::integer(v.get<std::int64_t>());
    if (tag == "dec" && v.is_string()) return Literal::decimal(Rational::parse(v.get<std::string>()));
    if (tag == "dec" && v.is_number_integer()) return Literal::decimal(Rational(v.get<std::int64_t>()));
    if (tag == "bool" && v.is_boolean()) return Literal::boolean(v.get<bool>());
    if (tag == "str" && v.is_string()) return Literal::string(v.get<std::string>());
    bad("malformed literal");
  }

  const Catalog& catalog_;
};

}  // namespace

QueryPtr load_plan(std::string_view document, const Catalog& catalog) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  QueryPtr q;
  try {
    q = Reader(catalog).query(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  require_valid(*q, catalog);
  return q;
}

QueryPtr load_plan_file(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open plan file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_plan(buffer.str(), catalog);
}

std::string dump_plan(const Query& q) { return write_query(q).dump(); }
std::string dump_plan(const Query& q, int indent) { return write_query(q).dump(indent); }
std::string dump_expr(const Expr& e) { return write_expr(e).dump(); }
std::string dump_pred(const Pred& p) { return write_pred(p).dump(); }

}  // namespace bagcheck
