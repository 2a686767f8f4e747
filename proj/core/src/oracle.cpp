#include "bagcheck/oracle.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "bagcheck/error.hpp"
#include "json.hpp"
#include "overloaded.hpp"

namespace bagcheck {

using detail::overloaded;
using nlohmann::json;

// ---- database -------------------------------------------------------------

Database::Database(Catalog catalog) : catalog_(std::move(catalog)) {
  for (const auto& [name, _] : catalog_.tables()) rows_[name];
}

void Database::insert(std::string_view table, Row row) {
  const TableSchema& schema = catalog_.resolve(table);
  if (row.size() != schema.arity()) throw SchemaError("row arity mismatch for table " + schema.name);
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].is_null() && !schema.columns[i].nullable) {
      throw SchemaError("NULL in non-nullable column " + schema.name + "." + schema.columns[i].name);
    }
  }
  auto& rows = rows_[schema.name];
  if (schema.primary_key) {
    for (const auto& other : rows) {
      bool same_key = true;
      for (std::size_t k : *schema.primary_key) same_key &= other[k] == row[k];
      if (same_key) throw SchemaError("duplicate primary key in table " + schema.name);
    }
  }
  rows.push_back(std::move(row));
}

const std::vector<Row>& Database::rows(std::string_view table) const {
  static const std::vector<Row> none;
  auto it = rows_.find(canonical_identifier(table));
  return it == rows_.end() ? none : it->second;
}

std::size_t Database::total_rows() const {
  std::size_t n = 0;
  for (const auto& [_, rows] : rows_) n += rows.size();
  return n;
}

namespace {

Value value_from_json(const json& j, const ColumnDef& column) {
  if (j.is_null()) return Value::null();
  switch (column.type) {
    case SqlType::Int:
    case SqlType::Date:
      if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
      break;
    case SqlType::Decimal:
      if (j.is_number_integer()) return Value::decimal(Rational(j.get<std::int64_t>()));
      if (j.is_string()) return Value::decimal(Rational::parse(j.get<std::string>()));
      if (j.is_number_float()) return Value::decimal(Rational::parse(j.dump()));
      break;
    case SqlType::Bool:
      if (j.is_boolean()) return Value::boolean(j.get<bool>());
      break;
    case SqlType::Varchar:
      if (j.is_string()) return Value::string(j.get<std::string>());
      break;
  }
  throw ParseError("database: value " + j.dump() + " does not fit column " + column.name);
}

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Null:
      return nullptr;
    case Value::Kind::Int:
      return v.number().num();
    case Value::Kind::Dec:
      return v.number().to_string();
    case Value::Kind::Bool:
      return !v.number().is_zero();
    case Value::Kind::Str:
      return v.text();
  }
  return nullptr;
}

}  // namespace

Database load_database(std::string_view document, const Catalog& catalog) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("database: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("database: expected an object of tables");
  Database db(catalog);
  for (const auto& [name, rows] : j.items()) {
    const TableSchema& schema = catalog.resolve(name);
    if (!rows.is_array()) throw ParseError("database: rows of " + name + " must be an array");
    for (const auto& r : rows) {
      if (!r.is_array() || r.size() != schema.arity()) throw ParseError("database: bad row in " + name);
      Row row;
      for (std::size_t i = 0; i < r.size(); ++i) row.push_back(value_from_json(r[i], schema.columns[i]));
      db.insert(name, std::move(row));
    }
  }
  return db;
}

Database load_database_file(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open database file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_database(buffer.str(), catalog);
}

std::string dump_database(const Database& db) {
  json out = json::object();
  for (const auto& [name, _] : db.catalog().tables()) {
    json rows = json::array();
    for (const auto& row : db.rows(name)) {
      json r = json::array();
      for (const auto& v : row) r.push_back(value_to_json(v));
      rows.push_back(r);
    }
    out[name] = rows;
  }
  return out.dump();
}

Database random_database(const Catalog& catalog, std::uint64_t seed, std::size_t max_rows, double null_rate) {
  static const char* const words[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> digit(0, 9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(0, max_rows);

  Database db(catalog);
  for (const auto& [name, schema] : catalog.tables()) {
    std::size_t target = count(rng);
    std::set<Row> keys;
    // Key collisions are redrawn a bounded number of times.
    for (std::size_t attempt = 0; db.rows(name).size() < target && attempt < target * 8; ++attempt) {
      Row row;
      for (const auto& c : schema.columns) {
        if (c.nullable && unit(rng) < null_rate) {
          row.push_back(Value::null());
          continue;
        }
        int d = digit(rng);
        switch (c.type) {
          case SqlType::Int:
          case SqlType::Date:
            row.push_back(Value::integer(d));
            break;
          case SqlType::Decimal:
            row.push_back(Value::decimal(Rational(d)));
            break;
          case SqlType::Bool:
            row.push_back(Value::boolean(d % 2 == 1));
            break;
          case SqlType::Varchar:
            row.push_back(Value::string(words[d]));
            break;
        }
      }
      if (schema.primary_key) {
        Row key;
        for (std::size_t k : *schema.primary_key) key.push_back(row[k]);
        if (!keys.insert(key).second) continue;
      }
      db.insert(name, std::move(row));
    }
  }
  return db;
}

// ---- evaluation -----------------------------------------------------------

namespace {

Truth truth_not(Truth t) {
  return t == Truth::True ? Truth::False : t == Truth::False ? Truth::True : Truth::Unknown;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t hash_call(const std::string& name, const std::vector<Value>& args) {
  std::uint64_t h = static_cast<std::uint64_t>(string_code(name));
  for (const auto& a : args) {
    if (a.is_null()) {
      h = mix(h, 0xabcdefull);
    } else {
      h = mix(h, static_cast<std::uint64_t>(a.number().num()));
      h = mix(h, static_cast<std::uint64_t>(a.number().den()));
    }
  }
  return h;
}

std::vector<Row> expand(const Bag& bag) {
  std::vector<Row> out;
  for (const auto& [row, n] : bag) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(row);
  }
  return out;
}

class Evaluator {
 public:
  explicit Evaluator(const Database& db) : db_(db) {}

  Bag query(const Query& q) {
    return std::visit(overloaded{
                          [&](const plan::Table& t) {
                            Bag out;
                            for (const auto& row : db_.rows(t.name)) ++out[row];
                            return out;
                          },
                          [&](const plan::Spj& s) { return spj(s); },
                          [&](const plan::Agg& a) { return aggregate(a); },
                          [&](const plan::Union& u) {
                            Bag out;
                            for (const auto& in : u.inputs) {
                              for (const auto& [row, n] : query(*in)) out[row] += n;
                            }
                            return out;
                          },
                          [](const plan::Empty&) { return Bag{}; },
                      },
                      q.node);
  }

 private:
  Bag spj(const plan::Spj& s) {
    std::vector<std::vector<Row>> inputs;
    for (const auto& in : s.inputs) {
      inputs.push_back(expand(query(*in)));
      if (inputs.back().empty()) return {};
    }
    auto types = spj_input_types(s);
    Bag out;
    std::vector<std::size_t> pick(inputs.size(), 0);
    for (;;) {
      Row row;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Row& part = inputs[i][pick[i]];
        row.insert(row.end(), part.begin(), part.end());
      }
      if (predicate(*s.predicate, row, types) == Truth::True) {
        Row projected;
        for (const auto& p : s.projections) projected.push_back(expression(*p, row, types));
        ++out[projected];
      }
      std::size_t i = inputs.size();
      while (i > 0 && ++pick[i - 1] == inputs[i - 1].size()) pick[--i] = 0;
      if (i == 0) break;
    }
    return out;
  }

  Bag aggregate(const plan::Agg& a) {
    auto out_types = output_types(Query{a});
    std::map<Row, std::vector<Row>> groups;
    for (const auto& [row, n] : query(*a.input)) {
      Row key;
      for (std::size_t g : a.group_by) key.push_back(row[g]);
      auto& members = groups[key];
      for (std::size_t i = 0; i < n; ++i) members.push_back(row);
    }
    Bag out;
    for (const auto& [key, members] : groups) {
      Row row = key;
      for (std::size_t i = 0; i < a.aggs.size(); ++i) {
        row.push_back(aggregate_one(a.aggs[i], members, out_types[a.group_by.size() + i]));
      }
      ++out[row];
    }
    return out;
  }

  static Value aggregate_one(const AggFunc& f, const std::vector<Row>& members, SqlType type) {
    if (f.kind == AggKind::Count && f.operand == AggFunc::kStar) {
      return Value::integer(static_cast<std::int64_t>(members.size()));
    }
    std::vector<Value> values;
    for (const auto& m : members) {
      const Value& v = m[static_cast<std::size_t>(f.operand)];
      if (!v.is_null()) values.push_back(v);
    }
    switch (f.kind) {
      case AggKind::Count:
        return Value::integer(static_cast<std::int64_t>(values.size()));
      case AggKind::Sum: {
        if (values.empty()) return Value::null();
        Rational s;
        for (const auto& v : values) s = s + v.number();
        return Value::of_type(type, s);
      }
      case AggKind::Avg: {
        if (values.empty()) return Value::null();
        Rational s;
        for (const auto& v : values) s = s + v.number();
        return Value::decimal(s / Rational(static_cast<std::int64_t>(values.size())));
      }
      case AggKind::Min:
      case AggKind::Max: {
        if (values.empty()) return Value::null();
        Value best = values[0];
        for (const auto& v : values) {
          if (f.kind == AggKind::Min ? v < best : v > best) best = v;
        }
        return best;
      }
    }
    return Value::null();
  }

 public:
  Value expression(const Expr& e, const Row& row, std::span<const SqlType> types) {
    return std::visit(
        overloaded{
            [&](const expr::Column& c) -> Value {
              if (c.index >= row.size()) throw EvalError("column index out of range");
              return row[c.index];
            },
            [&](const expr::Const& c) -> Value {
              switch (c.value.kind) {
                case Literal::Kind::Int:
                  return Value::integer(c.value.number.num());
                case Literal::Kind::Dec:
                  return Value::decimal(c.value.number);
                case Literal::Kind::Bool:
                  return Value::boolean(!c.value.number.is_zero());
                case Literal::Kind::Str:
                  return Value::string(c.value.text);
              }
              return Value::null();
            },
            [](const expr::Null&) -> Value { return Value::null(); },
            [&](const expr::Arith& a) -> Value {
              Value l = expression(*a.lhs, row, types);
              Value r = expression(*a.rhs, row, types);
              if (l.is_null() || r.is_null()) return Value::null();
              SqlType type = expr_type(e, types);
              const Rational& x = l.number();
              const Rational& y = r.number();
              switch (a.op) {
                case ArithOp::Add:
                  return Value::of_type(type, x + y);
                case ArithOp::Sub:
                  return Value::of_type(type, x - y);
                case ArithOp::Mul:
                  return Value::of_type(type, x * y);
                case ArithOp::Div:
                case ArithOp::Mod: {
                  if (y.is_zero()) return Value::null();
                  Rational q = x / y;
                  if (!is_real(type)) q = Rational(q.trunc());
                  if (a.op == ArithOp::Div) return Value::of_type(type, q);
                  return Value::of_type(type, x - y * Rational(q.trunc()));
                }
              }
              return Value::null();
            },
            [&](const expr::Func& f) -> Value {
              std::vector<Value> args;
              for (const auto& x : f.args) {
                args.push_back(expression(*x, row, types));
                if (args.back().is_null()) return Value::null();
              }
              return Value::integer(static_cast<std::int64_t>(hash_call(f.name, args) % 10));
            },
            [&](const expr::Case& c) -> Value {
              for (const auto& [when, then] : c.branches) {
                if (predicate(*when, row, types) == Truth::True) return expression(*then, row, types);
              }
              return expression(*c.otherwise, row, types);
            },
        },
        e.node);
  }

  Truth predicate(const Pred& p, const Row& row, std::span<const SqlType> types) {
    return std::visit(
        overloaded{
            [&](const pred::Cmp& c) -> Truth {
              Value l = expression(*c.lhs, row, types);
              Value r = expression(*c.rhs, row, types);
              if (l.is_null() || r.is_null()) return Truth::Unknown;
              auto o = l.number() <=> r.number();
              bool b = false;
              switch (c.op) {
                case CmpOp::Gt:
                  b = o > 0;
                  break;
                case CmpOp::Lt:
                  b = o < 0;
                  break;
                case CmpOp::Eq:
                  b = o == 0;
                  break;
                case CmpOp::Le:
                  b = o <= 0;
                  break;
                case CmpOp::Ge:
                  b = o >= 0;
                  break;
              }
              return b ? Truth::True : Truth::False;
            },
            [&](const pred::And& a) -> Truth {
              Truth l = predicate(*a.lhs, row, types);
              Truth r = predicate(*a.rhs, row, types);
              if (l == Truth::False || r == Truth::False) return Truth::False;
              if (l == Truth::Unknown || r == Truth::Unknown) return Truth::Unknown;
              return Truth::True;
            },
            [&](const pred::Or& a) -> Truth {
              Truth l = predicate(*a.lhs, row, types);
              Truth r = predicate(*a.rhs, row, types);
              if (l == Truth::True || r == Truth::True) return Truth::True;
              if (l == Truth::Unknown || r == Truth::Unknown) return Truth::Unknown;
              return Truth::False;
            },
            [&](const pred::Not& n) -> Truth { return truth_not(predicate(*n.operand, row, types)); },
            [&](const pred::IsNull& n) -> Truth {
              return expression(*n.operand, row, types).is_null() ? Truth::True : Truth::False;
            },
            [&](const pred::Uninterpreted& u) -> Truth {
              std::vector<Value> args;
              std::vector<SqlType> arg_types;
              for (const auto& x : u.args) {
                args.push_back(expression(*x, row, types));
                arg_types.push_back(expr_type(*x, types));
              }
              if (!u.body) return hash_call(u.name, args) % 2 ? Truth::True : Truth::False;
              auto body_types = arg_types;
              auto in_types = output_types(*u.body->input);
              body_types.insert(body_types.end(), in_types.begin(), in_types.end());
              for (const auto& [r, _] : query(*u.body->input)) {
                Row joined = args;
                joined.insert(joined.end(), r.begin(), r.end());
                if (predicate(*u.body->on, joined, body_types) == Truth::True) return Truth::True;
              }
              return Truth::False;
            },
            [](const pred::True&) -> Truth { return Truth::True; },
            [](const pred::False&) -> Truth { return Truth::False; },
        },
        p.node);
  }

 private:
  const Database& db_;
};

}  // namespace

Bag eval_query(const Query& q, const Database& db) { return Evaluator(db).query(q); }

Truth eval_predicate(const Pred& p, const Row& row, std::span<const SqlType> types, const Database& db) {
  return Evaluator(db).predicate(p, row, types);
}

Value eval_expression(const Expr& e, const Row& row, std::span<const SqlType> types, const Database& db) {
  return Evaluator(db).expression(e, row, types);
}

bool bag_equal(const Bag& a, const Bag& b) { return a == b; }

std::size_t bag_size(const Bag& b) {
  std::size_t n = 0;
  for (const auto& [_, k] : b) n += k;
  return n;
}

std::string to_string(const Bag& b) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (const auto& [row, n] : b) {
    out << (first ? "" : ", ") << to_string(row);
    if (n > 1) out << " x" << n;
    first = false;
  }
  out << '}';
  return out.str();
}

}  // namespace bagcheck
