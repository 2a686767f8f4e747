#include "bagcheck/term.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace bagcheck {

std::string_view to_string(Sort sort) {
  switch (sort) {
    case Sort::Int:
      return "Int";
    case Sort::Real:
      return "Real";
    case Sort::Bool:
      return "Bool";
  }
  return "?";
}

namespace {

bool is_num(Term t) { return t->op == TermOp::Num; }
bool is_true(Term t) { return t->op == TermOp::BoolLit && !t->value.is_zero(); }
bool is_false(Term t) { return t->op == TermOp::BoolLit && t->value.is_zero(); }
bool negates(Term a, Term b) {
  return (a->op == TermOp::Not && a->args[0] == b) || (b->op == TermOp::Not && b->args[0] == a);
}

/// SMT-LIB `div`/`mod`: a = b*q + r with 0 <= r < |b|.
std::pair<Rational, Rational> euclid(const Rational& a, const Rational& b) {
  std::int64_t x = a.num();
  std::int64_t y = b.num();
  std::int64_t m = y < 0 ? -y : y;
  std::int64_t r = x % m;
  if (r < 0) r += m;
  return {Rational((x - r) / y), Rational(r)};
}

}  // namespace

Term TermFactory::make(TermOp op, Sort sort, std::vector<Term> args, std::string name, Rational value) {
  std::string key;
  key.reserve(32 + name.size());
  key += std::to_string(static_cast<int>(op));
  key += ':';
  key += std::to_string(static_cast<int>(sort));
  for (Term a : args) {
    key += ',';
    key += std::to_string(a->id);
  }
  key += '|';
  key += name;
  key += '|';
  key += std::to_string(value.num());
  key += '/';
  key += std::to_string(value.den());
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  nodes_.push_back(TermNode{op, sort, std::move(args), std::move(name), value, static_cast<std::uint32_t>(nodes_.size())});
  Term t = &nodes_.back();
  index_.emplace(std::move(key), t);
  return t;
}

Term TermFactory::var(const std::string& name, Sort sort) { return make(TermOp::Var, sort, {}, name); }

Term TermFactory::fresh(std::string_view prefix, Sort sort) {
  return var(std::string(prefix) + std::to_string(++counter_), sort);
}

Term TermFactory::num(Rational value, Sort sort) {
  if (sort == Sort::Bool) throw std::invalid_argument("numeric literal of sort Bool");
  if (sort == Sort::Int && !value.is_integer()) throw std::invalid_argument("non-integral Int literal");
  return make(TermOp::Num, sort, {}, {}, value);
}

Term TermFactory::boolean(bool value) { return make(TermOp::BoolLit, Sort::Bool, {}, {}, Rational(value ? 1 : 0)); }

std::pair<Term, Term> TermFactory::unify(Term a, Term b) {
  if (a->sort == Sort::Bool || b->sort == Sort::Bool) {
    if (a->sort != b->sort) throw std::invalid_argument("arithmetic over Bool");
    return {a, b};
  }
  if (a->sort == Sort::Real && b->sort == Sort::Int) return {a, to_real(b)};
  if (a->sort == Sort::Int && b->sort == Sort::Real) return {to_real(a), b};
  return {a, b};
}

Term TermFactory::to_real(Term a) {
  if (a->sort == Sort::Real) return a;
  if (a->sort != Sort::Int) throw std::invalid_argument("to_real of non-Int term");
  if (is_num(a)) return num(a->value, Sort::Real);
  return make(TermOp::ToReal, Sort::Real, {a});
}

Term TermFactory::add(Term a, Term b) {
  std::tie(a, b) = unify(a, b);
  if (is_num(a) && is_num(b)) {
    try {
      return num(a->value + b->value, a->sort);
    } catch (const std::overflow_error&) {
    }
  }
  if (is_num(a) && a->value.is_zero()) return b;
  if (is_num(b) && b->value.is_zero()) return a;
  return make(TermOp::Add, a->sort, {a, b});
}

Term TermFactory::sub(Term a, Term b) {
  std::tie(a, b) = unify(a, b);
  if (is_num(a) && is_num(b)) {
    try {
      return num(a->value - b->value, a->sort);
    } catch (const std::overflow_error&) {
    }
  }
  if (is_num(b) && b->value.is_zero()) return a;
  return make(TermOp::Sub, a->sort, {a, b});
}

Term TermFactory::mul(Term a, Term b) {
  std::tie(a, b) = unify(a, b);
  if (is_num(a) && is_num(b)) {
    try {
      return num(a->value * b->value, a->sort);
    } catch (const std::overflow_error&) {
    }
  }
  if (is_num(a) && a->value == Rational(1)) return b;
  if (is_num(b) && b->value == Rational(1)) return a;
  return make(TermOp::Mul, a->sort, {a, b});
}

Term TermFactory::real_div(Term a, Term b) {
  a = to_real(a);
  b = to_real(b);
  if (is_num(a) && is_num(b) && !b->value.is_zero()) {
    try {
      return num(a->value / b->value, Sort::Real);
    } catch (const std::overflow_error&) {
    }
  }
  if (is_num(b) && b->value == Rational(1)) return a;
  return make(TermOp::RealDiv, Sort::Real, {a, b});
}

Term TermFactory::int_div(Term a, Term b) {
  if (a->sort != Sort::Int || b->sort != Sort::Int) throw std::invalid_argument("div over non-Int terms");
  if (is_num(a) && is_num(b) && !b->value.is_zero()) return num(euclid(a->value, b->value).first, Sort::Int);
  return make(TermOp::IntDiv, Sort::Int, {a, b});
}

Term TermFactory::int_mod(Term a, Term b) {
  if (a->sort != Sort::Int || b->sort != Sort::Int) throw std::invalid_argument("mod over non-Int terms");
  if (is_num(a) && is_num(b) && !b->value.is_zero()) return num(euclid(a->value, b->value).second, Sort::Int);
  return make(TermOp::IntMod, Sort::Int, {a, b});
}

Term TermFactory::neg(Term a) {
  if (a->sort == Sort::Bool) throw std::invalid_argument("negation of Bool term");
  if (is_num(a)) return num(-a->value, a->sort);
  if (a->op == TermOp::Neg) return a->args[0];
  return make(TermOp::Neg, a->sort, {a});
}

Term TermFactory::compare(TermOp op, Term a, Term b) {
  std::tie(a, b) = unify(a, b);
  if (is_num(a) && is_num(b)) {
    auto c = a->value <=> b->value;
    switch (op) {
      case TermOp::Lt:
        return boolean(c < 0);
      case TermOp::Le:
        return boolean(c <= 0);
      case TermOp::Gt:
        return boolean(c > 0);
      case TermOp::Ge:
        return boolean(c >= 0);
      default:
        break;
    }
  }
  if (a == b) return boolean(op == TermOp::Le || op == TermOp::Ge);
  return make(op, Sort::Bool, {a, b});
}

Term TermFactory::lt(Term a, Term b) { return compare(TermOp::Lt, a, b); }
Term TermFactory::le(Term a, Term b) { return compare(TermOp::Le, a, b); }
Term TermFactory::gt(Term a, Term b) { return compare(TermOp::Gt, a, b); }
Term TermFactory::ge(Term a, Term b) { return compare(TermOp::Ge, a, b); }

Term TermFactory::eq(Term a, Term b) {
  if (a == b) return truth();
  if (a->sort == Sort::Bool || b->sort == Sort::Bool) {
    if (a->sort != b->sort) throw std::invalid_argument("equality between Bool and numeric terms");
    if (is_true(a)) return b;
    if (is_true(b)) return a;
    if (is_false(a)) return not_(b);
    if (is_false(b)) return not_(a);
    if (negates(a, b)) return falsity();
  } else {
    std::tie(a, b) = unify(a, b);
    if (a == b) return truth();
    if (is_num(a) && is_num(b)) return boolean(a->value == b->value);
  }
  if (b->id < a->id) std::swap(a, b);
  return make(TermOp::Eq, Sort::Bool, {a, b});
}

Term TermFactory::and_(Term a, Term b) {
  if (is_false(a) || is_false(b)) return falsity();
  if (is_true(a)) return b;
  if (is_true(b)) return a;
  if (a == b) return a;
  if (negates(a, b)) return falsity();
  return make(TermOp::And, Sort::Bool, {a, b});
}

Term TermFactory::and_(const std::vector<Term>& parts) {
  Term out = truth();
  for (Term p : parts) out = and_(out, p);
  return out;
}

Term TermFactory::or_(Term a, Term b) {
  if (is_true(a) || is_true(b)) return truth();
  if (is_false(a)) return b;
  if (is_false(b)) return a;
  if (a == b) return a;
  if (negates(a, b)) return truth();
  return make(TermOp::Or, Sort::Bool, {a, b});
}

Term TermFactory::or_(const std::vector<Term>& parts) {
  Term out = falsity();
  for (Term p : parts) out = or_(out, p);
  return out;
}

Term TermFactory::not_(Term a) {
  if (a->sort != Sort::Bool) throw std::invalid_argument("not of non-Bool term");
  if (a->op == TermOp::BoolLit) return boolean(a->value.is_zero());
  if (a->op == TermOp::Not) return a->args[0];
  return make(TermOp::Not, Sort::Bool, {a});
}

Term TermFactory::ite(Term c, Term a, Term b) {
  if (c->sort != Sort::Bool) throw std::invalid_argument("ite condition must be Bool");
  if (a->sort != Sort::Bool && b->sort != Sort::Bool) std::tie(a, b) = unify(a, b);
  if (a->sort != b->sort) throw std::invalid_argument("ite branches of different sorts");
  if (is_true(c)) return a;
  if (is_false(c)) return b;
  if (a == b) return a;
  if (a->sort == Sort::Bool) {
    if (is_true(a) && is_false(b)) return c;
    if (is_false(a) && is_true(b)) return not_(c);
    if (is_false(b)) return and_(c, a);
    if (is_true(a)) return or_(c, b);
  }
  return make(TermOp::Ite, a->sort, {c, a, b});
}

Term TermFactory::apply(const std::string& name, std::vector<Term> args, Sort result) {
  UfSignature sig{{}, result};
  for (Term a : args) sig.args.push_back(a->sort);
  auto [it, inserted] = functions_.emplace(name, sig);
  if (!inserted && !(it->second == sig)) {
    throw std::invalid_argument("uninterpreted function " + name + " used with two signatures");
  }
  return make(TermOp::Apply, result, std::move(args), name);
}

Term TermFactory::substitute(Term t, const std::unordered_map<Term, Term>& mapping) {
  std::unordered_map<Term, Term> memo;
  std::function<Term(Term)> go = [&](Term x) -> Term {
    if (auto m = mapping.find(x); m != mapping.end()) return m->second;
    if (x->args.empty()) return x;
    if (auto m = memo.find(x); m != memo.end()) return m->second;
    std::vector<Term> args;
    args.reserve(x->args.size());
    bool changed = false;
    for (Term a : x->args) {
      args.push_back(go(a));
      changed |= args.back() != a;
    }
    Term out = x;
    if (changed) {
      switch (x->op) {
        case TermOp::Add:
          out = add(args[0], args[1]);
          break;
        case TermOp::Sub:
          out = sub(args[0], args[1]);
          break;
        case TermOp::Mul:
          out = mul(args[0], args[1]);
          break;
        case TermOp::RealDiv:
          out = real_div(args[0], args[1]);
          break;
        case TermOp::IntDiv:
          out = int_div(args[0], args[1]);
          break;
        case TermOp::IntMod:
          out = int_mod(args[0], args[1]);
          break;
        case TermOp::Neg:
          out = neg(args[0]);
          break;
        case TermOp::ToReal:
          out = to_real(args[0]);
          break;
        case TermOp::Lt:
          out = lt(args[0], args[1]);
          break;
        case TermOp::Le:
          out = le(args[0], args[1]);
          break;
        case TermOp::Gt:
          out = gt(args[0], args[1]);
          break;
        case TermOp::Ge:
          out = ge(args[0], args[1]);
          break;
        case TermOp::Eq:
          out = eq(args[0], args[1]);
          break;
        case TermOp::And:
          out = and_(args[0], args[1]);
          break;
        case TermOp::Or:
          out = or_(args[0], args[1]);
          break;
        case TermOp::Not:
          out = not_(args[0]);
          break;
        case TermOp::Ite:
          out = ite(args[0], args[1], args[2]);
          break;
        case TermOp::Apply:
          out = apply(x->name, std::move(args), x->sort);
          break;
        default:
          break;
      }
    }
    memo.emplace(x, out);
    return out;
  };
  return go(t);
}

// ---- inspection -----------------------------------------------------------

namespace {

template <class Fn>
void walk_dag(const std::vector<Term>& roots, Fn&& fn) {
  std::unordered_set<Term> seen;
  std::vector<Term> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    Term t = stack.back();
    stack.pop_back();
    if (!seen.insert(t).second) continue;
    fn(t);
    for (auto it = t->args.rbegin(); it != t->args.rend(); ++it) stack.push_back(*it);
  }
}

}  // namespace

std::vector<Term> free_variables(const std::vector<Term>& roots) {
  std::vector<Term> out;
  walk_dag(roots, [&](Term t) {
    if (t->op == TermOp::Var) out.push_back(t);
  });
  return out;
}

bool mentions(Term t, Term variable) {
  bool found = false;
  walk_dag({t}, [&](Term x) { found |= x == variable; });
  return found;
}

// ---- printing -------------------------------------------------------------

namespace {

std::string print_number(const Rational& v, Sort sort) {
  auto magnitude = [&](std::int64_t x) {
    auto m = x < 0 ? 0ull - static_cast<unsigned long long>(x) : static_cast<unsigned long long>(x);
    std::string s = std::to_string(m);
    return sort == Sort::Real ? s + ".0" : s;
  };
  std::string body = v.is_integer() ? magnitude(v.num())
                                    : "(/ " + magnitude(v.num()) + " " + magnitude(v.den()) + ")";
  return v.sign() < 0 ? "(- " + body + ")" : body;
}

const char* op_symbol(TermOp op) {
  switch (op) {
    case TermOp::Add:
      return "+";
    case TermOp::Sub:
      return "-";
    case TermOp::Mul:
      return "*";
    case TermOp::RealDiv:
      return "/";
    case TermOp::IntDiv:
      return "div";
    case TermOp::IntMod:
      return "mod";
    case TermOp::Neg:
      return "-";
    case TermOp::ToReal:
      return "to_real";
    case TermOp::Lt:
      return "<";
    case TermOp::Le:
      return "<=";
    case TermOp::Gt:
      return ">";
    case TermOp::Ge:
      return ">=";
    case TermOp::Eq:
      return "=";
    case TermOp::And:
      return "and";
    case TermOp::Or:
      return "or";
    case TermOp::Not:
      return "not";
    case TermOp::Ite:
      return "ite";
    default:
      return "?";
  }
}

class Printer {
 public:
  explicit Printer(const std::unordered_map<Term, std::string>& names) : names_(names) {}

  void print(Term t, std::ostream& out, bool top = false) {
    if (!top) {
      if (auto it = names_.find(t); it != names_.end()) {
        out << it->second;
        return;
      }
    }
    switch (t->op) {
      case TermOp::Var:
        out << t->name;
        return;
      case TermOp::Num:
        out << print_number(t->value, t->sort);
        return;
      case TermOp::BoolLit:
        out << (t->value.is_zero() ? "false" : "true");
        return;
      case TermOp::Apply:
        if (t->args.empty()) {
          out << t->name;
          return;
        }
        out << '(' << t->name;
        break;
      default:
        out << '(' << op_symbol(t->op);
    }
    for (Term a : t->args) {
      out << ' ';
      print(a, out);
    }
    out << ')';
  }

 private:
  const std::unordered_map<Term, std::string>& names_;
};

}  // namespace

std::string to_smtlib(Term t) {
  std::unordered_map<Term, std::string> none;
  std::ostringstream out;
  Printer(none).print(t, out, true);
  return out.str();
}

std::string smtlib_script(const TermFactory& factory, const std::vector<Term>& assertions) {
  std::ostringstream out;
  std::unordered_map<Term, int> parents;
  std::vector<Term> order;  // post-order over compound terms
  {
    std::unordered_set<Term> done;
    std::function<void(Term)> visit = [&](Term t) {
      if (t->args.empty()) return;
      if (!done.insert(t).second) return;
      for (Term a : t->args) {
        ++parents[a];
        visit(a);
      }
      order.push_back(t);
    };
    for (Term a : assertions) visit(a);
  }

  std::map<std::string, UfSignature> used_functions;
  std::vector<Term> vars = free_variables(assertions);
  walk_dag(assertions, [&](Term t) {
    if (t->op == TermOp::Apply) {
      auto it = factory.functions().find(t->name);
      if (it != factory.functions().end()) used_functions.emplace(it->first, it->second);
    }
  });
  for (const auto& [name, sig] : used_functions) {
    out << "(declare-fun " << name << " (";
    for (std::size_t i = 0; i < sig.args.size(); ++i) out << (i ? " " : "") << to_string(sig.args[i]);
    out << ") " << to_string(sig.result) << ")\n";
  }
  for (Term v : vars) out << "(declare-fun " << v->name << " () " << to_string(v->sort) << ")\n";

  std::unordered_map<Term, std::string> names;
  Printer printer(names);
  for (Term t : order) {
    if (parents[t] < 2) continue;
    std::string name = "$t" + std::to_string(t->id);
    out << "(define-fun " << name << " () " << to_string(t->sort) << ' ';
    printer.print(t, out, true);
    out << ")\n";
    names.emplace(t, std::move(name));
  }
  for (Term a : assertions) {
    out << "(assert ";
    printer.print(a, out);
    out << ")\n";
  }
  return out.str();
}

// ---- evaluation -----------------------------------------------------------

ConcreteValue evaluate(Term t, const std::unordered_map<Term, ConcreteValue>& bindings, const UfInterpretation& uf) {
  std::unordered_map<Term, ConcreteValue> memo;
  std::function<ConcreteValue(Term)> go = [&](Term x) -> ConcreteValue {
    if (auto it = memo.find(x); it != memo.end()) return it->second;
    auto number = [&](std::size_t i) { return std::get<Rational>(go(x->args[i])); };
    auto truth = [&](std::size_t i) { return std::get<bool>(go(x->args[i])); };
    ConcreteValue v;
    switch (x->op) {
      case TermOp::Var: {
        auto it = bindings.find(x);
        if (it == bindings.end()) throw std::invalid_argument("unbound variable " + x->name);
        v = it->second;
        break;
      }
      case TermOp::Num:
        v = x->value;
        break;
      case TermOp::BoolLit:
        v = !x->value.is_zero();
        break;
      case TermOp::Add:
        v = number(0) + number(1);
        break;
      case TermOp::Sub:
        v = number(0) - number(1);
        break;
      case TermOp::Mul:
        v = number(0) * number(1);
        break;
      case TermOp::RealDiv: {
        Rational d = number(1);
        v = d.is_zero() ? Rational(0) : number(0) / d;
        break;
      }
      case TermOp::IntDiv:
      case TermOp::IntMod: {
        Rational d = number(1);
        if (d.is_zero()) {
          v = Rational(0);
          break;
        }
        auto [q, r] = euclid(number(0), d);
        v = x->op == TermOp::IntDiv ? q : r;
        break;
      }
      case TermOp::Neg:
        v = -number(0);
        break;
      case TermOp::ToReal:
        v = number(0);
        break;
      case TermOp::Lt:
        v = number(0) < number(1);
        break;
      case TermOp::Le:
        v = number(0) <= number(1);
        break;
      case TermOp::Gt:
        v = number(0) > number(1);
        break;
      case TermOp::Ge:
        v = number(0) >= number(1);
        break;
      case TermOp::Eq:
        v = go(x->args[0]) == go(x->args[1]);
        break;
      case TermOp::And:
        v = truth(0) && truth(1);
        break;
      case TermOp::Or:
        v = truth(0) || truth(1);
        break;
      case TermOp::Not:
        v = !truth(0);
        break;
      case TermOp::Ite:
        v = truth(0) ? go(x->args[1]) : go(x->args[2]);
        break;
      case TermOp::Apply: {
        if (!uf) throw std::invalid_argument("no interpretation for " + x->name);
        std::vector<ConcreteValue> args;
        for (Term a : x->args) args.push_back(go(a));
        v = uf(x->name, args);
        break;
      }
    }
    memo.emplace(x, v);
    return v;
  };
  return go(t);
}

}  // namespace bagcheck
