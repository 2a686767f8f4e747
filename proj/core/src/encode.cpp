#include "bagcheck/encode.hpp"

#include <stdexcept>

#include "overloaded.hpp"

namespace bagcheck {

using detail::overloaded;

namespace {

/// Symbols must stay SMT-LIB simple symbols.
std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

char sort_letter(Sort s) { return s == Sort::Real ? 'r' : s == Sort::Bool ? 'b' : 'i'; }

}  // namespace

Term encode_literal(TermFactory& terms, const Literal& value) {
  switch (value.kind) {
    case Literal::Kind::Int:
    case Literal::Kind::Bool:
      return terms.num(value.number, Sort::Int);
    case Literal::Kind::Dec:
      return terms.num(value.number, Sort::Real);
    case Literal::Kind::Str:
      return terms.int_lit(string_code(value.text));
  }
  return nullptr;
}

std::string Encoder::function_symbol(const std::string& name, std::span<const Sort> args, Sort result) {
  std::string out = "f_" + sanitize(name) + "_";
  for (Sort s : args) out += sort_letter(s);
  out += '_';
  out += sort_letter(result);
  return out;
}

std::string Encoder::predicate_symbol(const std::string& name, std::span<const Sort> args) {
  std::string out = "p_" + sanitize(name) + "_";
  for (Sort s : args) out += sort_letter(s);
  return out;
}

SymCol Encoder::fresh_col(Sort sort, bool nullable) {
  Term v = terms_.fresh("v", sort);
  Term n = nullable ? terms_.fresh("n", Sort::Bool) : terms_.falsity();
  return {v, n};
}

SymTuple Encoder::fresh_tuple(std::span<const SqlType> types, const std::vector<bool>& nullable) {
  SymTuple out;
  out.reserve(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) {
    out.push_back(fresh_col(sort_of(types[i]), i < nullable.size() ? nullable[i] : true));
  }
  return out;
}

SymTuple Encoder::fresh_tuple(const TableSchema& schema) {
  SymTuple out;
  out.reserve(schema.arity());
  for (const auto& c : schema.columns) out.push_back(fresh_col(sort_of(c.type), c.nullable));
  return out;
}

Term Encoder::filter(const PredCode& code) { return terms_.and_(code.truth, terms_.not_(code.null)); }

PredCode Encoder::const_pred(const Pred& p, const SymTuple& t) {
  std::vector<Term> assign;
  PredCode code = encode_pred(p, t, assign);
  code.assign = terms_.and_(assign);
  return code;
}

PredCode Encoder::encode_pred(const Pred& p, const SymTuple& t, std::vector<Term>& assign) {
  TermFactory& T = terms_;
  return std::visit(
      overloaded{
          [&](const pred::Cmp& c) -> PredCode {
            SymCol l = encode_expr(*c.lhs, t, assign);
            SymCol r = encode_expr(*c.rhs, t, assign);
            Term truth = nullptr;
            switch (c.op) {
              case CmpOp::Gt:
                truth = T.gt(l.val, r.val);
                break;
              case CmpOp::Lt:
                truth = T.lt(l.val, r.val);
                break;
              case CmpOp::Eq:
                truth = T.eq(l.val, r.val);
                break;
              case CmpOp::Le:
                truth = T.le(l.val, r.val);
                break;
              case CmpOp::Ge:
                truth = T.ge(l.val, r.val);
                break;
            }
            return {truth, T.or_(l.isnull, r.isnull), nullptr};
          },
          [&](const pred::And& a) -> PredCode {
            PredCode l = encode_pred(*a.lhs, t, assign);
            PredCode r = encode_pred(*a.rhs, t, assign);
            Term l_false = T.and_(T.not_(l.null), T.not_(l.truth));
            Term r_false = T.and_(T.not_(r.null), T.not_(r.truth));
            Term is_false = T.or_(l_false, r_false);
            Term null = T.and_(T.not_(is_false), T.or_(l.null, r.null));
            return {T.and_(l.truth, r.truth), null, nullptr};
          },
          [&](const pred::Or& a) -> PredCode {
            PredCode l = encode_pred(*a.lhs, t, assign);
            PredCode r = encode_pred(*a.rhs, t, assign);
            Term l_true = T.and_(T.not_(l.null), l.truth);
            Term r_true = T.and_(T.not_(r.null), r.truth);
            Term is_true = T.or_(l_true, r_true);
            Term null = T.and_(T.not_(is_true), T.or_(l.null, r.null));
            return {is_true, null, nullptr};
          },
          [&](const pred::Not& n) -> PredCode {
            PredCode inner = encode_pred(*n.operand, t, assign);
            return {T.not_(inner.truth), inner.null, nullptr};
          },
          [&](const pred::IsNull& n) -> PredCode {
            SymCol e = encode_expr(*n.operand, t, assign);
            return {e.isnull, T.falsity(), nullptr};
          },
          [&](const pred::Uninterpreted& u) -> PredCode {
            std::vector<Term> vals;
            std::vector<Term> nulls;
            for (const auto& a : u.args) {
              SymCol c = encode_expr(*a, t, assign);
              vals.push_back(c.val);
              nulls.push_back(c.isnull);
            }
            std::vector<Sort> sorts;
            for (Term v : vals) sorts.push_back(v->sort);
            vals.insert(vals.end(), nulls.begin(), nulls.end());
            return {T.apply(predicate_symbol(u.name, sorts), std::move(vals), Sort::Bool), T.falsity(), nullptr};
          },
          [&](const pred::True&) -> PredCode { return {T.truth(), T.falsity(), nullptr}; },
          [&](const pred::False&) -> PredCode { return {T.falsity(), T.falsity(), nullptr}; },
      },
      p.node);
}

std::pair<SymTuple, Term> Encoder::const_expr(std::span<const ExprPtr> exprs, const SymTuple& t) {
  std::vector<Term> assign;
  SymTuple out;
  out.reserve(exprs.size());
  for (const auto& e : exprs) out.push_back(encode_expr(*e, t, assign));
  return {std::move(out), terms_.and_(assign)};
}

SymCol Encoder::encode_expr(const Expr& e, const SymTuple& t, std::vector<Term>& assign) {
  TermFactory& T = terms_;
  return std::visit(
      overloaded{
          [&](const expr::Column& c) -> SymCol {
            if (c.index >= t.size()) throw std::out_of_range("column index beyond symbolic tuple");
            return t[c.index];
          },
          [&](const expr::Const& c) -> SymCol { return {encode_literal(T, c.value), T.falsity()}; },
          [&](const expr::Null&) -> SymCol { return {T.fresh("v", Sort::Int), T.truth()}; },
          [&](const expr::Arith& a) -> SymCol {
            SymCol l = encode_expr(*a.lhs, t, assign);
            SymCol r = encode_expr(*a.rhs, t, assign);
            Term null = T.or_(l.isnull, r.isnull);
            bool real = l.val->sort == Sort::Real || r.val->sort == Sort::Real;
            switch (a.op) {
              case ArithOp::Add:
                return {T.add(l.val, r.val), null};
              case ArithOp::Sub:
                return {T.sub(l.val, r.val), null};
              case ArithOp::Mul:
                return {T.mul(l.val, r.val), null};
              case ArithOp::Div:
              case ArithOp::Mod: {
                Term zero = T.eq(r.val, T.num(Rational(0), r.val->sort));
                null = T.or_(null, zero);
                if (real) {
                  if (a.op == ArithOp::Div) return {T.real_div(l.val, r.val), null};
                  std::vector<Term> args{T.to_real(l.val), T.to_real(r.val)};
                  return {T.apply("f_mod_rr_r", std::move(args), Sort::Real), null};
                }
                // SQL truncates toward zero and the remainder takes the dividend's sign.
                Term zero_i = T.int_lit(0);
                Term abs_l = T.ite(T.ge(l.val, zero_i), l.val, T.neg(l.val));
                Term abs_r = T.ite(T.ge(r.val, zero_i), r.val, T.neg(r.val));
                if (a.op == ArithOp::Div) {
                  Term q = T.int_div(abs_l, abs_r);
                  Term same_sign = T.eq(T.ge(l.val, zero_i), T.ge(r.val, zero_i));
                  return {T.ite(same_sign, q, T.neg(q)), null};
                }
                Term m = T.int_mod(abs_l, abs_r);
                return {T.ite(T.ge(l.val, zero_i), m, T.neg(m)), null};
              }
            }
            throw std::logic_error("unhandled arithmetic operator");
          },
          [&](const expr::Func& f) -> SymCol {
            std::vector<Term> vals;
            std::vector<Term> nulls;
            std::vector<Sort> sorts;
            for (const auto& a : f.args) {
              SymCol c = encode_expr(*a, t, assign);
              vals.push_back(c.val);
              nulls.push_back(c.isnull);
              sorts.push_back(c.val->sort);
            }
            Term v = T.apply(function_symbol(f.name, sorts, Sort::Int), std::move(vals), Sort::Int);
            return {v, T.or_(nulls)};
          },
          [&](const expr::Case& c) -> SymCol {
            std::vector<std::pair<Term, SymCol>> arms;
            bool real = false;
            for (const auto& [when, then] : c.branches) {
              PredCode cond = encode_pred(*when, t, assign);
              SymCol value = encode_expr(*then, t, assign);
              real |= value.val->sort == Sort::Real;
              arms.emplace_back(filter(cond), value);
            }
            SymCol otherwise = encode_expr(*c.otherwise, t, assign);
            real |= otherwise.val->sort == Sort::Real;
            auto lift = [&](Term v) { return real ? T.to_real(v) : v; };
            Term val = lift(otherwise.val);
            Term null = otherwise.isnull;
            for (auto it = arms.rbegin(); it != arms.rend(); ++it) {
              val = T.ite(it->first, lift(it->second.val), val);
              null = T.ite(it->first, it->second.isnull, null);
            }
            SymCol out{T.fresh("v", real ? Sort::Real : Sort::Int), T.fresh("n", Sort::Bool)};
            assign.push_back(T.eq(out.val, val));
            assign.push_back(T.eq(out.isnull, null));
            return out;
          },
      },
      e.node);
}

Term Encoder::col_equal(const SymCol& a, const SymCol& b) {
  if (a.val == b.val && a.isnull == b.isnull) return terms_.truth();
  Term same_null = terms_.eq(a.isnull, b.isnull);
  return terms_.and_(same_null, terms_.or_(a.isnull, terms_.eq(a.val, b.val)));
}

Term Encoder::tuple_equal(const SymTuple& a, const SymTuple& b) {
  if (a.size() != b.size()) return terms_.falsity();
  Term out = terms_.truth();
  for (std::size_t i = 0; i < a.size(); ++i) out = terms_.and_(out, col_equal(a[i], b[i]));
  return out;
}

SolverVerdict check_unsat(SmtSession& session, const TermFactory& terms, Term f, std::chrono::milliseconds budget,
                          bool want_model) {
  if (f->op == TermOp::BoolLit) {
    SolverVerdict v;
    v.status = f->value.is_zero() ? SatStatus::Unsat : SatStatus::Sat;
    if (v.status == SatStatus::Sat && want_model) return session.check(terms, {f}, budget, true);
    return v;
  }
  return session.check(terms, {f}, budget, want_model);
}

FullCheck check_full_equivalence(SmtSession& session, Encoder& encoder, const Qpsr& q,
                                 std::chrono::milliseconds budget, Model* counterexample) {
  if (q.cols1.size() != q.cols2.size()) return FullCheck::Refuted;
  TermFactory& T = encoder.terms();
  Term f = T.and_({q.cond, q.assign, T.not_(encoder.tuple_equal(q.cols1, q.cols2))});
  SolverVerdict v = check_unsat(session, T, f, budget, counterexample != nullptr);
  switch (v.status) {
    case SatStatus::Unsat:
      return FullCheck::Proven;
    case SatStatus::Sat:
      if (counterexample) *counterexample = std::move(v.model);
      return FullCheck::Refuted;
    case SatStatus::Unknown:
      return FullCheck::Unknown;
  }
  return FullCheck::Unknown;
}

std::vector<std::string> qpsr_problems(const Qpsr& q) {
  std::vector<std::string> out;
  if (q.cols1.size() != q.cols2.size()) out.push_back("tuple widths differ");
  if (!q.cond || q.cond->sort != Sort::Bool) out.push_back("cond is not a formula");
  if (!q.assign || q.assign->sort != Sort::Bool) out.push_back("assign is not a formula");
  auto check = [&](const SymTuple& t, const char* side) {
    for (const auto& c : t) {
      if (!c.val || !c.isnull) {
        out.push_back(std::string(side) + ": missing term");
      } else if (c.val->sort == Sort::Bool || c.isnull->sort != Sort::Bool) {
        out.push_back(std::string(side) + ": ill-sorted column");
      }
    }
  };
  check(q.cols1, "cols1");
  check(q.cols2, "cols2");
  return out;
}

}  // namespace bagcheck
