#include "bagcheck/verifier.hpp"

#include <map>
#include <unordered_map>

#include "bagcheck/normalizer.hpp"
#include "overloaded.hpp"

namespace bagcheck {

using detail::overloaded;

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::TypeMismatch:
      return "TypeMismatch";
    case Reason::NoBijection:
      return "NoBijection";
    case Reason::PredicateMismatch:
      return "PredicateMismatch";
    case Reason::GroupSetMismatch:
      return "GroupSetMismatch";
    case Reason::OutputMismatch:
      return "OutputMismatch";
    case Reason::SolverUnknown:
      return "SolverUnknown";
    case Reason::Unsupported:
      return "Unsupported";
    case Reason::Timeout:
      return "Timeout";
  }
  return "?";
}

std::string Verdict::label() const {
  return equivalent ? "Equivalent" : "NotProven(" + std::string(to_string(reason)) + ")";
}

namespace {

/// Candidates are only paired within the same bucket.
std::string bucket(const QueryPtr& q) {
  if (const auto* t = as<plan::Table>(q)) return "T:" + t->name;
  return std::to_string(q->node.index());
}

}  // namespace

Verifier::Verifier(SmtSession& session, TermFactory& terms, const VerifyOptions& options, Deadline deadline)
    : session_(session), terms_(terms), encoder_(terms), options_(options), deadline_(deadline) {}

std::chrono::milliseconds Verifier::budget() {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - std::chrono::steady_clock::now());
  if (left.count() <= 0) throw VerifyTimeout{};
  return std::min(left, options_.call_budget);
}

bool Verifier::proves(const std::vector<Term>& assertions) {
  Term f = terms_.and_(assertions);
  if (f->op == TermOp::BoolLit) return f->value.is_zero();
  SolverVerdict v = session_.check(terms_, {f}, budget());
  if (v.status == SatStatus::Unknown) {
    saw_unknown_ = true;
    if (std::chrono::steady_clock::now() >= deadline_) throw VerifyTimeout{};
  }
  return v.status == SatStatus::Unsat;
}

FullCheck Verifier::full_check(const Qpsr& q) {
  FullCheck r = check_full_equivalence(session_, encoder_, q, budget());
  if (r == FullCheck::Unknown) saw_unknown_ = true;
  if (r == FullCheck::Refuted) fail(Reason::OutputMismatch);
  return r;
}

std::optional<Qpsr> Verifier::veri_card(const QueryPtr& n1, const QueryPtr& n2) {
  std::optional<Qpsr> out;
  enumerate(n1, n2, [&](const Qpsr& q) {
    out = q;
    return true;
  });
  return out;
}

void Verifier::enumerate(const QueryPtr& n1, const QueryPtr& n2, const QpsrSink& sink) {
  if (n1->node.index() != n2->node.index()) {
    fail(Reason::TypeMismatch);
    return;
  }
  std::visit(overloaded{
                 [&](const plan::Table& t1) {
                   if (auto q = veri_table(t1, *as<plan::Table>(n2))) sink(*q);
                 },
                 [&](const plan::Spj& s1) { veri_spj(s1, *as<plan::Spj>(n2), sink); },
                 [&](const plan::Agg& a1) { veri_agg(a1, *as<plan::Agg>(n2), sink); },
                 [&](const plan::Union& u1) { veri_union(u1, *as<plan::Union>(n2), sink); },
                 [&](const plan::Empty& e1) {
                   if (e1.arity != as<plan::Empty>(n2)->arity) {
                     fail(Reason::TypeMismatch);
                     return;
                   }
                   SymTuple t(e1.arity);
                   for (auto& c : t) c = encoder_.fresh_col(Sort::Int);
                   sink(Qpsr{t, t, terms_.falsity(), terms_.truth()});
                 },
             },
             n1->node);
}

std::optional<Qpsr> Verifier::veri_table(const plan::Table& t1, const plan::Table& t2) {
  if (t1.name != t2.name) {
    fail(Reason::NoBijection);
    return std::nullopt;
  }
  SymTuple t = encoder_.fresh_tuple(*t1.schema);
  return Qpsr{t, t, terms_.truth(), terms_.truth()};
}

void Verifier::veri_vec(const std::vector<QueryPtr>& v1, const std::vector<QueryPtr>& v2, const CandidateSink& sink) {
  std::size_t n = v1.size();
  if (n != v2.size()) {
    fail(Reason::NoBijection);
    return;
  }
  // Lazily filled pairwise matrix of cardinal-equivalence maps.
  std::map<std::pair<std::size_t, std::size_t>, std::optional<Qpsr>> matrix;
  auto cell = [&](std::size_t i, std::size_t j) -> const std::optional<Qpsr>& {
    auto key = std::make_pair(i, j);
    auto it = matrix.find(key);
    if (it == matrix.end()) {
      std::optional<Qpsr> q;
      if (bucket(v1[i]) == bucket(v2[j])) q = veri_card(v1[i], v2[j]);
      it = matrix.emplace(key, std::move(q)).first;
    }
    return it->second;
  };

  CandidateMap current;
  current.pairing.assign(n, 0);
  current.qpsrs.resize(n);
  std::vector<bool> used(n, false);
  std::size_t emitted = 0;
  bool stop = false;
  bool any = false;

  std::function<void(std::size_t)> extend = [&](std::size_t i) {
    if (stop) return;
    if (i == n) {
      any = true;
      if (++emitted > options_.candidate_cap) {
        fail(Reason::NoBijection);
        stop = true;
        return;
      }
      stop = sink(current);
      return;
    }
    for (std::size_t j = 0; j < n && !stop; ++j) {
      if (used[j]) continue;
      const auto& q = cell(i, j);
      if (!q) continue;
      used[j] = true;
      current.pairing[i] = j;
      current.qpsrs[i] = *q;
      extend(i + 1);
      used[j] = false;
    }
  };
  extend(0);
  if (!any) fail(Reason::NoBijection);
}

Qpsr Verifier::compose(const CandidateMap& map) {
  Qpsr out;
  std::vector<Term> cond;
  std::vector<Term> assign;
  std::vector<std::size_t> inverse(map.pairing.size());
  for (std::size_t i = 0; i < map.pairing.size(); ++i) inverse[map.pairing[i]] = i;
  for (const auto& q : map.qpsrs) {
    out.cols1.insert(out.cols1.end(), q.cols1.begin(), q.cols1.end());
    cond.push_back(q.cond);
    assign.push_back(q.assign);
  }
  for (std::size_t j = 0; j < inverse.size(); ++j) {
    const auto& q = map.qpsrs[inverse[j]];
    out.cols2.insert(out.cols2.end(), q.cols2.begin(), q.cols2.end());
  }
  out.cond = terms_.and_(cond);
  out.assign = terms_.and_(assign);
  return out;
}

void Verifier::veri_spj(const plan::Spj& s1, const plan::Spj& s2, const QpsrSink& sink) {
  veri_vec(s1.inputs, s2.inputs, [&](const CandidateMap& map) {
    Qpsr sub = compose(map);
    PredCode p1 = encoder_.const_pred(*s1.predicate, sub.cols1);
    PredCode p2 = encoder_.const_pred(*s2.predicate, sub.cols2);
    Term c1 = encoder_.filter(p1);
    Term c2 = encoder_.filter(p2);
    if (c1 != c2 && !proves({sub.cond, sub.assign, p1.assign, p2.assign, terms_.not_(terms_.iff(c1, c2))})) {
      fail(Reason::PredicateMismatch);
      return false;
    }
    auto [o1, a1] = encoder_.const_expr(s1.projections, sub.cols1);
    auto [o2, a2] = encoder_.const_expr(s2.projections, sub.cols2);
    Qpsr out{std::move(o1), std::move(o2), terms_.and_(sub.cond, c1),
             terms_.and_({sub.assign, p1.assign, p2.assign, a1, a2})};
    return sink(out);
  });
}

Qpsr Verifier::rename_copy(const Qpsr& q) {
  std::vector<Term> roots{q.cond, q.assign};
  for (const auto& c : q.cols1) roots.insert(roots.end(), {c.val, c.isnull});
  for (const auto& c : q.cols2) roots.insert(roots.end(), {c.val, c.isnull});
  std::unordered_map<Term, Term> mapping;
  for (Term v : free_variables(roots)) mapping.emplace(v, terms_.fresh("w", v->sort));
  auto copy = [&](const SymTuple& t) {
    SymTuple out;
    for (const auto& c : t) out.push_back({terms_.substitute(c.val, mapping), terms_.substitute(c.isnull, mapping)});
    return out;
  };
  return Qpsr{copy(q.cols1), copy(q.cols2), terms_.substitute(q.cond, mapping), terms_.substitute(q.assign, mapping)};
}

SymTuple Verifier::init_agg(const std::vector<AggFunc>& aggs, std::span<const SqlType> types) {
  SymTuple out;
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    Sort sort = i < types.size() ? sort_of(types[i]) : Sort::Int;
    out.push_back(encoder_.fresh_col(sort, aggs[i].kind != AggKind::Count));
  }
  return out;
}

SymTuple Verifier::ctr_agg(const std::vector<AggFunc>& aggs1, const SymTuple& cols1, const std::vector<AggFunc>& aggs2,
                           const Qpsr& sub, std::span<const SqlType> types2) {
  SymTuple out;
  for (std::size_t j = 0; j < aggs2.size(); ++j) {
    const AggFunc& f2 = aggs2[j];
    std::optional<SymCol> shared;
    for (std::size_t i = 0; i < aggs1.size() && !shared; ++i) {
      const AggFunc& f1 = aggs1[i];
      if (f1.kind != f2.kind) continue;
      bool star1 = f1.operand == AggFunc::kStar;
      bool star2 = f2.operand == AggFunc::kStar;
      if (star1 && star2) {
        shared = cols1[i];
        continue;
      }
      if (star1 || star2) {
        // COUNT(c) equals COUNT(*) when c is never NULL.
        if (f1.kind != AggKind::Count) continue;
        const SymCol& c = star1 ? sub.cols2[static_cast<std::size_t>(f2.operand)]
                                : sub.cols1[static_cast<std::size_t>(f1.operand)];
        if (proves({sub.cond, sub.assign, c.isnull})) shared = cols1[i];
        continue;
      }
      const SymCol& c1 = sub.cols1[static_cast<std::size_t>(f1.operand)];
      const SymCol& c2 = sub.cols2[static_cast<std::size_t>(f2.operand)];
      Term same = encoder_.col_equal(c1, c2);
      if (proves({sub.cond, sub.assign, terms_.not_(same)})) shared = cols1[i];
    }
    Sort sort = j < types2.size() ? sort_of(types2[j]) : Sort::Int;
    if (shared && shared->val->sort != sort) {
      // An Int symbol can be lifted; a Real one cannot stand for an Int column.
      if (sort == Sort::Real) {
        shared->val = terms_.to_real(shared->val);
      } else {
        shared.reset();
      }
    }
    out.push_back(shared ? *shared : encoder_.fresh_col(sort, f2.kind != AggKind::Count));
  }
  return out;
}

void Verifier::veri_agg(const plan::Agg& a1, const plan::Agg& a2, const QpsrSink& sink) {
  auto out_types1 = output_types(Query{a1});
  auto out_types2 = output_types(Query{a2});
  std::span<const SqlType> agg_types1(out_types1.data() + a1.group_by.size(), a1.aggs.size());
  std::span<const SqlType> agg_types2(out_types2.data() + a2.group_by.size(), a2.aggs.size());

  enumerate(a1.input, a2.input, [&](const Qpsr& sub) {
    Qpsr copy = rename_copy(sub);
    auto groups = [](const SymTuple& t, const std::vector<std::size_t>& g) {
      SymTuple out;
      for (std::size_t i : g) out.push_back(t[i]);
      return out;
    };
    SymTuple g1 = groups(sub.cols1, a1.group_by);
    SymTuple g1p = groups(copy.cols1, a1.group_by);
    SymTuple g2 = groups(sub.cols2, a2.group_by);
    SymTuple g2p = groups(copy.cols2, a2.group_by);
    std::vector<Term> both{sub.cond, sub.assign, copy.cond, copy.assign};

    auto implication = [&](const SymTuple& a, const SymTuple& ap, const SymTuple& b, const SymTuple& bp) {
      std::vector<Term> f = both;
      f.push_back(encoder_.tuple_equal(a, ap));
      f.push_back(terms_.not_(encoder_.tuple_equal(b, bp)));
      return proves(f);
    };
    if (!implication(g1, g1p, g2, g2p) || !implication(g2, g2p, g1, g1p)) {
      fail(Reason::GroupSetMismatch);
      return false;
    }
    SymTuple aggs1 = init_agg(a1.aggs, agg_types1);
    SymTuple aggs2 = ctr_agg(a1.aggs, aggs1, a2.aggs, sub, agg_types2);
    Qpsr out{g1, g2, sub.cond, sub.assign};
    out.cols1.insert(out.cols1.end(), aggs1.begin(), aggs1.end());
    out.cols2.insert(out.cols2.end(), aggs2.begin(), aggs2.end());
    return sink(out);
  });
}

Qpsr Verifier::const_assign(const CandidateMap& map, std::span<const SqlType> types1,
                              std::span<const SqlType> types2) {
  // Each side keeps its own static column types so arithmetic above the union
  // is encoded with the same sorts the interpreter uses.
  Qpsr out;
  for (SqlType t : types1) out.cols1.push_back(encoder_.fresh_col(sort_of(t)));
  for (SqlType t : types2) out.cols2.push_back(encoder_.fresh_col(sort_of(t)));
  auto strict = [&](const SymTuple& a, const SymTuple& b) {
    std::vector<Term> parts;
    for (std::size_t c = 0; c < a.size(); ++c) {
      parts.push_back(terms_.eq(a[c].val, b[c].val));
      parts.push_back(terms_.eq(a[c].isnull, b[c].isnull));
    }
    return terms_.and_(parts);
  };
  std::vector<Term> selectors;
  std::vector<Term> cond;
  std::vector<Term> assign;
  for (const auto& q : map.qpsrs) {
    Term b = terms_.fresh("b", Sort::Bool);
    selectors.push_back(b);
    cond.push_back(terms_.and_(b, q.cond));
    assign.push_back(terms_.implies(b, terms_.and_({strict(out.cols1, q.cols1), strict(out.cols2, q.cols2), q.assign})));
  }
  assign.push_back(terms_.or_(selectors));
  for (std::size_t i = 0; i < selectors.size(); ++i) {
    for (std::size_t j = i + 1; j < selectors.size(); ++j) {
      assign.push_back(terms_.not_(terms_.and_(selectors[i], selectors[j])));
    }
  }
  out.cond = terms_.or_(cond);
  out.assign = terms_.and_(assign);
  return out;
}

void Verifier::veri_union(const plan::Union& u1, const plan::Union& u2, const QpsrSink& sink) {
  if (u1.inputs.size() == 1 && u2.inputs.size() == 1) {
    enumerate(u1.inputs[0], u2.inputs[0], sink);
    return;
  }
  auto types1 = output_types(Query{u1});
  auto types2 = output_types(Query{u2});
  veri_vec(u1.inputs, u2.inputs, [&](const CandidateMap& map) { return sink(const_assign(map, types1, types2)); });
}

// ---- top level ------------------------------------------------------------

Verdict decide_equivalence(const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog, const VerifyOptions& options,
                           VerifyStats* stats) {
  SmtSession session(options.solver);
  return decide_equivalence(q1, q2, catalog, session, options, stats);
}

Verdict decide_equivalence(const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog, SmtSession& session,
                           const VerifyOptions& options, VerifyStats* stats) {
  std::size_t calls_before = session.calls();
  auto record = [&](Verdict v) {
    if (stats) stats->solver_calls = session.calls() - calls_before;
    return v;
  };
  if (arity(q1) != arity(q2)) {
    return record(Verdict::not_proven(Reason::TypeMismatch, "output arities differ"));
  }
  auto deadline = std::chrono::steady_clock::now() + options.total_budget;
  try {
    NormalizeOptions nopts;
    nopts.solver = &session;
    nopts.unsat_budget = options.unsat_budget;
    QueryPtr n1 = normalize(q1, catalog, nopts);
    QueryPtr n2 = normalize(q2, catalog, nopts);
    if (stats) {
      stats->normalized1 = n1;
      stats->normalized2 = n2;
      stats->normalized_size1 = node_count(*n1);
      stats->normalized_size2 = node_count(*n2);
    }
    if (std::chrono::steady_clock::now() >= deadline) return record(Verdict::not_proven(Reason::Timeout));

    TermFactory terms;
    Verifier verifier(session, terms, options, deadline);
    bool proven = false;
    verifier.enumerate(n1, n2, [&](const Qpsr& q) {
      proven = verifier.full_check(q) == FullCheck::Proven;
      return proven;
    });
    if (proven) return record(Verdict::proven());
    if (verifier.saw_unknown()) return record(Verdict::not_proven(Reason::SolverUnknown));
    return record(Verdict::not_proven(verifier.last_failure().value_or(Reason::NoBijection)));
  } catch (const VerifyTimeout&) {
    return record(Verdict::not_proven(Reason::Timeout, "per-pair budget exhausted"));
  } catch (const std::invalid_argument& e) {
    return record(Verdict::not_proven(Reason::Unsupported, e.what()));
  } catch (const std::out_of_range& e) {
    return record(Verdict::not_proven(Reason::Unsupported, e.what()));
  } catch (const std::overflow_error& e) {
    return record(Verdict::not_proven(Reason::Unsupported, e.what()));
  }
}

}  // namespace bagcheck
