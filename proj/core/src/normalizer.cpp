#include "bagcheck/normalizer.hpp"

#include <map>

#include "bagcheck/encode.hpp"
#include "bagcheck/plan_io.hpp"
#include "overloaded.hpp"

namespace bagcheck {

using detail::overloaded;

namespace {

std::vector<std::size_t> input_offsets(const std::vector<QueryPtr>& inputs) {
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (const auto& in : inputs) {
    out.push_back(off);
    off += arity(in);
  }
  out.push_back(off);
  return out;
}

bool all_columns(const std::vector<ExprPtr>& exprs) {
  for (const auto& e : exprs) {
    if (!as<expr::Column>(e)) return false;
  }
  return true;
}

/// Peels Union[x] and Spj([x], TRUE, columns) wrappers off an aggregate input,
/// returning the inner node and the column map from the wrapper to it.
std::pair<QueryPtr, std::vector<std::size_t>> peel(QueryPtr q) {
  if (const auto* u = as<plan::Union>(q); u && u->inputs.size() == 1) q = u->inputs[0];
  if (const auto* s = as<plan::Spj>(q);
      s && s->inputs.size() == 1 && as<pred::True>(s->predicate) && all_columns(s->projections)) {
    std::vector<std::size_t> map;
    for (const auto& p : s->projections) map.push_back(as<expr::Column>(p)->index);
    return {s->inputs[0], map};
  }
  std::vector<std::size_t> map(arity(q));
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = i;
  return {q, map};
}

bool is_pk_equality(const PredPtr& p, std::size_t a, std::size_t b) {
  const auto* c = as<pred::Cmp>(p);
  if (!c || c->op != CmpOp::Eq) return false;
  const auto* l = as<expr::Column>(c->lhs);
  const auto* r = as<expr::Column>(c->rhs);
  if (!l || !r) return false;
  return (l->index == a && r->index == b) || (l->index == b && r->index == a);
}

std::optional<QueryPtr> self_join_on_key(const plan::Spj& s) {
  auto offsets = input_offsets(s.inputs);
  auto parts = conjuncts(s.predicate);
  for (std::size_t i = 0; i < s.inputs.size(); ++i) {
    const auto* ti = as<plan::Table>(s.inputs[i]);
    if (!ti || !ti->schema->primary_key) continue;
    for (std::size_t j = i + 1; j < s.inputs.size(); ++j) {
      const auto* tj = as<plan::Table>(s.inputs[j]);
      if (!tj || tj->name != ti->name) continue;
      std::vector<bool> used(parts.size(), false);
      bool covered = true;
      for (std::size_t key : *ti->schema->primary_key) {
        bool found = false;
        for (std::size_t c = 0; c < parts.size() && !found; ++c) {
          if (is_pk_equality(parts[c], offsets[i] + key, offsets[j] + key)) {
            used[c] = true;
            found = true;
          }
        }
        covered &= found;
      }
      if (!covered) continue;

      std::size_t width = ti->schema->arity();
      std::vector<ExprPtr> repl;
      for (std::size_t c = 0; c < offsets.back(); ++c) {
        if (c >= offsets[j] && c < offsets[j] + width) {
          repl.push_back(col(offsets[i] + (c - offsets[j])));
        } else if (c >= offsets[j] + width) {
          repl.push_back(col(c - width));
        } else {
          repl.push_back(col(c));
        }
      }
      std::vector<QueryPtr> inputs = s.inputs;
      inputs.erase(inputs.begin() + static_cast<std::ptrdiff_t>(j));
      std::vector<PredPtr> rest;
      for (std::size_t c = 0; c < parts.size(); ++c) {
        if (!used[c]) rest.push_back(substitute(parts[c], repl));
      }
      std::vector<ExprPtr> projections;
      for (const auto& p : s.projections) projections.push_back(substitute(p, repl));
      return spj(std::move(inputs), conjoin(rest), std::move(projections));
    }
  }
  return std::nullopt;
}

std::optional<QueryPtr> key_covering_distinct(const plan::Agg& a) {
  if (!a.aggs.empty()) return std::nullopt;
  QueryPtr in = a.input;
  if (const auto* u = as<plan::Union>(in); u && u->inputs.size() == 1) in = u->inputs[0];

  // Normalize the shape to Spj([T], pred, projections).
  QueryPtr base;
  PredPtr predicate = true_pred();
  std::vector<ExprPtr> projections;
  if (const auto* t = as<plan::Table>(in)) {
    base = in;
    projections = identity_projections(t->schema->arity());
  } else if (const auto* s = as<plan::Spj>(in); s && s->inputs.size() == 1 && as<plan::Table>(s->inputs[0])) {
    base = s->inputs[0];
    predicate = s->predicate;
    projections = s->projections;
  } else {
    return std::nullopt;
  }
  const auto* t = as<plan::Table>(base);
  if (!t->schema->primary_key) return std::nullopt;
  for (std::size_t key : *t->schema->primary_key) {
    bool covered = false;
    for (std::size_t g : a.group_by) {
      const auto* c = as<expr::Column>(projections[g]);
      covered |= c && c->index == key;
    }
    if (!covered) return std::nullopt;
  }
  std::vector<ExprPtr> out;
  for (std::size_t g : a.group_by) out.push_back(projections[g]);
  return spj({base}, predicate, std::move(out));
}

}  // namespace

// ---- individual rules -----------------------------------------------------

std::optional<QueryPtr> rule_spj_merge(const plan::Spj& outer, std::size_t k) {
  if (k >= outer.inputs.size()) return std::nullopt;
  const auto* inner = as<plan::Spj>(outer.inputs[k]);
  if (!inner) return std::nullopt;

  auto offsets = input_offsets(outer.inputs);
  std::size_t before = offsets[k];
  std::size_t inner_out = arity(outer.inputs[k]);
  std::size_t inner_width = input_offsets(inner->inputs).back();

  std::vector<ExprPtr> repl;
  repl.reserve(offsets.back());
  for (std::size_t c = 0; c < offsets.back(); ++c) {
    if (c < before) {
      repl.push_back(col(c));
    } else if (c < before + inner_out) {
      repl.push_back(shift(inner->projections[c - before], before));
    } else {
      repl.push_back(col(c - inner_out + inner_width));
    }
  }
  std::vector<QueryPtr> inputs(outer.inputs.begin(), outer.inputs.begin() + static_cast<std::ptrdiff_t>(k));
  inputs.insert(inputs.end(), inner->inputs.begin(), inner->inputs.end());
  inputs.insert(inputs.end(), outer.inputs.begin() + static_cast<std::ptrdiff_t>(k) + 1, outer.inputs.end());

  PredPtr predicate = conjoin(substitute(outer.predicate, repl), shift(inner->predicate, before));
  std::vector<ExprPtr> projections;
  for (const auto& p : outer.projections) projections.push_back(substitute(p, repl));
  return spj(std::move(inputs), std::move(predicate), std::move(projections));
}

std::optional<QueryPtr> rule_union_flatten(const Query& q) {
  if (const auto* u = std::get_if<plan::Union>(&q.node)) {
    bool nested = false;
    std::vector<QueryPtr> inputs;
    for (const auto& in : u->inputs) {
      if (const auto* inner = as<plan::Union>(in)) {
        nested = true;
        inputs.insert(inputs.end(), inner->inputs.begin(), inner->inputs.end());
      } else {
        inputs.push_back(in);
      }
    }
    if (!nested) return std::nullopt;
    return union_all(std::move(inputs));
  }
  if (const auto* s = std::get_if<plan::Spj>(&q.node)) {
    for (std::size_t k = 0; k < s->inputs.size(); ++k) {
      const auto* u = as<plan::Union>(s->inputs[k]);
      if (!u) continue;
      std::vector<QueryPtr> branches;
      for (const auto& b : u->inputs) {
        std::vector<QueryPtr> inputs = s->inputs;
        inputs[k] = b;
        branches.push_back(spj(std::move(inputs), s->predicate, s->projections));
      }
      return union_all(std::move(branches));
    }
  }
  return std::nullopt;
}

std::optional<QueryPtr> rule_predicate_pushdown(const plan::Spj& s) {
  auto offsets = input_offsets(s.inputs);
  auto parts = conjuncts(s.predicate);
  for (std::size_t k = 0; k < s.inputs.size(); ++k) {
    const auto* a = as<plan::Agg>(s.inputs[k]);
    if (!a || a->group_by.empty()) continue;
    std::size_t lo = offsets[k];
    std::size_t hi = lo + a->group_by.size();

    std::vector<PredPtr> moved;
    std::vector<PredPtr> kept;
    for (const auto& p : parts) {
      std::set<std::size_t> used;
      collect_columns(p, used);
      bool eligible = !used.empty() && *used.begin() >= lo && *used.rbegin() < hi;
      (eligible ? moved : kept).push_back(p);
    }
    if (moved.empty()) continue;

    // Group output j of the aggregate reads input column group_by[j].
    std::vector<ExprPtr> repl(hi);
    for (std::size_t j = 0; j < a->group_by.size(); ++j) repl[lo + j] = col(a->group_by[j]);
    std::vector<PredPtr> below;
    for (const auto& p : moved) below.push_back(substitute(p, repl));

    QueryPtr filtered = spj({a->input}, conjoin(below), identity_projections(arity(a->input)));
    std::vector<QueryPtr> inputs = s.inputs;
    inputs[k] = agg(filtered, a->group_by, a->aggs);
    return spj(std::move(inputs), conjoin(kept), s.projections);
  }
  return std::nullopt;
}

std::optional<QueryPtr> rule_agg_merge(const plan::Agg& outer) {
  auto [node, map] = peel(outer.input);
  const auto* inner = as<plan::Agg>(node);
  if (!inner) return std::nullopt;
  std::size_t groups = inner->group_by.size();

  std::vector<std::size_t> group_by;
  for (std::size_t g : outer.group_by) {
    if (map[g] >= groups) return std::nullopt;
    group_by.push_back(inner->group_by[map[g]]);
  }
  std::vector<AggFunc> aggs;
  for (const auto& f : outer.aggs) {
    if (f.operand == AggFunc::kStar) return std::nullopt;
    std::size_t src = map[static_cast<std::size_t>(f.operand)];
    if (src < groups) return std::nullopt;
    const AggFunc& g = inner->aggs[src - groups];
    if (f.kind == AggKind::Max && g.kind == AggKind::Max) {
      aggs.push_back({AggKind::Max, g.operand});
    } else if (f.kind == AggKind::Min && g.kind == AggKind::Min) {
      aggs.push_back({AggKind::Min, g.operand});
    } else if (f.kind == AggKind::Sum && g.kind == AggKind::Sum) {
      aggs.push_back({AggKind::Sum, g.operand});
    } else if (f.kind == AggKind::Sum && g.kind == AggKind::Count) {
      aggs.push_back({AggKind::Count, g.operand});
    } else {
      return std::nullopt;
    }
  }
  return agg(inner->input, std::move(group_by), std::move(aggs));
}

std::optional<QueryPtr> rule_integrity(const Query& q, const Catalog& catalog) {
  (void)catalog;  // key information travels with each resolved table node
  if (const auto* s = std::get_if<plan::Spj>(&q.node)) return self_join_on_key(*s);
  if (const auto* a = std::get_if<plan::Agg>(&q.node)) return key_covering_distinct(*a);
  return std::nullopt;
}

// ---- driver ---------------------------------------------------------------

namespace {

class Normalizer {
 public:
  Normalizer(const Catalog& catalog, const NormalizeOptions& options, NormalizeStats& stats)
      : catalog_(catalog), options_(options), stats_(stats) {}

  /// Returns a Union of branches or an Empty node.
  QueryPtr norm(const QueryPtr& q) {
    return std::visit(overloaded{
                          [&](const plan::Table& t) -> QueryPtr {
                            return union_all({spj({q}, true_pred(), identity_projections(t.schema->arity()))});
                          },
                          [&](const plan::Empty&) -> QueryPtr { return q; },
                          [&](const plan::Union& u) -> QueryPtr {
                            std::vector<QueryPtr> branches;
                            bool flattened = false;
                            for (const auto& in : u.inputs) {
                              QueryPtr n = norm(in);
                              if (as<plan::Empty>(n)) {
                                ++stats_.empty_table;
                                continue;
                              }
                              flattened |= as<plan::Union>(in) != nullptr;
                              const auto& bs = as<plan::Union>(n)->inputs;
                              branches.insert(branches.end(), bs.begin(), bs.end());
                            }
                            if (flattened) ++stats_.union_flatten;
                            if (branches.empty()) return empty_table(arity(q));
                            return union_all(std::move(branches));
                          },
                          [&](const plan::Spj& s) -> QueryPtr { return norm_spj(s); },
                          [&](const plan::Agg& a) -> QueryPtr { return norm_agg(a); },
                      },
                      q->node);
  }

 private:
  QueryPtr norm_spj(const plan::Spj& s) {
    std::size_t width = s.projections.size();
    std::vector<std::vector<QueryPtr>> choices;
    bool distributes = false;
    for (const auto& in : s.inputs) {
      if (as<plan::Spj>(in)) ++stats_.spj_merge;
      QueryPtr n = norm(in);
      if (as<plan::Empty>(n)) {
        ++stats_.empty_table;
        return empty_table(width);
      }
      choices.push_back(as<plan::Union>(n)->inputs);
      distributes |= choices.back().size() > 1;
    }
    if (distributes) ++stats_.union_flatten;

    std::vector<QueryPtr> out;
    std::vector<std::size_t> pick(choices.size(), 0);
    for (;;) {
      std::vector<QueryPtr> inputs;
      for (std::size_t i = 0; i < choices.size(); ++i) inputs.push_back(choices[i][pick[i]]);
      QueryPtr merged = spj(std::move(inputs), s.predicate, s.projections);
      for (std::size_t i = choices.size(); i-- > 0;) merged = *rule_spj_merge(*as<plan::Spj>(merged), i);
      finish(merged, out);

      // Lexicographic successor, first input most significant.
      std::size_t i = choices.size();
      while (i > 0 && ++pick[i - 1] == choices[i - 1].size()) pick[--i] = 0;
      if (i == 0) break;
    }
    if (out.empty()) return empty_table(width);
    return union_all(std::move(out));
  }

  /// Simplifies one merged branch and appends whatever survives.
  void finish(const QueryPtr& branch, std::vector<QueryPtr>& out) {
    const auto* s = as<plan::Spj>(branch);
    if (auto pushed = rule_predicate_pushdown(*s)) {
      ++stats_.pushdown;
      QueryPtr n = norm(*pushed);
      if (const auto* u = as<plan::Union>(n)) out.insert(out.end(), u->inputs.begin(), u->inputs.end());
      return;
    }
    if (auto joined = rule_integrity(*branch, catalog_)) {
      ++stats_.integrity;
      finish(*joined, out);
      return;
    }
    if (unsatisfiable(*s)) {
      ++stats_.empty_table;
      return;
    }
    out.push_back(branch);
  }

  QueryPtr norm_agg(const plan::Agg& a) {
    QueryPtr in = norm(a.input);
    if (as<plan::Empty>(in)) {
      ++stats_.empty_table;
      return empty_table(a.group_by.size() + a.aggs.size());
    }
    QueryPtr node = agg(in, a.group_by, a.aggs);
    while (auto merged = rule_agg_merge(*as<plan::Agg>(node))) {
      ++stats_.agg_merge;
      node = *merged;
    }
    if (auto scan = rule_integrity(*node, catalog_)) {
      ++stats_.integrity;
      return norm(*scan);
    }
    return union_all({spj({node}, true_pred(), identity_projections(arity(node)))});
  }

  bool unsatisfiable(const plan::Spj& s) {
    if (as<pred::False>(s.predicate)) return true;
    if (!options_.solver || as<pred::True>(s.predicate)) return false;

    std::string key = dump_pred(*s.predicate) + "#";
    for (SqlType t : spj_input_types(s)) key += std::to_string(static_cast<int>(t));
    if (auto it = unsat_cache_.find(key); it != unsat_cache_.end()) return it->second;

    TermFactory terms;
    Encoder enc(terms);
    SymTuple row;
    for (const auto& in : s.inputs) {
      SymTuple part;
      if (const auto* t = as<plan::Table>(in)) {
        part = enc.fresh_tuple(*t->schema);
      } else {
        auto types = output_types(*in);
        std::vector<bool> nullable(types.size(), true);
        if (const auto* a = as<plan::Agg>(in)) {
          for (std::size_t i = 0; i < a->aggs.size(); ++i) {
            if (a->aggs[i].kind == AggKind::Count) nullable[a->group_by.size() + i] = false;
          }
        }
        part = enc.fresh_tuple(types, nullable);
      }
      row.insert(row.end(), part.begin(), part.end());
    }
    PredCode code = enc.const_pred(*s.predicate, row);
    Term f = terms.and_(enc.filter(code), code.assign);
    bool result = check_unsat(*options_.solver, terms, f, options_.unsat_budget).status == SatStatus::Unsat;
    unsat_cache_.emplace(std::move(key), result);
    return result;
  }

  const Catalog& catalog_;
  const NormalizeOptions& options_;
  NormalizeStats& stats_;
  std::map<std::string, bool> unsat_cache_;
};

}  // namespace

QueryPtr normalize(const QueryPtr& q, const Catalog& catalog, const NormalizeOptions& options, NormalizeStats* stats) {
  NormalizeStats local;
  NormalizeStats& st = stats ? *stats : local;
  Normalizer n(catalog, options, st);
  QueryPtr current = n.norm(q);
  ++st.passes;
  // A single bottom-up pass is normally a fixpoint already; repeat until it is.
  for (int i = 0; i < 16; ++i) {
    QueryPtr next = n.norm(current);
    ++st.passes;
    if (same(next, current)) break;
    current = next;
  }
  return current;
}

bool is_unf(const Query& q) {
  if (std::holds_alternative<plan::Empty>(q.node)) return true;
  const auto* u = std::get_if<plan::Union>(&q.node);
  if (!u || u->inputs.empty()) return false;
  for (const auto& b : u->inputs) {
    const auto* s = as<plan::Spj>(b);
    if (!s || s->inputs.empty()) return false;
    for (const auto& in : s->inputs) {
      if (as<plan::Table>(in)) continue;
      const auto* a = as<plan::Agg>(in);
      if (!a || as<plan::Empty>(a->input) || !is_unf(*a->input)) return false;
    }
  }
  return true;
}

}  // namespace bagcheck
