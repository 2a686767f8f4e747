#pragma once

// Rewrites query trees into Union Normal Form: a Union of SPJ nodes whose inputs
// are base tables or aggregates, each aggregate again over a UNF input.

#include <chrono>
#include <cstddef>
#include <optional>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/smt.hpp"

namespace bagcheck {

struct NormalizeOptions {
  /// Used for the unsatisfiable-predicate rule; without it only a literal FALSE counts.
  SmtSession* solver = nullptr;
  std::chrono::milliseconds unsat_budget{500};
};

/// Rule applications, one per rewrite site.
struct NormalizeStats {
  std::size_t empty_table = 0;
  std::size_t spj_merge = 0;
  std::size_t union_flatten = 0;
  std::size_t pushdown = 0;
  std::size_t agg_merge = 0;
  std::size_t integrity = 0;
  std::size_t passes = 0;

  std::size_t steps() const { return empty_table + spj_merge + union_flatten + pushdown + agg_merge + integrity; }
};

QueryPtr normalize(const QueryPtr& q, const Catalog& catalog, const NormalizeOptions& options = {},
                   NormalizeStats* stats = nullptr);

bool is_unf(const Query& q);

// Individual rules, usable on arbitrary validated trees. Each returns nullopt when
// it does not apply.

/// Splices the SPJ at input `k` into `outer`.
std::optional<QueryPtr> rule_spj_merge(const plan::Spj& outer, std::size_t k);
/// Splices nested Unions, or distributes an SPJ over its first Union input.
std::optional<QueryPtr> rule_union_flatten(const Query& q);
/// Moves conjuncts that only read group-by outputs of one aggregate input below it.
std::optional<QueryPtr> rule_predicate_pushdown(const plan::Spj& s);
/// Collapses an aggregate over an aggregate with nested group sets.
std::optional<QueryPtr> rule_agg_merge(const plan::Agg& outer);
/// Primary-key rules: self-join on the key, and key-covering DISTINCT.
std::optional<QueryPtr> rule_integrity(const Query& q, const Catalog& catalog);

}  // namespace bagcheck
