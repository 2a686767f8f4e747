#pragma once

// Shared test fixtures: corpus access, random plan generation, equivalence-
// preserving rewrites, and independent reference evaluators.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/oracle.hpp"
#include "bagcheck/term.hpp"

namespace bagcheck::testkit {

std::string corpus_path(const std::string& relative);
Catalog corpus_catalog();
QueryPtr corpus_query(const std::string& relative, const Catalog& catalog);

struct CorpusPair {
  std::string id;
  std::string category;
  bool rules_only = false;
  QueryPtr q1;
  QueryPtr q2;
};

/// Every pair of the corpus manifest, parsed.
std::vector<CorpusPair> load_corpus(const Catalog& catalog);

/// Small schema used by generated plans: R(a INT, b INT, c DECIMAL),
/// S(a INT key, d INT), T(e INT, f VARCHAR, g BOOL).
Catalog fuzz_catalog();

struct GenOptions {
  bool functions = true;      // uninterpreted functions and predicates
  bool case_exprs = true;
  bool division = true;
  bool outer_joins = true;
  bool aggregates = true;
  bool unions = true;
};

class Generator {
 public:
  Generator(const Catalog& catalog, std::uint64_t seed, GenOptions options = {});

  std::mt19937_64& rng() { return rng_; }

  /// Arbitrary validated tree of at most `depth` operator levels.
  QueryPtr tree(int depth);
  /// Spj over one to three base tables with linear comparison predicates.
  QueryPtr linear_spj();

  PredPtr predicate(std::span<const SqlType> types, int depth, bool linear);
  ExprPtr expression(std::span<const SqlType> types, int depth, bool linear);

 private:
  QueryPtr with_arity(int depth, std::size_t arity);
  QueryPtr base_table();
  ExprPtr atom(std::span<const SqlType> types);
  std::size_t pick(std::size_t n);
  bool chance(double p);

  const Catalog& catalog_;
  std::mt19937_64 rng_;
  GenOptions options_;
};

/// Applies `steps` random rewrites the verifier is complete for: Spj splitting,
/// input permutation, identity wrapping, conjunct reordering, comparison
/// commutation, negated-complement rewriting and constant shifting.
QueryPtr rewrite(const QueryPtr& q, std::mt19937_64& rng, int steps);

/// A small semantic change (constant, comparison operator or aggregate kind);
/// the result usually differs from `q`.
QueryPtr mutate(const QueryPtr& q, std::mt19937_64& rng);

/// Independent 3VL evaluation for the column/constant/arithmetic/connective
/// subset of predicates.
Truth reference_predicate(const Pred& p, const Row& row);
/// LEFT OUTER JOIN computed directly from its definition.
Bag reference_left_join(const Bag& left, const Bag& right, const Pred& on, std::size_t right_arity);

/// Exhaustive satisfiability over Int/Real variables in {-1, 0, 1, 2} and Bool
/// variables in {false, true}; formulas must be free of uninterpreted symbols.
bool small_domain_satisfiable(Term formula);

}  // namespace bagcheck::testkit
