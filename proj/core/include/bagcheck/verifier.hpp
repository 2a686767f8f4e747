#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/encode.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/smt.hpp"

namespace bagcheck {

enum class Reason {
  TypeMismatch,
  NoBijection,
  PredicateMismatch,
  GroupSetMismatch,
  OutputMismatch,
  SolverUnknown,
  Unsupported,
  Timeout,
};

std::string_view to_string(Reason reason);

/// Sound but incomplete: NotProven does not mean the queries differ.
struct Verdict {
  bool equivalent = false;
  Reason reason = Reason::NoBijection;  // meaningful only when !equivalent
  std::string detail;

  static Verdict proven() { return {true, Reason::NoBijection, {}}; }
  static Verdict not_proven(Reason r, std::string detail = {}) { return {false, r, std::move(detail)}; }
  std::string label() const;
};

struct VerifyOptions {
  SolverOptions solver;
  std::chrono::milliseconds total_budget{30000};
  std::chrono::milliseconds call_budget{10000};
  /// Budget for each unsatisfiability check made while normalizing.
  std::chrono::milliseconds unsat_budget{500};
  std::size_t candidate_cap = 5000;
};

struct VerifyStats {
  std::size_t solver_calls = 0;
  std::size_t normalized_size1 = 0;
  std::size_t normalized_size2 = 0;
  QueryPtr normalized1;
  QueryPtr normalized2;
};

/// Normalizes both queries, searches for a bijective identity map and checks it.
/// Both queries must already be valid against `catalog`. Throws SolverCrash.
Verdict decide_equivalence(const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog,
                           const VerifyOptions& options = {}, VerifyStats* stats = nullptr);

/// Same, reusing an existing solver session (its call counter keeps running).
Verdict decide_equivalence(const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog, SmtSession& session,
                           const VerifyOptions& options, VerifyStats* stats = nullptr);

/// A total pairing between two input vectors: v1[i] corresponds to v2[pairing[i]],
/// with qpsrs[i] the map proving that pair cardinally equivalent.
struct CandidateMap {
  std::vector<std::size_t> pairing;
  std::vector<Qpsr> qpsrs;
};

/// The recursive cardinal-equivalence search over normalized trees. One instance
/// serves one verification task.
class Verifier {
 public:
  using Deadline = std::chrono::steady_clock::time_point;
  /// Sink receives each result; returning true stops the enumeration.
  using QpsrSink = std::function<bool(const Qpsr&)>;
  using CandidateSink = std::function<bool(const CandidateMap&)>;

  Verifier(SmtSession& session, TermFactory& terms, const VerifyOptions& options, Deadline deadline);

  /// First Qpsr proving cardinal equivalence, if any.
  std::optional<Qpsr> veri_card(const QueryPtr& n1, const QueryPtr& n2);
  /// Every Qpsr the search can build for this pair, in deterministic order.
  void enumerate(const QueryPtr& n1, const QueryPtr& n2, const QpsrSink& sink);

  std::optional<Qpsr> veri_table(const plan::Table& t1, const plan::Table& t2);
  void veri_vec(const std::vector<QueryPtr>& v1, const std::vector<QueryPtr>& v2, const CandidateSink& sink);
  void veri_spj(const plan::Spj& s1, const plan::Spj& s2, const QpsrSink& sink);
  void veri_agg(const plan::Agg& a1, const plan::Agg& a2, const QpsrSink& sink);
  void veri_union(const plan::Union& u1, const plan::Union& u2, const QpsrSink& sink);

  /// Concatenates sub-maps: cols1 in v1 order, cols2 in v2 order.
  Qpsr compose(const CandidateMap& map);
  SymTuple init_agg(const std::vector<AggFunc>& aggs, std::span<const SqlType> types);
  /// Reuses a column of `cols1` for each function of aggs2 matching one of aggs1
  /// through the input map `sub`; otherwise a fresh column.
  SymTuple ctr_agg(const std::vector<AggFunc>& aggs1, const SymTuple& cols1, const std::vector<AggFunc>& aggs2,
                   const Qpsr& sub, std::span<const SqlType> types2);

  /// Solver call budget, bounded by the task deadline. Throws VerifyTimeout when spent.
  std::chrono::milliseconds budget();
  FullCheck full_check(const Qpsr& q);

  Encoder& encoder() { return encoder_; }
  bool saw_unknown() const { return saw_unknown_; }
  std::optional<Reason> last_failure() const { return last_failure_; }

 private:
  /// Unsat of the conjunction; records Unknown answers.
  bool proves(const std::vector<Term>& assertions);
  Qpsr rename_copy(const Qpsr& q);
  Qpsr const_assign(const CandidateMap& map, std::span<const SqlType> types1, std::span<const SqlType> types2);
  void fail(Reason r) { last_failure_ = r; }

  SmtSession& session_;
  TermFactory& terms_;
  Encoder encoder_;
  const VerifyOptions& options_;
  Deadline deadline_;
  bool saw_unknown_ = false;
  std::optional<Reason> last_failure_;
};

/// Thrown inside the search when the per-pair budget is exhausted.
struct VerifyTimeout {};

}  // namespace bagcheck
