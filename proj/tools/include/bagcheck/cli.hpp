#pragma once

// Command-line harness: single-pair check, batch manifests, workload overlap.
// Exposed as a library so tests can drive it in-process.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/verifier.hpp"

namespace bagcheck::cli {

enum class Format { Text, Machine };

/// `.json` files are plan documents; anything else is one SQL query.
QueryPtr load_query(const std::string& path, const Catalog& catalog);

struct PairReport {
  std::string id;
  Verdict verdict;
  double wall_time_ms = 0;
  std::size_t solver_calls = 0;
  std::size_t normalized_size1 = 0;
  std::size_t normalized_size2 = 0;
  /// Set when the pair could not be checked (parse, validation, solver crash).
  std::optional<std::string> error;
  QueryPtr normalized1;
  QueryPtr normalized2;

  /// 0 Equivalent, 1 NotProven, 2 error.
  int exit_code() const;
};

PairReport check_pair(const std::string& id, const QueryPtr& q1, const QueryPtr& q2, const Catalog& catalog,
                      const VerifyOptions& options);
PairReport check_files(const std::string& id, const std::string& q1_path, const std::string& q2_path,
                       const Catalog& catalog, const VerifyOptions& options);

std::string render(const PairReport& r, Format format);

struct ManifestEntry {
  std::string id;
  std::string q1;  // resolved paths
  std::string q2;
};

/// `{"pairs": [{"id", "q1", "q2"}, ...]}`; paths are relative to the manifest.
std::vector<ManifestEntry> load_manifest(const std::string& path);

struct BatchSummary {
  std::size_t pairs = 0;
  std::size_t proved = 0;
  std::size_t not_proven = 0;
  std::size_t errors = 0;
  double mean_proved_ms = 0;
};

/// Reports come back in manifest order whatever `jobs` is.
std::vector<PairReport> run_batch(const std::vector<ManifestEntry>& entries, const Catalog& catalog,
                                  const VerifyOptions& options, std::size_t jobs);
BatchSummary summarize(const std::vector<PairReport>& reports);
/// Counts only; identical for any job count.
std::string render_summary(const BatchSummary& s, Format format);
std::string render_timing(const BatchSummary& s, Format format);

struct WorkloadQuery {
  std::string id;
  QueryPtr query;
};

struct OverlapPair {
  std::string a;
  std::string b;
  bool equivalent = false;
};

struct OverlapCluster {
  std::vector<std::string> members;
  bool has_join = false;
  bool has_aggregate = false;
};

struct OverlapReport {
  std::size_t queries = 0;
  std::size_t groups = 0;
  std::vector<OverlapPair> pairs;            // top-level queries only
  std::vector<OverlapPair> subquery_pairs;   // involving a constituent sub-query ("id#k")
  std::vector<OverlapCluster> clusters;      // size >= 2, disjoint
  std::vector<std::string> errors;
};

/// Every `.sql` / `.json` file in `dir`, sorted by name; ids are file stems.
std::vector<WorkloadQuery> load_workload(const std::string& dir, const Catalog& catalog,
                                         std::vector<std::string>* errors = nullptr);
OverlapReport run_overlap(const std::vector<WorkloadQuery>& workload, const Catalog& catalog,
                          const VerifyOptions& options, std::size_t jobs);
std::string render(const OverlapReport& r, Format format);

/// Union-find closure of the equivalent pairs; clusters of two or more, sorted.
std::vector<std::vector<std::string>> clusters_of(const std::vector<std::string>& ids,
                                                  const std::vector<OverlapPair>& pairs);

/// Only table scans: no filter, no computed projection, no aggregation.
bool is_pure_scan(const Query& q);
bool has_join(const Query& q);
bool has_aggregate(const Query& q);

/// Whole command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bagcheck::cli
