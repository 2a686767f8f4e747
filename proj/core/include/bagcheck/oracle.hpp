#pragma once

// Reference bag-semantics interpreter with SQL three-valued logic.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/value.hpp"

namespace bagcheck {

/// Multiset of rows: row -> multiplicity (always >= 1).
using Bag = std::map<Row, std::size_t>;

class Database {
 public:
  explicit Database(Catalog catalog);

  /// Checks arity, nullability and primary-key uniqueness; throws SchemaError.
  void insert(std::string_view table, Row row);
  const std::vector<Row>& rows(std::string_view table) const;
  const Catalog& catalog() const { return catalog_; }
  std::size_t total_rows() const;

 private:
  Catalog catalog_;
  std::map<std::string, std::vector<Row>> rows_;
};

/// `{"EMP": [[1, 100, 10, "NY"], ...], ...}`; values are typed by the catalog.
Database load_database(std::string_view document, const Catalog& catalog);
Database load_database_file(const std::string& path, const Catalog& catalog);
std::string dump_database(const Database& db);

/// Deterministic in `seed`. Values come from 0..9 (strings from a ten-word pool).
Database random_database(const Catalog& catalog, std::uint64_t seed, std::size_t max_rows, double null_rate);

Bag eval_query(const Query& q, const Database& db);
inline Bag eval_query(const QueryPtr& q, const Database& db) { return eval_query(*q, db); }

enum class Truth { False, True, Unknown };

/// Row-level evaluation; `types` are the static column types of `row`, and
/// `db` supplies the inputs of EXISTS bodies.
Truth eval_predicate(const Pred& p, const Row& row, std::span<const SqlType> types, const Database& db);
Value eval_expression(const Expr& e, const Row& row, std::span<const SqlType> types, const Database& db);

bool bag_equal(const Bag& a, const Bag& b);
std::size_t bag_size(const Bag& b);
std::string to_string(const Bag& b);

}  // namespace bagcheck
