#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bagcheck {

enum class SqlType { Int, Decimal, Bool, Varchar, Date };

std::string_view to_string(SqlType type);
/// Case-insensitive; throws ParseError for anything outside the five kinds.
SqlType parse_sql_type(std::string_view name);

/// DECIMAL values live in the solver's real sort; every other kind is an integer code.
inline bool is_real(SqlType type) { return type == SqlType::Decimal; }

struct ColumnDef {
  std::string name;
  SqlType type = SqlType::Int;
  bool nullable = true;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

/// Parsed and stored, never used by the rewrite rules.
struct ForeignKey {
  std::vector<std::size_t> columns;
  std::string ref_table;
  std::vector<std::string> ref_columns;

  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnDef> columns;
  std::optional<std::vector<std::size_t>> primary_key;
  std::vector<ForeignKey> foreign_keys;

  std::size_t arity() const { return columns.size(); }
  /// Position of a column by case-insensitive name.
  std::optional<std::size_t> column_index(std::string_view name) const;

  friend bool operator==(const TableSchema&, const TableSchema&) = default;
};

/// Uppercases ASCII letters; identifiers are stored in this form.
std::string canonical_identifier(std::string_view name);

/// Immutable after construction; shared freely between verification tasks.
class Catalog {
 public:
  Catalog() = default;
  /// Validates every invariant; throws SchemaError.
  explicit Catalog(std::vector<TableSchema> tables);

  /// Case-insensitive. Throws UnknownTable.
  const TableSchema& resolve(std::string_view name) const;
  const TableSchema* find(std::string_view name) const;

  const std::map<std::string, TableSchema>& tables() const { return tables_; }
  std::size_t size() const { return tables_.size(); }

  friend bool operator==(const Catalog&, const Catalog&) = default;

 private:
  std::map<std::string, TableSchema> tables_;
};

/// Reads the JSON catalog document. Throws ParseError or SchemaError.
Catalog load_catalog(std::string_view document);
Catalog load_catalog_file(const std::string& path);
/// Canonical JSON form; load_catalog(dump_catalog(c)) == c.
std::string dump_catalog(const Catalog& catalog);

}  // namespace bagcheck
