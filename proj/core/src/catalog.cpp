#include "bagcheck/catalog.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bagcheck/error.hpp"
#include "json.hpp"

namespace bagcheck {

using nlohmann::json;

std::string_view to_string(SqlType type) {
  switch (type) {
    case SqlType::Int:
      return "INT";
    case SqlType::Decimal:
      return "DECIMAL";
    case SqlType::Bool:
      return "BOOL";
    case SqlType::Varchar:
      return "VARCHAR";
    case SqlType::Date:
      return "DATE";
  }
  return "?";
}

SqlType parse_sql_type(std::string_view name) {
  std::string upper = canonical_identifier(name);
  if (upper == "INT" || upper == "INTEGER" || upper == "BIGINT") return SqlType::Int;
  if (upper == "DECIMAL" || upper == "NUMERIC") return SqlType::Decimal;
  if (upper == "BOOL" || upper == "BOOLEAN") return SqlType::Bool;
  if (upper == "VARCHAR" || upper == "TEXT" || upper == "STRING") return SqlType::Varchar;
  if (upper == "DATE") return SqlType::Date;
  throw ParseError("unsupported column type: " + std::string(name));
}

std::string canonical_identifier(std::string_view name) {
  std::string out(name);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::optional<std::size_t> TableSchema::column_index(std::string_view name) const {
  std::string key = canonical_identifier(name);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == key) return i;
  }
  return std::nullopt;
}

Catalog::Catalog(std::vector<TableSchema> tables) {
  for (auto& table : tables) {
    table.name = canonical_identifier(table.name);
    if (table.name.empty()) throw SchemaError("table with empty name");
    if (table.columns.empty()) throw SchemaError("table " + table.name + " has no columns");
    std::set<std::string> seen;
    for (auto& column : table.columns) {
      column.name = canonical_identifier(column.name);
      if (column.name.empty()) throw SchemaError("empty column name in table " + table.name);
      if (!seen.insert(column.name).second) {
        throw SchemaError("duplicate column " + column.name + " in table " + table.name);
      }
    }
    if (table.primary_key) {
      std::set<std::size_t> unique;
      if (table.primary_key->empty()) throw SchemaError("empty primary key on table " + table.name);
      for (std::size_t pos : *table.primary_key) {
        if (pos >= table.columns.size()) {
          throw SchemaError("primary key position out of range on table " + table.name);
        }
        if (!unique.insert(pos).second) throw SchemaError("repeated primary key column on " + table.name);
        if (table.columns[pos].nullable) {
          throw SchemaError("primary key column " + table.columns[pos].name + " of " + table.name +
                            " must be NOT NULL");
        }
      }
    }
    for (const auto& fk : table.foreign_keys) {
      for (std::size_t pos : fk.columns) {
        if (pos >= table.columns.size()) throw SchemaError("foreign key position out of range on " + table.name);
      }
    }
    std::string key = table.name;
    if (!tables_.emplace(key, std::move(table)).second) {
      throw SchemaError("duplicate table name: " + key);
    }
  }
}

const TableSchema* Catalog::find(std::string_view name) const {
  auto it = tables_.find(canonical_identifier(name));
  return it == tables_.end() ? nullptr : &it->second;
}

const TableSchema& Catalog::resolve(std::string_view name) const {
  if (const auto* schema = find(name)) return *schema;
  throw UnknownTable(canonical_identifier(name));
}

namespace {

std::size_t column_position(const TableSchema& table, const json& ref) {
  if (ref.is_number_unsigned() || ref.is_number_integer()) {
    auto pos = ref.get<std::int64_t>();
    if (pos < 0) throw SchemaError("negative column position in table " + table.name);
    return static_cast<std::size_t>(pos);
  }
  if (ref.is_string()) {
    auto idx = table.column_index(ref.get<std::string>());
    if (!idx) throw SchemaError("unknown key column " + ref.get<std::string>() + " in table " + table.name);
    return *idx;
  }
  throw ParseError("key column must be a name or a position");
}

TableSchema parse_table(const json& doc) {
  if (!doc.is_object()) throw ParseError("table entry must be an object");
  TableSchema table;
  table.name = canonical_identifier(doc.at("name").get<std::string>());
  for (const auto& col : doc.at("columns")) {
    ColumnDef def;
    def.name = canonical_identifier(col.at("name").get<std::string>());
    def.type = parse_sql_type(col.at("type").get<std::string>());
    def.nullable = col.value("nullable", true);
    table.columns.push_back(std::move(def));
  }
  if (auto it = doc.find("primary_key"); it != doc.end() && !it->is_null()) {
    std::vector<std::size_t> key;
    for (const auto& ref : *it) key.push_back(column_position(table, ref));
    table.primary_key = std::move(key);
  }
  if (auto it = doc.find("foreign_keys"); it != doc.end()) {
    for (const auto& entry : *it) {
      ForeignKey fk;
      for (const auto& ref : entry.at("columns")) fk.columns.push_back(column_position(table, ref));
      fk.ref_table = canonical_identifier(entry.at("references").get<std::string>());
      for (const auto& ref : entry.at("ref_columns")) fk.ref_columns.push_back(canonical_identifier(ref.get<std::string>()));
      table.foreign_keys.push_back(std::move(fk));
    }
  }
  return table;
}

}  // namespace

Catalog load_catalog(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("catalog: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("tables") || !doc["tables"].is_array()) {
      throw ParseError("catalog: expected an object with a \"tables\" array");
    }
    std::vector<TableSchema> tables;
    for (const auto& entry : doc["tables"]) tables.push_back(parse_table(entry));
    return Catalog(std::move(tables));
  } catch (const json::exception& e) {
    throw ParseError(std::string("catalog: ") + e.what());
  }
}

Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read catalog file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_catalog(buffer.str());
}

std::string dump_catalog(const Catalog& catalog) {
  json tables = json::array();
  for (const auto& [name, table] : catalog.tables()) {
    json columns = json::array();
    for (const auto& col : table.columns) {
      columns.push_back({{"name", col.name}, {"type", std::string(to_string(col.type))}, {"nullable", col.nullable}});
    }
    json entry = {{"name", table.name}, {"columns", columns}};
    if (table.primary_key) {
      json key = json::array();
      for (std::size_t pos : *table.primary_key) key.push_back(table.columns[pos].name);
      entry["primary_key"] = key;
    }
    if (!table.foreign_keys.empty()) {
      json fks = json::array();
      for (const auto& fk : table.foreign_keys) {
        json cols = json::array();
        for (std::size_t pos : fk.columns) cols.push_back(table.columns[pos].name);
        fks.push_back({{"columns", cols}, {"references", fk.ref_table}, {"ref_columns", fk.ref_columns}});
      }
      entry["foreign_keys"] = fks;
    }
    tables.push_back(std::move(entry));
  }
  return json{{"tables", tables}}.dump();
}

}  // namespace bagcheck
