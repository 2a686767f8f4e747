#pragma once

#include <string>
#include <string_view>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"

namespace bagcheck {

/// Reads a plan document and validates it against the catalog.
/// Throws ParseError for malformed documents, ValidationError for invalid trees.
QueryPtr load_plan(std::string_view document, const Catalog& catalog);
QueryPtr load_plan_file(const std::string& path, const Catalog& catalog);

/// Canonical compact form: sorted keys, no whitespace.
std::string dump_plan(const Query& q);
std::string dump_plan(const Query& q, int indent);
std::string dump_expr(const Expr& e);
std::string dump_pred(const Pred& p);

}  // namespace bagcheck
