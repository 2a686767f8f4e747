#pragma once

// SQL subset front end. Supported: SELECT [DISTINCT] with expressions and
// aliases, FROM over tables, aliased subqueries, comma joins, [INNER] JOIN,
// CROSS JOIN and LEFT [OUTER] JOIN, WHERE, GROUP BY, HAVING, UNION [ALL],
// CASE, BETWEEN, IN (list), LIKE, IS [NOT] NULL, COALESCE and uninterpreted
// scalar functions. Everything else raises SqlError.

#include <string_view>

#include "bagcheck/catalog.hpp"
#include "bagcheck/ir.hpp"

namespace bagcheck {

/// Returns a validated plan. Throws SqlError (Syntax, Name or Unsupported).
QueryPtr parse_sql(std::string_view text, const Catalog& catalog);

/// Union of the inner-join branch and a NULL-padded anti-join branch. The
/// anti-join test is an uninterpreted predicate whose name is a hash of the
/// right operand and the ON predicate, applied to the left columns ON reads.
QueryPtr desugar_left_outer_join(const QueryPtr& left, const QueryPtr& right, const PredPtr& on);

}  // namespace bagcheck
