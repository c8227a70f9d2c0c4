#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "peripartum/catalog.hpp"
#include "peripartum/sql_ast.hpp"

namespace peripartum::sql {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::string message, Span at, std::vector<std::string> expected, std::string tag = "syntax");

  const Span& span() const { return span_; }
  int line() const { return span_.line; }
  int column() const { return span_.column; }
  const std::vector<std::string>& expected() const { return expected_; }
  /// "syntax", or "unsupported_statement" for DDL/DML and other non-SELECT statements.
  const std::string& tag() const { return tag_; }

 private:
  Span span_;
  std::vector<std::string> expected_;
  std::string tag_;
};

/// Parses one or more `;`-separated SELECT statements.
SqlAst parse_sql(std::string_view text);

/// Canonical text. Binary operands that are themselves operators are
/// parenthesized, so parse(print(ast)) == ast.
std::string print_sql(const Query& q);
std::string print_sql(const SqlAst& ast);
std::string print_expr(const Expr& e);

/// Parses the CREATE TABLE dialect produced by emit_ddl back into a catalog.
Catalog parse_ddl(std::string_view text);

}  // namespace peripartum::sql
