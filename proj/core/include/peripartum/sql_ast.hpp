#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "peripartum/catalog.hpp"
#include "peripartum/value.hpp"

namespace peripartum::sql {

/// Location in the source text. Spans never take part in AST equality.
struct Span {
  size_t offset = 0;
  size_t length = 0;
  int line = 1;
  int column = 1;

  bool operator==(const Span&) const { return true; }
};

/// Owning pointer with value semantics, for recursive members.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T v) : p_(std::make_unique<T>(std::move(v))) {}
  Box(const Box& o) : p_(o.p_ ? std::make_unique<T>(*o.p_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& o) {
    if (this != &o) p_ = o.p_ ? std::make_unique<T>(*o.p_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return p_ != nullptr; }
  T& operator*() { return *p_; }
  const T& operator*() const { return *p_; }
  T* operator->() { return p_.get(); }
  const T* operator->() const { return p_.get(); }
  T* get() const { return p_.get(); }

  bool operator==(const Box& o) const {
    if (!p_ || !o.p_) return !p_ && !o.p_;
    return *p_ == *o.p_;
  }

 private:
  std::unique_ptr<T> p_;
};

struct Query;

/// Column slot reached through the frame stack: `level` is the nesting depth of
/// the SELECT owning the source (0 = outermost statement).
struct ColumnBinding {
  int level = -1;
  int source = -1;
  int column = -1;

  bool operator==(const ColumnBinding&) const = default;
  auto operator<=>(const ColumnBinding&) const = default;
};

/// Filled in by the resolver; ignored by equality.
struct ExprInfo {
  LogicalType type = LogicalType::null;
  KeyFamily family = KeyFamily::plain;
  ColumnBinding binding;    // column
  std::string relation;     // column: catalog relation, empty for derived tables
  std::string column;       // column: catalog column name
  int output_index = -1;    // ORDER BY item naming an output column
  int level = -1;           // subquery forms: level of the enclosing SELECT; aggregates: owning SELECT
  std::vector<ColumnBinding> outer_refs;  // subquery forms: correlated columns
  bool aggregate = false;   // function: is an aggregate call

  bool operator==(const ExprInfo&) const { return true; }
};

enum class ExprKind {
  literal,
  param,
  column,
  star,         // `*` or `t.*`; also the argument of COUNT(*)
  unary,        // name: "-", "+", "NOT"
  binary,       // name: operator spelled as in SQL, upper case for words
  function,     // name lower case; distinct flag for aggregates
  extract,      // name: field lower case; args[0]: source
  exists,       // subquery; negated for NOT EXISTS
  subquery,     // scalar subquery
  in_list,      // args[0] IN (args[1..])
  in_subquery,  // args[0] IN (subquery)
  between,      // args: value, low, high
  like,         // name: "LIKE" | "ILIKE"; args: value, pattern
  is_null       // args[0] IS [NOT] NULL
};

struct Expr {
  ExprKind kind = ExprKind::literal;
  Span span;
  Value value;            // literal
  std::string name;       // see ExprKind
  std::string qualifier;  // column / star
  std::vector<Expr> args;
  Box<Query> subquery;
  bool distinct = false;
  bool negated = false;
  ExprInfo info;

  bool operator==(const Expr&) const = default;
};

struct TableRef {
  std::string relation;  // empty for a derived table
  std::string alias;
  Box<Query> subquery;
  Span span;

  /// Name the source is visible as.
  const std::string& visible_name() const { return alias.empty() ? relation : alias; }
  bool operator==(const TableRef&) const = default;
};

enum class JoinKind { inner, left, cross };

struct Join {
  JoinKind kind = JoinKind::inner;
  TableRef table;
  std::optional<Expr> on;

  bool operator==(const Join&) const = default;
};

struct FromItem {
  TableRef table;
  std::vector<Join> joins;

  bool operator==(const FromItem&) const = default;
};

struct SelectItem {
  Expr expr;
  std::string alias;

  bool operator==(const SelectItem&) const = default;
};

struct SelectInfo {
  int level = 0;
  bool aggregated = false;
  std::vector<std::string> source_relations;  // flattened FROM order; empty = derived

  bool operator==(const SelectInfo&) const { return true; }
};

struct Select {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<FromItem> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  Span span;
  SelectInfo info;

  bool operator==(const Select&) const = default;
};

enum class SetOp { union_distinct, union_all };

struct SetBranch {
  SetOp op = SetOp::union_distinct;
  Select select;

  bool operator==(const SetBranch&) const = default;
};

struct OrderItem {
  Expr expr;
  bool descending = false;

  bool operator==(const OrderItem&) const = default;
};

struct Query {
  Select first;
  std::vector<SetBranch> rest;
  std::vector<OrderItem> order_by;
  std::optional<Expr> limit;
  Span span;

  bool operator==(const Query&) const = default;
};

/// A parsed script: one entry per `;`-separated statement.
struct SqlAst {
  std::vector<Query> statements;

  bool operator==(const SqlAst&) const = default;
};

/// Calls f(select) for every SELECT in the query, including set branches,
/// derived tables and subqueries in expressions. Outer SELECTs come first.
template <class F>
void for_each_select(const Query& q, F&& f);

template <class F>
void for_each_subexpr(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e.args) for_each_subexpr(a, f);
}

namespace detail {
template <class F>
void visit_expr_selects(const Expr& e, F& f) {
  if (e.subquery) for_each_select(*e.subquery, f);
  for (const auto& a : e.args) visit_expr_selects(a, f);
}

template <class F>
void visit_select(const Select& s, F& f) {
  f(s);
  for (const auto& it : s.items) visit_expr_selects(it.expr, f);
  for (const auto& fi : s.from) {
    if (fi.table.subquery) for_each_select(*fi.table.subquery, f);
    for (const auto& j : fi.joins) {
      if (j.table.subquery) for_each_select(*j.table.subquery, f);
      if (j.on) visit_expr_selects(*j.on, f);
    }
  }
  if (s.where) visit_expr_selects(*s.where, f);
  for (const auto& g : s.group_by) visit_expr_selects(g, f);
}
}  // namespace detail

template <class F>
void for_each_select(const Query& q, F&& f) {
  detail::visit_select(q.first, f);
  for (const auto& b : q.rest) detail::visit_select(b.select, f);
  for (const auto& o : q.order_by) detail::visit_expr_selects(o.expr, f);
}

bool is_aggregate_name(std::string_view fn);

}  // namespace peripartum::sql
