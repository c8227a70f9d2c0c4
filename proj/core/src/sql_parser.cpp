#include "peripartum/sql_parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace peripartum::sql {

SyntaxError::SyntaxError(std::string message, Span at, std::vector<std::string> expected, std::string tag)
    : std::runtime_error("line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " +
                         message),
      span_(at),
      expected_(std::move(expected)),
      tag_(std::move(tag)) {}

bool is_aggregate_name(std::string_view fn) {
  return fn == "count" || fn == "sum" || fn == "avg" || fn == "min" || fn == "max";
}

namespace {

enum class Tok { ident, quoted_ident, integer, number, string, param, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;   // identifiers lower-cased; string literal contents unescaped
  std::string upper;  // identifiers only
  Span span;
};

std::string to_upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.span = here();
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t b = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::ident;
        t.text = to_lower(std::string(src_.substr(b, pos_ - b)));
        t.upper = to_upper(t.text);
      } else if (c == '"') {
        advance();
        std::string s;
        while (true) {
          if (pos_ >= src_.size()) throw SyntaxError("unterminated quoted identifier", t.span, {"\""});
          if (src_[pos_] == '"') {
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '"') {
              s += '"';
              advance();
              advance();
              continue;
            }
            advance();
            break;
          }
          s += src_[pos_];
          advance();
        }
        t.kind = Tok::quoted_ident;
        t.text = s;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        size_t b = pos_;
        bool real = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
          real = true;
          advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          size_t save = pos_;
          advance();
          if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
          if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            real = true;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
          } else {
            pos_ = save;
          }
        }
        t.kind = real ? Tok::number : Tok::integer;
        t.text = std::string(src_.substr(b, pos_ - b));
      } else if (c == '\'') {
        advance();
        std::string s;
        while (true) {
          if (pos_ >= src_.size()) throw SyntaxError("unterminated string literal", t.span, {"'"});
          if (src_[pos_] == '\'') {
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\'') {
              s += '\'';
              advance();
              advance();
              continue;
            }
            advance();
            break;
          }
          s += src_[pos_];
          advance();
        }
        t.kind = Tok::string;
        t.text = s;
      } else if (c == ':' && pos_ + 1 < src_.size() &&
                 (std::isalpha(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '_')) {
        advance();
        size_t b = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::param;
        t.text = to_lower(std::string(src_.substr(b, pos_ - b)));
      } else {
        static const char* two[] = {"<=", ">=", "<>", "!=", "||", "::"};
        t.kind = Tok::symbol;
        for (const char* s : two) {
          if (src_.substr(pos_, 2) == s) {
            t.text = s;
            advance();
            advance();
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view("(),.*+-/%=<>;[]").find(c) == std::string_view::npos) {
            throw SyntaxError(std::string("unexpected character '") + c + "'", t.span, {});
          }
          t.text = std::string(1, c);
          advance();
        }
      }
      t.span.length = pos_ - t.span.offset;
      out.push_back(std::move(t));
    }
  }

 private:
  Span here() const { return Span{pos_, 0, line_, col_}; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        Span start = here();
        advance();
        advance();
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= src_.size()) throw SyntaxError("unterminated comment", start, {"*/"});
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::set<std::string, std::less<>>& reserved() {
  static const std::set<std::string, std::less<>> words{
      "SELECT", "FROM",  "WHERE", "GROUP", "ORDER",    "BY",     "UNION", "ALL",   "JOIN",  "INNER",
      "LEFT",   "RIGHT", "FULL",  "OUTER", "CROSS",    "ON",     "AS",    "AND",   "OR",    "NOT",
      "EXISTS", "DISTINCT", "NULL", "IS",  "IN",       "BETWEEN", "LIKE", "ILIKE", "LIMIT", "TRUE",
      "FALSE",  "ASC",   "DESC",  "CASE",  "WHEN",     "THEN",   "ELSE",  "END",   "HAVING", "OFFSET",
      "WITH",   "EXCEPT", "INTERSECT"};
  return words;
}

const std::set<std::string, std::less<>>& unsupported_leads() {
  static const std::set<std::string, std::less<>> words{
      "DROP",   "DELETE", "INSERT", "UPDATE", "ALTER",  "CREATE", "TRUNCATE", "GRANT", "REVOKE", "WITH",
      "COPY",   "MERGE",  "VACUUM", "SET",    "BEGIN",  "COMMIT", "ROLLBACK", "CALL",  "DO",     "EXECUTE",
      "PREPARE", "LOCK",  "REINDEX", "CLUSTER", "COMMENT", "EXPLAIN", "VALUES", "TABLE", "SHOW", "ANALYZE"};
  return words;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(Lexer(text).run()) {}

  SqlAst script() {
    SqlAst ast;
    if (peek().kind == Tok::end) throw SyntaxError("empty statement", peek().span, {"SELECT"});
    while (true) {
      ast.statements.push_back(statement());
      if (accept_symbol(";")) {
        if (peek().kind == Tok::end) break;
        continue;
      }
      if (peek().kind == Tok::end) break;
      fail({";", "end of input"});
    }
    return ast;
  }

  // ---- DDL --------------------------------------------------------------

  Catalog ddl() {
    Catalog cat;
    while (peek().kind != Tok::end) {
      expect_kw("CREATE");
      expect_kw("TABLE");
      Relation rel;
      rel.name = identifier();
      expect_symbol("(");
      do {
        if (is_kw("PRIMARY")) {
          next();
          expect_kw("KEY");
          rel.primary_key = name_list();
        } else if (is_kw("UNIQUE")) {
          next();
          rel.unique_constraints.push_back(name_list());
        } else if (is_kw("FOREIGN")) {
          next();
          expect_kw("KEY");
          ForeignKey fk;
          fk.columns = name_list();
          expect_kw("REFERENCES");
          fk.ref_relation = identifier();
          fk.ref_columns = name_list();
          rel.foreign_keys.push_back(std::move(fk));
        } else {
          rel.columns.push_back(column_def());
        }
      } while (accept_symbol(","));
      expect_symbol(")");
      expect_symbol(";");
      cat.relations.push_back(std::move(rel));
    }
    return cat;
  }

 private:
  // ---- token helpers ----------------------------------------------------

  const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool is_kw(std::string_view kw, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::ident && t.upper == kw;
  }
  bool is_symbol(std::string_view s, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::symbol && t.text == s;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    next();
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!is_symbol(s)) return false;
    next();
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail({std::string(kw)});
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail({std::string(s)});
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::end: return "end of input";
      case Tok::string: return "string '" + t.text + "'";
      case Tok::param: return "parameter :" + t.text;
      case Tok::ident: return "'" + t.text + "'";
      default: return "'" + t.text + "'";
    }
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string msg = "unexpected " + describe(peek());
    if (!expected.empty()) {
      msg += ", expected ";
      for (size_t i = 0; i < expected.size(); ++i) msg += (i ? " or " : "") + expected[i];
    }
    throw SyntaxError(msg, peek().span, std::move(expected));
  }

  bool is_name_token(size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::quoted_ident || (t.kind == Tok::ident && !reserved().count(t.upper));
  }

  std::string identifier() {
    if (!is_name_token()) fail({"identifier"});
    return next().text;
  }

  std::vector<std::string> name_list() {
    expect_symbol("(");
    std::vector<std::string> out{identifier()};
    while (accept_symbol(",")) out.push_back(identifier());
    expect_symbol(")");
    return out;
  }

  Span span_from(const Span& start) const {
    const Token& last = toks_[pos_ == 0 ? 0 : pos_ - 1];
    Span s = start;
    size_t end = last.span.offset + last.span.length;
    s.length = end > start.offset ? end - start.offset : 0;
    return s;
  }

  // ---- statements ---------------------------------------------------------

  Query statement() {
    const Token& t = peek();
    if (t.kind == Tok::ident && unsupported_leads().count(t.upper)) {
      throw SyntaxError("unsupported statement kind " + t.upper + ": only SELECT queries are accepted", t.span,
                        {"SELECT"}, "unsupported_statement");
    }
    if (!is_kw("SELECT")) fail({"SELECT"});
    return query();
  }

  Query query() {
    Span start = peek().span;
    Query q;
    q.first = select_core();
    while (is_kw("UNION")) {
      next();
      SetBranch b;
      if (accept_kw("ALL")) {
        b.op = SetOp::union_all;
      } else {
        accept_kw("DISTINCT");
      }
      if (!is_kw("SELECT")) fail({"SELECT"});
      b.select = select_core();
      q.rest.push_back(std::move(b));
    }
    if (is_kw("EXCEPT") || is_kw("INTERSECT")) {
      throw SyntaxError(peek().upper + " is not supported", peek().span, {"UNION"});
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        OrderItem o;
        o.expr = expr();
        if (accept_kw("DESC")) {
          o.descending = true;
        } else {
          accept_kw("ASC");
        }
        q.order_by.push_back(std::move(o));
      } while (accept_symbol(","));
    }
    if (accept_kw("LIMIT")) q.limit = expr();
    if (is_kw("OFFSET")) throw SyntaxError("OFFSET is not supported", peek().span, {});
    q.span = span_from(start);
    return q;
  }

  Select select_core() {
    Span start = peek().span;
    expect_kw("SELECT");
    Select s;
    if (accept_kw("DISTINCT")) {
      s.distinct = true;
    } else {
      accept_kw("ALL");
    }
    do s.items.push_back(select_item());
    while (accept_symbol(","));
    if (accept_kw("FROM")) {
      do s.from.push_back(from_item());
      while (accept_symbol(","));
    }
    if (accept_kw("WHERE")) s.where = expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do s.group_by.push_back(expr());
      while (accept_symbol(","));
    }
    if (is_kw("HAVING")) throw SyntaxError("HAVING is not supported", peek().span, {});
    s.span = span_from(start);
    return s;
  }

  SelectItem select_item() {
    SelectItem item;
    if (is_symbol("*")) {
      item.expr.kind = ExprKind::star;
      item.expr.span = next().span;
      return item;
    }
    if (is_name_token() && is_symbol(".", 1) && is_symbol("*", 2)) {
      Span start = peek().span;
      item.expr.kind = ExprKind::star;
      item.expr.qualifier = next().text;
      next();
      next();
      item.expr.span = span_from(start);
      return item;
    }
    item.expr = expr();
    if (accept_kw("AS")) {
      item.alias = identifier();
    } else if (is_name_token()) {
      item.alias = next().text;
    }
    return item;
  }

  TableRef table_ref() {
    TableRef t;
    Span start = peek().span;
    if (accept_symbol("(")) {
      if (!is_kw("SELECT")) fail({"SELECT"});
      t.subquery = query();
      expect_symbol(")");
    } else {
      t.relation = identifier();
    }
    if (accept_kw("AS")) {
      t.alias = identifier();
    } else if (is_name_token()) {
      t.alias = next().text;
    }
    t.span = span_from(start);
    return t;
  }

  FromItem from_item() {
    FromItem f;
    f.table = table_ref();
    while (true) {
      Join j;
      if (accept_kw("JOIN")) {
        j.kind = JoinKind::inner;
      } else if (is_kw("INNER") && is_kw("JOIN", 1)) {
        next();
        next();
        j.kind = JoinKind::inner;
      } else if (is_kw("LEFT")) {
        next();
        accept_kw("OUTER");
        expect_kw("JOIN");
        j.kind = JoinKind::left;
      } else if (is_kw("CROSS")) {
        next();
        expect_kw("JOIN");
        j.kind = JoinKind::cross;
      } else if (is_kw("RIGHT") || is_kw("FULL")) {
        throw SyntaxError(peek().upper + " JOIN is not supported", peek().span, {"JOIN", "LEFT JOIN"});
      } else {
        break;
      }
      j.table = table_ref();
      if (j.kind != JoinKind::cross) {
        expect_kw("ON");
        j.on = expr();
      }
      f.joins.push_back(std::move(j));
    }
    return f;
  }

  // ---- expressions --------------------------------------------------------

  Expr make(ExprKind k, Span sp) {
    Expr e;
    e.kind = k;
    e.span = sp;
    return e;
  }

  Expr binary(std::string op, Expr l, Expr r) {
    Span sp = l.span;
    size_t end = r.span.offset + r.span.length;
    sp.length = end > sp.offset ? end - sp.offset : 0;
    Expr e = make(ExprKind::binary, sp);
    e.name = std::move(op);
    e.args.push_back(std::move(l));
    e.args.push_back(std::move(r));
    return e;
  }

 public:
  Expr expr() { return or_expr(); }

 private:
  Expr or_expr() {
    Expr l = and_expr();
    while (accept_kw("OR")) l = binary("OR", std::move(l), and_expr());
    return l;
  }

  Expr and_expr() {
    Expr l = not_expr();
    while (accept_kw("AND")) l = binary("AND", std::move(l), not_expr());
    return l;
  }

  Expr not_expr() {
    if (is_kw("NOT")) {
      Span start = next().span;
      Expr e = make(ExprKind::unary, start);
      e.name = "NOT";
      e.args.push_back(not_expr());
      e.span = span_from(start);
      return e;
    }
    return is_expr();
  }

  Expr is_expr() {
    Expr l = comparison();
    while (is_kw("IS")) {
      Span start = l.span;
      next();
      Expr e = make(ExprKind::is_null, start);
      e.negated = accept_kw("NOT");
      expect_kw("NULL");
      e.args.push_back(std::move(l));
      e.span = span_from(start);
      l = std::move(e);
    }
    return l;
  }

  Expr comparison() {
    Expr l = predicate();
    while (peek().kind == Tok::symbol) {
      std::string op = peek().text;
      if (op == "!=") op = "<>";
      if (op != "=" && op != "<>" && op != "<" && op != "<=" && op != ">" && op != ">=") break;
      next();
      l = binary(op, std::move(l), predicate());
    }
    return l;
  }

  Expr predicate() {
    Expr l = additive();
    while (true) {
      Span start = l.span;
      bool neg = false;
      if (is_kw("NOT") && (is_kw("BETWEEN", 1) || is_kw("IN", 1) || is_kw("LIKE", 1) || is_kw("ILIKE", 1))) {
        next();
        neg = true;
      }
      if (accept_kw("BETWEEN")) {
        Expr e = make(ExprKind::between, start);
        e.negated = neg;
        e.args.push_back(std::move(l));
        e.args.push_back(additive());
        expect_kw("AND");
        e.args.push_back(additive());
        e.span = span_from(start);
        l = std::move(e);
      } else if (accept_kw("IN")) {
        expect_symbol("(");
        Expr e;
        if (is_kw("SELECT")) {
          e = make(ExprKind::in_subquery, start);
          e.args.push_back(std::move(l));
          e.subquery = query();
        } else {
          e = make(ExprKind::in_list, start);
          e.args.push_back(std::move(l));
          do e.args.push_back(expr());
          while (accept_symbol(","));
        }
        expect_symbol(")");
        e.negated = neg;
        e.span = span_from(start);
        l = std::move(e);
      } else if (is_kw("LIKE") || is_kw("ILIKE")) {
        Expr e = make(ExprKind::like, start);
        e.name = next().upper;
        e.negated = neg;
        e.args.push_back(std::move(l));
        e.args.push_back(additive());
        e.span = span_from(start);
        l = std::move(e);
      } else {
        return l;
      }
    }
  }

  Expr additive() {
    Expr l = multiplicative();
    while (is_symbol("+") || is_symbol("-") || is_symbol("||")) {
      std::string op = next().text;
      l = binary(op, std::move(l), multiplicative());
    }
    return l;
  }

  Expr multiplicative() {
    Expr l = unary();
    while (is_symbol("*") || is_symbol("/") || is_symbol("%")) {
      std::string op = next().text;
      l = binary(op, std::move(l), unary());
    }
    return l;
  }

  Expr unary() {
    if (is_symbol("-") || is_symbol("+")) {
      Span start = peek().span;
      Expr e = make(ExprKind::unary, start);
      e.name = next().text;
      e.args.push_back(unary());
      e.span = span_from(start);
      return e;
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    Span start = t.span;
    switch (t.kind) {
      case Tok::integer: {
        Expr e = make(ExprKind::literal, start);
        auto v = parse_int(t.text);
        if (v) {
          e.value = Value(*v);
        } else {
          e.value = Value(parse_double(t.text).value_or(0.0));
        }
        next();
        return e;
      }
      case Tok::number: {
        Expr e = make(ExprKind::literal, start);
        e.value = Value(parse_double(t.text).value_or(0.0));
        next();
        return e;
      }
      case Tok::string: {
        Expr e = make(ExprKind::literal, start);
        e.value = Value(t.text);
        next();
        return e;
      }
      case Tok::param: {
        Expr e = make(ExprKind::param, start);
        e.name = t.text;
        next();
        return e;
      }
      case Tok::symbol:
        if (t.text == "(") {
          next();
          if (is_kw("SELECT")) {
            Expr e = make(ExprKind::subquery, start);
            e.subquery = query();
            expect_symbol(")");
            e.span = span_from(start);
            return e;
          }
          Expr inner = expr();
          expect_symbol(")");
          return inner;
        }
        fail({"expression"});
      case Tok::end: fail({"expression"});
      case Tok::ident:
      case Tok::quoted_ident: break;
    }

    if (t.kind == Tok::ident) {
      if (t.upper == "NULL" || t.upper == "TRUE" || t.upper == "FALSE") {
        Expr e = make(ExprKind::literal, start);
        if (t.upper != "NULL") e.value = Value(t.upper == "TRUE");
        next();
        return e;
      }
      if (t.upper == "EXISTS") {
        next();
        expect_symbol("(");
        if (!is_kw("SELECT")) fail({"SELECT"});
        Expr e = make(ExprKind::exists, start);
        e.subquery = query();
        expect_symbol(")");
        e.span = span_from(start);
        return e;
      }
      if (t.upper == "EXTRACT" && is_symbol("(", 1)) {
        next();
        next();
        Expr e = make(ExprKind::extract, start);
        if (peek().kind != Tok::ident) fail({"field name"});
        e.name = next().text;
        expect_kw("FROM");
        e.args.push_back(expr());
        expect_symbol(")");
        e.span = span_from(start);
        return e;
      }
      if (t.upper == "CASE") throw SyntaxError("CASE is not supported", t.span, {});
    }

    if (!is_name_token()) fail({"expression"});
    std::string first = next().text;
    if (is_symbol("(")) {
      next();
      Expr e = make(ExprKind::function, start);
      e.name = first;
      if (is_symbol("*")) {
        Expr star = make(ExprKind::star, peek().span);
        next();
        e.args.push_back(std::move(star));
      } else if (!is_symbol(")")) {
        if (accept_kw("DISTINCT")) {
          e.distinct = true;
        } else {
          accept_kw("ALL");
        }
        do e.args.push_back(expr());
        while (accept_symbol(","));
      }
      expect_symbol(")");
      e.span = span_from(start);
      return e;
    }
    Expr e = make(ExprKind::column, start);
    if (accept_symbol(".")) {
      e.qualifier = first;
      e.name = identifier();
    } else {
      e.name = first;
    }
    e.span = span_from(start);
    return e;
  }

  // ---- DDL pieces ---------------------------------------------------------

  double signed_number() {
    bool neg = accept_symbol("-");
    const Token& t = peek();
    if (t.kind != Tok::integer && t.kind != Tok::number) fail({"number"});
    double v = parse_double(next().text).value_or(0.0);
    return neg ? -v : v;
  }

  int small_int() {
    if (peek().kind != Tok::integer) fail({"integer"});
    return static_cast<int>(parse_int(next().text).value_or(0));
  }

  ColumnType column_type() {
    if (peek().kind != Tok::ident) fail({"type name"});
    std::string name = next().upper;
    ColumnType t;
    if (name == "BIGINT") {
      t.kind = ColumnKind::bigint;
    } else if (name == "INTEGER" || name == "INT") {
      t.kind = ColumnKind::integer;
    } else if (name == "NUMERIC") {
      t.kind = ColumnKind::numeric;
    } else if (name == "TEXT") {
      t.kind = ColumnKind::text;
    } else if (name == "CHAR") {
      t.kind = ColumnKind::fixed_char;
      expect_symbol("(");
      t.length = small_int();
      expect_symbol(")");
    } else if (name == "VARCHAR") {
      t.kind = ColumnKind::varchar;
      if (accept_symbol("(")) {
        t.length = small_int();
        expect_symbol(")");
      }
      if (accept_symbol("[")) {
        expect_symbol("]");
        t.kind = ColumnKind::varchar_array;
      }
    } else if (name == "DATE") {
      t.kind = ColumnKind::date;
    } else if (name == "TIMESTAMP") {
      t.kind = ColumnKind::timestamp;
      if (accept_symbol("(")) {
        small_int();
        expect_symbol(")");
      }
    } else if (name == "BOOLEAN") {
      t.kind = ColumnKind::boolean;
    } else if (name == "JSONB") {
      t.kind = ColumnKind::jsonb;
    } else {
      --pos_;
      fail({"type name"});
    }
    return t;
  }

  Column column_def() {
    Column c;
    c.name = identifier();
    c.type = column_type();
    c.family = family_of(c.type);
    c.nullable = true;
    while (true) {
      if (is_kw("NOT")) {
        next();
        expect_kw("NULL");
        c.nullable = false;
      } else if (accept_kw("NULL")) {
        c.nullable = true;
      } else if (accept_kw("CHECK")) {
        expect_symbol("(");
        std::string target = identifier();
        if (target != c.name) fail({c.name});
        if (accept_kw("IN")) {
          expect_symbol("(");
          do {
            if (peek().kind != Tok::string) fail({"string"});
            c.enum_values.push_back(next().text);
          } while (accept_symbol(","));
          expect_symbol(")");
        } else if (accept_kw("BETWEEN")) {
          ValueRange r;
          r.min = signed_number();
          expect_kw("AND");
          r.max = signed_number();
          c.range = r;
        } else if (accept_symbol(">=")) {
          ValueRange r = c.range.value_or(ValueRange{});
          r.min = signed_number();
          c.range = r;
        } else if (accept_symbol("<=")) {
          ValueRange r = c.range.value_or(ValueRange{});
          r.max = signed_number();
          c.range = r;
        } else {
          fail({"IN", "BETWEEN", ">=", "<="});
        }
        expect_symbol(")");
      } else {
        break;
      }
    }
    return c;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

// ---- printing ---------------------------------------------------------------

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string ident(const std::string& s) {
  bool plain = !s.empty() && !std::isdigit(static_cast<unsigned char>(s[0])) &&
               std::all_of(s.begin(), s.end(), [](char c) {
                 return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
                        c == '_';
               }) &&
               !reserved().count(to_upper(s));
  if (plain) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool compound(const Expr& e) {
  switch (e.kind) {
    case ExprKind::binary:
    case ExprKind::unary:
    case ExprKind::between:
    case ExprKind::like:
    case ExprKind::in_list:
    case ExprKind::in_subquery:
    case ExprKind::is_null: return true;
    case ExprKind::literal:
      // negative numbers re-parse as unary minus
      return (e.value.kind() == ValueKind::integer && e.value.as_int() < 0) ||
             (e.value.kind() == ValueKind::real && e.value.as_real() < 0);
    default: return false;
  }
}

std::string wrap(const Expr& e) {
  std::string s = print_expr(e);
  return compound(e) ? "(" + s + ")" : s;
}

std::string print_literal(const Value& v) {
  switch (v.kind()) {
    case ValueKind::null: return "NULL";
    case ValueKind::boolean: return v.as_bool() ? "TRUE" : "FALSE";
    case ValueKind::integer: return std::to_string(v.as_int());
    case ValueKind::real: return format_double(v.as_real());
    case ValueKind::decimal: {
      std::string s = v.as_decimal().to_string();
      return s.find('.') == std::string::npos ? s + ".0" : s;
    }
    default: return quote(v.to_string());
  }
}

std::string print_table(const TableRef& t) {
  std::string s = t.subquery ? "(" + print_sql(*t.subquery) + ")" : ident(t.relation);
  if (!t.alias.empty()) s += " AS " + ident(t.alias);
  return s;
}

std::string print_select(const Select& s) {
  std::string out = "SELECT ";
  if (s.distinct) out += "DISTINCT ";
  for (size_t i = 0; i < s.items.size(); ++i) {
    if (i) out += ", ";
    out += print_expr(s.items[i].expr);
    if (!s.items[i].alias.empty()) out += " AS " + ident(s.items[i].alias);
  }
  if (!s.from.empty()) {
    out += " FROM ";
    for (size_t i = 0; i < s.from.size(); ++i) {
      if (i) out += ", ";
      out += print_table(s.from[i].table);
      for (const auto& j : s.from[i].joins) {
        out += j.kind == JoinKind::left ? " LEFT JOIN " : j.kind == JoinKind::cross ? " CROSS JOIN " : " JOIN ";
        out += print_table(j.table);
        if (j.on) out += " ON " + print_expr(*j.on);
      }
    }
  }
  if (s.where) out += " WHERE " + print_expr(*s.where);
  if (!s.group_by.empty()) {
    out += " GROUP BY ";
    for (size_t i = 0; i < s.group_by.size(); ++i) out += (i ? ", " : "") + print_expr(s.group_by[i]);
  }
  return out;
}

}  // namespace

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::literal: return print_literal(e.value);
    case ExprKind::param: return ":" + e.name;
    case ExprKind::column: return (e.qualifier.empty() ? "" : ident(e.qualifier) + ".") + ident(e.name);
    case ExprKind::star: return (e.qualifier.empty() ? "" : ident(e.qualifier) + ".") + "*";
    case ExprKind::unary:
      if (e.name == "NOT") return "NOT " + wrap(e.args[0]);
      return e.name + wrap(e.args[0]);
    case ExprKind::binary: return wrap(e.args[0]) + " " + e.name + " " + wrap(e.args[1]);
    case ExprKind::function: {
      std::string s = to_upper(e.name) + "(";
      if (e.distinct) s += "DISTINCT ";
      for (size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + print_expr(e.args[i]);
      return s + ")";
    }
    case ExprKind::extract: return "EXTRACT(" + to_upper(e.name) + " FROM " + print_expr(e.args[0]) + ")";
    case ExprKind::exists: return "EXISTS (" + print_sql(*e.subquery) + ")";
    case ExprKind::subquery: return "(" + print_sql(*e.subquery) + ")";
    case ExprKind::in_list: {
      std::string s = wrap(e.args[0]) + (e.negated ? " NOT IN (" : " IN (");
      for (size_t i = 1; i < e.args.size(); ++i) s += (i > 1 ? ", " : "") + print_expr(e.args[i]);
      return s + ")";
    }
    case ExprKind::in_subquery:
      return wrap(e.args[0]) + (e.negated ? " NOT IN (" : " IN (") + print_sql(*e.subquery) + ")";
    case ExprKind::between:
      return wrap(e.args[0]) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") + wrap(e.args[1]) + " AND " +
             wrap(e.args[2]);
    case ExprKind::like: return wrap(e.args[0]) + (e.negated ? " NOT " : " ") + e.name + " " + wrap(e.args[1]);
    case ExprKind::is_null: return wrap(e.args[0]) + (e.negated ? " IS NOT NULL" : " IS NULL");
  }
  return "";
}

std::string print_sql(const Query& q) {
  std::string out = print_select(q.first);
  for (const auto& b : q.rest) {
    out += b.op == SetOp::union_all ? " UNION ALL " : " UNION ";
    out += print_select(b.select);
  }
  if (!q.order_by.empty()) {
    out += " ORDER BY ";
    for (size_t i = 0; i < q.order_by.size(); ++i) {
      out += (i ? ", " : "") + print_expr(q.order_by[i].expr);
      if (q.order_by[i].descending) out += " DESC";
    }
  }
  if (q.limit) out += " LIMIT " + print_expr(*q.limit);
  return out;
}

std::string print_sql(const SqlAst& ast) {
  std::string out;
  for (const auto& q : ast.statements) out += print_sql(q) + ";\n";
  return out;
}

SqlAst parse_sql(std::string_view text) { return Parser(text).script(); }

Catalog parse_ddl(std::string_view text) { return Parser(text).ddl(); }

}  // namespace peripartum::sql
