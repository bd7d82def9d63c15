#include "ldx/ldx_lang.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>

#include "ldx/error.hpp"

namespace ldx {

std::string_view to_string(Relation rel) {
  return rel == Relation::Children ? "CHILDREN" : "DESCENDANTS";
}

std::size_t StructuralStmt::plus_count() const {
  return static_cast<std::size_t>(std::count(items.begin(), items.end(), std::string(kPlus)));
}

OpPattern::OpPattern(std::vector<std::string> fields)
    : fields_(std::move(fields)), regex_(re::Regex::compile(fields_)) {
  field_regexes_.reserve(fields_.size());
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    field_regexes_.push_back(re::Regex::compile_field(fields_[i], i + 1 == fields_.size()));
  }
}

std::vector<std::string> OpPattern::backrefs() const {
  std::vector<std::string> out;
  for (const auto& name : regex_.backrefs()) {
    if (std::find(captures().begin(), captures().end(), name) == captures().end()) out.push_back(name);
  }
  return out;
}

std::string OpPattern::text() const {
  std::string out = "[";
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (i) out.push_back(',');
    out += fields_[i];
  }
  out.push_back(']');
  return out;
}

std::vector<StructuralStmt> LdxQuery::structural() const {
  std::vector<StructuralStmt> out;
  for (const auto& s : statements) {
    if (auto* st = std::get_if<StructuralStmt>(&s)) out.push_back(*st);
  }
  return out;
}

std::vector<OperationalStmt> LdxQuery::operational() const {
  std::vector<OperationalStmt> out;
  for (const auto& s : statements) {
    if (auto* op = std::get_if<OperationalStmt>(&s)) out.push_back(*op);
  }
  return out;
}

const OperationalStmt* LdxQuery::like_of(std::string_view name) const {
  for (const auto& s : statements) {
    if (auto* op = std::get_if<OperationalStmt>(&s); op && op->subject == name) return op;
  }
  return nullptr;
}

namespace {

struct Pos {
  std::size_t line = 1;
  std::size_t column = 1;
};

[[noreturn]] void fail_at(const std::optional<Pos>& pos, const std::string& message) {
  if (pos) throw ParseError(message, pos->line, pos->column);
  throw Error(ErrorKind::Parse, message);
}

LdxQuery validate(std::vector<Stmt> statements, const std::vector<Pos>& positions) {
  auto where = [&](std::size_t i) -> std::optional<Pos> {
    if (i < positions.size()) return positions[i];
    return std::nullopt;
  };
  LdxQuery q;
  std::set<std::string> liked;
  std::set<std::string> captured;
  std::map<std::string, std::size_t> referenced;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (auto* st = std::get_if<StructuralStmt>(&statements[i])) {
      if (st->subject == kPlus) fail_at(where(i), "'+' cannot be the subject of a statement");
      if (st->items.empty()) fail_at(where(i), "structural statement needs at least one item");
      q.named_nodes.insert(st->subject);
      std::set<std::string> seen;
      for (const auto& item : st->items) {
        if (item == kPlus) continue;
        if (item == kRootName) fail_at(where(i), "ROOT cannot be a child or descendant");
        if (item == st->subject) fail_at(where(i), "node '" + item + "' cannot relate to itself");
        if (!seen.insert(item).second) fail_at(where(i), "node '" + item + "' is listed twice");
        q.named_nodes.insert(item);
      }
    } else {
      auto& op = std::get<OperationalStmt>(statements[i]);
      if (op.subject == kPlus) fail_at(where(i), "'+' cannot be the subject of a statement");
      if (op.subject == kRootName) fail_at(where(i), "ROOT has no operation to match");
      if (!liked.insert(op.subject).second) {
        fail_at(where(i), "node '" + op.subject + "' has more than one LIKE statement");
      }
      q.named_nodes.insert(op.subject);
      for (const auto& v : op.pattern.captures()) captured.insert(v);
      for (const auto& v : op.pattern.backrefs()) referenced.emplace(v, i);
    }
  }
  for (const auto& [var, i] : referenced) {
    if (!captured.count(var)) {
      fail_at(where(i), "continuity variable '" + var + "' is referenced but never captured");
    }
  }
  q.continuity_vars = std::move(captured);
  q.statements = std::move(statements);
  return q;
}

class LdxParser {
 public:
  explicit LdxParser(std::string_view text) : src_(text) {}

  LdxQuery parse() {
    std::vector<Stmt> statements;
    std::vector<Pos> positions;
    skip_space();
    while (!at_end()) {
      positions.push_back(pos());
      statements.push_back(statement());
      skip_space();
    }
    return validate(std::move(statements), positions);
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek() const { return src_[i_]; }

  Pos pos() const { return {line_, col_}; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, col_); }

  void skip_space() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        advance();
      } else if (peek() == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string word() {
    std::string out;
    while (!at_end() && name_char(peek())) {
      out.push_back(peek());
      advance();
    }
    return out;
  }

  std::string name() {
    if (at_end()) fail("expected a node name");
    if (peek() == '+') fail("'+' cannot be the subject of a statement");
    if (!name_start(peek())) fail(std::string("unexpected character '") + peek() + "'");
    std::string n = word();
    std::string upper = n;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    return upper == kRootName ? std::string(kRootName) : n;
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  Stmt statement() {
    std::string subject = name();
    skip_space();
    Pos kw_pos = pos();
    std::string kw = word();
    if (kw.empty()) fail("expected CHILDREN, DESCENDANTS or LIKE");
    std::transform(kw.begin(), kw.end(), kw.begin(), [](unsigned char c) { return std::toupper(c); });
    skip_space();
    if (kw == "CHILDREN" || kw == "DESCENDANTS") {
      StructuralStmt st;
      st.subject = std::move(subject);
      st.rel = kw == "CHILDREN" ? Relation::Children : Relation::Descendants;
      st.items = item_list();
      return st;
    }
    if (kw == "LIKE") {
      OperationalStmt op;
      op.subject = std::move(subject);
      op.pattern = pattern();
      return op;
    }
    throw ParseError("unknown relation '" + kw + "'", kw_pos.line, kw_pos.column);
  }

  std::vector<std::string> item_list() {
    expect('<');
    std::vector<std::string> items;
    skip_space();
    if (!at_end() && peek() == '>') fail("empty item list");
    while (true) {
      skip_space();
      if (at_end()) fail("unterminated item list");
      if (peek() == '+') {
        advance();
        items.emplace_back(kPlus);
      } else if (name_start(peek())) {
        items.push_back(name());
      } else {
        fail(std::string("unexpected character '") + peek() + "' in item list");
      }
      skip_space();
      if (at_end()) fail("unterminated item list");
      if (peek() == ',') {
        advance();
        continue;
      }
      if (peek() == '>') {
        advance();
        return items;
      }
      fail(std::string("unexpected character '") + peek() + "' in item list");
    }
  }

  OpPattern pattern() {
    Pos open = pos();
    expect('[');
    std::string body;
    int depth = 0;
    bool quoted = false;
    while (true) {
      if (at_end()) throw ParseError("unterminated LIKE pattern", open.line, open.column);
      char c = peek();
      if (quoted) {
        if (c == '\'') quoted = false;
      } else if (c == '\\') {
        body.push_back(c);
        advance();
        if (at_end()) continue;
        c = peek();
      } else if (c == '\'') {
        quoted = true;
      } else if (c == '(') {
        ++depth;
      } else if (c == ')') {
        --depth;
      } else if (c == ']' && depth <= 0) {
        advance();
        break;
      }
      body.push_back(c);
      advance();
    }
    try {
      std::vector<std::string> fields;
      for (const auto& raw : re::split_fields(body)) fields.push_back(re::normalize_field(raw));
      return OpPattern(std::move(fields));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("malformed LIKE pattern: ") + e.what(), open.line, open.column);
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

LdxQuery parse_ldx(std::string_view text) { return LdxParser(text).parse(); }

LdxQuery make_query(std::vector<Stmt> statements) { return validate(std::move(statements), {}); }

std::pair<std::vector<StructuralStmt>, std::vector<OperationalStmt>> partition(const LdxQuery& q) {
  return {q.structural(), q.operational()};
}

std::string serialize(const Stmt& stmt) {
  if (auto* st = std::get_if<StructuralStmt>(&stmt)) {
    std::string out = st->subject + " " + std::string(to_string(st->rel)) + " <";
    for (std::size_t i = 0; i < st->items.size(); ++i) {
      if (i) out.push_back(',');
      out += st->items[i];
    }
    return out + ">";
  }
  const auto& op = std::get<OperationalStmt>(stmt);
  return op.subject + " LIKE " + op.pattern.text();
}

std::string serialize(const LdxQuery& q) {
  std::string out;
  for (const auto& s : q.statements) out += serialize(s) + "\n";
  return out;
}

nlohmann::json to_json(const LdxQuery& q) {
  nlohmann::json j;
  auto stmts = nlohmann::json::array();
  for (const auto& s : q.statements) {
    if (auto* st = std::get_if<StructuralStmt>(&s)) {
      stmts.push_back({{"kind", "structural"},
                       {"subject", st->subject},
                       {"relation", to_string(st->rel)},
                       {"items", st->items}});
    } else {
      const auto& op = std::get<OperationalStmt>(s);
      stmts.push_back({{"kind", "operational"},
                       {"subject", op.subject},
                       {"fields", op.pattern.fields()},
                       {"captures", op.pattern.captures()},
                       {"backrefs", op.pattern.backrefs()}});
    }
  }
  j["statements"] = std::move(stmts);
  j["named_nodes"] = q.named_nodes;
  j["continuity_vars"] = q.continuity_vars;
  return j;
}

}  // namespace ldx
