#include "ldx/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <stdexcept>

namespace ldx::re {

namespace {

using Node = Regex::Node;
using Kind = Regex::Node::Kind;

constexpr std::string_view kSpecials = ".*+?|()\\,'[]<>{}^$";
constexpr std::size_t kMaxResults = 4096;

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

[[noreturn]] void fail(std::size_t offset, const std::string& message) {
  throw std::invalid_argument("pattern offset " + std::to_string(offset) + ": " + message);
}

class Parser {
 public:
  Parser(std::string_view src, bool last_field, std::vector<Node>& nodes, std::size_t base)
      : src_(src), last_(last_field), nodes_(nodes), base_(base) {}

  int parse() {
    int root = alternation();
    if (pos_ < src_.size()) fail(base_ + pos_, "unbalanced ')'");
    return root;
  }

  std::vector<std::string> captures;
  std::vector<std::string> backrefs;

 private:
  int add(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size() - 1);
  }
  int lit(char c) {
    Node n;
    n.kind = Kind::Lit;
    n.ch = c;
    return add(n);
  }
  int any() {
    Node n;
    n.kind = Kind::Any;
    n.field_bounded = !last_;
    return add(n);
  }
  int repeat(int kid, int min, int max) {
    Node n;
    n.kind = Kind::Repeat;
    n.min = min;
    n.max = max;
    n.kids = {kid};
    return add(n);
  }

  bool at_end() const { return pos_ >= src_.size(); }

  int alternation() {
    std::vector<int> branches{concatenation()};
    while (!at_end() && src_[pos_] == '|') {
      ++pos_;
      branches.push_back(concatenation());
    }
    if (branches.size() == 1) return branches.front();
    Node n;
    n.kind = Kind::Alt;
    n.kids = std::move(branches);
    return add(n);
  }

  int concatenation() {
    std::vector<int> items;
    while (!at_end() && src_[pos_] != '|' && src_[pos_] != ')') {
      char c = src_[pos_];
      if (c == '*' && items.empty()) {
        ++pos_;
        items.push_back(repeat(any(), 0, -1));
        continue;
      }
      if ((c == '*' || c == '+' || c == '?') && !items.empty()) {
        ++pos_;
        int min = c == '+' ? 1 : 0;
        int max = c == '?' ? 1 : -1;
        items.back() = repeat(items.back(), min, max);
        continue;
      }
      atom(items);
    }
    if (items.size() == 1) return items.front();
    Node n;
    n.kind = items.empty() ? Kind::Empty : Kind::Concat;
    n.kids = std::move(items);
    return add(n);
  }

  std::string name_until(char close) {
    std::size_t start = pos_;
    if (at_end() || !is_name_start(src_[pos_])) fail(base_ + pos_, "expected a variable name");
    while (!at_end() && is_name_char(src_[pos_])) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    if (at_end() || src_[pos_] != close) fail(base_ + pos_, std::string("expected '") + close + "'");
    ++pos_;
    return name;
  }

  void atom(std::vector<int>& items) {
    const std::size_t start = pos_;
    char c = src_[pos_++];
    switch (c) {
      case '(': {
        std::string name;
        bool named = false;
        if (src_.substr(pos_, 2) == "?<") {
          pos_ += 2;
          name = name_until('>');
          named = true;
          if (std::find(captures.begin(), captures.end(), name) != captures.end()) {
            fail(base_ + start, "variable '" + name + "' is captured twice");
          }
        } else if (!at_end() && src_[pos_] == '?') {
          fail(base_ + pos_, "unsupported group syntax");
        }
        int inner = alternation();
        if (at_end() || src_[pos_] != ')') fail(base_ + start, "unterminated group");
        ++pos_;
        Node n;
        n.kind = named ? Kind::Capture : Kind::Group;
        n.name = name;
        n.kids = {inner};
        if (named) captures.push_back(name);
        items.push_back(add(n));
        return;
      }
      case '.':
        items.push_back(any());
        return;
      case '\\': {
        if (at_end()) fail(base_ + start, "dangling escape");
        char e = src_[pos_++];
        if (e == 'k' && !at_end() && src_[pos_] == '<') {
          ++pos_;
          Node n;
          n.kind = Kind::BackRef;
          n.name = name_until('>');
          n.field_bounded = !last_;
          if (std::find(backrefs.begin(), backrefs.end(), n.name) == backrefs.end()) {
            backrefs.push_back(n.name);
          }
          items.push_back(add(n));
          return;
        }
        items.push_back(lit(e));
        return;
      }
      case '\'': {
        std::vector<int> run;
        while (!at_end() && src_[pos_] != '\'') run.push_back(lit(src_[pos_++]));
        if (at_end()) fail(base_ + start, "unterminated quote");
        ++pos_;
        Node n;
        n.kind = run.empty() ? Kind::Empty : Kind::Concat;
        n.kids = std::move(run);
        items.push_back(add(n));
        return;
      }
      default:
        items.push_back(lit(c));
        return;
    }
  }

  std::string_view src_;
  bool last_;
  std::vector<Node>& nodes_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

bool same_ci(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

class Matcher {
 public:
  using Cont = std::function<bool(std::size_t)>;

  Matcher(const std::vector<Node>& nodes, std::string_view input, const Captures& bound, Captures& caps)
      : nodes_(nodes), in_(input), bound_(bound), caps_(caps) {}

  bool run(int id, std::size_t pos, const Cont& k) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case Kind::Empty:
        return k(pos);
      case Kind::Lit:
        return pos < in_.size() && same_ci(in_[pos], n.ch) && k(pos + 1);
      case Kind::Any:
        return pos < in_.size() && !(n.field_bounded && in_[pos] == ',') && k(pos + 1);
      case Kind::Concat:
        return seq(n, 0, pos, k);
      case Kind::Alt:
        for (int kid : n.kids) {
          if (run(kid, pos, k)) return true;
        }
        return false;
      case Kind::Repeat:
        return rep(n, 0, pos, k);
      case Kind::Group:
        return run(n.kids.front(), pos, k);
      case Kind::Capture: {
        if (const std::string* value = lookup(n.name)) {
          if (in_.substr(pos, value->size()) != *value) return false;
          Captures scratch = caps_;
          Matcher inner(nodes_, *value, bound_, scratch);
          const std::size_t len = value->size();
          if (!inner.run(n.kids.front(), 0, [len](std::size_t e) { return e == len; })) return false;
          return k(pos + len);
        }
        return run(n.kids.front(), pos, [&](std::size_t e) {
          caps_[n.name] = std::string(in_.substr(pos, e - pos));
          bool done = k(e);
          caps_.erase(n.name);
          return done;
        });
      }
      case Kind::BackRef: {
        if (const std::string* value = lookup(n.name)) {
          return in_.substr(pos, value->size()) == *value && k(pos + value->size());
        }
        std::size_t limit = in_.size();
        if (n.field_bounded) {
          auto comma = in_.find(',', pos);
          if (comma != std::string_view::npos) limit = comma;
        }
        for (std::size_t e = limit + 1; e-- > pos;) {
          caps_[n.name] = std::string(in_.substr(pos, e - pos));
          bool done = k(e);
          caps_.erase(n.name);
          if (done) return true;
        }
        return false;
      }
    }
    return false;
  }

 private:
  const std::string* lookup(const std::string& name) const {
    if (auto it = bound_.find(name); it != bound_.end()) return &it->second;
    if (auto it = caps_.find(name); it != caps_.end()) return &it->second;
    return nullptr;
  }

  bool seq(const Node& n, std::size_t i, std::size_t pos, const Cont& k) {
    if (i == n.kids.size()) return k(pos);
    return run(n.kids[i], pos, [&](std::size_t p) { return seq(n, i + 1, p, k); });
  }

  bool rep(const Node& n, int count, std::size_t pos, const Cont& k) {
    if (n.max < 0 || count < n.max) {
      bool done = run(n.kids.front(), pos, [&](std::size_t p) {
        if (p == pos) return count < n.min && rep(n, count + 1, p, k);
        return rep(n, count + 1, p, k);
      });
      if (done) return true;
    }
    return count >= n.min && k(pos);
  }

  const std::vector<Node>& nodes_;
  std::string_view in_;
  const Captures& bound_;
  Captures& caps_;
};

}  // namespace

Regex Regex::compile(const std::vector<std::string>& fields) {
  if (fields.empty()) throw std::invalid_argument("pattern has no fields");
  auto nodes = std::make_shared<std::vector<Node>>();
  Regex out;
  Node concat;
  concat.kind = Kind::Concat;
  std::size_t base = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      Node comma;
      comma.kind = Kind::Lit;
      comma.ch = ',';
      nodes->push_back(comma);
      concat.kids.push_back(static_cast<int>(nodes->size() - 1));
    }
    Parser parser(fields[i], i + 1 == fields.size(), *nodes, base);
    concat.kids.push_back(parser.parse());
    for (auto& name : parser.captures) {
      if (std::find(out.captures_.begin(), out.captures_.end(), name) != out.captures_.end()) {
        fail(base, "variable '" + name + "' is captured twice");
      }
      out.captures_.push_back(name);
    }
    for (auto& name : parser.backrefs) {
      if (std::find(out.backrefs_.begin(), out.backrefs_.end(), name) == out.backrefs_.end()) {
        out.backrefs_.push_back(name);
      }
    }
    base += fields[i].size() + 1;
  }
  nodes->push_back(concat);
  out.root_ = static_cast<int>(nodes->size() - 1);
  out.nodes_ = std::move(nodes);
  return out;
}

Regex Regex::compile_field(std::string_view field, bool last_field) {
  auto nodes = std::make_shared<std::vector<Node>>();
  Parser parser(field, last_field, *nodes, 0);
  Regex out;
  out.root_ = parser.parse();
  out.captures_ = parser.captures;
  out.backrefs_ = parser.backrefs;
  out.nodes_ = std::move(nodes);
  return out;
}

std::vector<Captures> Regex::match_all(std::string_view input, const Captures& bound) const {
  std::set<Captures> found;
  Captures caps;
  Matcher matcher(*nodes_, input, bound, caps);
  matcher.run(root_, 0, [&](std::size_t end) {
    if (end != input.size()) return false;
    found.insert(caps);
    return found.size() >= kMaxResults;
  });
  return {found.begin(), found.end()};
}

bool Regex::matches(std::string_view input, const Captures& bound) const {
  Captures caps;
  Matcher matcher(*nodes_, input, bound, caps);
  return matcher.run(root_, 0, [&](std::size_t end) { return end == input.size(); });
}

std::string escape_literal(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (kSpecials.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string normalize_field(std::string_view field) {
  std::string out;
  std::size_t keep = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < field.size(); ++i) {
    char c = field[i];
    if (quoted) {
      if (c == '\'') {
        quoted = false;
      } else if (out.empty() && std::isspace(static_cast<unsigned char>(c))) {
        out.push_back('\\');
        out.push_back(c);
      } else {
        out += escape_literal(std::string_view(&c, 1));
      }
      keep = out.size();
      continue;
    }
    if (c == '\'') {
      quoted = true;
    } else if (c == '\\' && i + 1 < field.size()) {
      out.push_back(c);
      out.push_back(field[++i]);
      keep = out.size();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) out.push_back(c);
    } else {
      out.push_back(c);
      keep = out.size();
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quote in pattern field");
  out.resize(keep);
  if (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())) &&
      (out.size() < 2 || out[out.size() - 2] != '\\')) {
    out.insert(out.size() - 1, 1, '\\');
  }
  return out;
}

bool is_wildcard_field(std::string_view field) { return field == "*" || field == ".*"; }

std::vector<std::string> split_fields(std::string_view body) {
  std::vector<std::string> fields;
  std::string current;
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (quoted) {
      current.push_back(c);
      if (c == '\'') quoted = false;
      continue;
    }
    if (c == '\\' && i + 1 < body.size()) {
      current.push_back(c);
      current.push_back(body[++i]);
      continue;
    }
    if (c == '\'') quoted = true;
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      fields.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(c);
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace ldx::re
