#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ldx::re {

using Captures = std::map<std::string, std::string>;

/// Compiled LIKE pattern. Dialect: literals, `.`, `*`, `+`, `?`, `|`,
/// grouping `(...)`, named capture `(?<X>...)`, back-reference `\k<X>`,
/// single-quoted literal runs and backslash escapes. A `*` with nothing to
/// repeat stands for `.*`.
///
/// A pattern is a list of comma-separated fields matched against a
/// comma-separated operation string. Inside every field but the last, `.`
/// does not match a comma, so captures stay within their field; the last
/// field may span the remaining fields. Pattern literals compare ASCII
/// case-insensitively while bound continuity values compare exactly.
class Regex {
 public:
  struct Node;

  /// Throws std::invalid_argument with an offset into the source on error.
  static Regex compile(const std::vector<std::string>& fields);
  static Regex compile_field(std::string_view field, bool last_field);

  /// Every distinct capture map for which the whole input matches. Variables
  /// present in `bound` are treated as fixed values.
  std::vector<Captures> match_all(std::string_view input, const Captures& bound = {}) const;
  bool matches(std::string_view input, const Captures& bound = {}) const;

  const std::vector<std::string>& captures() const noexcept { return captures_; }
  const std::vector<std::string>& backrefs() const noexcept { return backrefs_; }

 private:
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  std::vector<std::string> captures_;
  std::vector<std::string> backrefs_;
};

struct Regex::Node {
  enum class Kind { Empty, Lit, Any, Concat, Alt, Repeat, Group, Capture, BackRef };
  Kind kind = Kind::Empty;
  char ch = 0;
  bool field_bounded = false;
  int min = 0;
  int max = -1;
  std::string name;
  std::vector<int> kids;
};

/// Escapes `text` so it matches itself literally as a field.
std::string escape_literal(std::string_view text);

/// Rewrites single-quoted runs as escaped literals and trims unquoted
/// surrounding whitespace, e.g. ` 'a.b'|c ` becomes `a\.b|c`.
std::string normalize_field(std::string_view field);

/// True when the field is `*` or `.*`.
bool is_wildcard_field(std::string_view field);

/// Splits `body` on commas outside quotes, escapes and parentheses.
std::vector<std::string> split_fields(std::string_view body);

}  // namespace ldx::re
