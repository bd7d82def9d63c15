#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ldx/pattern.hpp"

namespace ldx {

inline constexpr std::string_view kRootName = "ROOT";
inline constexpr std::string_view kPlus = "+";

enum class Relation { Children, Descendants };

std::string_view to_string(Relation rel);

struct StructuralStmt {
  std::string subject;
  Relation rel = Relation::Children;
  /// Named items and `+` entries in source order.
  std::vector<std::string> items;

  std::size_t plus_count() const;
  bool operator==(const StructuralStmt&) const = default;
};

/// A LIKE pattern. `fields` hold normalized regex sources (quotes resolved
/// into escapes), which is also what equality compares.
class OpPattern {
 public:
  OpPattern() = default;
  /// Throws std::invalid_argument on a malformed field.
  explicit OpPattern(std::vector<std::string> fields);

  const std::vector<std::string>& fields() const noexcept { return fields_; }
  const re::Regex& regex() const noexcept { return regex_; }
  const re::Regex& field_regex(std::size_t i) const { return field_regexes_.at(i); }
  const std::vector<std::string>& captures() const noexcept { return regex_.captures(); }
  /// Variables referenced with `\k<X>` and not captured in this pattern.
  std::vector<std::string> backrefs() const;
  std::string text() const;

  bool operator==(const OpPattern& other) const { return fields_ == other.fields_; }

 private:
  std::vector<std::string> fields_;
  re::Regex regex_;
  std::vector<re::Regex> field_regexes_;
};

struct OperationalStmt {
  std::string subject;
  OpPattern pattern;
  bool operator==(const OperationalStmt&) const = default;
};

using Stmt = std::variant<StructuralStmt, OperationalStmt>;

struct LdxQuery {
  std::vector<Stmt> statements;
  std::set<std::string> named_nodes;
  std::set<std::string> continuity_vars;

  std::vector<StructuralStmt> structural() const;
  std::vector<OperationalStmt> operational() const;
  /// The LIKE statement of `name`, if any.
  const OperationalStmt* like_of(std::string_view name) const;

  bool operator==(const LdxQuery& other) const { return statements == other.statements; }
};

/// Keywords are case-insensitive; statements are separated by whitespace.
/// Throws ParseError with the 1-based line and column of the problem.
LdxQuery parse_ldx(std::string_view text);

/// Rebuilds the derived name sets from `statements` and validates them.
LdxQuery make_query(std::vector<Stmt> statements);

std::pair<std::vector<StructuralStmt>, std::vector<OperationalStmt>> partition(const LdxQuery& q);

/// One statement per line; parse_ldx(serialize(q)) == q.
std::string serialize(const LdxQuery& q);
std::string serialize(const Stmt& stmt);

nlohmann::json to_json(const LdxQuery& q);

}  // namespace ldx
