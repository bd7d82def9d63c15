#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldx/ldx_lang.hpp"
#include "ldx/session.hpp"

namespace ldx {

using NodeMap = std::map<std::string, int>;

/// A witness of compliance: named nodes to tree nodes, continuity variables
/// to values. ROOT always maps to node 0 and the node map is injective.
struct Assignment {
  NodeMap phi_v;
  re::Captures phi_c;
  auto operator<=>(const Assignment&) const = default;
};

/// Tree nodes able to play the subject of `spec` given the partial node map.
/// Names already in `phi_v` are honored; continuity values in `phi_c` are
/// substituted into LIKE patterns.
std::vector<int> node_matches(const Stmt& spec, const LabeledTree& tree, const NodeMap& phi_v,
                              const re::Captures& phi_c = {});

bool verify(const LabeledTree& tree, const LdxQuery& query);
std::optional<Assignment> find_assignment(const LabeledTree& tree, const LdxQuery& query);

inline constexpr std::size_t kOracleMaxTreeNodes = 10;
inline constexpr std::size_t kOracleMaxNamedNodes = 5;

/// Exhaustive enumeration of every valid assignment, sorted. Throws a Guard
/// error beyond kOracleMaxTreeNodes tree nodes or kOracleMaxNamedNodes names.
std::vector<Assignment> enumerate_assignments(const LabeledTree& tree, const LdxQuery& query);

/// Every node map satisfying the structural statements alone, sorted.
std::vector<NodeMap> structural_assignments(const LabeledTree& tree,
                                            const std::vector<StructuralStmt>& specs);
bool has_structural_assignment(const LabeledTree& tree, const std::vector<StructuralStmt>& specs);

/// Every extension of `tree` by exactly k blank nodes, each attached under
/// the cursor or one of its ancestors and becoming the new cursor.
std::vector<LabeledTree> tree_completions(const LabeledTree& tree, std::size_t k);

/// Whether some completion with at most `remaining` extra blank nodes admits
/// a structural assignment.
bool feasible(const LabeledTree& tree, const std::vector<StructuralStmt>& specs, std::size_t remaining);

/// Catalan number C(n).
unsigned long long catalan(unsigned n);

}  // namespace ldx
