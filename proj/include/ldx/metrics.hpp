#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ldx/ldx_lang.hpp"

namespace ldx {

/// Levenshtein distance divided by the longer length; 0 for two empty strings.
double normalized_lev(std::string_view a, std::string_view b);

/// A query with node names replaced by n1, n2, ... (ROOT kept) and
/// continuity variables replaced by category names (att1, cmp1, term1,
/// aggfunc1, ...), both in first-appearance order.
struct CanonicalQuery {
  std::vector<std::string> structural;
  std::vector<std::string> operational;
  /// Masked fields of each named node's LIKE pattern, keyed by canonical name.
  std::vector<std::pair<std::string, std::vector<std::string>>> patterns;
};

CanonicalQuery canonicalize(const LdxQuery& q);

struct Lev2Parts {
  double d_struct = 0.0;
  double d_opr = 0.0;
  double lev2 = 0.0;
};

Lev2Parts lev2_parts(const LdxQuery& a, const LdxQuery& b);
double lev2(const LdxQuery& a, const LdxQuery& b);

enum class ChildrenType { Child, Descendant };

struct MinimalNode {
  std::string name;
  bool blank = false;
  std::vector<std::string> fields;
  ChildrenType type = ChildrenType::Child;
  int parent = -1;
  std::vector<int> children;
};

/// Smallest tree realizing the structural statements. Node 0 is the root.
/// Throws a Parse error on cyclic structure.
struct MinimalTree {
  std::vector<MinimalNode> nodes;
};

MinimalTree minimal_tree(const LdxQuery& q);

/// Normalized Zhang-Shasha distance between the minimal trees, in [0,1].
double xted(const LdxQuery& a, const LdxQuery& b);

}  // namespace ldx
