#include "ldx/verifier.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "ldx/error.hpp"

namespace ldx {

namespace {

using Visit = std::function<bool(const NodeMap&, const re::Captures&)>;

std::vector<int> relation_pool(const LabeledTree& tree, int subject, Relation rel) {
  if (rel == Relation::Children) return tree.children[static_cast<std::size_t>(subject)];
  std::vector<int> out;
  std::vector<int> stack(tree.children[static_cast<std::size_t>(subject)].rbegin(),
                         tree.children[static_cast<std::size_t>(subject)].rend());
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& kids = tree.children[static_cast<std::size_t>(id)];
    stack.insert(stack.end(), kids.rbegin(), kids.rend());
  }
  return out;
}

bool is_used(const NodeMap& phi, int node) {
  for (const auto& [name, id] : phi) {
    if (id == node) return true;
  }
  return false;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

/// Matches of a LIKE pattern against one node: blank nodes match with no
/// captures, the root never matches.
std::vector<re::Captures> label_matches(const LabeledTree& tree, int node, const OpPattern& pattern,
                                        const re::Captures& bound) {
  if (node == 0) return {};
  const auto& label = tree.labels[static_cast<std::size_t>(node)];
  if (!label) return {re::Captures{}};
  return pattern.regex().match_all(*label, bound);
}

/// Enumerates injective extensions of `phi` so that `st` holds with its
/// subject mapped to `subject`.
bool extend_items(const LabeledTree& tree, const StructuralStmt& st, int subject, NodeMap& phi,
                  const std::function<bool(NodeMap&)>& visit) {
  const std::vector<int> pool = relation_pool(tree, subject, st.rel);
  std::vector<std::string> named;
  for (const auto& item : st.items) {
    if (item != kPlus) named.push_back(item);
  }
  for (const auto& item : named) {
    auto it = phi.find(item);
    if (it != phi.end() && !contains(pool, it->second)) return false;
  }
  std::function<bool(std::size_t)> step = [&](std::size_t i) -> bool {
    if (i == named.size()) {
      std::size_t taken = 0;
      for (const auto& item : named) {
        if (contains(pool, phi.at(item))) ++taken;
      }
      if (pool.size() - taken < st.plus_count()) return false;
      return visit(phi);
    }
    if (phi.count(named[i])) return step(i + 1);
    for (int candidate : pool) {
      if (is_used(phi, candidate)) continue;
      phi[named[i]] = candidate;
      bool stop = step(i + 1);
      phi.erase(named[i]);
      if (stop) return true;
    }
    return false;
  };
  return step(0);
}

class Search {
 public:
  Search(const LabeledTree& tree, std::vector<Stmt> specs) : tree_(tree), specs_(std::move(specs)) {}

  /// Calls `visit` for every assignment found; stops when it returns true.
  bool run(const Visit& visit, bool root_named) {
    visit_ = &visit;
    std::vector<bool> done(specs_.size(), false);
    NodeMap phi;
    if (root_named) phi[std::string(kRootName)] = 0;
    re::Captures caps;
    return rec(done, phi, caps);
  }

 private:
  std::size_t pick(const std::vector<bool>& done, const NodeMap& phi, const re::Captures& caps) const {
    std::size_t fallback = specs_.size();
    std::size_t unbound_struct = specs_.size();
    std::size_t bound_vars_op = specs_.size();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (done[i]) continue;
      if (fallback == specs_.size()) fallback = i;
      if (auto* st = std::get_if<StructuralStmt>(&specs_[i])) {
        if (phi.count(st->subject)) return i;
        if (unbound_struct == specs_.size()) unbound_struct = i;
      } else {
        const auto& op = std::get<OperationalStmt>(specs_[i]);
        if (phi.count(op.subject)) return i;
        if (bound_vars_op == specs_.size()) {
          bool all_bound = true;
          for (const auto& v : op.pattern.regex().backrefs()) all_bound = all_bound && caps.count(v);
          for (const auto& v : op.pattern.captures()) all_bound = all_bound && caps.count(v);
          if (all_bound && (!op.pattern.captures().empty() || !op.pattern.regex().backrefs().empty())) {
            bound_vars_op = i;
          }
        }
      }
    }
    if (bound_vars_op != specs_.size()) return bound_vars_op;
    if (unbound_struct != specs_.size()) return unbound_struct;
    return fallback;
  }

  bool rec(std::vector<bool>& done, NodeMap& phi, re::Captures& caps) {
    const std::size_t i = pick(done, phi, caps);
    if (i == specs_.size()) return (*visit_)(phi, caps);
    done[i] = true;
    bool stop = false;
    if (auto* st = std::get_if<StructuralStmt>(&specs_[i])) {
      auto with_subject = [&](int subject) {
        return extend_items(tree_, *st, subject, phi, [&](NodeMap&) { return rec(done, phi, caps); });
      };
      if (auto it = phi.find(st->subject); it != phi.end()) {
        stop = with_subject(it->second);
      } else {
        for (int v = 1; v < static_cast<int>(tree_.size()) && !stop; ++v) {
          if (is_used(phi, v)) continue;
          phi[st->subject] = v;
          stop = with_subject(v);
          phi.erase(st->subject);
        }
      }
    } else {
      const auto& op = std::get<OperationalStmt>(specs_[i]);
      auto with_subject = [&](int subject) {
        for (const auto& found : label_matches(tree_, subject, op.pattern, caps)) {
          re::Captures saved = caps;
          caps.insert(found.begin(), found.end());
          bool s = rec(done, phi, caps);
          caps = std::move(saved);
          if (s) return true;
        }
        return false;
      };
      if (auto it = phi.find(op.subject); it != phi.end()) {
        stop = with_subject(it->second);
      } else {
        for (int v = 1; v < static_cast<int>(tree_.size()) && !stop; ++v) {
          if (is_used(phi, v)) continue;
          phi[op.subject] = v;
          stop = with_subject(v);
          phi.erase(op.subject);
        }
      }
    }
    done[i] = false;
    return stop;
  }

  const LabeledTree& tree_;
  std::vector<Stmt> specs_;
  const Visit* visit_ = nullptr;
};

bool mentions_root(const std::vector<Stmt>& specs) {
  for (const auto& s : specs) {
    if (auto* st = std::get_if<StructuralStmt>(&s); st && st->subject == kRootName) return true;
  }
  return false;
}

std::vector<Stmt> as_stmts(const std::vector<StructuralStmt>& specs) {
  return {specs.begin(), specs.end()};
}

}  // namespace

std::vector<int> node_matches(const Stmt& spec, const LabeledTree& tree, const NodeMap& phi_v,
                              const re::Captures& phi_c) {
  std::vector<int> out;
  if (auto* st = std::get_if<StructuralStmt>(&spec)) {
    auto try_subject = [&](int v) {
      NodeMap phi = phi_v;
      phi[st->subject] = v;
      return extend_items(tree, *st, v, phi, [](NodeMap&) { return true; });
    };
    if (st->subject == kRootName) {
      if (try_subject(0)) out.push_back(0);
      return out;
    }
    if (auto it = phi_v.find(st->subject); it != phi_v.end()) {
      if (try_subject(it->second)) out.push_back(it->second);
      return out;
    }
    for (int v = 1; v < static_cast<int>(tree.size()); ++v) {
      if (!is_used(phi_v, v) && try_subject(v)) out.push_back(v);
    }
    return out;
  }
  const auto& op = std::get<OperationalStmt>(spec);
  if (auto it = phi_v.find(op.subject); it != phi_v.end()) {
    if (!label_matches(tree, it->second, op.pattern, phi_c).empty()) out.push_back(it->second);
    return out;
  }
  for (int v = 1; v < static_cast<int>(tree.size()); ++v) {
    if (!is_used(phi_v, v) && !label_matches(tree, v, op.pattern, phi_c).empty()) out.push_back(v);
  }
  return out;
}

std::optional<Assignment> find_assignment(const LabeledTree& tree, const LdxQuery& query) {
  std::optional<Assignment> found;
  Search search(tree, query.statements);
  search.run(
      [&](const NodeMap& phi, const re::Captures& caps) {
        found = Assignment{phi, caps};
        return true;
      },
      query.named_nodes.count(std::string(kRootName)) > 0);
  return found;
}

bool verify(const LabeledTree& tree, const LdxQuery& query) { return find_assignment(tree, query).has_value(); }

std::vector<Assignment> enumerate_assignments(const LabeledTree& tree, const LdxQuery& query) {
  std::vector<std::string> names;
  for (const auto& n : query.named_nodes) {
    if (n != kRootName) names.push_back(n);
  }
  if (tree.size() > kOracleMaxTreeNodes || query.named_nodes.size() > kOracleMaxNamedNodes) {
    throw Error(ErrorKind::Guard, "oracle limited to " + std::to_string(kOracleMaxTreeNodes) + " tree nodes and " +
                                      std::to_string(kOracleMaxNamedNodes) + " named nodes");
  }
  const auto structural = query.structural();
  const auto operational = query.operational();
  const bool root_named = query.named_nodes.count(std::string(kRootName)) > 0;

  std::set<Assignment> found;
  NodeMap phi;
  if (root_named) phi[std::string(kRootName)] = 0;

  auto structure_holds = [&]() {
    for (const auto& st : structural) {
      const auto pool = relation_pool(tree, phi.at(st.subject), st.rel);
      std::size_t taken = 0;
      for (const auto& item : st.items) {
        if (item == kPlus) continue;
        if (!contains(pool, phi.at(item))) return false;
        ++taken;
      }
      if (pool.size() - taken < st.plus_count()) return false;
    }
    return true;
  };

  std::function<void(std::size_t, re::Captures&)> bind_ops = [&](std::size_t i, re::Captures& caps) {
    if (i == operational.size()) {
      found.insert(Assignment{phi, caps});
      return;
    }
    const auto& op = operational[i];
    for (const auto& m : label_matches(tree, phi.at(op.subject), op.pattern, caps)) {
      re::Captures next = caps;
      next.insert(m.begin(), m.end());
      bind_ops(i + 1, next);
    }
  };

  std::function<void(std::size_t)> assign = [&](std::size_t i) {
    if (i == names.size()) {
      if (!structure_holds()) return;
      re::Captures caps;
      bind_ops(0, caps);
      return;
    }
    for (int v = 1; v < static_cast<int>(tree.size()); ++v) {
      if (is_used(phi, v)) continue;
      phi[names[i]] = v;
      assign(i + 1);
      phi.erase(names[i]);
    }
  };
  assign(0);
  return {found.begin(), found.end()};
}

std::vector<NodeMap> structural_assignments(const LabeledTree& tree, const std::vector<StructuralStmt>& specs) {
  std::set<NodeMap> found;
  auto stmts = as_stmts(specs);
  Search search(tree, stmts);
  search.run(
      [&](const NodeMap& phi, const re::Captures&) {
        found.insert(phi);
        return false;
      },
      mentions_root(stmts));
  return {found.begin(), found.end()};
}

bool has_structural_assignment(const LabeledTree& tree, const std::vector<StructuralStmt>& specs) {
  auto stmts = as_stmts(specs);
  Search search(tree, stmts);
  return search.run([](const NodeMap&, const re::Captures&) { return true; }, mentions_root(stmts));
}

std::vector<LabeledTree> tree_completions(const LabeledTree& tree, std::size_t k) {
  std::vector<LabeledTree> out;
  std::function<void(const LabeledTree&, std::size_t)> grow = [&](const LabeledTree& t, std::size_t left) {
    if (left == 0) {
      out.push_back(t);
      return;
    }
    for (int v = t.current; v >= 0; v = t.parent[static_cast<std::size_t>(v)]) {
      LabeledTree next = t;
      next.add_child(v, std::nullopt);
      grow(next, left - 1);
    }
  };
  grow(tree, k);
  return out;
}

bool feasible(const LabeledTree& tree, const std::vector<StructuralStmt>& specs, std::size_t remaining) {
  if (specs.empty()) return true;
  auto stmts = as_stmts(specs);
  const bool root_named = mentions_root(stmts);
  std::set<std::string> names;
  for (const auto& st : specs) {
    names.insert(st.subject);
    for (const auto& item : st.items) {
      if (item != kPlus) names.insert(item);
    }
  }
  std::size_t needed = names.size() - (names.count(std::string(kRootName)) ? 1 : 0);
  if (tree.size() - 1 + remaining < needed) return false;

  // Adding nodes never invalidates a structural assignment, so only the
  // largest completions need checking.
  std::function<bool(LabeledTree&, std::size_t)> grow = [&](LabeledTree& t, std::size_t left) -> bool {
    if (left == 0) {
      Search search(t, stmts);
      return search.run([](const NodeMap&, const re::Captures&) { return true; }, root_named);
    }
    const int cursor = t.current;
    for (int v = cursor; v >= 0; v = t.parent[static_cast<std::size_t>(v)]) {
      const int id = t.add_child(v, std::nullopt);
      bool ok = grow(t, left - 1);
      t.labels.pop_back();
      t.parent.pop_back();
      t.children.pop_back();
      t.children[static_cast<std::size_t>(v)].pop_back();
      t.current = cursor;
      (void)id;
      if (ok) return true;
    }
    return false;
  };
  LabeledTree work = tree;
  return grow(work, remaining);
}

unsigned long long catalan(unsigned n) {
  unsigned long long c = 1;
  for (unsigned k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

}  // namespace ldx
