#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldx/tabular.hpp"

namespace ldx {

/// A session shape with operation labels only. The root and blank nodes carry
/// no label. Node ids are assigned in creation order, which is also pre-order.
struct LabeledTree {
  std::vector<std::optional<std::string>> labels{std::nullopt};
  std::vector<int> parent{-1};
  std::vector<std::vector<int>> children{{}};
  int current = 0;

  std::size_t size() const noexcept { return labels.size(); }
  int add_child(int parent_id, std::optional<std::string> label);
  int depth(int id) const;
  bool is_ancestor(int ancestor, int id) const;
  /// Bracketed shape signature, e.g. `(()(()))`, with `*` marking the cursor.
  std::string shape_key() const;
};

struct SessionNode {
  std::optional<QueryOp> op;
  std::shared_ptr<const View> view;
  int parent = -1;
  std::vector<int> children;
};

struct SessionStep {
  enum class Kind { Op, Back };
  Kind kind = Kind::Op;
  std::optional<QueryOp> op;
};

class SessionTree {
 public:
  explicit SessionTree(std::shared_ptr<const Table> table);

  const Table& table() const noexcept { return *table_; }
  const std::shared_ptr<const Table>& table_ptr() const noexcept { return table_; }

  /// Appends `op` under the cursor and moves the cursor to it. Tabular errors
  /// propagate and leave the tree unchanged.
  int apply_op(const QueryOp& op);
  /// Same as apply_op with a precomputed view for `op` under the cursor.
  int apply_view(const QueryOp& op, std::shared_ptr<const View> view);
  /// Moves the cursor to its parent; nullopt at the root (invalid action).
  std::optional<int> back();

  std::size_t size() const noexcept { return nodes_.size(); }
  const SessionNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  int current() const noexcept { return current_; }
  int step_count() const noexcept { return step_count_; }
  const std::vector<SessionStep>& history() const noexcept { return history_; }
  int depth(int id) const;

  std::vector<int> preorder() const;
  std::string canonical_string(int id) const;
  LabeledTree labeled() const;

 private:
  std::shared_ptr<const Table> table_;
  std::vector<SessionNode> nodes_;
  std::vector<SessionStep> history_;
  int current_ = 0;
  int step_count_ = 0;
};

inline constexpr std::size_t kPreviewRows = 20;

nlohmann::json render_notebook_json(const SessionTree& tree);
std::string render_notebook_markdown(const SessionTree& tree);

/// Rebuilds a session against `table`, replaying the recorded steps when
/// present and otherwise the cell list.
SessionTree session_from_notebook_json(const nlohmann::json& doc,
                                       std::shared_ptr<const Table> table);
/// Rebuilds only the labeled shape; no dataset needed.
LabeledTree labeled_tree_from_notebook_json(const nlohmann::json& doc);

}  // namespace ldx
