#include "ldx/session.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "ldx/error.hpp"

namespace ldx {

int LabeledTree::add_child(int parent_id, std::optional<std::string> label) {
  if (parent_id < 0 || static_cast<std::size_t>(parent_id) >= size()) {
    throw Error(ErrorKind::Precondition, "unknown parent node " + std::to_string(parent_id));
  }
  const int id = static_cast<int>(size());
  labels.push_back(std::move(label));
  parent.push_back(parent_id);
  children.emplace_back();
  children[static_cast<std::size_t>(parent_id)].push_back(id);
  current = id;
  return id;
}

int LabeledTree::depth(int id) const {
  int d = 0;
  while (parent[static_cast<std::size_t>(id)] >= 0) {
    id = parent[static_cast<std::size_t>(id)];
    ++d;
  }
  return d;
}

bool LabeledTree::is_ancestor(int ancestor, int id) const {
  for (int p = parent[static_cast<std::size_t>(id)]; p >= 0; p = parent[static_cast<std::size_t>(p)]) {
    if (p == ancestor) return true;
  }
  return false;
}

std::string LabeledTree::shape_key() const {
  std::string out;
  std::function<void(int)> walk = [&](int id) {
    out.push_back('(');
    if (id == current) out.push_back('*');
    for (int c : children[static_cast<std::size_t>(id)]) walk(c);
    out.push_back(')');
  };
  walk(0);
  return out;
}

SessionTree::SessionTree(std::shared_ptr<const Table> table) : table_(std::move(table)) {
  SessionNode root;
  root.view = std::make_shared<const View>(View::raw(table_));
  nodes_.push_back(std::move(root));
}

int SessionTree::apply_op(const QueryOp& op) {
  auto view = std::make_shared<const View>(ldx::apply_op(*nodes_[static_cast<std::size_t>(current_)].view, op));
  return apply_view(op, std::move(view));
}

int SessionTree::apply_view(const QueryOp& op, std::shared_ptr<const View> view) {
  const int id = static_cast<int>(nodes_.size());
  SessionNode node;
  node.op = op;
  node.view = std::move(view);
  node.parent = current_;
  nodes_.push_back(std::move(node));
  nodes_[static_cast<std::size_t>(current_)].children.push_back(id);
  current_ = id;
  ++step_count_;
  history_.push_back({SessionStep::Kind::Op, op});
  return id;
}

std::optional<int> SessionTree::back() {
  if (current_ == 0) return std::nullopt;
  current_ = nodes_[static_cast<std::size_t>(current_)].parent;
  ++step_count_;
  history_.push_back({SessionStep::Kind::Back, std::nullopt});
  return current_;
}

int SessionTree::depth(int id) const {
  int d = 0;
  while (node(id).parent >= 0) {
    id = node(id).parent;
    ++d;
  }
  return d;
}

std::vector<int> SessionTree::preorder() const {
  std::vector<int> order;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& kids = node(id).children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

std::string SessionTree::canonical_string(int id) const {
  const auto& op = node(id).op;
  if (!op) throw Error(ErrorKind::Precondition, "the root node has no operation");
  return op->canonical();
}

LabeledTree SessionTree::labeled() const {
  LabeledTree out;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    out.add_child(nodes_[i].parent, nodes_[i].op->canonical());
  }
  out.current = current_;
  return out;
}

nlohmann::json render_notebook_json(const SessionTree& tree) {
  nlohmann::json doc;
  doc["dataset"] = tree.table().name();
  auto steps = nlohmann::json::array();
  for (const auto& step : tree.history()) {
    if (step.kind == SessionStep::Kind::Back) {
      steps.push_back({{"kind", "back"}});
    } else {
      steps.push_back({{"kind", "op"}, {"op", step.op->canonical()}});
    }
  }
  doc["steps"] = std::move(steps);
  auto cells = nlohmann::json::array();
  for (int id : tree.preorder()) {
    if (id == 0) continue;
    const auto& node = tree.node(id);
    cells.push_back({{"id", id},
                     {"parent", node.parent},
                     {"op", node.op->canonical()},
                     {"preview", view_to_json(*node.view, kPreviewRows)}});
  }
  doc["cells"] = std::move(cells);
  return doc;
}

namespace {

std::string md_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out.push_back(c);
  }
  return out;
}

void render_preview(std::ostringstream& out, const View& view) {
  const Table& table = view.table();
  if (view.kind() == ViewKind::Grouped) {
    const auto& g = view.op()->group();
    out << "| " << md_escape(g.g_attr) << " | " << to_string(g.agg_func) << "(" << md_escape(g.agg_attr)
        << ") |\n|---|---|\n";
    std::size_t shown = 0;
    for (const auto& row : view.groups()) {
      if (shown++ == kPreviewRows) break;
      out << "| " << md_escape(row.key) << " | " << format_number(row.value) << " |\n";
    }
    if (view.groups().size() > kPreviewRows) {
      out << "\n_" << view.groups().size() << " groups, first " << kPreviewRows << " shown_\n";
    }
    return;
  }
  out << "|";
  for (const auto& col : table.columns()) out << " " << md_escape(col.name) << " |";
  out << "\n|";
  for (std::size_t i = 0; i < table.column_count(); ++i) out << "---|";
  out << "\n";
  std::size_t shown = 0;
  for (auto r : view.row_ids()) {
    if (shown++ == kPreviewRows) break;
    out << "|";
    for (const auto& col : table.columns()) out << " " << (col.missing[r] ? "" : md_escape(col.text[r])) << " |";
    out << "\n";
  }
  if (view.row_ids().size() > kPreviewRows) {
    out << "\n_" << view.row_ids().size() << " rows, first " << kPreviewRows << " shown_\n";
  }
}

}  // namespace

std::string render_notebook_markdown(const SessionTree& tree) {
  std::ostringstream out;
  out << "# Exploration of `" << tree.table().name() << "`\n";
  int cell = 0;
  for (int id : tree.preorder()) {
    if (id == 0) continue;
    const auto& node = tree.node(id);
    out << "\n## [" << ++cell << "] `" << node.op->canonical() << "`\n\n";
    out << (node.parent == 0 ? std::string("applied to the full dataset")
                             : "applied to the result of cell [" + std::to_string(node.parent) + "]")
        << "\n\n";
    render_preview(out, *node.view);
  }
  return out.str();
}

namespace {

const nlohmann::json& require_cells(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("cells") || !doc["cells"].is_array()) {
    throw Error(ErrorKind::Schema, "notebook document has no 'cells' array");
  }
  return doc["cells"];
}

std::pair<int, int> cell_ids(const nlohmann::json& cell, std::size_t expected_id) {
  if (!cell.is_object() || !cell.contains("id") || !cell.contains("parent") || !cell.contains("op") ||
      !cell["id"].is_number_integer() || !cell["parent"].is_number_integer() || !cell["op"].is_string()) {
    throw Error(ErrorKind::Schema, "notebook cell needs integer 'id', integer 'parent' and string 'op'");
  }
  int id = cell["id"].get<int>();
  int parent = cell["parent"].get<int>();
  if (id != static_cast<int>(expected_id)) {
    throw Error(ErrorKind::Schema, "notebook cells must be numbered 1..n in pre-order");
  }
  if (parent < 0 || parent >= id) {
    throw Error(ErrorKind::Schema, "cell " + std::to_string(id) + " has invalid parent " + std::to_string(parent));
  }
  return {id, parent};
}

}  // namespace

SessionTree session_from_notebook_json(const nlohmann::json& doc, std::shared_ptr<const Table> table) {
  SessionTree tree(std::move(table));
  if (doc.contains("steps") && doc["steps"].is_array()) {
    for (const auto& step : doc["steps"]) {
      std::string kind = step.value("kind", "");
      if (kind == "back") {
        if (!tree.back()) throw Error(ErrorKind::Schema, "notebook steps go back past the root");
      } else if (kind == "op" && step.contains("op") && step["op"].is_string()) {
        tree.apply_op(QueryOp::parse(step["op"].get<std::string>()));
      } else {
        throw Error(ErrorKind::Schema, "malformed notebook step");
      }
    }
    return tree;
  }
  const auto& cells = require_cells(doc);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto [id, parent] = cell_ids(cells[i], i + 1);
    while (tree.current() != parent) {
      if (!tree.back()) throw Error(ErrorKind::Schema, "cell " + std::to_string(id) + " breaks pre-order");
    }
    tree.apply_op(QueryOp::parse(cells[i]["op"].get<std::string>()));
  }
  return tree;
}

LabeledTree labeled_tree_from_notebook_json(const nlohmann::json& doc) {
  const auto& cells = require_cells(doc);
  LabeledTree tree;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto [id, parent] = cell_ids(cells[i], i + 1);
    if (parent != tree.current && !tree.is_ancestor(parent, tree.current)) {
      throw Error(ErrorKind::Schema, "cell " + std::to_string(id) + " breaks pre-order");
    }
    tree.add_child(parent, cells[i]["op"].get<std::string>());
  }
  return tree;
}

}  // namespace ldx
