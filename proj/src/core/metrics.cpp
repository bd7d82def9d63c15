#include "ldx/metrics.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "ldx/error.hpp"

namespace ldx {

double normalized_lev(std::string_view a, std::string_view b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

namespace {

/// Rewrites every `(?<X>` and `\k<X>` in `field` through `rename`.
std::string map_vars(const std::string& field, const std::function<std::string(const std::string&)>& rename) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const bool capture = field.compare(i, 3, "(?<") == 0;
    const bool backref = field.compare(i, 3, "\\k<") == 0;
    if (capture || backref) {
      const std::size_t close = field.find('>', i + 3);
      if (close != std::string::npos) {
        out += field.substr(i, 3);
        out += rename(field.substr(i + 3, close - i - 3));
        out.push_back('>');
        i = close;
        continue;
      }
    }
    if (field[i] == '\\' && i + 1 < field.size()) {
      out.push_back(field[i]);
      out.push_back(field[++i]);
      continue;
    }
    out.push_back(field[i]);
  }
  return out;
}

std::vector<std::string> vars_in(const std::string& field) {
  std::vector<std::string> out;
  map_vars(field, [&](const std::string& name) {
    out.push_back(name);
    return name;
  });
  return out;
}

std::string category(const std::vector<std::string>& fields, std::size_t index) {
  const std::string type = fields.empty() ? std::string() : fields[0];
  const bool filter = type == "F" || type == "f";
  const bool group = type == "G" || type == "g";
  if (!filter && !group) return "var";
  switch (index) {
    case 1: return "att";
    case 2: return filter ? "cmp" : "aggfunc";
    case 3: return filter ? "term" : "att";
    default: return "var";
  }
}

struct Canon {
  std::map<std::string, std::string> names;
  std::map<std::string, std::vector<std::string>> masked;
  std::vector<std::string> order;
  CanonicalQuery out;
};

Canon build_canon(const LdxQuery& q) {
  Canon c;
  std::set<std::string> seen;
  auto note = [&](const std::string& name) {
    if (name == kRootName || name == kPlus || !seen.insert(name).second) return;
    c.order.push_back(name);
  };
  for (const auto& st : q.structural()) {
    note(st.subject);
    for (const auto& item : st.items) note(item);
  }
  auto ops = q.operational();
  std::vector<std::pair<std::string, std::string>> like_only;
  for (const auto& op : ops) {
    if (seen.count(op.subject)) continue;
    std::string text;
    for (const auto& f : op.pattern.fields()) text += map_vars(f, [](const std::string&) { return "?"; }) + ",";
    like_only.emplace_back(text, op.subject);
  }
  std::stable_sort(like_only.begin(), like_only.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [text, name] : like_only) note(name);

  c.names[std::string(kRootName)] = std::string(kRootName);
  for (std::size_t i = 0; i < c.order.size(); ++i) c.names[c.order[i]] = "n" + std::to_string(i + 1);

  std::stable_sort(ops.begin(), ops.end(), [&](const OperationalStmt& a, const OperationalStmt& b) {
    auto ia = std::find(c.order.begin(), c.order.end(), a.subject) - c.order.begin();
    auto ib = std::find(c.order.begin(), c.order.end(), b.subject) - c.order.begin();
    return ia < ib;
  });
  std::map<std::string, std::string> var_names;
  std::map<std::string, int> counters;
  for (const auto& op : ops) {
    const auto& fields = op.pattern.fields();
    for (std::size_t f = 0; f < fields.size(); ++f) {
      for (const auto& v : vars_in(fields[f])) {
        if (var_names.count(v)) continue;
        const std::string cat = category(fields, f);
        var_names[v] = cat + std::to_string(++counters[cat]);
      }
    }
  }
  for (const auto& op : ops) {
    std::vector<std::string> masked;
    for (const auto& f : op.pattern.fields()) {
      masked.push_back(map_vars(f, [&](const std::string& v) { return var_names.at(v); }));
    }
    const std::string& name = c.names.at(op.subject);
    std::string line = name + " LIKE [";
    for (std::size_t i = 0; i < masked.size(); ++i) line += (i ? "," : "") + masked[i];
    line += "]";
    c.out.operational.push_back(line);
    c.out.patterns.emplace_back(name, masked);
    c.masked[op.subject] = std::move(masked);
  }
  for (const auto& st : q.structural()) {
    std::string line = c.names.at(st.subject) + " " + std::string(to_string(st.rel)) + " <";
    for (std::size_t i = 0; i < st.items.size(); ++i) {
      line += (i ? "," : "") + (st.items[i] == kPlus ? st.items[i] : c.names.at(st.items[i]));
    }
    c.out.structural.push_back(line + ">");
  }
  return c;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

double directed_opr(const std::vector<std::string>& from, const std::vector<std::string>& to) {
  double sum = 0.0;
  for (const auto& o : from) {
    double best = 1.0;
    for (const auto& p : to) best = std::min(best, normalized_lev(o, p));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

CanonicalQuery canonicalize(const LdxQuery& q) { return build_canon(q).out; }

Lev2Parts lev2_parts(const LdxQuery& a, const LdxQuery& b) {
  const CanonicalQuery ca = canonicalize(a);
  const CanonicalQuery cb = canonicalize(b);
  Lev2Parts parts;
  parts.d_struct = normalized_lev(join_lines(ca.structural), join_lines(cb.structural));
  if (ca.operational.empty() && cb.operational.empty()) {
    parts.d_opr = 0.0;
  } else if (ca.operational.empty() || cb.operational.empty()) {
    parts.d_opr = 1.0;
  } else {
    parts.d_opr = 0.5 * (directed_opr(ca.operational, cb.operational) + directed_opr(cb.operational, ca.operational));
  }
  const double s = 1.0 - parts.d_struct;
  const double o = 1.0 - parts.d_opr;
  parts.lev2 = (s <= 0.0 || o <= 0.0) ? 1.0 : 1.0 - 2.0 * s * o / (s + o);
  parts.lev2 = std::clamp(parts.lev2, 0.0, 1.0);
  return parts;
}

double lev2(const LdxQuery& a, const LdxQuery& b) { return lev2_parts(a, b).lev2; }

MinimalTree minimal_tree(const LdxQuery& q) {
  const Canon canon = build_canon(q);
  MinimalTree t;
  std::map<std::string, int> index;
  auto node_of = [&](const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    MinimalNode n;
    n.name = canon.names.count(name) ? canon.names.at(name) : name;
    if (auto m = canon.masked.find(name); m != canon.masked.end()) n.fields = m->second;
    t.nodes.push_back(std::move(n));
    const int id = static_cast<int>(t.nodes.size() - 1);
    index.emplace(name, id);
    return id;
  };
  node_of(std::string(kRootName));
  auto attach = [&](int child, int parent, ChildrenType type) {
    t.nodes[static_cast<std::size_t>(child)].parent = parent;
    t.nodes[static_cast<std::size_t>(child)].type = type;
    t.nodes[static_cast<std::size_t>(parent)].children.push_back(child);
  };
  for (const auto& st : q.structural()) {
    const int subject = node_of(st.subject);
    const ChildrenType type = st.rel == Relation::Children ? ChildrenType::Child : ChildrenType::Descendant;
    for (const auto& item : st.items) {
      if (item == kPlus) {
        MinimalNode blank;
        blank.name = std::string(kPlus);
        blank.blank = true;
        t.nodes.push_back(std::move(blank));
        attach(static_cast<int>(t.nodes.size() - 1), subject, type);
        continue;
      }
      const int child = node_of(item);
      if (t.nodes[static_cast<std::size_t>(child)].parent < 0) attach(child, subject, type);
    }
  }
  for (const auto& name : canon.order) node_of(name);
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    std::size_t hops = 0;
    int p = static_cast<int>(i);
    while (p > 0 && hops <= t.nodes.size()) {
      p = t.nodes[static_cast<std::size_t>(p)].parent;
      ++hops;
    }
    if (p > 0) throw Error(ErrorKind::Parse, "structural statements form a cycle");
  }
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    if (t.nodes[i].parent < 0) attach(static_cast<int>(i), 0, ChildrenType::Descendant);
  }
  return t;
}

namespace {

double label_cost(const MinimalNode& a, const MinimalNode& b, bool a_root, bool b_root) {
  if (a_root || b_root) return a_root == b_root ? 0.0 : 1.0;
  double cost = 0.0;
  const std::size_t width = std::max(a.fields.size(), b.fields.size());
  if (width > 0) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < width; ++i) {
      if (i >= a.fields.size() || i >= b.fields.size() || a.fields[i] != b.fields[i]) ++diff;
    }
    cost = static_cast<double>(diff) / static_cast<double>(width);
  }
  if (a.type != b.type) cost += 0.5;
  return std::min(cost, 1.0);
}

struct Postorder {
  std::vector<int> nodes;
  std::vector<std::size_t> leftmost;
};

Postorder postorder(const MinimalTree& t) {
  Postorder p;
  std::function<std::size_t(int)> walk = [&](int id) -> std::size_t {
    std::size_t left = std::string::npos;
    for (int c : t.nodes[static_cast<std::size_t>(id)].children) {
      std::size_t l = walk(c);
      if (left == std::string::npos) left = l;
    }
    p.nodes.push_back(id);
    if (left == std::string::npos) left = p.nodes.size() - 1;
    p.leftmost.push_back(left);
    return left;
  };
  walk(0);
  return p;
}

double zhang_shasha(const MinimalTree& a, const MinimalTree& b) {
  const Postorder pa = postorder(a);
  const Postorder pb = postorder(b);
  const std::size_t n = pa.nodes.size();
  const std::size_t m = pb.nodes.size();
  auto keyroots = [](const Postorder& p) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
      bool key = true;
      for (std::size_t j = i + 1; j < p.nodes.size(); ++j) {
        if (p.leftmost[j] == p.leftmost[i]) key = false;
      }
      if (key) out.push_back(i);
    }
    return out;
  };
  std::vector<std::vector<double>> td(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> fd(n + 1, std::vector<double>(m + 1, 0.0));
  auto rename = [&](std::size_t i, std::size_t j) {
    const int x = pa.nodes[i];
    const int y = pb.nodes[j];
    return label_cost(a.nodes[static_cast<std::size_t>(x)], b.nodes[static_cast<std::size_t>(y)], x == 0, y == 0);
  };
  for (std::size_t i : keyroots(pa)) {
    for (std::size_t j : keyroots(pb)) {
      const std::size_t li = pa.leftmost[i];
      const std::size_t lj = pb.leftmost[j];
      // fd is indexed with an offset of one relative to li / lj.
      fd[0][0] = 0.0;
      for (std::size_t x = li; x <= i; ++x) fd[x - li + 1][0] = fd[x - li][0] + 1.0;
      for (std::size_t y = lj; y <= j; ++y) fd[0][y - lj + 1] = fd[0][y - lj] + 1.0;
      for (std::size_t x = li; x <= i; ++x) {
        for (std::size_t y = lj; y <= j; ++y) {
          const std::size_t fx = x - li + 1;
          const std::size_t fy = y - lj + 1;
          const double del = fd[fx - 1][fy] + 1.0;
          const double ins = fd[fx][fy - 1] + 1.0;
          if (pa.leftmost[x] == li && pb.leftmost[y] == lj) {
            fd[fx][fy] = std::min({del, ins, fd[fx - 1][fy - 1] + rename(x, y)});
            td[x][y] = fd[fx][fy];
          } else {
            const std::size_t px = pa.leftmost[x] - li;
            const std::size_t py = pb.leftmost[y] - lj;
            fd[fx][fy] = std::min({del, ins, fd[px][py] + td[x][y]});
          }
        }
      }
    }
  }
  return td[n - 1][m - 1];
}

}  // namespace

double xted(const LdxQuery& a, const LdxQuery& b) {
  const MinimalTree ta = minimal_tree(a);
  const MinimalTree tb = minimal_tree(b);
  const double d = zhang_shasha(ta, tb);
  const std::size_t size = std::max(ta.nodes.size(), tb.nodes.size());
  if (size <= 1) return std::clamp(d, 0.0, 1.0);
  return std::clamp(d / static_cast<double>(size - 1), 0.0, 1.0);
}

}  // namespace ldx
