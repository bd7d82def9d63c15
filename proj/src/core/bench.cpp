#include "ldx/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ldx/error.hpp"

namespace ldx {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Values that can sit inside a quoted LDX literal and a goal sentence.
bool safe_value(const std::string& v) {
  if (v.empty() || v.size() > 40) return false;
  return v.find_first_of("'\\\n\r{}") == std::string::npos && trim(v) == v;
}

struct Slot {
  std::string kind;
  std::string name;
  std::vector<std::string> options;
  std::string attr_ref;
};

Slot parse_slot(const std::string& body) {
  Slot s;
  const auto colon = body.find(':');
  s.kind = body.substr(0, colon);
  if (colon == std::string::npos) return s;
  std::string rest = body.substr(colon + 1);
  if (const auto at = rest.find('@'); at != std::string::npos) {
    s.attr_ref = rest.substr(at + 1);
    rest = rest.substr(0, at);
  }
  std::stringstream ss(rest);
  std::string part;
  std::getline(ss, s.name, '|');
  while (std::getline(ss, part, '|')) s.options.push_back(part);
  return s;
}

class Filler {
 public:
  Filler(const Table& table, std::uint64_t seed) : table_(table), rng_(seed) {}

  std::string fill(const std::string& text) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
      if (text[i] != '{') {
        out.push_back(text[i++]);
        continue;
      }
      const auto close = text.find('}', i);
      if (close == std::string::npos) throw Error(ErrorKind::Parse, "unterminated slot in template");
      out += value(parse_slot(text.substr(i + 1, close - i - 1)));
      i = close + 1;
    }
    return out;
  }

 private:
  template <typename T>
  const T& pick(const std::vector<T>& items) {
    std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
    return items[dist(rng_)];
  }

  std::string value(const Slot& s) {
    if (s.kind == "dataset") return table_.name();
    const std::string key = s.kind + ":" + s.name;
    if (auto it = bound_.find(key); it != bound_.end()) return it->second;
    std::string v;
    if (s.kind == "attr") v = attr(s);
    else if (s.kind == "agg_func") v = choose(s, {"count", "sum", "avg", "min", "max"}, "agg_func");
    else if (s.kind == "cmp") v = choose(s, {"eq", "neq"}, "cmp");
    else if (s.kind == "term") v = term(s);
    else throw Error(ErrorKind::Parse, "unknown slot kind '" + s.kind + "'");
    bound_.emplace(key, v);
    return v;
  }

  std::string attr(const Slot& s) {
    std::vector<std::string> candidates;
    for (const auto& col : table_.columns()) {
      if (!safe_value(col.name) || col.name.find_first_of(",[]()") != std::string::npos) continue;
      if (used_attrs_.count(col.name)) continue;
      bool ok = s.options.empty();
      for (const auto& o : s.options) ok = ok || o == to_string(col.dtype);
      if (ok) candidates.push_back(col.name);
    }
    if (candidates.empty()) {
      throw Error(ErrorKind::Precondition, "table " + table_.name() + " has no free column for slot {attr:" + s.name + "}");
    }
    const std::string v = pick(candidates);
    used_attrs_.insert(v);
    return v;
  }

  std::string choose(const Slot& s, std::vector<std::string> defaults, const std::string& kind) {
    const auto& options = s.options.empty() ? defaults : s.options;
    for (const auto& o : options) {
      const bool known = kind == "cmp" ? parse_cmp(o).has_value() : parse_agg_func(o).has_value();
      if (!known) throw Error(ErrorKind::Precondition, "unknown " + kind + " '" + o + "' in template");
    }
    return pick(options);
  }

  std::string term(const Slot& s) {
    auto it = bound_.find("attr:" + s.attr_ref);
    if (it == bound_.end()) {
      throw Error(ErrorKind::Precondition, "slot {term:" + s.name + "@" + s.attr_ref + "} refers to an unbound attr");
    }
    const Column& col = table_.column(it->second);
    std::set<std::string> distinct;
    for (std::size_t r = 0; r < col.text.size(); ++r) {
      if (!col.missing[r] && safe_value(col.text[r]) && col.text[r].find(',') == std::string::npos) {
        distinct.insert(col.text[r]);
      }
    }
    if (distinct.empty()) throw Error(ErrorKind::Precondition, "column " + col.name + " has no usable term values");
    return pick(std::vector<std::string>(distinct.begin(), distinct.end()));
  }

  const Table& table_;
  std::mt19937_64 rng_;
  std::map<std::string, std::string> bound_;
  std::set<std::string> used_attrs_;
};

}  // namespace

BenchTemplate load_bench_template(const std::filesystem::path& path) {
  BenchTemplate t;
  t.name = path.stem().string();
  std::istringstream in(read_file(path));
  std::string line;
  std::string* target = nullptr;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string s = trim(line);
    if (s == "[goal]") {
      target = &t.goal;
    } else if (s == "[ldx]") {
      target = &t.ldx;
    } else if (target) {
      *target += line + "\n";
    } else if (!s.empty() && s[0] != ';') {
      throw Error(ErrorKind::Parse, path.string() + ": text before the first section");
    }
  }
  t.goal = trim(t.goal);
  t.ldx = trim(t.ldx) + "\n";
  if (t.goal.empty() || trim(t.ldx).empty()) {
    throw Error(ErrorKind::Parse, path.string() + ": template needs [goal] and [ldx] sections");
  }
  return t;
}

std::vector<BenchTemplate> load_bench_templates(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::Io, "no .tpl templates in " + dir.string());
  std::vector<BenchTemplate> out;
  for (const auto& f : files) out.push_back(load_bench_template(f));
  return out;
}

BenchInstance populate_benchmark_templates(const std::string& template_goal, const std::string& template_ldx,
                                           const Table& table, std::uint64_t seed) {
  Filler filler(table, seed);
  BenchInstance inst;
  inst.goal = filler.fill(template_goal);
  inst.ldx_text = filler.fill(template_ldx);
  inst.query = parse_ldx(inst.ldx_text);
  return inst;
}

std::size_t write_benchmark(const std::filesystem::path& templates_dir, const Table& table, std::uint64_t seed,
                            std::size_t n, const std::filesystem::path& out_dir) {
  const auto templates = load_bench_templates(templates_dir);
  std::filesystem::create_directories(out_dir);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint64_t> seeds(n);
  std::vector<std::uint32_t> words(2 * n);
  seq.generate(words.begin(), words.end());
  for (std::size_t i = 0; i < n; ++i) seeds[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
  for (std::size_t i = 0; i < n; ++i) {
    const BenchTemplate& t = templates[i % templates.size()];
    BenchInstance inst = populate_benchmark_templates(t.goal, t.ldx, table, seeds[i]);
    char name[32];
    std::snprintf(name, sizeof name, "instance_%03zu", i + 1);
    const auto dir = out_dir / name;
    std::filesystem::create_directories(dir);
    write_file(dir / "goal.txt", inst.goal + "\n");
    write_file(dir / "query.ldx", "# template: " + t.name + "\n" + serialize(inst.query));
  }
  return n;
}

}  // namespace ldx
