#include "ldx/engine.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <cmath>
#include <numeric>
#include <set>

#include "ldx/error.hpp"
#include "ldx/verifier.hpp"

namespace ldx {

namespace {

constexpr std::size_t kMaxSnippetsPerStatement = 64;
constexpr std::size_t kViewCacheLimit = 50000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// Splits a normalized field on top-level `|`.
std::vector<std::string> alternatives(const std::string& field) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    char c = field[i];
    if (c == '\\' && i + 1 < field.size()) {
      cur.push_back(c);
      cur.push_back(field[++i]);
      continue;
    }
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '|' && depth == 0) {
      out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  out.push_back(std::move(cur));
  return out;
}

/// The literal text of an alternative, or nullopt when it uses regex syntax.
std::optional<std::string> literal_of(const std::string& alt) {
  std::string out;
  for (std::size_t i = 0; i < alt.size(); ++i) {
    char c = alt[i];
    if (c == '\\') {
      if (i + 1 >= alt.size() || alt[i + 1] == 'k') return std::nullopt;
      out.push_back(alt[++i]);
      continue;
    }
    if (std::string_view(".*+?()|").find(c) != std::string_view::npos) return std::nullopt;
    out.push_back(c);
  }
  return out;
}

std::optional<std::string> find_attr_ci(const Table& table, const std::string& name) {
  for (const auto& col : table.columns()) {
    if (lower(col.name) == lower(name)) return col.name;
  }
  return std::nullopt;
}

struct FieldOption {
  std::optional<std::string> literal;
  std::optional<re::Regex> allowed;
  std::string allowed_src;
};

std::vector<std::uint8_t> all_ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

}  // namespace

std::string Snippet::describe() const {
  std::string out = type == OpType::Filter ? "F" : "G";
  for (const auto& slot : slots) out += "," + (slot.fixed ? *slot.fixed : std::string("?"));
  return out;
}

ActionSpace::ActionSpace(const Table& table, const LdxQuery& query, std::size_t term_vocab, bool snippets,
                         std::vector<std::string>* warnings) {
  for (const auto& col : table.columns()) {
    attrs_.push_back(col.name);
    dtypes_.push_back(col.dtype);
    if (col.dtype == DType::Numeric) has_numeric_ = true;

    std::map<std::string, std::size_t> freq;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      if (!col.missing[r]) ++freq[col.text[r]];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < ranked.size() && i < term_vocab; ++i) vocab.push_back(ranked[i].first);
    if (col.dtype == DType::Numeric) {
      std::vector<double> values;
      for (std::size_t r = 0; r < table.row_count(); ++r) {
        if (!col.missing[r]) values.push_back(col.numbers[r]);
      }
      std::sort(values.begin(), values.end());
      if (!values.empty()) {
        for (double q : {0.25, 0.5, 0.75}) {
          auto idx = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
          std::string cut = format_number(values[idx]);
          if (std::find(vocab.begin(), vocab.end(), cut) == vocab.end()) vocab.push_back(cut);
        }
      }
    }
    term_width_ = std::max(term_width_, vocab.size());
    terms_.push_back(std::move(vocab));
  }

  if (snippets) {
    for (const auto& stmt : query.operational()) {
      const auto& fields = stmt.pattern.fields();
      auto warn = [&](const std::string& why) {
        if (warnings) warnings->push_back("snippet for " + stmt.subject + " omitted: " + why);
      };
      if (fields.size() < 2 || fields.size() > 4) {
        warn("pattern must have 2 to 4 fields");
        continue;
      }
      // Options for the type field and the three parameter slots.
      std::vector<OpType> types;
      for (const auto& alt : alternatives(fields[0])) {
        auto lit = literal_of(alt);
        auto rx = re::Regex::compile_field(alt, false);
        for (OpType t : {OpType::Filter, OpType::Group}) {
          const char* code = t == OpType::Filter ? "F" : "G";
          bool ok = lit ? lower(*lit) == lower(code) : rx.matches(code);
          if (ok && std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
        }
      }
      std::vector<std::vector<FieldOption>> slot_options(3);
      for (std::size_t slot = 0; slot < 3; ++slot) {
        const std::size_t fi = slot + 1;
        // Slots past the pattern, or under a trailing field spanning several
        // slots, stay unrestricted.
        const bool spanned = fi >= fields.size() || (fi + 1 == fields.size() && fields.size() < 4);
        if (spanned || re::is_wildcard_field(fields[fi])) {
          slot_options[slot].push_back({});
          continue;
        }
        for (const auto& alt : alternatives(fields[fi])) {
          if (auto lit = literal_of(alt)) {
            slot_options[slot].push_back({*lit, std::nullopt, {}});
          } else {
            slot_options[slot].push_back({std::nullopt, re::Regex::compile_field(alt, fi + 1 == fields.size()), alt});
          }
        }
      }

      std::set<std::string> seen;
      std::size_t made = 0;
      for (OpType type : types) {
        for (const auto& o0 : slot_options[0]) {
          for (const auto& o1 : slot_options[1]) {
            for (const auto& o2 : slot_options[2]) {
              if (made >= kMaxSnippetsPerStatement) break;
              Snippet s;
              s.source = stmt.subject + " LIKE " + stmt.pattern.text();
              s.type = type;
              const FieldOption* opts[3] = {&o0, &o1, &o2};
              bool ok = true;
              for (std::size_t k = 0; k < 3 && ok; ++k) {
                s.slots[k].allowed = opts[k]->allowed;
                if (!opts[k]->literal) continue;
                std::string v = *opts[k]->literal;
                const bool attr_slot = k == 0 || (type == OpType::Group && k == 2);
                if (attr_slot && !(type == OpType::Group && k == 2 && v == "*")) {
                  auto name = find_attr_ci(table, v);
                  if (!name) {
                    warn("attribute '" + v + "' does not exist");
                    ok = false;
                    break;
                  }
                  v = *name;
                } else if (k == 1) {
                  auto parsed = type == OpType::Filter ? (parse_cmp(lower(v)) ? std::optional<std::string>(lower(v)) : std::nullopt)
                                                       : (parse_agg_func(lower(v)) ? std::optional<std::string>(lower(v)) : std::nullopt);
                  if (!parsed) {
                    warn("'" + v + "' is not a valid " + (type == OpType::Filter ? "comparison" : "aggregation"));
                    ok = false;
                    break;
                  }
                  v = *parsed;
                }
                s.slots[k].fixed = v;
              }
              if (!ok) continue;
              std::string key = s.describe();
              for (const auto* o : opts) key += "|" + o->allowed_src;
              if (!seen.insert(key).second) continue;
              snippets_.push_back(std::move(s));
              ++made;
            }
          }
        }
      }
    }
  }

  const std::size_t a = attrs_.size();
  std::size_t off = 0;
  auto seg = [&](std::size_t size) {
    Segment s{off, size};
    off += size;
    return s;
  };
  ops_ = seg(kOpTypeCount);
  attr_ = seg(a);
  cmp_ = seg(kCmpCount);
  term_ = seg(a * term_width_);
  g_attr_ = seg(a);
  agg_ = seg(kAggFuncCount);
  agg_attr_ = seg(a + 1);
  snippet_ = seg(snippets_.size());
  total_ = off;
}

void TrainConfig::validate() const {
  if (n_steps < 1) throw Error(ErrorKind::Config, "n_steps must be >= 1");
  if (episodes < 0) throw Error(ErrorKind::Config, "episodes must be >= 0");
  if (batch < 1) throw Error(ErrorKind::Config, "batch must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning_rate must be > 0");
  if (entropy < 0.0 || entropy_final < 0.0) throw Error(ErrorKind::Config, "entropy weights must be >= 0");
  if (hidden < 1) throw Error(ErrorKind::Config, "hidden must be >= 1");
  if (term_vocab < 1) throw Error(ErrorKind::Config, "term_vocab must be >= 1");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw Error(ErrorKind::Config, "baseline_decay must be in [0,1)");
  if (average_window < 1) throw Error(ErrorKind::Config, "average_window must be >= 1");
  reward.validate();
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto number = [&]() {
      if (!value.is_number()) throw Error(ErrorKind::Config, "training setting '" + key + "' must be a number");
      return value.get<double>();
    };
    if (key == "n_steps") cfg.n_steps = static_cast<int>(number());
    else if (key == "episodes") cfg.episodes = static_cast<int>(number());
    else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) throw Error(ErrorKind::Config, "seed must be an integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "batch") cfg.batch = static_cast<int>(number());
    else if (key == "learning_rate") cfg.learning_rate = number();
    else if (key == "entropy") cfg.entropy = number();
    else if (key == "entropy_final") cfg.entropy_final = number();
    else if (key == "hidden") cfg.hidden = static_cast<int>(number());
    else if (key == "term_vocab") cfg.term_vocab = static_cast<std::size_t>(number());
    else if (key == "baseline_decay") cfg.baseline_decay = number();
    else if (key == "average_window") cfg.average_window = static_cast<int>(number());
    else if (key == "snippets") {
      if (!value.is_boolean()) throw Error(ErrorKind::Config, "training setting 'snippets' must be a boolean");
      cfg.snippets = value.get<bool>();
    } else if (key == "reward") {
      cfg.reward = reward_config_from_json(value, cfg.reward);
    } else {
      throw Error(ErrorKind::Config, "unknown training setting '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"n_steps", cfg.n_steps},
          {"episodes", cfg.episodes},
          {"seed", cfg.seed},
          {"batch", cfg.batch},
          {"learning_rate", cfg.learning_rate},
          {"entropy", cfg.entropy},
          {"entropy_final", cfg.entropy_final},
          {"hidden", cfg.hidden},
          {"term_vocab", cfg.term_vocab},
          {"snippets", cfg.snippets},
          {"baseline_decay", cfg.baseline_decay},
          {"average_window", cfg.average_window},
          {"reward", to_json(cfg.reward)}};
}

Environment::Environment(std::shared_ptr<const Table> table, LdxQuery query, TrainConfig cfg,
                         std::vector<std::string>* warnings)
    : table_(std::move(table)),
      query_(std::move(query)),
      struct_specs_(query_.structural()),
      cfg_(std::move(cfg)),
      space_(*table_, query_, cfg_.term_vocab, cfg_.snippets, warnings) {
  cfg_.validate();
  reset();
}

std::size_t Environment::observation_size() const noexcept {
  return static_cast<std::size_t>(cfg_.n_steps) + 11 + 2 * space_.attr_count();
}

void Environment::reset() {
  tree_ = std::make_unique<SessionTree>(table_);
  paths_.assign(1, std::string());
  steps_.clear();
  shape_key_.clear();
  label_key_.clear();
  interest_sum_ = 0.0;
  step_ = 0;
  counts_[0] = counts_[1] = counts_[2] = 0;
  view_entry(paths_[0], tree_->node(0).view);
}

std::string Environment::current_path() const { return paths_[static_cast<std::size_t>(tree_->current())]; }

const Environment::ViewEntry& Environment::view_entry(const std::string& path, const std::shared_ptr<const View>& view) {
  auto it = view_cache_.find(path);
  if (it != view_cache_.end()) return it->second;
  if (view_cache_.size() >= kViewCacheLimit) view_cache_.clear();
  ViewEntry entry;
  entry.view = view;
  entry.features.assign(2 * space_.attr_count(), 0.0);
  if (view && view->kind() != ViewKind::Grouped && !view->row_ids().empty()) {
    for (std::size_t a = 0; a < space_.attr_count(); ++a) {
      const Histogram h = column_histogram(*view, space_.attrs()[a]);
      double ent = 0.0;
      for (const auto& [k, p] : h) ent -= p * std::log(p);
      entry.features[2 * a] = h.size() > 1 ? ent / std::log(static_cast<double>(h.size())) : 0.0;
      entry.features[2 * a + 1] = static_cast<double>(h.size()) / static_cast<double>(view->row_ids().size());
    }
  }
  return view_cache_.emplace(path, std::move(entry)).first->second;
}

std::vector<double> Environment::observe() const {
  const double n = static_cast<double>(cfg_.n_steps);
  std::vector<double> x(observation_size(), 0.0);
  std::size_t p = 0;
  if (step_ < cfg_.n_steps) x[static_cast<std::size_t>(step_)] = 1.0;
  p += static_cast<std::size_t>(cfg_.n_steps);
  const int cur = tree_->current();
  const View& view = *tree_->node(cur).view;
  x[p++] = step_ / n;
  x[p++] = tree_->depth(cur) / n;
  x[p + static_cast<std::size_t>(view.kind())] = 1.0;
  p += 3;
  const double rows = static_cast<double>(std::max<std::size_t>(1, table_->row_count()));
  x[p++] = static_cast<double>(view.size()) / rows;
  x[p++] = cur == 0 ? 1.0 : 0.0;
  for (int c : counts_) x[p++] = c / n;
  x[p++] = static_cast<double>(tree_->node(cur).children.size()) / n;
  auto it = view_cache_.find(current_path());
  if (it != view_cache_.end()) {
    for (double f : it->second.features) x[p++] = f;
  }
  return x;
}

std::vector<std::uint8_t> Environment::op_mask() const {
  std::vector<std::uint8_t> m(kOpTypeCount, 0);
  const int cur = tree_->current();
  const bool grouped = tree_->node(cur).view->kind() == ViewKind::Grouped;
  m[static_cast<std::size_t>(OpType::Filter)] = !grouped && space_.attr_count() > 0;
  m[static_cast<std::size_t>(OpType::Group)] = !grouped && space_.attr_count() > 0;
  m[static_cast<std::size_t>(OpType::Back)] = cur != 0;
  m[static_cast<std::size_t>(OpType::Snippet)] = !grouped && !space_.snippets().empty();
  return m;
}

std::vector<std::uint8_t> Environment::attr_mask_for_filter() const { return all_ones(space_.attr_count()); }

std::vector<std::uint8_t> Environment::cmp_mask(std::size_t attr) const {
  std::vector<std::uint8_t> m(kCmpCount, 1);
  if (space_.dtypes()[attr] != DType::Numeric) {
    for (std::size_t c = 0; c < kCmpCount; ++c) {
      if (is_numeric_only(static_cast<Cmp>(c))) m[c] = 0;
    }
  }
  return m;
}

std::vector<std::uint8_t> Environment::term_mask(std::size_t attr) const {
  std::vector<std::uint8_t> m(space_.term_width(), 0);
  for (std::size_t t = 0; t < space_.terms(attr).size(); ++t) m[t] = 1;
  return m;
}

std::vector<std::uint8_t> Environment::agg_mask() const {
  std::vector<std::uint8_t> m(kAggFuncCount, space_.has_numeric() ? 1 : 0);
  m[static_cast<std::size_t>(AggFunc::Count)] = 1;
  return m;
}

std::vector<std::uint8_t> Environment::agg_attr_mask(AggFunc func) const {
  const std::size_t a = space_.attr_count();
  std::vector<std::uint8_t> m(a + 1, 0);
  if (func == AggFunc::Count) {
    m[a] = 1;
    return m;
  }
  for (std::size_t i = 0; i < a; ++i) m[i] = space_.dtypes()[i] == DType::Numeric;
  return m;
}

std::vector<std::uint8_t> Environment::snippet_mask() const { return all_ones(space_.snippets().size()); }

StepReward Environment::step(const Decision& d) {
  if (done()) throw Error(ErrorKind::Precondition, "episode already finished");
  ++step_;
  StepReward r;
  bool invalid = d.invalid;
  if (!invalid && d.type == OpType::Back) {
    if (tree_->back()) {
      r.action = "back";
      ++counts_[2];
    } else {
      invalid = true;
    }
  } else if (!invalid) {
    const QueryOp& op = *d.op;
    const std::string path = current_path() + "\n" + op.canonical();
    const View& parent = *tree_->node(tree_->current()).view;
    std::shared_ptr<const View> view;
    auto it = view_cache_.find(path);
    if (it != view_cache_.end()) {
      view = it->second.view;
    } else if (!check_op(parent, op)) {
      view = std::make_shared<const View>(apply_op(parent, op));
      view_entry(path, view);
    } else {
      view_entry(path, nullptr);
    }
    if (view) {
      const int id = tree_->apply_view(op, view);
      paths_.push_back(path);
      r.action = op.canonical();
      const int parent = tree_->node(id).parent;
      shape_key_ += std::to_string(parent) + ",";
      label_key_ += std::to_string(parent) + ":" + r.action + "\n";
      r.interestingness = interestingness(*tree_, id);
      r.diversity = diversity(*tree_, id);
      ++counts_[op.is_filter() ? 0 : 1];
    } else {
      invalid = true;
    }
  }
  if (invalid) {
    r.action = "invalid";
    r.penalty = cfg_.reward.invalid_penalty;
  }
  interest_sum_ += r.interestingness;
  r.interestingness_sum = interest_sum_;

  const RewardConfig& rc = cfg_.reward;
  if (rc.beta > 0.0 && rc.delta > 0.0 && step_ >= rc.imm_min_step && !struct_specs_.empty()) {
    const auto start = Clock::now();
    const int remaining = cfg_.n_steps - step_;
    std::string key = shape_key_;
    key += "|" + std::to_string(tree_->current()) + "|" + std::to_string(remaining);
    auto it = feasible_cache_.find(key);
    bool ok;
    if (it != feasible_cache_.end()) {
      ok = it->second;
    } else {
      ok = feasible(tree_->labeled(), struct_specs_, static_cast<std::size_t>(remaining));
      feasible_cache_.emplace(key, ok);
    }
    r.imm = ok ? 0.0 : rc.imm_penalty;
    compliance_seconds_ += seconds_since(start);
  }
  r.total = combine(r, rc);
  steps_.push_back(r);
  return r;
}

RewardBreakdown Environment::finish() {
  RewardBreakdown out;
  const RewardConfig& rc = cfg_.reward;
  if (rc.beta > 0.0) {
    const auto start = Clock::now();
    auto it = eos_cache_.find(label_key_);
    if (it == eos_cache_.end()) {
      bool compliant = false;
      double eos = eos_compliance(tree_->labeled(), query_, rc, &compliant);
      it = eos_cache_.emplace(label_key_, std::make_pair(eos, compliant)).first;
    }
    out.eos = it->second.first;
    out.compliant = it->second.second;
    compliance_seconds_ += seconds_since(start);
  }
  out.steps = steps_;
  const double share = out.eos / static_cast<double>(cfg_.n_steps);
  for (auto& r : out.steps) {
    r.eos_share = share;
    r.total = combine(r, rc);
  }
  return out;
}

Policy::Policy(std::size_t inputs, std::size_t outputs, int hidden, std::mt19937_64& rng)
    : net_(inputs, static_cast<std::size_t>(hidden), outputs, rng) {}

namespace {

/// Masked softmax over one segment.
std::vector<double> segment_probs(const std::vector<double>& logits, std::size_t offset,
                                  const std::vector<std::uint8_t>& mask) {
  std::vector<double> p(mask.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) mx = std::max(mx, logits[offset + i]);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      p[i] = std::exp(logits[offset + i] - mx);
      z += p[i];
    }
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

Decision Policy::decide(const Environment& env, const std::vector<double>& logits, std::mt19937_64* rng) const {
  Decision d;
  const ActionSpace& space = env.space();
  auto pick = [&](Segment seg, std::vector<std::uint8_t> mask) -> std::optional<std::size_t> {
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) return std::nullopt;
    const auto p = segment_probs(logits, seg.offset, mask);
    std::size_t idx = 0;
    if (rng) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      double u = unit(*rng);
      double acc = 0.0;
      idx = mask.size();
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!mask[i]) continue;
        acc += p[i];
        idx = i;
        if (u < acc) break;
      }
    } else {
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (mask[i] && (!mask[idx] || p[i] > p[idx])) idx = i;
      }
    }
    d.choices.push_back({seg.offset, std::move(mask), idx});
    return idx;
  };
  auto restrict = [](std::vector<std::uint8_t> mask, const std::optional<re::Regex>& allowed,
                     const std::function<std::string(std::size_t)>& value) {
    if (!allowed) return mask;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] && !allowed->matches(value(i))) mask[i] = 0;
    }
    return mask;
  };

  const auto type_idx = pick(space.ops(), env.op_mask());
  if (!type_idx) {
    d.invalid = true;
    return d;
  }
  d.type = static_cast<OpType>(*type_idx);
  const auto& attrs = space.attrs();
  const std::size_t a_count = attrs.size();
  auto attr_name = [&](std::size_t i) { return i < a_count ? attrs[i] : std::string("*"); };

  auto build_filter = [&](const Snippet* s) {
    std::size_t a = 0;
    if (s && s->slots[0].fixed) {
      a = static_cast<std::size_t>(std::find(attrs.begin(), attrs.end(), *s->slots[0].fixed) - attrs.begin());
    } else {
      auto m = restrict(env.attr_mask_for_filter(), s ? s->slots[0].allowed : std::nullopt, attr_name);
      auto got = pick(space.attr(), m);
      if (!got) return false;
      a = *got;
    }
    Cmp cmp = Cmp::Eq;
    if (s && s->slots[1].fixed) {
      cmp = *parse_cmp(*s->slots[1].fixed);
    } else {
      auto m = restrict(env.cmp_mask(a), s ? s->slots[1].allowed : std::nullopt,
                        [](std::size_t i) { return std::string(to_string(static_cast<Cmp>(i))); });
      auto got = pick(space.cmp(), m);
      if (!got) return false;
      cmp = static_cast<Cmp>(*got);
    }
    std::string term;
    if (s && s->slots[2].fixed) {
      term = *s->slots[2].fixed;
    } else {
      const auto& vocab = space.terms(a);
      auto m = restrict(env.term_mask(a), s ? s->slots[2].allowed : std::nullopt,
                        [&](std::size_t i) { return i < vocab.size() ? vocab[i] : std::string(); });
      auto got = pick(space.term(a), m);
      if (!got) return false;
      term = vocab[*got];
    }
    d.op = QueryOp(FilterOp{attrs[a], cmp, term});
    return true;
  };

  auto build_group = [&](const Snippet* s) {
    std::string g;
    if (s && s->slots[0].fixed) {
      g = *s->slots[0].fixed;
    } else {
      auto m = restrict(all_ones(a_count), s ? s->slots[0].allowed : std::nullopt, attr_name);
      auto got = pick(space.g_attr(), m);
      if (!got) return false;
      g = attrs[*got];
    }
    AggFunc func = AggFunc::Count;
    if (s && s->slots[1].fixed) {
      func = *parse_agg_func(*s->slots[1].fixed);
    } else {
      auto m = restrict(env.agg_mask(), s ? s->slots[1].allowed : std::nullopt,
                        [](std::size_t i) { return std::string(to_string(static_cast<AggFunc>(i))); });
      auto got = pick(space.agg(), m);
      if (!got) return false;
      func = static_cast<AggFunc>(*got);
    }
    std::string agg_attr;
    if (s && s->slots[2].fixed) {
      agg_attr = *s->slots[2].fixed;
    } else {
      auto base = env.agg_attr_mask(func);
      if (func == AggFunc::Count && s && s->slots[2].allowed) std::fill(base.begin(), base.end(), 1);
      auto m = restrict(base, s ? s->slots[2].allowed : std::nullopt, attr_name);
      auto got = pick(space.agg_attr(), m);
      if (!got) return false;
      agg_attr = attr_name(*got);
    }
    d.op = QueryOp(GroupOp{g, func, agg_attr});
    return true;
  };

  bool ok = true;
  switch (d.type) {
    case OpType::Filter:
      ok = build_filter(nullptr);
      break;
    case OpType::Group:
      ok = build_group(nullptr);
      break;
    case OpType::Back:
      break;
    case OpType::Snippet: {
      auto got = pick(space.snippet(), env.snippet_mask());
      if (!got) {
        ok = false;
        break;
      }
      const Snippet& s = space.snippets()[*got];
      ok = s.type == OpType::Filter ? build_filter(&s) : build_group(&s);
      break;
    }
  }
  d.invalid = !ok;
  return d;
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

TrainResult train(std::shared_ptr<const Table> table, const LdxQuery& query, const TrainConfig& cfg,
                  std::vector<std::string>* warnings) {
  const auto start = Clock::now();
  Environment env(std::move(table), query, cfg, warnings);
  std::mt19937_64 rng(cfg.seed);
  Policy policy(env.observation_size(), env.space().logits(), cfg.hidden, rng);
  Adam adam(policy.net().params().size(), cfg.learning_rate);

  TrainResult result;
  result.best = policy;
  const std::size_t n = static_cast<std::size_t>(cfg.n_steps);
  std::vector<double> baseline(n, 0.0);
  bool baseline_set = false;
  double adv_sq = 1.0;
  std::vector<double> grad(policy.net().params().size(), 0.0);
  double window_sum = 0.0;
  double best_avg = -std::numeric_limits<double>::infinity();

  struct Record {
    Mlp::Cache cache;
    Decision decision;
  };
  std::vector<Record> records;
  records.reserve(n);
  Mlp::Cache cache;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double progress = cfg.episodes > 1 ? static_cast<double>(ep) / (cfg.episodes - 1) : 1.0;
    const double ent_w = cfg.entropy + (cfg.entropy_final - cfg.entropy) * progress;
    adam.set_lr(cfg.learning_rate * (1.0 - 0.9 * progress));
    env.reset();
    records.clear();
    while (!env.done()) {
      Record rec;
      policy.net().forward(env.observe(), rec.cache);
      rec.decision = policy.decide(env, rec.cache.out, &rng);
      env.step(rec.decision);
      records.push_back(std::move(rec));
    }
    const RewardBreakdown rb = env.finish();
    const double total = rb.sum();
    if (!std::isfinite(total)) {
      throw Error(ErrorKind::Training, "non-finite episode reward at episode " + std::to_string(ep));
    }
    result.history.push_back(total);
    result.compliant.push_back(rb.compliant ? 1 : 0);

    std::vector<double> returns(n, 0.0);
    double acc = 0.0;
    for (std::size_t t = n; t-- > 0;) {
      acc += rb.steps[t].total;
      returns[t] = acc;
    }
    if (!baseline_set) {
      baseline = returns;
      baseline_set = true;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const double adv_raw = returns[t] - baseline[t];
      baseline[t] = cfg.baseline_decay * baseline[t] + (1.0 - cfg.baseline_decay) * returns[t];
      adv_sq = 0.999 * adv_sq + 0.001 * adv_raw * adv_raw;
      const double adv = adv_raw / (std::sqrt(adv_sq) + 1e-8);
      std::vector<double> d_out(env.space().logits(), 0.0);
      for (const auto& ch : records[t].decision.choices) {
        const auto p = segment_probs(records[t].cache.out, ch.offset, ch.mask);
        double h = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (ch.mask[i] && p[i] > 0.0) h -= p[i] * std::log(p[i]);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (!ch.mask[i]) continue;
          const double onehot = i == ch.index ? 1.0 : 0.0;
          double g = adv * (onehot - p[i]);
          if (p[i] > 0.0) g += ent_w * (-p[i] * (std::log(p[i]) + h));
          d_out[ch.offset + i] += g;
        }
      }
      policy.net().backward(records[t].cache, d_out, grad);
    }

    if ((ep + 1) % cfg.batch == 0 || ep + 1 == cfg.episodes) {
      const double scale = 1.0 / static_cast<double>(cfg.batch);
      for (double& g : grad) {
        g *= scale;
        if (!std::isfinite(g)) {
          throw Error(ErrorKind::Training, "non-finite gradient at episode " + std::to_string(ep));
        }
      }
      adam.step(policy.net().params(), grad);
      std::fill(grad.begin(), grad.end(), 0.0);
    }

    window_sum += total;
    const std::size_t w = static_cast<std::size_t>(cfg.average_window);
    if (result.history.size() > w) window_sum -= result.history[result.history.size() - 1 - w];
    if (result.history.size() >= std::min<std::size_t>(w, static_cast<std::size_t>(cfg.episodes))) {
      const double avg = window_sum / static_cast<double>(std::min(w, result.history.size()));
      if (avg > best_avg) {
        best_avg = avg;
        result.best = policy;
        result.best_episode = ep;
      }
    }
  }
  result.last = policy;
  result.compliance_seconds = env.compliance_seconds();
  result.train_seconds = seconds_since(start);
  return result;
}

Rollout generate_session(const Policy& policy, std::shared_ptr<const Table> table, const LdxQuery& query,
                         const TrainConfig& cfg) {
  Environment env(std::move(table), query, cfg);
  Mlp::Cache cache;
  while (!env.done()) {
    policy.net().forward(env.observe(), cache);
    env.step(policy.decide(env, cache.out, nullptr));
  }
  Rollout out;
  out.rewards = env.finish();
  out.tree = env.take_tree();
  out.compliant = verify(out.tree->labeled(), query);
  out.rewards.compliant = out.compliant;
  return out;
}

}  // namespace ldx
