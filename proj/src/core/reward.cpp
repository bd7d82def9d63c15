#include "ldx/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ldx/error.hpp"

namespace ldx {

double RewardConfig::pos_for(const LdxQuery& query) const {
  return pos_reward ? *pos_reward : 10.0 * static_cast<double>(query.statements.size());
}

void RewardConfig::validate() const {
  for (double w : {alpha, beta, mu, lambda, gamma, delta}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Config, "reward weights must be finite and >= 0");
  }
  if (pos_reward && !(*pos_reward > 0.0)) throw Error(ErrorKind::Config, "pos_reward must be > 0");
  if (!(neg_reward < 0.0)) throw Error(ErrorKind::Config, "neg_reward must be < 0");
  if (!(imm_penalty < 0.0)) throw Error(ErrorKind::Config, "imm_penalty must be < 0");
  if (imm_min_step < 0) throw Error(ErrorKind::Config, "imm_min_step must be >= 0");
  if (invalid_penalty > 0.0) throw Error(ErrorKind::Config, "invalid_penalty must be <= 0");
}

RewardConfig reward_config_from_json(const nlohmann::json& j, RewardConfig cfg) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "reward config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto number = [&]() {
      if (!value.is_number()) throw Error(ErrorKind::Config, "reward setting '" + key + "' must be a number");
      return value.get<double>();
    };
    if (key == "alpha") cfg.alpha = number();
    else if (key == "beta") cfg.beta = number();
    else if (key == "mu") cfg.mu = number();
    else if (key == "lambda") cfg.lambda = number();
    else if (key == "gamma") cfg.gamma = number();
    else if (key == "delta") cfg.delta = number();
    else if (key == "pos_reward") cfg.pos_reward = value.is_null() ? std::nullopt : std::optional<double>(number());
    else if (key == "neg_reward") cfg.neg_reward = number();
    else if (key == "imm_penalty") cfg.imm_penalty = number();
    else if (key == "imm_min_step") cfg.imm_min_step = static_cast<int>(number());
    else if (key == "invalid_penalty") cfg.invalid_penalty = number();
    else if (key == "graded_eos") {
      if (!value.is_boolean()) throw Error(ErrorKind::Config, "reward setting 'graded_eos' must be a boolean");
      cfg.graded_eos = value.get<bool>();
    } else {
      throw Error(ErrorKind::Config, "unknown reward setting '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const RewardConfig& cfg) {
  return {{"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"mu", cfg.mu},
          {"lambda", cfg.lambda},
          {"gamma", cfg.gamma},
          {"delta", cfg.delta},
          {"pos_reward", cfg.pos_reward ? nlohmann::json(*cfg.pos_reward) : nlohmann::json(nullptr)},
          {"neg_reward", cfg.neg_reward},
          {"imm_penalty", cfg.imm_penalty},
          {"imm_min_step", cfg.imm_min_step},
          {"graded_eos", cfg.graded_eos},
          {"invalid_penalty", cfg.invalid_penalty}};
}

double interestingness(const SessionTree& tree, int node) {
  const auto& n = tree.node(node);
  if (!n.op) return 0.0;
  const View& view = *n.view;
  if (view.kind() == ViewKind::Grouped) {
    const double g = static_cast<double>(view.groups().size());
    return g == 0.0 ? 0.0 : 1.0 / (1.0 + std::log2(g));
  }
  if (view.row_ids().empty()) return 0.0;
  const View& parent = *tree.node(n.parent).view;
  double total = 0.0;
  std::size_t attrs = 0;
  for (const auto& col : view.table().columns()) {
    if (col.dtype != DType::Categorical) continue;
    const Histogram child_h = column_histogram(view, col.name);
    const Histogram parent_h = column_histogram(parent, col.name);
    double kl = 0.0;
    for (const auto& [key, p] : child_h) kl += p * std::log(p / parent_h.at(key));
    total += std::max(0.0, kl);
    ++attrs;
  }
  if (attrs == 0) return 0.0;
  return 1.0 - std::exp(-total / static_cast<double>(attrs));
}

namespace {

template <typename T>
double jaccard_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::set<T> sa(a.begin(), a.end());
  std::set<T> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> group_keys(const View& v) {
  std::vector<std::string> keys;
  for (const auto& g : v.groups()) keys.push_back(g.key);
  return keys;
}

/// Splits a canonical operation string into its type, two parameters and the
/// remainder.
std::vector<std::string> op_fields(const std::string& op) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (out.size() < 3) {
    auto comma = op.find(',', start);
    if (comma == std::string::npos) break;
    out.push_back(op.substr(start, comma - start));
    start = comma + 1;
  }
  out.push_back(op.substr(start));
  return out;
}

}  // namespace

double result_distance(const SessionTree& tree, int a, int b) {
  const View& va = *tree.node(a).view;
  const View& vb = *tree.node(b).view;
  const bool ga = va.kind() == ViewKind::Grouped;
  const bool gb = vb.kind() == ViewKind::Grouped;
  if (ga != gb) return 1.0;
  if (ga) return jaccard_distance(group_keys(va), group_keys(vb));
  return jaccard_distance(va.row_ids(), vb.row_ids());
}

double diversity(const SessionTree& tree, int i) {
  double best = 1.0;
  for (int j = 1; j < i; ++j) best = std::min(best, result_distance(tree, i, j));
  return best;
}

double opr_param_fraction(const OpPattern& pattern, const std::string& op_string, re::Captures* bound) {
  const auto& fields = pattern.fields();
  const auto parts = op_fields(op_string);
  auto segment = [&](std::size_t i) -> std::string {
    if (i + 1 < fields.size()) return i < parts.size() ? parts[i] : std::string();
    std::string rest;
    for (std::size_t k = i; k < parts.size(); ++k) {
      if (k > i) rest.push_back(',');
      rest += parts[k];
    }
    return rest;
  };
  if (!pattern.field_regex(0).matches(segment(0))) return 0.0;
  re::Captures local;
  re::Captures& caps = bound ? *bound : local;
  std::size_t specified = 0;
  std::size_t matched = 0;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (re::is_wildcard_field(fields[i])) continue;
    ++specified;
    const auto found = pattern.field_regex(i).match_all(segment(i), caps);
    if (found.empty()) continue;
    ++matched;
    caps.insert(found.front().begin(), found.front().end());
  }
  if (specified == 0) return 1.0;
  return static_cast<double>(matched) / static_cast<double>(specified);
}

double opr_reward(const LabeledTree& tree, const LdxQuery& query, const NodeMap& phi_v) {
  std::set<int> used;
  for (const auto& [name, id] : phi_v) used.insert(id);
  re::Captures bound;
  auto fraction_at = [&](const OpPattern& pattern, int node, re::Captures& caps) {
    if (node == 0) return 0.0;
    const auto& label = tree.labels[static_cast<std::size_t>(node)];
    return label ? opr_param_fraction(pattern, *label, &caps) : 1.0;
  };
  double total = 0.0;
  for (const auto& op : query.operational()) {
    if (auto it = phi_v.find(op.subject); it != phi_v.end()) {
      total += fraction_at(op.pattern, it->second, bound);
      continue;
    }
    double best = 0.0;
    re::Captures best_caps = bound;
    for (int v = 1; v < static_cast<int>(tree.size()); ++v) {
      if (used.count(v)) continue;
      re::Captures caps = bound;
      const double f = fraction_at(op.pattern, v, caps);
      if (f > best) {
        best = f;
        best_caps = std::move(caps);
      }
    }
    bound = std::move(best_caps);
    total += best;
  }
  return total;
}

double eos_compliance(const LabeledTree& tree, const LdxQuery& query, const RewardConfig& cfg, bool* compliant) {
  const bool ok = verify(tree, query);
  if (compliant) *compliant = ok;
  if (ok) return cfg.pos_for(query);
  if (!cfg.graded_eos) return cfg.neg_reward;
  const auto maps = structural_assignments(tree, query.structural());
  if (maps.empty()) return cfg.neg_reward;
  double best = 0.0;
  for (const auto& phi : maps) best = std::max(best, opr_reward(tree, query, phi));
  return best;
}

double immediate_compliance(const LabeledTree& tree, const std::vector<StructuralStmt>& specs, int n, int i,
                            const RewardConfig& cfg) {
  if (i < cfg.imm_min_step || specs.empty()) return 0.0;
  const std::size_t remaining = n > i ? static_cast<std::size_t>(n - i) : 0;
  return feasible(tree, specs, remaining) ? 0.0 : cfg.imm_penalty;
}

double RewardBreakdown::sum() const {
  double s = 0.0;
  for (const auto& step : steps) s += step.total;
  return s;
}

double combine(const StepReward& step, const RewardConfig& cfg) {
  return cfg.alpha * (cfg.mu * step.interestingness_sum + cfg.lambda * step.diversity) +
         cfg.beta * (cfg.gamma * step.eos_share + cfg.delta * step.imm) + step.penalty;
}

RewardBreakdown total_reward(const SessionTree& tree, const LdxQuery& query, const RewardConfig& cfg, int n) {
  const int steps = n > 0 ? n : tree.step_count();
  const auto specs = query.structural();
  RewardBreakdown out;
  LabeledTree shape;
  double running = 0.0;
  int next_node = 1;
  int i = 0;
  for (const auto& step : tree.history()) {
    ++i;
    StepReward r;
    if (step.kind == SessionStep::Kind::Op) {
      const int id = next_node++;
      shape.add_child(shape.current, tree.canonical_string(id));
      r.action = tree.canonical_string(id);
      r.interestingness = interestingness(tree, id);
      r.diversity = diversity(tree, id);
    } else {
      shape.current = shape.parent[static_cast<std::size_t>(shape.current)];
      r.action = "back";
    }
    running += r.interestingness;
    r.interestingness_sum = running;
    if (cfg.beta > 0.0) r.imm = immediate_compliance(shape, specs, steps, i, cfg);
    out.steps.push_back(r);
  }
  const LabeledTree final_shape = tree.labeled();
  if (cfg.beta > 0.0) {
    out.eos = eos_compliance(final_shape, query, cfg, &out.compliant);
  } else {
    out.compliant = verify(final_shape, query);
  }
  while (static_cast<int>(out.steps.size()) < steps) {
    StepReward pad;
    pad.action = "none";
    pad.interestingness_sum = running;
    out.steps.push_back(pad);
  }
  for (auto& r : out.steps) {
    r.eos_share = out.eos / static_cast<double>(steps);
    r.total = combine(r, cfg);
  }
  return out;
}

}  // namespace ldx
