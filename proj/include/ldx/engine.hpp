#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ldx/ldx_lang.hpp"
#include "ldx/mlp.hpp"
#include "ldx/reward.hpp"
#include "ldx/session.hpp"
#include "ldx/tabular.hpp"

namespace ldx {

enum class OpType { Filter = 0, Group = 1, Back = 2, Snippet = 3 };
inline constexpr std::size_t kOpTypeCount = 4;

/// One slot of a snippet: either a fixed value or a free choice restricted
/// to the values its pattern field accepts.
struct SnippetSlot {
  std::optional<std::string> fixed;
  std::optional<re::Regex> allowed;
};

/// A partially instantiated operation derived from one LIKE statement (one
/// per combination of top-level alternatives).
struct Snippet {
  std::string source;
  OpType type = OpType::Filter;
  /// attr/cmp/term for filters, g_attr/agg_func/agg_attr for groups.
  SnippetSlot slots[3];
  std::string describe() const;
};

struct Segment {
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ActionSpace {
 public:
  ActionSpace(const Table& table, const LdxQuery& query, std::size_t term_vocab, bool snippets,
              std::vector<std::string>* warnings = nullptr);

  std::size_t attr_count() const noexcept { return attrs_.size(); }
  const std::vector<std::string>& attrs() const noexcept { return attrs_; }
  const std::vector<DType>& dtypes() const noexcept { return dtypes_; }
  const std::vector<std::string>& terms(std::size_t attr) const { return terms_.at(attr); }
  std::size_t term_width() const noexcept { return term_width_; }
  const std::vector<Snippet>& snippets() const noexcept { return snippets_; }
  bool has_numeric() const noexcept { return has_numeric_; }

  Segment ops() const noexcept { return ops_; }
  Segment attr() const noexcept { return attr_; }
  Segment cmp() const noexcept { return cmp_; }
  /// Term row of attribute `a`.
  Segment term(std::size_t a) const noexcept { return {term_.offset + a * term_width_, term_width_}; }
  Segment g_attr() const noexcept { return g_attr_; }
  Segment agg() const noexcept { return agg_; }
  Segment agg_attr() const noexcept { return agg_attr_; }
  Segment snippet() const noexcept { return snippet_; }
  std::size_t logits() const noexcept { return total_; }

 private:
  std::vector<std::string> attrs_;
  std::vector<DType> dtypes_;
  std::vector<std::vector<std::string>> terms_;
  std::size_t term_width_ = 1;
  std::vector<Snippet> snippets_;
  bool has_numeric_ = false;
  Segment ops_, attr_, cmp_, term_, g_attr_, agg_, agg_attr_, snippet_;
  std::size_t total_ = 0;
};

struct TrainConfig {
  int n_steps = 6;
  int episodes = 3000;
  std::uint64_t seed = 0;
  int batch = 8;
  double learning_rate = 3e-3;
  double entropy = 0.05;
  double entropy_final = 0.0;
  int hidden = 64;
  std::size_t term_vocab = 20;
  bool snippets = true;
  double baseline_decay = 0.95;
  int average_window = 100;
  RewardConfig reward;

  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const TrainConfig& cfg);

/// One sampled or greedy choice within one segment.
struct Choice {
  std::size_t offset = 0;
  std::vector<std::uint8_t> mask;
  std::size_t index = 0;
};

struct Decision {
  OpType type = OpType::Back;
  std::optional<QueryOp> op;
  std::vector<Choice> choices;
  bool invalid = false;
};

/// Episodic environment around a SessionTree.
class Environment {
 public:
  Environment(std::shared_ptr<const Table> table, LdxQuery query, TrainConfig cfg,
              std::vector<std::string>* warnings = nullptr);

  const ActionSpace& space() const noexcept { return space_; }
  const LdxQuery& query() const noexcept { return query_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  std::size_t observation_size() const noexcept;

  void reset();
  std::vector<double> observe() const;
  int step_index() const noexcept { return step_; }
  bool done() const noexcept { return step_ >= cfg_.n_steps; }
  const SessionTree& tree() const { return *tree_; }
  std::unique_ptr<SessionTree> take_tree() { return std::move(tree_); }

  /// Op-type mask for the current state.
  std::vector<std::uint8_t> op_mask() const;
  std::vector<std::uint8_t> attr_mask_for_filter() const;
  std::vector<std::uint8_t> cmp_mask(std::size_t attr) const;
  std::vector<std::uint8_t> term_mask(std::size_t attr) const;
  std::vector<std::uint8_t> agg_mask() const;
  std::vector<std::uint8_t> agg_attr_mask(AggFunc func) const;
  std::vector<std::uint8_t> snippet_mask() const;

  /// Applies the decision; returns the step record without the end-of-session
  /// share, which finish() fills in.
  StepReward step(const Decision& d);
  /// Computes the end-of-session reward and spreads it across all steps.
  RewardBreakdown finish();

  double compliance_seconds() const noexcept { return compliance_seconds_; }

 private:
  struct ViewEntry {
    std::shared_ptr<const View> view;
    std::vector<double> features;
  };
  const ViewEntry& view_entry(const std::string& path, const std::shared_ptr<const View>& view);
  std::string current_path() const;

  std::shared_ptr<const Table> table_;
  LdxQuery query_;
  std::vector<StructuralStmt> struct_specs_;
  TrainConfig cfg_;
  ActionSpace space_;
  std::unique_ptr<SessionTree> tree_;
  std::vector<std::string> paths_;
  std::vector<StepReward> steps_;
  double interest_sum_ = 0.0;
  int step_ = 0;
  int counts_[3] = {0, 0, 0};

  std::unordered_map<std::string, ViewEntry> view_cache_;
  std::string shape_key_;
  std::string label_key_;
  std::unordered_map<std::string, bool> feasible_cache_;
  std::unordered_map<std::string, std::pair<double, bool>> eos_cache_;
  double compliance_seconds_ = 0.0;
};

class Policy {
 public:
  Policy() = default;
  Policy(std::size_t inputs, std::size_t outputs, int hidden, std::mt19937_64& rng);

  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

  /// Samples (or, when `rng` is null, takes the argmax of) every segment the
  /// chosen operation needs.
  Decision decide(const Environment& env, const std::vector<double>& logits, std::mt19937_64* rng) const;

 private:
  Mlp net_;
};

struct TrainResult {
  Policy best;
  Policy last;
  std::vector<double> history;
  std::vector<std::uint8_t> compliant;
  double train_seconds = 0.0;
  double compliance_seconds = 0.0;
  int best_episode = -1;
};

/// REINFORCE with a per-step baseline and an entropy bonus. Deterministic
/// for a given seed.
TrainResult train(std::shared_ptr<const Table> table, const LdxQuery& query, const TrainConfig& cfg,
                  std::vector<std::string>* warnings = nullptr);

struct Rollout {
  std::unique_ptr<SessionTree> tree;
  RewardBreakdown rewards;
  bool compliant = false;
};

/// Greedy rollout of `policy` for n_steps.
Rollout generate_session(const Policy& policy, std::shared_ptr<const Table> table, const LdxQuery& query,
                         const TrainConfig& cfg);

/// Moving average over `window` trailing episodes.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

}  // namespace ldx
