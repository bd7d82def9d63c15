#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldx/ldx_lang.hpp"
#include "ldx/session.hpp"
#include "ldx/verifier.hpp"

namespace ldx {

struct RewardConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 1.0;
  double lambda = 2.0;
  double gamma = 1.0;
  double delta = 1.0;
  /// Unset means 10 x the number of statements of the query.
  std::optional<double> pos_reward;
  double neg_reward = -5.0;
  double imm_penalty = -1.0;
  int imm_min_step = 3;
  /// When false the end-of-session reward is binary: pos if compliant, else neg.
  bool graded_eos = true;
  double invalid_penalty = -0.1;

  double pos_for(const LdxQuery& query) const;
  /// Throws a Config error when a weight is negative or the signs are wrong.
  void validate() const;
};

RewardConfig reward_config_from_json(const nlohmann::json& j, RewardConfig base = {});
nlohmann::json to_json(const RewardConfig& cfg);

/// KL-based score for filters and conciseness for groups, in [0,1].
double interestingness(const SessionTree& tree, int node);

/// Distance between the results of two nodes in [0,1].
double result_distance(const SessionTree& tree, int a, int b);

/// Minimum result distance between node `i` and every earlier node; 1 for the
/// first operation.
double diversity(const SessionTree& tree, int i);

/// Share of the specified parameters of `pattern` that `op_string` matches,
/// with the operation type acting as a gate. Wildcard fields are not counted.
/// Continuity variables in `bound` are fixed; when given, `bound` also
/// receives the captures of every matching field.
double opr_param_fraction(const OpPattern& pattern, const std::string& op_string,
                          re::Captures* bound = nullptr);

/// Sum over operational statements, in query order, of opr_param_fraction
/// under `phi_v`, with continuity values carried from earlier statements.
/// Statements whose subject is not in `phi_v` take their best fraction over
/// the nodes `phi_v` leaves free.
double opr_reward(const LabeledTree& tree, const LdxQuery& query, const NodeMap& phi_v);

/// `compliant`, when given, receives the verification result.
double eos_compliance(const LabeledTree& tree, const LdxQuery& query, const RewardConfig& cfg,
                      bool* compliant = nullptr);

/// Step index `i` is 1-based; `n` is the session budget.
double immediate_compliance(const LabeledTree& tree, const std::vector<StructuralStmt>& specs, int n, int i,
                            const RewardConfig& cfg);

struct StepReward {
  std::string action;
  double interestingness = 0.0;
  double interestingness_sum = 0.0;
  double diversity = 0.0;
  double imm = 0.0;
  double eos_share = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

struct RewardBreakdown {
  std::vector<StepReward> steps;
  double eos = 0.0;
  bool compliant = false;

  double sum() const;
};

/// Recombines the components of `step` with the weights of `cfg`.
double combine(const StepReward& step, const RewardConfig& cfg);

/// Replays the recorded history of `tree` and returns the per-step rewards.
/// The end-of-session reward is divided over `n` steps (the session's own
/// step count when n is 0).
RewardBreakdown total_reward(const SessionTree& tree, const LdxQuery& query, const RewardConfig& cfg, int n = 0);

}  // namespace ldx
