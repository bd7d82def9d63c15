#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "ldx/engine.hpp"
#include "ldx/ldx_lang.hpp"
#include "ldx/nl_bridge.hpp"
#include "ldx/session.hpp"
#include "ldx/verifier.hpp"

namespace ldx {

/// Everything one explore run needs. Exactly one of `goal`, `ldx_path` and
/// `ldx_text` is set.
struct RunManifest {
  std::filesystem::path dataset;
  std::optional<std::string> goal;
  std::optional<std::filesystem::path> ldx_path;
  std::optional<std::string> ldx_text;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> fixtures_dir;
  std::filesystem::path prompts_dir;
  std::optional<HttpConfig> endpoint;
  std::optional<double> beta;
  std::optional<int> episodes;
  std::optional<int> n_steps;

  void validate() const;
};

/// Keys: dataset, goal, ldx, ldx_text, config, seed, out, fixtures, prompts,
/// endpoint {url, model, key_env, timeout}, beta, episodes, steps. Relative
/// paths resolve against `base`.
RunManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

/// Loads the training config named by the manifest and applies its overrides.
TrainConfig resolve_config(const RunManifest& m);

/// Builds the completion client the manifest asks for: fixtures when a
/// fixture directory is set, otherwise the HTTP endpoint.
std::unique_ptr<TextClient> make_client(const RunManifest& m);

/// Trains, rolls out the better of the best and final policies, and writes
/// session.json, notebook.md, rewards.csv and summary.json into out_dir.
/// Returns the summary.
nlohmann::json run_explore(const RunManifest& m);

std::string rewards_csv(const RewardBreakdown& rewards);

struct VerifyReport {
  bool compliant = false;
  std::optional<Assignment> witness;
};

VerifyReport verify_report(const LabeledTree& tree, const LdxQuery& query);
nlohmann::json to_json(const VerifyReport& report);

LdxQuery load_ldx(const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ldx
