#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldx_c.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

std::string data_dir() {
  if (const char* env = std::getenv("LDX_DATA_DIR"); env && *env) return env;
  return LDX_DATA_DIR;
}

int exit_code(ldx_status status) {
  switch (status) {
    case LDX_OK: return kExitOk;
    case LDX_FALSE: return kExitNegative;
    case LDX_E_RUNTIME: return kExitRuntime;
    default: return kExitInput;
  }
}

int report_error(const std::string& what, ldx_status status) {
  std::cerr << "ldx: " << what << ": " << ldx_last_error() << "\n";
  return exit_code(status);
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ldx_free_string(s);
  return out;
}

struct ExploreArgs {
  std::string manifest;
  std::string dataset;
  std::string ldx;
  std::string goal;
  std::string config;
  std::string out;
  std::string fixtures;
  std::string prompts;
  std::string endpoint;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<int> episodes;
  std::optional<int> steps;
};

int run_explore(const ExploreArgs& a) {
  nlohmann::json manifest = nlohmann::json::object();
  std::string base;
  if (!a.manifest.empty()) {
    auto text = read_file(a.manifest);
    if (!text) {
      std::cerr << "ldx: cannot open manifest " << a.manifest << "\n";
      return kExitInput;
    }
    try {
      manifest = nlohmann::json::parse(*text);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "ldx: " << a.manifest << ": " << e.what() << "\n";
      return kExitInput;
    }
    base = std::filesystem::path(a.manifest).parent_path().string();
  }
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) manifest[key] = base.empty() || std::string(key) == "goal" ? v : std::filesystem::absolute(v).string();
  };
  set("dataset", a.dataset);
  set("ldx", a.ldx);
  set("goal", a.goal);
  set("config", a.config);
  set("out", a.out);
  set("fixtures", a.fixtures);
  set("prompts", a.prompts);
  if (!manifest.contains("prompts")) manifest["prompts"] = data_dir() + "/prompts";
  if (!a.endpoint.empty()) manifest["endpoint"] = {{"url", a.endpoint}, {"model", a.model}};
  if (a.seed) manifest["seed"] = *a.seed;
  if (a.beta) manifest["beta"] = *a.beta;
  if (a.episodes) manifest["episodes"] = *a.episodes;
  if (a.steps) manifest["steps"] = *a.steps;

  char* summary = nullptr;
  const ldx_status st = ldx_explore(manifest.dump().c_str(), base.empty() ? nullptr : base.c_str(), &summary);
  if (st != LDX_OK) return report_error("explore", st);
  const nlohmann::json doc = nlohmann::json::parse(take(summary));
  std::cout << "compliant: " << (doc["compliant"].get<bool>() ? "true" : "false") << "\n"
            << "reward: " << doc["reward"].get<double>() << "\n"
            << "output: " << manifest["out"].get<std::string>() << "\n";
  return doc["compliant"].get<bool>() ? kExitOk : kExitNegative;
}

int run_verify(const std::string& ldx_path, const std::string& session_path) {
  ldx_query* query = nullptr;
  ldx_status st = ldx_query_load(ldx_path.c_str(), &query);
  if (st != LDX_OK) return report_error("verify", st);
  ldx_session* session = nullptr;
  st = ldx_session_load_json(session_path.c_str(), &session);
  if (st != LDX_OK) {
    ldx_query_free(query);
    return report_error("verify", st);
  }
  char* report = nullptr;
  st = ldx_verify(query, session, &report);
  ldx_session_free(session);
  ldx_query_free(query);
  if (st != LDX_OK && st != LDX_FALSE) return report_error("verify", st);
  std::cout << take(report) << "\n";
  return exit_code(st);
}

int run_score(const std::string& a, const std::string& b) {
  const auto ta = read_file(a);
  const auto tb = read_file(b);
  if (!ta || !tb) {
    std::cerr << "ldx: cannot open " << (!ta ? a : b) << "\n";
    return kExitInput;
  }
  double lev2 = 1.0;
  double xted = 1.0;
  int degraded = 0;
  const ldx_status st = ldx_score(ta->c_str(), tb->c_str(), &lev2, &xted, &degraded);
  if (st != LDX_OK) return report_error("score", st);
  if (degraded) std::cerr << "ldx: warning: " << ldx_last_error() << "; scoring as maximally distant\n";
  std::cout << nlohmann::json{{"lev2", lev2}, {"xted", xted}}.dump() << "\n";
  return kExitOk;
}

int run_bench(const std::string& templates, const std::string& dataset, std::uint64_t seed, std::size_t n,
              const std::string& out) {
  std::size_t written = 0;
  const ldx_status st = ldx_bench(templates.c_str(), dataset.c_str(), seed, n, out.c_str(), &written);
  if (st != LDX_OK) return report_error("bench", st);
  std::cout << "wrote " << written << " instances to " << out << "\n";
  return kExitOk;
}

struct DeriveArgs {
  std::string goal;
  std::string goal_file;
  std::string dataset;
  std::string fixtures;
  std::string prompts;
  std::string endpoint;
  std::string model;
  std::string transcript;
  std::string out;
  bool direct = false;
};

int run_derive(const DeriveArgs& a) {
  std::string goal = a.goal;
  if (!a.goal_file.empty()) {
    auto text = read_file(a.goal_file);
    if (!text) {
      std::cerr << "ldx: cannot open " << a.goal_file << "\n";
      return kExitInput;
    }
    goal = *text;
    while (!goal.empty() && (goal.back() == '\n' || goal.back() == '\r')) goal.pop_back();
  }
  nlohmann::json opts = {{"prompts", a.prompts.empty() ? data_dir() + "/prompts" : a.prompts}, {"direct", a.direct}};
  if (!a.fixtures.empty()) opts["fixtures"] = a.fixtures;
  if (!a.endpoint.empty()) opts["endpoint"] = {{"url", a.endpoint}, {"model", a.model}};
  char* text = nullptr;
  char* transcript = nullptr;
  const ldx_status st = ldx_derive(goal.c_str(), a.dataset.c_str(), opts.dump().c_str(), &text, &transcript);
  const std::string transcript_text = take(transcript);
  if (!a.transcript.empty() && !transcript_text.empty()) {
    std::ofstream(a.transcript, std::ios::binary) << transcript_text << "\n";
  }
  if (st != LDX_OK) return report_error("derive", st);
  const std::string ldx = take(text);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) {
      std::cerr << "ldx: cannot write " << a.out << "\n";
      return kExitInput;
    }
    out << ldx;
  } else {
    std::cout << ldx;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented data exploration with LDX specifications"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ldx_version()));

  ExploreArgs ex;
  auto* explore = app.add_subcommand("explore", "Train on a dataset and write a compliant exploration notebook");
  explore->add_option("--manifest", ex.manifest, "JSON run manifest");
  explore->add_option("--dataset", ex.dataset, "CSV dataset");
  auto* ldx_opt = explore->add_option("--ldx", ex.ldx, "LDX specification file");
  auto* goal_opt = explore->add_option("--goal", ex.goal, "Analysis goal in natural language");
  ldx_opt->excludes(goal_opt);
  explore->add_option("--config", ex.config, "JSON training config");
  explore->add_option("--out", ex.out, "Output directory");
  explore->add_option("--seed", ex.seed, "Random seed");
  explore->add_option("--beta", ex.beta, "Weight of the compliance reward");
  explore->add_option("--episodes", ex.episodes, "Training episodes");
  explore->add_option("--steps", ex.steps, "Operations per session");
  explore->add_option("--fixtures", ex.fixtures, "Directory of recorded completions (offline mode)");
  explore->add_option("--prompts", ex.prompts, "Directory of prompt files");
  explore->add_option("--endpoint", ex.endpoint, "Completion endpoint URL");
  explore->add_option("--model", ex.model, "Model name sent to the endpoint");

  std::string verify_ldx;
  std::string verify_session;
  auto* verify = app.add_subcommand("verify", "Check a session notebook against an LDX specification");
  verify->add_option("ldx", verify_ldx, "LDX specification file")->required();
  verify->add_option("session", verify_session, "Notebook JSON")->required();

  std::string score_a;
  std::string score_b;
  auto* score = app.add_subcommand("score", "Distance between two LDX specifications");
  score->add_option("first", score_a, "LDX file")->required();
  score->add_option("second", score_b, "LDX file")->required();

  std::string bench_templates = data_dir() + "/bench_templates";
  std::string bench_dataset;
  std::string bench_out;
  std::uint64_t bench_seed = 0;
  std::size_t bench_n = 8;
  auto* bench = app.add_subcommand("bench", "Populate benchmark goal and LDX templates");
  bench->add_option("--templates", bench_templates, "Template directory")->capture_default_str();
  bench->add_option("--dataset", bench_dataset, "CSV dataset")->required();
  bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  bench->add_option("-n,--count", bench_n, "Number of instances")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->required();

  DeriveArgs dv;
  auto* derive = app.add_subcommand("derive", "Derive an LDX specification from a goal");
  auto* dgoal = derive->add_option("--goal", dv.goal, "Analysis goal");
  auto* dfile = derive->add_option("--goal-file", dv.goal_file, "File holding the goal");
  dgoal->excludes(dfile);
  derive->add_option("--dataset", dv.dataset, "CSV dataset")->required();
  derive->add_option("--fixtures", dv.fixtures, "Directory of recorded completions (offline mode)");
  derive->add_option("--prompts", dv.prompts, "Directory of prompt files");
  derive->add_option("--endpoint", dv.endpoint, "Completion endpoint URL");
  derive->add_option("--model", dv.model, "Model name sent to the endpoint");
  derive->add_option("--transcript", dv.transcript, "Write the prompt/response transcript here");
  derive->add_option("--out", dv.out, "Write the LDX here instead of stdout");
  derive->add_flag("--direct", dv.direct, "Single prompt from goal to LDX");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*explore) return run_explore(ex);
  if (*verify) return run_verify(verify_ldx, verify_session);
  if (*score) return run_score(score_a, score_b);
  if (*bench) return run_bench(bench_templates, bench_dataset, bench_seed, bench_n, bench_out);
  if (*derive) {
    if (dv.goal.empty() && dv.goal_file.empty()) {
      std::cerr << "ldx: derive needs --goal or --goal-file\n";
      return kExitInput;
    }
    return run_derive(dv);
  }
  return kExitInput;
}
