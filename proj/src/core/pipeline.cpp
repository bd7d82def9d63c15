#include "ldx/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "ldx/error.hpp"

namespace ldx {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

nlohmann::json load_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

LdxQuery load_ldx(const std::filesystem::path& path) {
  try {
    return parse_ldx(read_text(path));
  } catch (const ParseError& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void RunManifest::validate() const {
  const int sources = (goal ? 1 : 0) + (ldx_path ? 1 : 0) + (ldx_text ? 1 : 0);
  if (sources != 1) throw Error(ErrorKind::Config, "exactly one of goal and ldx must be given");
  if (dataset.empty()) throw Error(ErrorKind::Config, "manifest needs a dataset");
  if (out_dir.empty()) throw Error(ErrorKind::Config, "manifest needs an output directory");
  if (goal && !fixtures_dir && !endpoint) {
    throw Error(ErrorKind::Config, "a goal needs either a fixture directory or a completion endpoint");
  }
}

RunManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "manifest must be a JSON object");
  RunManifest m;
  auto path_of = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorKind::Config, "manifest key '" + key + "' must be a string");
    std::filesystem::path p = v.get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  auto text_of = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorKind::Config, "manifest key '" + key + "' must be a string");
    return v.get<std::string>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") m.dataset = path_of(v, key);
    else if (key == "goal") m.goal = text_of(v, key);
    else if (key == "ldx") m.ldx_path = path_of(v, key);
    else if (key == "ldx_text") m.ldx_text = text_of(v, key);
    else if (key == "config") m.config_path = path_of(v, key);
    else if (key == "out") m.out_dir = path_of(v, key);
    else if (key == "fixtures") m.fixtures_dir = path_of(v, key);
    else if (key == "prompts") m.prompts_dir = path_of(v, key);
    else if (key == "seed") {
      if (!v.is_number_integer()) throw Error(ErrorKind::Config, "manifest key 'seed' must be an integer");
      m.seed = v.get<std::uint64_t>();
    } else if (key == "beta") {
      if (!v.is_number()) throw Error(ErrorKind::Config, "manifest key 'beta' must be a number");
      m.beta = v.get<double>();
    } else if (key == "episodes" || key == "steps") {
      if (!v.is_number_integer()) throw Error(ErrorKind::Config, "manifest key '" + key + "' must be an integer");
      (key == "episodes" ? m.episodes : m.n_steps) = v.get<int>();
    } else if (key == "endpoint") {
      if (!v.is_object()) throw Error(ErrorKind::Config, "manifest key 'endpoint' must be an object");
      HttpConfig h;
      for (const auto& [k, e] : v.items()) {
        if (k == "url") h.url = text_of(e, "endpoint.url");
        else if (k == "model") h.model = text_of(e, "endpoint.model");
        else if (k == "key_env") h.key_env = text_of(e, "endpoint.key_env");
        else if (k == "timeout" && e.is_number_integer()) h.timeout_seconds = e.get<int>();
        else throw Error(ErrorKind::Config, "unknown endpoint setting '" + k + "'");
      }
      m.endpoint = h;
    } else {
      throw Error(ErrorKind::Config, "unknown manifest key '" + key + "'");
    }
  }
  m.validate();
  return m;
}

TrainConfig resolve_config(const RunManifest& m) {
  TrainConfig cfg;
  if (m.config_path) cfg = train_config_from_json(load_json(*m.config_path));
  if (m.seed) cfg.seed = *m.seed;
  if (m.beta) cfg.reward.beta = *m.beta;
  if (m.episodes) cfg.episodes = *m.episodes;
  if (m.n_steps) cfg.n_steps = *m.n_steps;
  cfg.validate();
  cfg.reward.validate();
  return cfg;
}

std::unique_ptr<TextClient> make_client(const RunManifest& m) {
  if (m.fixtures_dir) return std::make_unique<FixtureClient>(*m.fixtures_dir);
  if (m.endpoint) return std::make_unique<HttpClient>(*m.endpoint);
  throw Error(ErrorKind::Config, "no fixture directory or completion endpoint configured");
}

std::string rewards_csv(const RewardBreakdown& rewards) {
  std::string out = "step,action,interestingness,interestingness_sum,diversity,imm,eos_share,penalty,total\n";
  for (std::size_t i = 0; i < rewards.steps.size(); ++i) {
    const StepReward& r = rewards.steps[i];
    std::string action = r.action;
    if (action.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : action) {
        if (c == '"') quoted.push_back('"');
        quoted.push_back(c);
      }
      action = quoted + "\"";
    }
    out += std::to_string(i + 1) + "," + action + "," + format_number(r.interestingness) + "," +
           format_number(r.interestingness_sum) + "," + format_number(r.diversity) + "," + format_number(r.imm) + "," +
           format_number(r.eos_share) + "," + format_number(r.penalty) + "," + format_number(r.total) + "\n";
  }
  return out;
}

VerifyReport verify_report(const LabeledTree& tree, const LdxQuery& query) {
  VerifyReport r;
  r.witness = find_assignment(tree, query);
  r.compliant = r.witness.has_value();
  return r;
}

nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json j = {{"compliant", report.compliant}};
  if (report.witness) {
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [name, id] : report.witness->phi_v) nodes[name] = id;
    nlohmann::json vars = nlohmann::json::object();
    for (const auto& [name, value] : report.witness->phi_c) vars[name] = value;
    j["assignment"] = {{"nodes", nodes}, {"variables", vars}};
  }
  return j;
}

nlohmann::json run_explore(const RunManifest& m) {
  m.validate();
  const TrainConfig cfg = resolve_config(m);
  auto table = std::make_shared<const Table>(load_csv(m.dataset));
  std::filesystem::create_directories(m.out_dir);

  LdxQuery query;
  nlohmann::json derivation = nullptr;
  if (m.goal) {
    auto client = make_client(m);
    const Derivation d = derive_specs(*m.goal, profile_dataset(*table), *client, m.prompts_dir);
    query = d.query;
    write_text(m.out_dir / "query.ldx", serialize(query));
    derivation = {{"template_code", d.template_code}, {"retries", d.retries}};
  } else if (m.ldx_path) {
    query = load_ldx(*m.ldx_path);
  } else {
    query = parse_ldx(*m.ldx_text);
  }

  std::vector<std::string> warnings;
  const TrainResult result = train(table, query, cfg, &warnings);
  Rollout best = generate_session(result.best, table, query, cfg);
  Rollout last = generate_session(result.last, table, query, cfg);
  const bool use_last = last.rewards.sum() > best.rewards.sum();
  Rollout& chosen = use_last ? last : best;

  write_text(m.out_dir / "session.json", render_notebook_json(*chosen.tree).dump(2) + "\n");
  write_text(m.out_dir / "notebook.md", render_notebook_markdown(*chosen.tree));
  write_text(m.out_dir / "rewards.csv", rewards_csv(chosen.rewards));

  const VerifyReport report = verify_report(chosen.tree->labeled(), query);
  nlohmann::json summary = {{"dataset", table->name()},
                            {"query", serialize(query)},
                            {"compliant", report.compliant},
                            {"verification", to_json(report)},
                            {"reward", chosen.rewards.sum()},
                            {"eos_reward", chosen.rewards.eos},
                            {"episodes", cfg.episodes},
                            {"n_steps", cfg.n_steps},
                            {"seed", cfg.seed},
                            {"policy", use_last ? "last" : "best"},
                            {"best_episode", result.best_episode},
                            {"train_seconds", result.train_seconds},
                            {"compliance_seconds", result.compliance_seconds},
                            {"warnings", warnings},
                            {"config", to_json(cfg)}};
  if (!derivation.is_null()) summary["derivation"] = derivation;
  write_text(m.out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace ldx
