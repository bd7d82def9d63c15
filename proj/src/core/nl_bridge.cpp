#include "ldx/nl_bridge.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace ldx {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string file_name(Stage stage) {
  switch (stage) {
    case Stage::NlToTemplate: return "nl_to_template.txt";
    case Stage::TemplateToLdx: return "template_to_ldx.txt";
    case Stage::NlToLdx: return "nl_to_ldx_direct.txt";
  }
  return {};
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::NlToTemplate: return "nl_to_template";
    case Stage::TemplateToLdx: return "template_to_ldx";
    case Stage::NlToLdx: return "nl_to_ldx";
  }
  return "unknown";
}

std::string DatasetProfile::render() const {
  std::string out = "Name: " + name + "\nAttributes:";
  for (const auto& [attr, dtype] : attributes) out += "\n- " + attr + " (" + dtype + ")";
  out += "\nFirst rows:\n" + sample;
  return out;
}

DatasetProfile profile_dataset(const Table& table) {
  DatasetProfile p;
  p.name = table.name();
  std::string header;
  for (const auto& col : table.columns()) {
    p.attributes.emplace_back(col.name, std::string(to_string(col.dtype)));
    header += (header.empty() ? "" : ",") + col.name;
  }
  p.sample = header + "\n";
  const std::size_t rows = std::min(table.row_count(), kProfileSampleRows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::string line;
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      const Column& col = table.column(c);
      if (c) line.push_back(',');
      if (!col.missing[r]) line += col.text[r];
    }
    p.sample += line + "\n";
  }
  return p;
}

PromptBundle parse_prompt_bundle(const std::string& text, Stage stage) {
  PromptBundle bundle;
  bundle.stage = stage;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::string buffer;
  std::size_t line_no = 0;
  auto flush = [&]() {
    const std::string body = trim(buffer);
    buffer.clear();
    if (section.empty()) {
      if (!body.empty()) throw ParseError("text before the first section", 1, 1);
      return;
    }
    if (section == "task") {
      bundle.task = body;
    } else if (section == "example") {
      bundle.examples.emplace_back();
    } else {
      if (bundle.examples.empty()) throw ParseError("[" + section + "] outside an [example]", line_no, 1);
      PromptExample& ex = bundle.examples.back();
      if (section == "goal") ex.goal = body;
      else if (section == "dataset") ex.dataset = body;
      else if (section == "answer") ex.answer = body;
      else if (section == "explanation") ex.explanation = body;
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == ';') continue;
    const std::string t = trim(line);
    if (t.size() > 2 && t.front() == '[' && t.back() == ']' && t.find(' ') == std::string::npos) {
      const std::string name = t.substr(1, t.size() - 2);
      if (name == "task" || name == "example" || name == "goal" || name == "dataset" || name == "answer" ||
          name == "explanation") {
        flush();
        section = name;
        continue;
      }
    }
    buffer += line + "\n";
  }
  flush();
  if (bundle.task.empty()) throw ParseError("prompt file has no [task] section", 1, 1);
  for (std::size_t i = 0; i < bundle.examples.size(); ++i) {
    const auto& ex = bundle.examples[i];
    if (ex.goal.empty() || ex.answer.empty() || ex.explanation.empty()) {
      throw Error(ErrorKind::Parse, "prompt example " + std::to_string(i + 1) + " needs a goal, answer and explanation");
    }
  }
  return bundle;
}

PromptBundle load_prompt_bundle(const std::filesystem::path& path, Stage stage) {
  try {
    return parse_prompt_bundle(read_file(path), stage);
  } catch (const ParseError& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::string PromptBundle::render(const std::string& payload, const DatasetProfile& profile) const {
  const std::string label = stage == Stage::TemplateToLdx ? "Code" : "Goal";
  std::string out = task + "\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    out += "\nExample " + std::to_string(i + 1) + ":\n";
    out += label + ":\n" + ex.goal + "\n";
    if (!ex.dataset.empty()) out += "Dataset:\n" + ex.dataset + "\n";
    out += "Answer:\n```\n" + ex.answer + "\n```\n";
    out += "Explanation: " + ex.explanation + "\n";
  }
  out += "\nTest:\n" + label + ":\n" + trim(payload) + "\n";
  out += "Dataset:\n" + profile.render();
  out += "Answer:\n";
  return out;
}

std::string repair_prompt(const std::string& prompt, const std::string& answer, const std::string& error) {
  return prompt + "```\n" + trim(answer) + "\n```\nThe answer above is not valid LDX (" + error +
         "). Reply with the corrected LDX only.\nAnswer:\n";
}

std::string prompt_hash(const std::string& prompt) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FixtureClient::FixtureClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string FixtureClient::complete(Stage stage, const std::string& prompt) {
  const std::string hash = prompt_hash(prompt);
  const auto path = dir_ / (hash + ".json");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::Service, "no fixture " + path.string() + " for stage " + std::string(to_string(stage)));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("response") || !doc["response"].is_string()) {
    throw Error(ErrorKind::Schema, path.string() + ": fixture needs a string 'response'");
  }
  if (doc.contains("stage") && doc["stage"] != std::string(to_string(stage))) {
    throw Error(ErrorKind::Schema, path.string() + ": fixture recorded for stage " + doc["stage"].dump());
  }
  return doc["response"].get<std::string>();
}

HttpClient::HttpClient(HttpConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw Error(ErrorKind::Config, "completion endpoint url is not set");
}

std::string HttpClient::complete(Stage, const std::string& prompt) {
  const auto scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::Config, "endpoint url needs a scheme: " + cfg_.url);
  const auto path_start = cfg_.url.find('/', scheme_end + 3);
  const std::string origin = cfg_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (cfg_.url.rfind("https", 0) == 0) {
    throw Error(ErrorKind::Config, "https endpoints need a build with LDX_WITH_OPENSSL=ON");
  }
#endif
  httplib::Client client(origin);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const nlohmann::json body = {
      {"model", cfg_.model}, {"prompt", prompt}, {"max_tokens", cfg_.max_tokens}, {"temperature", 0}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorKind::Service, "request to " + cfg_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::Service, "endpoint returned HTTP " + std::to_string(res->status));
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Service, std::string("endpoint reply is not JSON: ") + e.what());
  }
  if (reply.contains("text") && reply["text"].is_string()) return reply["text"];
  if (reply.contains("completion") && reply["completion"].is_string()) return reply["completion"];
  if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
    const auto& c = reply["choices"][0];
    if (c.contains("text") && c["text"].is_string()) return c["text"];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
      return c["message"]["content"];
    }
  }
  throw Error(ErrorKind::Service, "endpoint reply carries no completion text");
}

std::string extract_code(const std::string& response) {
  const auto open = response.find("```");
  if (open == std::string::npos) return trim(response);
  auto body = response.find('\n', open);
  if (body == std::string::npos) return trim(response.substr(open + 3));
  const auto close = response.find("```", body);
  return trim(response.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1));
}

namespace {

Derivation finish_ldx(Derivation d, const std::string& prompt, TextClient& client, Stage stage) {
  std::string current_prompt = prompt;
  for (int attempt = 0;; ++attempt) {
    const std::string response = client.complete(stage, current_prompt);
    d.transcripts.push_back({stage, current_prompt, response});
    d.ldx_text = extract_code(response);
    try {
      d.query = parse_ldx(d.ldx_text);
      d.retries = attempt;
      return d;
    } catch (const ParseError& e) {
      if (attempt >= kMaxRepairRetries) {
        throw DeriveError("no valid LDX after " + std::to_string(attempt) + " repairs: " + e.what(),
                          std::move(d.transcripts));
      }
      current_prompt = repair_prompt(prompt, d.ldx_text, e.what());
    }
  }
}

}  // namespace

Derivation derive_specs(const std::string& goal, const DatasetProfile& profile, TextClient& client,
                        const std::filesystem::path& prompts_dir) {
  const PromptBundle first = load_prompt_bundle(prompts_dir / file_name(Stage::NlToTemplate), Stage::NlToTemplate);
  const PromptBundle second = load_prompt_bundle(prompts_dir / file_name(Stage::TemplateToLdx), Stage::TemplateToLdx);
  Derivation d;
  const std::string p1 = first.render(goal, profile);
  const std::string r1 = client.complete(Stage::NlToTemplate, p1);
  d.transcripts.push_back({Stage::NlToTemplate, p1, r1});
  d.template_code = extract_code(r1);
  if (d.template_code.empty()) throw DeriveError("empty template code", std::move(d.transcripts));
  const std::string p2 = second.render(d.template_code, profile);
  return finish_ldx(std::move(d), p2, client, Stage::TemplateToLdx);
}

Derivation derive_specs_direct(const std::string& goal, const DatasetProfile& profile, TextClient& client,
                               const std::filesystem::path& prompts_dir) {
  const PromptBundle bundle = load_prompt_bundle(prompts_dir / file_name(Stage::NlToLdx), Stage::NlToLdx);
  return finish_ldx(Derivation{}, bundle.render(goal, profile), client, Stage::NlToLdx);
}

}  // namespace ldx
