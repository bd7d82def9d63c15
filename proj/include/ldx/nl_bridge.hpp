#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ldx/error.hpp"
#include "ldx/ldx_lang.hpp"
#include "ldx/tabular.hpp"

namespace ldx {

inline constexpr std::size_t kProfileSampleRows = 5;
inline constexpr int kMaxRepairRetries = 2;

struct DatasetProfile {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  /// Header plus at most five rows, comma separated.
  std::string sample;

  std::string render() const;
};

DatasetProfile profile_dataset(const Table& table);

enum class Stage { NlToTemplate, TemplateToLdx, NlToLdx };

std::string_view to_string(Stage stage);

struct PromptExample {
  std::string goal;
  std::string dataset;
  std::string answer;
  std::string explanation;
};

/// Task description plus few-shot examples, ordered easy to hard.
///
/// File format: a `[task]` section followed by `[example]` blocks, each with
/// `[goal]`, `[dataset]`, `[answer]` and `[explanation]` sections. Lines
/// starting with `;` are comments.
struct PromptBundle {
  Stage stage = Stage::NlToTemplate;
  std::string task;
  std::vector<PromptExample> examples;

  std::string render(const std::string& payload, const DatasetProfile& profile) const;
};

PromptBundle parse_prompt_bundle(const std::string& text, Stage stage);
PromptBundle load_prompt_bundle(const std::filesystem::path& path, Stage stage);

/// Prompt text asking for a corrected answer after a parse failure.
std::string repair_prompt(const std::string& prompt, const std::string& answer, const std::string& error);

/// FNV-1a 64-bit hash of `prompt` in lowercase hex; names fixture files.
std::string prompt_hash(const std::string& prompt);

/// Text-in, text-out completion service.
class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual std::string complete(Stage stage, const std::string& prompt) = 0;
};

/// Replays recorded responses from `<dir>/<prompt_hash>.json`. A missing
/// fixture is a Service error; nothing is sent over the network.
class FixtureClient : public TextClient {
 public:
  explicit FixtureClient(std::filesystem::path dir);
  std::string complete(Stage stage, const std::string& prompt) override;

 private:
  std::filesystem::path dir_;
};

struct HttpConfig {
  std::string url;
  std::string model;
  std::string key_env = "LDX_API_KEY";
  int timeout_seconds = 60;
  int max_tokens = 1024;
};

/// Posts `{model, prompt, max_tokens, temperature}` to `url` and accepts a
/// `text`, `completion`, `choices[0].text` or `choices[0].message.content`
/// reply.
class HttpClient : public TextClient {
 public:
  explicit HttpClient(HttpConfig cfg);
  std::string complete(Stage stage, const std::string& prompt) override;

 private:
  HttpConfig cfg_;
};

struct Transcript {
  Stage stage = Stage::NlToTemplate;
  std::string prompt;
  std::string response;
};

struct Derivation {
  LdxQuery query;
  std::string template_code;
  std::string ldx_text;
  std::vector<Transcript> transcripts;
  int retries = 0;
};

class DeriveError : public Error {
 public:
  DeriveError(const std::string& message, std::vector<Transcript> transcripts)
      : Error(ErrorKind::Service, message), transcripts_(std::move(transcripts)) {}

  const std::vector<Transcript>& transcripts() const noexcept { return transcripts_; }

 private:
  std::vector<Transcript> transcripts_;
};

/// Body of the first fenced code block in `response`, or the whole response
/// when there is none.
std::string extract_code(const std::string& response);

/// Goal to template code to LDX, with up to two repair rounds on parse errors.
Derivation derive_specs(const std::string& goal, const DatasetProfile& profile, TextClient& client,
                        const std::filesystem::path& prompts_dir);

/// Single-prompt goal to LDX variant.
Derivation derive_specs_direct(const std::string& goal, const DatasetProfile& profile, TextClient& client,
                               const std::filesystem::path& prompts_dir);

}  // namespace ldx
