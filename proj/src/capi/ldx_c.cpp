#include "ldx_c.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ldx/bench.hpp"
#include "ldx/error.hpp"
#include "ldx/metrics.hpp"
#include "ldx/pipeline.hpp"

struct ldx_table {
  ldx::Table table;
};

struct ldx_query {
  ldx::LdxQuery query;
};

struct ldx_session {
  ldx::LabeledTree tree;
};

namespace {

thread_local std::string g_last_error;

ldx_status fail(ldx_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

ldx_status status_of(ldx::ErrorKind kind) {
  switch (kind) {
    case ldx::ErrorKind::Io: return LDX_E_IO;
    case ldx::ErrorKind::Parse:
    case ldx::ErrorKind::Schema:
    case ldx::ErrorKind::Type:
    case ldx::ErrorKind::Precondition:
    case ldx::ErrorKind::Config: return LDX_E_INPUT;
    default: return LDX_E_RUNTIME;
  }
}

template <typename F>
ldx_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const ldx::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(LDX_E_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LDX_E_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(LDX_E_RUNTIME, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json transcripts_json(const std::vector<ldx::Transcript>& ts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : ts) {
    out.push_back({{"stage", ldx::to_string(t.stage)},
                   {"prompt_hash", ldx::prompt_hash(t.prompt)},
                   {"prompt", t.prompt},
                   {"response", t.response}});
  }
  return out;
}

}  // namespace

extern "C" {

const char* ldx_version(void) { return "0.1.0"; }

const char* ldx_last_error(void) { return g_last_error.c_str(); }

void ldx_free_string(char* s) { std::free(s); }

ldx_status ldx_table_load_csv(const char* path, ldx_table** out) {
  if (!path || !out) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    *out = new ldx_table{ldx::load_csv(path)};
    return LDX_OK;
  });
}

size_t ldx_table_row_count(const ldx_table* table) { return table ? table->table.row_count() : 0; }

void ldx_table_free(ldx_table* table) { delete table; }

ldx_status ldx_query_parse(const char* text, ldx_query** out) {
  if (!text || !out) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    *out = new ldx_query{ldx::parse_ldx(text)};
    return LDX_OK;
  });
}

ldx_status ldx_query_load(const char* path, ldx_query** out) {
  if (!path || !out) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    *out = new ldx_query{ldx::load_ldx(path)};
    return LDX_OK;
  });
}

ldx_status ldx_query_serialize(const ldx_query* query, char** out) {
  if (!query || !out) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    *out = dup_string(ldx::serialize(query->query));
    return LDX_OK;
  });
}

void ldx_query_free(ldx_query* query) { delete query; }

ldx_status ldx_session_load_json(const char* path, ldx_session** out) {
  if (!path || !out) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    *out = new ldx_session{ldx::labeled_tree_from_notebook_json(ldx::load_json(path))};
    return LDX_OK;
  });
}

size_t ldx_session_size(const ldx_session* session) { return session ? session->tree.size() : 0; }

void ldx_session_free(ldx_session* session) { delete session; }

ldx_status ldx_verify(const ldx_query* query, const ldx_session* session, char** report_json) {
  if (!query || !session) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    const ldx::VerifyReport report = ldx::verify_report(session->tree, query->query);
    if (report_json) *report_json = dup_string(ldx::to_json(report).dump(2));
    return report.compliant ? LDX_OK : LDX_FALSE;
  });
}

ldx_status ldx_score(const char* text_a, const char* text_b, double* lev2, double* xted, int* degraded) {
  if (!text_a || !text_b || !lev2 || !xted) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    int bad = 0;
    std::string messages;
    ldx::LdxQuery qa;
    ldx::LdxQuery qb;
    try {
      qa = ldx::parse_ldx(text_a);
    } catch (const ldx::Error& e) {
      bad |= 1;
      messages += std::string("first query: ") + e.what();
    }
    try {
      qb = ldx::parse_ldx(text_b);
    } catch (const ldx::Error& e) {
      bad |= 2;
      messages += std::string(messages.empty() ? "" : "; ") + "second query: " + e.what();
    }
    if (!bad) {
      try {
        *lev2 = ldx::lev2(qa, qb);
        *xted = ldx::xted(qa, qb);
      } catch (const ldx::Error& e) {
        bad = 3;
        messages = e.what();
      }
    }
    if (bad) {
      *lev2 = 1.0;
      *xted = 1.0;
      g_last_error = messages;
    }
    if (degraded) *degraded = bad;
    return LDX_OK;
  });
}

ldx_status ldx_explore(const char* manifest_json, const char* base_dir, char** summary_json) {
  if (!manifest_json) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    const auto manifest =
        ldx::manifest_from_json(nlohmann::json::parse(manifest_json), base_dir ? base_dir : std::filesystem::path());
    const nlohmann::json summary = ldx::run_explore(manifest);
    if (summary_json) *summary_json = dup_string(summary.dump(2));
    return LDX_OK;
  });
}

ldx_status ldx_bench(const char* templates_dir, const char* dataset_path, uint64_t seed, size_t n, const char* out_dir,
                     size_t* written) {
  if (!templates_dir || !dataset_path || !out_dir) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    const ldx::Table table = ldx::load_csv(dataset_path);
    const size_t count = ldx::write_benchmark(templates_dir, table, seed, n, out_dir);
    if (written) *written = count;
    return LDX_OK;
  });
}

ldx_status ldx_derive(const char* goal, const char* dataset_path, const char* options_json, char** ldx_text,
                      char** transcript_json) {
  if (!goal || !dataset_path || !ldx_text) return fail(LDX_E_ARG, "null argument");
  return guarded([&] {
    const nlohmann::json opts = options_json ? nlohmann::json::parse(options_json) : nlohmann::json::object();
    nlohmann::json manifest = {{"dataset", dataset_path}, {"goal", goal}, {"out", "."}};
    bool direct = false;
    for (const auto& [key, value] : opts.items()) {
      if (key == "direct") direct = value.get<bool>();
      else if (key == "fixtures" || key == "prompts" || key == "endpoint") manifest[key] = value;
      else throw ldx::Error(ldx::ErrorKind::Config, "unknown derive option '" + key + "'");
    }
    const ldx::RunManifest m = ldx::manifest_from_json(manifest);
    const ldx::Table table = ldx::load_csv(m.dataset);
    auto client = ldx::make_client(m);
    try {
      const ldx::DatasetProfile profile = ldx::profile_dataset(table);
      const ldx::Derivation d = direct ? ldx::derive_specs_direct(*m.goal, profile, *client, m.prompts_dir)
                                       : ldx::derive_specs(*m.goal, profile, *client, m.prompts_dir);
      *ldx_text = dup_string(ldx::serialize(d.query));
      if (transcript_json) *transcript_json = dup_string(transcripts_json(d.transcripts).dump(2));
    } catch (const ldx::DeriveError& e) {
      if (transcript_json) *transcript_json = dup_string(transcripts_json(e.transcripts()).dump(2));
      throw;
    }
    return LDX_OK;
  });
}

}  // extern "C"
