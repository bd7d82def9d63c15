#ifndef LDX_C_H
#define LDX_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(LDX_BUILDING_LIBRARY)
#define LDX_API __attribute__((visibility("default")))
#else
#define LDX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ldx_status {
  LDX_OK = 0,
  /* Well-formed input with a negative answer (e.g. not compliant). */
  LDX_FALSE = 1,
  LDX_E_INPUT = 2,
  LDX_E_IO = 3,
  LDX_E_RUNTIME = 4,
  LDX_E_ARG = 5
} ldx_status;

typedef struct ldx_table ldx_table;
typedef struct ldx_query ldx_query;
typedef struct ldx_session ldx_session;

LDX_API const char* ldx_version(void);

/* Message of the last failing call on this thread; empty when none. */
LDX_API const char* ldx_last_error(void);

/* Releases strings returned through char** out-parameters. */
LDX_API void ldx_free_string(char* s);

LDX_API ldx_status ldx_table_load_csv(const char* path, ldx_table** out);
LDX_API size_t ldx_table_row_count(const ldx_table* table);
LDX_API void ldx_table_free(ldx_table* table);

LDX_API ldx_status ldx_query_parse(const char* text, ldx_query** out);
LDX_API ldx_status ldx_query_load(const char* path, ldx_query** out);
LDX_API ldx_status ldx_query_serialize(const ldx_query* query, char** out);
LDX_API void ldx_query_free(ldx_query* query);

/* Reads a notebook JSON document ({dataset, steps?, cells}). */
LDX_API ldx_status ldx_session_load_json(const char* path, ldx_session** out);
LDX_API size_t ldx_session_size(const ldx_session* session);
LDX_API void ldx_session_free(ldx_session* session);

/* LDX_OK when compliant, LDX_FALSE otherwise. `report_json` (optional)
   receives {compliant, assignment?}. */
LDX_API ldx_status ldx_verify(const ldx_query* query, const ldx_session* session, char** report_json);

/* Scores two LDX texts. When either fails to parse both scores are 1 and
   `degraded` is nonzero (bit 0: first text, bit 1: second text). */
LDX_API ldx_status ldx_score(const char* text_a, const char* text_b, double* lev2, double* xted, int* degraded);

/* Runs an explore manifest (JSON text). Relative paths resolve against
   `base_dir`. `summary_json` receives the written summary. */
LDX_API ldx_status ldx_explore(const char* manifest_json, const char* base_dir, char** summary_json);

LDX_API ldx_status ldx_bench(const char* templates_dir, const char* dataset_path, uint64_t seed, size_t n,
                             const char* out_dir, size_t* written);

/* Derives LDX from a goal. `options_json` keys: fixtures, prompts, endpoint,
   direct. `transcript_json` (optional) receives the exchanged prompts and
   responses, also on failure. */
LDX_API ldx_status ldx_derive(const char* goal, const char* dataset_path, const char* options_json, char** ldx_text,
                              char** transcript_json);

#ifdef __cplusplus
}
#endif

#endif
