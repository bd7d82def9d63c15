#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldx/ldx_lang.hpp"
#include "ldx/tabular.hpp"

namespace ldx {

/// Goal and LDX templates of one meta-goal.
///
/// Slots: `{attr:A}`, `{attr:A|numeric}`, `{attr:A|categorical}`,
/// `{agg_func:F}` or `{agg_func:F|sum|avg}`, `{cmp:C}` or `{cmp:C|gt|lt}`,
/// `{term:T@A}` (a value of the column bound to attr slot A) and `{dataset}`.
/// A slot name gets one value everywhere it appears; distinct attr names get
/// distinct columns.
struct BenchTemplate {
  std::string name;
  std::string goal;
  std::string ldx;
};

/// Reads a `[goal]` / `[ldx]` sectioned template file.
BenchTemplate load_bench_template(const std::filesystem::path& path);
std::vector<BenchTemplate> load_bench_templates(const std::filesystem::path& dir);

struct BenchInstance {
  std::string template_name;
  std::string goal;
  std::string ldx_text;
  LdxQuery query;
};

/// Fills every slot from `table`. Throws a Precondition error when a slot
/// cannot be satisfied and a Parse error when the result is not valid LDX.
BenchInstance populate_benchmark_templates(const std::string& template_goal, const std::string& template_ldx,
                                           const Table& table, std::uint64_t seed);

/// Writes `instance_NNN/{goal.txt,query.ldx}` for `n` instances cycling over
/// the templates of `templates_dir`. Returns the number written.
std::size_t write_benchmark(const std::filesystem::path& templates_dir, const Table& table, std::uint64_t seed,
                            std::size_t n, const std::filesystem::path& out_dir);

}  // namespace ldx
