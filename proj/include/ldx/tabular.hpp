#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace ldx {

enum class DType { Categorical, Numeric, Text };

std::string_view to_string(DType dtype);
std::optional<DType> parse_dtype(std::string_view text);

/// One column of a Table. `text` always holds the rendering of every cell;
/// `numbers` is only populated for numeric columns. Missing cells are flagged
/// in `missing` and never match a filter other than `neq`.
struct Column {
  std::string name;
  DType dtype = DType::Text;
  std::vector<std::string> text;
  std::vector<double> numbers;
  std::vector<std::uint8_t> missing;
};

/// Immutable columnar dataset.
class Table {
 public:
  Table(std::string name, std::vector<Column> columns);

  const std::string& name() const noexcept { return name_; }
  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t column_count() const noexcept { return columns_.size(); }

  const Column& column(std::size_t index) const { return columns_.at(index); }
  const Column& column(std::string_view attr) const;
  std::optional<std::size_t> find(std::string_view attr) const;
  const std::vector<Column>& columns() const noexcept { return columns_; }

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
};

using TypeHints = std::map<std::string, DType>;

Table load_csv(const std::filesystem::path& path, const TypeHints& hints = {});
Table parse_csv(std::string_view content, std::string name,
                const TypeHints& hints = {});

/// Renders a number the way the rest of the system prints it (shortest
/// round-trip form, integers without a fractional part).
std::string format_number(double value);

enum class Cmp { Eq, Neq, Gt, Geq, Lt, Leq, Contains };
enum class AggFunc { Count, Sum, Avg, Min, Max };

inline constexpr std::size_t kCmpCount = 7;
inline constexpr std::size_t kAggFuncCount = 5;

std::string_view to_string(Cmp cmp);
std::string_view to_string(AggFunc func);
std::optional<Cmp> parse_cmp(std::string_view text);
std::optional<AggFunc> parse_agg_func(std::string_view text);
bool is_numeric_only(Cmp cmp);

struct FilterOp {
  std::string attr;
  Cmp cmp = Cmp::Eq;
  std::string term;
  bool operator==(const FilterOp&) const = default;
};

struct GroupOp {
  std::string g_attr;
  AggFunc agg_func = AggFunc::Count;
  std::string agg_attr = "*";
  bool operator==(const GroupOp&) const = default;
};

/// A parametric query operation: `[F,attr,cmp,term]` or
/// `[G,g_attr,agg_func,agg_attr]`.
struct QueryOp {
  std::variant<FilterOp, GroupOp> op;

  QueryOp() = default;
  QueryOp(FilterOp f) : op(std::move(f)) {}
  QueryOp(GroupOp g) : op(std::move(g)) {}

  bool is_filter() const noexcept { return std::holds_alternative<FilterOp>(op); }
  bool is_group() const noexcept { return std::holds_alternative<GroupOp>(op); }
  const FilterOp& filter() const { return std::get<FilterOp>(op); }
  const GroupOp& group() const { return std::get<GroupOp>(op); }

  /// `F,attr,cmp,term` / `G,g_attr,agg_func,agg_attr`.
  std::string canonical() const;
  /// Accepts the canonical form with or without surrounding brackets.
  static QueryOp parse(std::string_view text);

  bool operator==(const QueryOp&) const = default;
};

enum class ViewKind { Raw, Filtered, Grouped };

std::string_view to_string(ViewKind kind);

struct GroupRow {
  std::string key;
  double value = 0.0;
  bool operator==(const GroupRow&) const = default;
};

/// Result of applying a QueryOp. Filtered and raw views carry the surviving
/// source row ids; grouped views carry the (key, aggregate) relation plus the
/// ids of the rows that were grouped.
class View {
 public:
  static View raw(std::shared_ptr<const Table> table);

  const Table& table() const noexcept { return *table_; }
  const std::shared_ptr<const Table>& table_ptr() const noexcept { return table_; }
  ViewKind kind() const noexcept { return kind_; }
  const std::optional<QueryOp>& op() const noexcept { return op_; }
  const std::vector<std::uint32_t>& row_ids() const noexcept { return row_ids_; }
  const std::vector<GroupRow>& groups() const noexcept { return groups_; }

  /// Number of result rows: rows for raw/filtered views, groups otherwise.
  std::size_t size() const noexcept;

 private:
  friend View apply_filter(const View&, const std::string&, Cmp, const std::string&);
  friend View apply_group(const View&, const std::string&, AggFunc, const std::string&);

  std::shared_ptr<const Table> table_;
  ViewKind kind_ = ViewKind::Raw;
  std::optional<QueryOp> op_;
  std::vector<std::uint32_t> row_ids_;
  std::vector<GroupRow> groups_;
};

/// Returns the reason `op` cannot be applied to `view`, or nullopt when it can.
std::optional<std::string> check_op(const View& view, const QueryOp& op);

View apply_filter(const View& view, const std::string& attr, Cmp cmp,
                  const std::string& term);
View apply_group(const View& view, const std::string& g_attr, AggFunc agg_func,
                 const std::string& agg_attr);
View apply_op(const View& view, const QueryOp& op);

using Histogram = std::map<std::string, double>;

inline constexpr std::size_t kMaxHistogramBins = 16;

/// Value distribution of `attr` over the view's rows. Numeric attributes are
/// binned into at most 16 equal-width bins.
Histogram column_histogram(const View& view, std::string_view attr);

/// `{kind, op, rows|groups}`; `max_rows` truncates the payload.
nlohmann::json view_to_json(const View& view,
                            std::size_t max_rows = static_cast<std::size_t>(-1));

}  // namespace ldx
