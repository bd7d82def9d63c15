#include "ldx/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ldx/error.hpp"

namespace ldx {

namespace {

constexpr std::string_view kMissingKey = "<null>";

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// RFC-4180 record splitter. Returns rows of raw fields.
std::vector<std::vector<std::string>> split_csv(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("unexpected quote inside unquoted CSV field", line, 1);
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field", line, 1);
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

DType infer_dtype(const Column& col, std::size_t rows) {
  bool any_value = false;
  bool all_numeric = true;
  std::set<std::string_view> distinct;
  for (std::size_t r = 0; r < rows; ++r) {
    if (col.missing[r]) continue;
    any_value = true;
    if (all_numeric && !parse_number(col.text[r])) all_numeric = false;
    distinct.insert(col.text[r]);
  }
  if (any_value && all_numeric) return DType::Numeric;
  if (static_cast<double>(distinct.size()) <= 0.5 * static_cast<double>(rows)) {
    return DType::Categorical;
  }
  return DType::Text;
}

void materialize_numbers(Column& col) {
  col.numbers.assign(col.text.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < col.text.size(); ++r) {
    if (col.missing[r]) continue;
    auto value = parse_number(col.text[r]);
    if (!value) {
      throw Error(ErrorKind::Type, "column '" + col.name + "' row " + std::to_string(r) +
                                       ": '" + col.text[r] + "' is not numeric");
    }
    col.numbers[r] = *value;
    col.text[r] = format_number(*value);
  }
}

const Column& require_column(const Table& table, std::string_view attr) {
  auto idx = table.find(attr);
  if (!idx) throw Error(ErrorKind::Schema, "unknown attribute '" + std::string(attr) + "'");
  return table.column(*idx);
}

}  // namespace

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::Categorical: return "categorical";
    case DType::Numeric: return "numeric";
    case DType::Text: return "text";
  }
  return "text";
}

std::optional<DType> parse_dtype(std::string_view text) {
  if (text == "categorical") return DType::Categorical;
  if (text == "numeric") return DType::Numeric;
  if (text == "text") return DType::Text;
  return std::nullopt;
}

Table::Table(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& col = columns_[i];
    if (!seen.insert(col.name).second) {
      throw Error(ErrorKind::Schema, "duplicate attribute name '" + col.name + "'");
    }
    if (i == 0) row_count_ = col.text.size();
    if (col.text.size() != row_count_ || col.missing.size() != row_count_ ||
        (col.dtype == DType::Numeric && col.numbers.size() != row_count_)) {
      throw Error(ErrorKind::Schema, "column '" + col.name + "' has inconsistent length");
    }
  }
}

std::optional<std::size_t> Table::find(std::string_view attr) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == attr) return i;
  }
  return std::nullopt;
}

const Column& Table::column(std::string_view attr) const { return require_column(*this, attr); }

std::string format_number(double value) {
  if (std::isnan(value)) return "null";
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

Table parse_csv(std::string_view content, std::string name, const TypeHints& hints) {
  auto records = split_csv(content);
  if (records.empty()) throw Error(ErrorKind::Schema, "CSV has no header line");
  const auto& header = records.front();
  std::vector<Column> columns(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) columns[c].name = header[c];

  const std::size_t rows = records.size() - 1;
  for (auto& col : columns) {
    col.text.reserve(rows);
    col.missing.reserve(rows);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw Error(ErrorKind::Schema, "ragged CSV row " + std::to_string(r + 1) + ": expected " +
                                         std::to_string(header.size()) + " fields, got " +
                                         std::to_string(records[r].size()));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& cell = records[r][c];
      columns[c].missing.push_back(cell.empty() ? 1 : 0);
      columns[c].text.push_back(cell);
    }
  }

  std::set<std::string_view> seen;
  for (const auto& col : columns) {
    if (!seen.insert(col.name).second) {
      throw Error(ErrorKind::Schema, "duplicate header name '" + col.name + "'");
    }
  }

  for (auto& col : columns) {
    auto hint = hints.find(col.name);
    col.dtype = hint != hints.end() ? hint->second : infer_dtype(col, rows);
    if (col.dtype == DType::Numeric) materialize_numbers(col);
  }
  return Table(std::move(name), std::move(columns));
}

Table load_csv(const std::filesystem::path& path, const TypeHints& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.stem().string(), hints);
}

std::string_view to_string(Cmp cmp) {
  switch (cmp) {
    case Cmp::Eq: return "eq";
    case Cmp::Neq: return "neq";
    case Cmp::Gt: return "gt";
    case Cmp::Geq: return "geq";
    case Cmp::Lt: return "lt";
    case Cmp::Leq: return "leq";
    case Cmp::Contains: return "contains";
  }
  return "eq";
}

std::string_view to_string(AggFunc func) {
  switch (func) {
    case AggFunc::Count: return "count";
    case AggFunc::Sum: return "sum";
    case AggFunc::Avg: return "avg";
    case AggFunc::Min: return "min";
    case AggFunc::Max: return "max";
  }
  return "count";
}

std::optional<Cmp> parse_cmp(std::string_view text) {
  for (std::size_t i = 0; i < kCmpCount; ++i) {
    auto cmp = static_cast<Cmp>(i);
    if (to_string(cmp) == text) return cmp;
  }
  return std::nullopt;
}

std::optional<AggFunc> parse_agg_func(std::string_view text) {
  for (std::size_t i = 0; i < kAggFuncCount; ++i) {
    auto func = static_cast<AggFunc>(i);
    if (to_string(func) == text) return func;
  }
  return std::nullopt;
}

bool is_numeric_only(Cmp cmp) {
  return cmp == Cmp::Gt || cmp == Cmp::Geq || cmp == Cmp::Lt || cmp == Cmp::Leq;
}

std::string QueryOp::canonical() const {
  if (is_filter()) {
    const auto& f = filter();
    return "F," + f.attr + "," + std::string(to_string(f.cmp)) + "," + f.term;
  }
  const auto& g = group();
  return "G," + g.g_attr + "," + std::string(to_string(g.agg_func)) + "," + g.agg_attr;
}

QueryOp QueryOp::parse(std::string_view text) {
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    text = text.substr(1, text.size() - 2);
  }
  // The filter term is the remainder after the third comma and may itself
  // contain commas.
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (fields.size() < 3) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) break;
    fields.emplace_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  fields.emplace_back(text.substr(start));
  if (fields.size() != 4) {
    throw Error(ErrorKind::Parse, "malformed operation '" + std::string(text) + "'");
  }
  if (fields[0] == "F") {
    auto cmp = parse_cmp(fields[2]);
    if (!cmp) throw Error(ErrorKind::Parse, "unknown comparison '" + fields[2] + "'");
    return FilterOp{fields[1], *cmp, fields[3]};
  }
  if (fields[0] == "G") {
    if (fields[3].find(',') != std::string::npos) {
      throw Error(ErrorKind::Parse, "malformed group operation '" + std::string(text) + "'");
    }
    auto func = parse_agg_func(fields[2]);
    if (!func) throw Error(ErrorKind::Parse, "unknown aggregation '" + fields[2] + "'");
    return GroupOp{fields[1], *func, fields[3]};
  }
  throw Error(ErrorKind::Parse, "unknown operation type '" + fields[0] + "'");
}

std::string_view to_string(ViewKind kind) {
  switch (kind) {
    case ViewKind::Raw: return "raw";
    case ViewKind::Filtered: return "filtered";
    case ViewKind::Grouped: return "grouped";
  }
  return "raw";
}

View View::raw(std::shared_ptr<const Table> table) {
  View v;
  v.row_ids_.resize(table->row_count());
  for (std::size_t i = 0; i < v.row_ids_.size(); ++i) v.row_ids_[i] = static_cast<std::uint32_t>(i);
  v.table_ = std::move(table);
  return v;
}

std::size_t View::size() const noexcept {
  return kind_ == ViewKind::Grouped ? groups_.size() : row_ids_.size();
}

std::optional<std::string> check_op(const View& view, const QueryOp& op) {
  if (view.kind() == ViewKind::Grouped) {
    return std::string("cannot apply an operation to a grouped view");
  }
  const Table& table = view.table();
  if (op.is_filter()) {
    const auto& f = op.filter();
    auto idx = table.find(f.attr);
    if (!idx) return "unknown attribute '" + f.attr + "'";
    if (is_numeric_only(f.cmp)) {
      if (table.column(*idx).dtype != DType::Numeric) {
        return "comparison '" + std::string(to_string(f.cmp)) + "' needs a numeric attribute";
      }
      if (!parse_number(f.term)) return "term '" + f.term + "' is not numeric";
    }
    return std::nullopt;
  }
  const auto& g = op.group();
  if (!table.find(g.g_attr)) return "unknown attribute '" + g.g_attr + "'";
  if (g.agg_attr == "*") {
    if (g.agg_func != AggFunc::Count) return std::string("only count may aggregate '*'");
    return std::nullopt;
  }
  auto agg_idx = table.find(g.agg_attr);
  if (!agg_idx) return "unknown attribute '" + g.agg_attr + "'";
  if (g.agg_func != AggFunc::Count && table.column(*agg_idx).dtype != DType::Numeric) {
    return "aggregation '" + std::string(to_string(g.agg_func)) + "' needs a numeric attribute";
  }
  return std::nullopt;
}

View apply_filter(const View& view, const std::string& attr, Cmp cmp, const std::string& term) {
  QueryOp op = FilterOp{attr, cmp, term};
  if (auto reason = check_op(view, op)) {
    throw Error(view.kind() == ViewKind::Grouped ? ErrorKind::Precondition
                : view.table().find(attr)        ? ErrorKind::Type
                                                 : ErrorKind::Schema,
                *reason);
  }
  const Column& col = view.table().column(attr);
  const bool numeric = col.dtype == DType::Numeric;
  const auto parsed = numeric ? parse_number(term) : std::nullopt;
  const bool has_number = parsed.has_value();
  const double number = parsed.value_or(0.0);

  auto keep = [&](std::uint32_t r) -> bool {
    if (col.missing[r]) return cmp == Cmp::Neq;
    switch (cmp) {
      case Cmp::Eq:
        return numeric ? (has_number && col.numbers[r] == number) : col.text[r] == term;
      case Cmp::Neq:
        return numeric ? (!has_number || col.numbers[r] != number) : col.text[r] != term;
      case Cmp::Gt: return col.numbers[r] > number;
      case Cmp::Geq: return col.numbers[r] >= number;
      case Cmp::Lt: return col.numbers[r] < number;
      case Cmp::Leq: return col.numbers[r] <= number;
      case Cmp::Contains: return col.text[r].find(term) != std::string::npos;
    }
    return false;
  };

  View out;
  out.table_ = view.table_ptr();
  out.kind_ = ViewKind::Filtered;
  out.op_ = std::move(op);
  for (auto r : view.row_ids()) {
    if (keep(r)) out.row_ids_.push_back(r);
  }
  return out;
}

View apply_group(const View& view, const std::string& g_attr, AggFunc agg_func,
                 const std::string& agg_attr) {
  QueryOp op = GroupOp{g_attr, agg_func, agg_attr};
  if (auto reason = check_op(view, op)) {
    throw Error(view.kind() == ViewKind::Grouped ? ErrorKind::Precondition
                : !view.table().find(g_attr)     ? ErrorKind::Schema
                                                 : ErrorKind::Type,
                *reason);
  }
  const Column& key_col = view.table().column(g_attr);
  const Column* value_col = agg_attr == "*" ? nullptr : &view.table().column(agg_attr);

  struct Acc {
    std::size_t rows = 0;
    std::size_t values = 0;
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
  };
  std::map<std::string, Acc> accs;
  for (auto r : view.row_ids()) {
    const std::string key = key_col.missing[r] ? std::string(kMissingKey) : key_col.text[r];
    Acc& acc = accs[key];
    ++acc.rows;
    if (agg_func != AggFunc::Count && value_col && !value_col->missing[r]) {
      double v = value_col->numbers[r];
      ++acc.values;
      acc.sum += v;
      acc.min = std::min(acc.min, v);
      acc.max = std::max(acc.max, v);
    }
  }

  View out;
  out.table_ = view.table_ptr();
  out.kind_ = ViewKind::Grouped;
  out.op_ = std::move(op);
  out.row_ids_ = view.row_ids();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [key, acc] : accs) {
    double value = 0.0;
    switch (agg_func) {
      case AggFunc::Count: value = static_cast<double>(acc.rows); break;
      case AggFunc::Sum: value = acc.sum; break;
      case AggFunc::Avg: value = acc.values ? acc.sum / static_cast<double>(acc.values) : nan; break;
      case AggFunc::Min: value = acc.values ? acc.min : nan; break;
      case AggFunc::Max: value = acc.values ? acc.max : nan; break;
    }
    out.groups_.push_back(GroupRow{key, value});
  }
  return out;
}

View apply_op(const View& view, const QueryOp& op) {
  if (op.is_filter()) {
    const auto& f = op.filter();
    return apply_filter(view, f.attr, f.cmp, f.term);
  }
  const auto& g = op.group();
  return apply_group(view, g.g_attr, g.agg_func, g.agg_attr);
}

Histogram column_histogram(const View& view, std::string_view attr) {
  const Column& col = require_column(view.table(), attr);
  const auto& rows = view.row_ids();
  if (rows.empty()) throw Error(ErrorKind::Precondition, "histogram of an empty view");

  std::unordered_map<std::string, std::size_t> counts;
  if (col.dtype == DType::Numeric) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::set<double> distinct;
    for (auto r : rows) {
      if (col.missing[r]) continue;
      lo = std::min(lo, col.numbers[r]);
      hi = std::max(hi, col.numbers[r]);
      if (distinct.size() <= kMaxHistogramBins) distinct.insert(col.numbers[r]);
    }
    const std::size_t bins = std::max<std::size_t>(1, std::min(kMaxHistogramBins, distinct.size()));
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 0.0;
    for (auto r : rows) {
      if (col.missing[r]) {
        ++counts[std::string(kMissingKey)];
        continue;
      }
      std::size_t b = 0;
      if (width > 0.0) {
        b = static_cast<std::size_t>((col.numbers[r] - lo) / width);
        b = std::min(b, bins - 1);
      }
      const double b_lo = lo + width * static_cast<double>(b);
      const double b_hi = width > 0.0 ? b_lo + width : hi;
      ++counts["[" + format_number(b_lo) + "," + format_number(b_hi) + ")"];
    }
  } else {
    for (auto r : rows) {
      ++counts[col.missing[r] ? std::string(kMissingKey) : col.text[r]];
    }
  }

  Histogram hist;
  const double total = static_cast<double>(rows.size());
  for (const auto& [key, count] : counts) hist[key] = static_cast<double>(count) / total;
  return hist;
}

nlohmann::json view_to_json(const View& view, std::size_t max_rows) {
  nlohmann::json j;
  j["kind"] = to_string(view.kind());
  j["op"] = view.op() ? nlohmann::json(view.op()->canonical()) : nlohmann::json(nullptr);
  const Table& table = view.table();
  if (view.kind() == ViewKind::Grouped) {
    auto groups = nlohmann::json::array();
    for (std::size_t i = 0; i < view.groups().size() && i < max_rows; ++i) {
      const auto& g = view.groups()[i];
      groups.push_back({g.key, std::isnan(g.value) ? nlohmann::json(nullptr) : nlohmann::json(g.value)});
    }
    j["groups"] = std::move(groups);
    j["total"] = view.groups().size();
  } else {
    auto columns = nlohmann::json::array();
    for (const auto& col : table.columns()) columns.push_back(col.name);
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < view.row_ids().size() && i < max_rows; ++i) {
      auto r = view.row_ids()[i];
      auto row = nlohmann::json::array();
      for (const auto& col : table.columns()) {
        row.push_back(col.missing[r] ? nlohmann::json(nullptr) : nlohmann::json(col.text[r]));
      }
      rows.push_back(std::move(row));
    }
    j["columns"] = std::move(columns);
    j["rows"] = std::move(rows);
    j["total"] = view.row_ids().size();
  }
  return j;
}

}  // namespace ldx
