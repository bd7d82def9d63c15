#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "ldx/error.hpp"
#include "ldx/tabular.hpp"

using namespace ldx;

namespace {

std::shared_ptr<const Table> toy4() {
  return std::make_shared<const Table>(load_csv(std::string(LDX_TEST_DATA) + "/toy4.csv",
                                                {{"country", DType::Categorical}, {"rating", DType::Categorical}}));
}

std::set<std::uint32_t> ids(const View& v) { return {v.row_ids().begin(), v.row_ids().end()}; }

}  // namespace

TEST_CASE("load_csv reads the four-row fixture") {
  auto t = toy4();
  CHECK(t->row_count() == 4);
  CHECK(t->column_count() == 4);
  CHECK(t->column("type").dtype == DType::Categorical);
  CHECK(t->column("duration").dtype == DType::Numeric);
  CHECK(t->column("country").dtype == DType::Categorical);
  CHECK(t->name() == "toy4");
}

TEST_CASE("type inference without hints") {
  Table t = parse_csv("a,b,c\n1,x,u\n2,x,v\n3,y,w\n4,x,z\n", "t");
  CHECK(t.column("a").dtype == DType::Numeric);
  CHECK(t.column("b").dtype == DType::Categorical);
  CHECK(t.column("c").dtype == DType::Text);
}

TEST_CASE("header only gives an empty table") {
  Table t = parse_csv("a,b\n", "empty");
  CHECK(t.row_count() == 0);
  CHECK(t.column_count() == 2);
}

TEST_CASE("malformed csv is rejected") {
  CHECK_THROWS_AS(parse_csv("a,a\n1,2\n", "dup"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n", "ragged"), Error);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), Error);
  try {
    parse_csv("a,a\n1,2\n", "dup");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
  }
}

TEST_CASE("quoted fields follow RFC 4180") {
  Table t = parse_csv("name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\nx,\"multi\nline\"\n", "q");
  REQUIRE(t.row_count() == 2);
  CHECK(t.column("name").text[0] == "Smith, J");
  CHECK(t.column("note").text[0] == "said \"hi\"");
  CHECK(t.column("note").text[1] == "multi\nline");
}

TEST_CASE("filters on the fixture") {
  auto t = toy4();
  const View raw = View::raw(t);
  CHECK(apply_filter(raw, "type", Cmp::Eq, "Movie").row_ids().size() == 2);
  CHECK(apply_filter(raw, "country", Cmp::Neq, "Brazil").row_ids().size() == 4);
  CHECK(apply_filter(raw, "country", Cmp::Contains, "nd").row_ids().size() == 2);
  CHECK(apply_filter(raw, "duration", Cmp::Gt, "100").row_ids().size() == 2);
  CHECK(apply_filter(raw, "duration", Cmp::Eq, "2.0").row_ids().size() == 2);
  CHECK(apply_filter(raw, "duration", Cmp::Leq, "2").row_ids().size() == 2);
}

TEST_CASE("filter preconditions") {
  auto t = toy4();
  const View raw = View::raw(t);
  CHECK_THROWS_AS(apply_filter(raw, "nope", Cmp::Eq, "x"), Error);
  CHECK_THROWS_AS(apply_filter(raw, "type", Cmp::Gt, "x"), Error);
  const View g = apply_group(raw, "type", AggFunc::Count, "*");
  CHECK_THROWS_AS(apply_filter(g, "type", Cmp::Eq, "TV"), Error);
  CHECK_THROWS_AS(apply_group(g, "type", AggFunc::Count, "*"), Error);
  CHECK_THROWS_AS(apply_group(raw, "type", AggFunc::Sum, "country"), Error);
}

TEST_CASE("group by type counts rows") {
  auto t = toy4();
  const View g = apply_group(View::raw(t), "type", AggFunc::Count, "*");
  REQUIRE(g.groups().size() == 2);
  CHECK(g.groups()[0] == GroupRow{"Movie", 2});
  CHECK(g.groups()[1] == GroupRow{"TV", 2});
  const View s = apply_group(View::raw(t), "type", AggFunc::Avg, "duration");
  CHECK(s.groups()[0].value == doctest::Approx(132.0));
  CHECK(s.groups()[1].value == doctest::Approx(2.0));
}

TEST_CASE("group by a key column gives singleton groups") {
  Table t = parse_csv("k,v\na,1\nb,2\nc,3\n", "k");
  auto p = std::make_shared<const Table>(t);
  const View g = apply_group(View::raw(p), "k", AggFunc::Count, "*");
  CHECK(g.groups().size() == 3);
  for (const auto& row : g.groups()) CHECK(row.value == 1.0);
}

TEST_CASE("count of an empty input has no groups") {
  auto t = toy4();
  const View none = apply_filter(View::raw(t), "type", Cmp::Eq, "Short");
  CHECK(apply_group(none, "type", AggFunc::Count, "*").groups().empty());
}

TEST_CASE("published example shape: country filter then rating count") {
  auto t = toy4();
  const View india = apply_filter(View::raw(t), "country", Cmp::Eq, "India");
  const View g = apply_group(india, "rating", AggFunc::Count, "*");
  CHECK(g.kind() == ViewKind::Grouped);
  CHECK(g.groups().size() == 2);
  CHECK(g.op()->canonical() == "G,rating,count,*");
}

TEST_CASE("missing cells only satisfy neq") {
  Table t = parse_csv("a,b\nx,1\n,2\ny,\n", "m");
  auto p = std::make_shared<const Table>(t);
  const View raw = View::raw(p);
  CHECK(apply_filter(raw, "a", Cmp::Eq, "").row_ids().empty());
  CHECK(apply_filter(raw, "a", Cmp::Neq, "x").row_ids().size() == 2);
  CHECK(apply_filter(raw, "b", Cmp::Gt, "0").row_ids().size() == 2);
  const View g = apply_group(raw, "a", AggFunc::Count, "*");
  CHECK(g.groups().size() == 3);
}

TEST_CASE("histograms") {
  auto t = toy4();
  const View raw = View::raw(t);
  const Histogram h = column_histogram(raw, "type");
  CHECK(h.at("Movie") == doctest::Approx(0.5));
  CHECK(h.at("TV") == doctest::Approx(0.5));
  const View one = apply_filter(raw, "rating", Cmp::Eq, "R");
  const Histogram h1 = column_histogram(one, "country");
  CHECK(h1.size() == 1);
  CHECK(h1.begin()->second == doctest::Approx(1.0));
  const Histogram hd = column_histogram(raw, "duration");
  CHECK(hd.size() <= kMaxHistogramBins);
  const View none = apply_filter(raw, "type", Cmp::Eq, "Short");
  CHECK_THROWS_AS(column_histogram(none, "type"), Error);
  CHECK_THROWS_AS(column_histogram(raw, "nope"), Error);
}

TEST_CASE("constant column histogram is a point mass") {
  auto p = std::make_shared<const Table>(parse_csv("c,n\nz,5\nz,5\nz,5\n", "c"));
  CHECK(column_histogram(View::raw(p), "c").size() == 1);
  CHECK(column_histogram(View::raw(p), "n").size() == 1);
}

TEST_CASE("query op canonical form round-trips") {
  QueryOp f = FilterOp{"country", Cmp::Eq, "India"};
  CHECK(f.canonical() == "F,country,eq,India");
  QueryOp g = GroupOp{"rating", AggFunc::Count, "*"};
  CHECK(g.canonical() == "G,rating,count,*");
  CHECK(QueryOp::parse("[F,country,eq,India]") == f);
  CHECK(QueryOp::parse("F,title,contains,a, b") == QueryOp(FilterOp{"title", Cmp::Contains, "a, b"}));
  CHECK_THROWS_AS(QueryOp::parse("X,a,b,c"), Error);
  CHECK_THROWS_AS(QueryOp::parse("F,a,zz,c"), Error);
}

TEST_CASE("view json has kind, op and payload") {
  auto t = toy4();
  const View f = apply_filter(View::raw(t), "type", Cmp::Eq, "TV");
  const auto j = view_to_json(f);
  CHECK(j["kind"] == "filtered");
  CHECK(j["op"] == "F,type,eq,TV");
  CHECK(j["rows"].size() == 2);
  const auto g = view_to_json(apply_group(View::raw(t), "type", AggFunc::Count, "*"));
  CHECK(g["groups"].size() == 2);
  CHECK(view_to_json(View::raw(t), 1)["rows"].size() == 1);
}

TEST_CASE("property: eq and neq partition every view") {
  auto p = std::make_shared<const Table>(load_csv(std::string(LDX_DATA_DIR) + "/datasets/netflix.csv"));
  std::mt19937_64 rng(3);
  const View raw = View::raw(p);
  for (int i = 0; i < 200; ++i) {
    const Column& col = p->column(rng() % p->column_count());
    const std::string term = col.text[rng() % p->row_count()];
    const View base = i % 2 ? raw : apply_filter(raw, "type", Cmp::Eq, "Movie");
    const auto a = ids(apply_filter(base, col.name, Cmp::Eq, term));
    const auto b = ids(apply_filter(base, col.name, Cmp::Neq, term));
    std::set<std::uint32_t> both = a;
    both.insert(b.begin(), b.end());
    CHECK(both == ids(base));
    CHECK(a.size() + b.size() == base.row_ids().size());
    for (auto r : a) CHECK(ids(base).count(r) == 1);
  }
}

TEST_CASE("property: grouping ignores row order") {
  const std::string header = "k,v\n";
  std::vector<std::string> rows = {"a,1", "b,2", "a,3", "c,4", "b,5", "a,6", "c,7"};
  std::mt19937_64 rng(5);
  std::vector<GroupRow> first;
  for (int i = 0; i < 30; ++i) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::string csv = header;
    for (const auto& r : rows) csv += r + "\n";
    auto p = std::make_shared<const Table>(parse_csv(csv, "perm"));
    for (AggFunc f : {AggFunc::Count, AggFunc::Sum, AggFunc::Min, AggFunc::Max}) {
      const View g = apply_group(View::raw(p), "k", f, f == AggFunc::Count ? "*" : "v");
      if (f != AggFunc::Sum) continue;
      if (first.empty()) first = g.groups();
      CHECK(g.groups() == first);
    }
  }
}

TEST_CASE("property: histogram probabilities sum to one") {
  auto p = std::make_shared<const Table>(load_csv(std::string(LDX_DATA_DIR) + "/datasets/flights.csv"));
  const View raw = View::raw(p);
  for (const auto& col : p->columns()) {
    for (const View& v : {raw, apply_filter(raw, "month", Cmp::Geq, "6")}) {
      double sum = 0.0;
      for (const auto& [k, prob] : column_histogram(v, col.name)) {
        CHECK(prob >= 0.0);
        sum += prob;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}
