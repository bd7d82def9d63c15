#include <random>

#include "doctest.h"
#include "ldx/error.hpp"
#include "ldx/ldx_lang.hpp"
#include "support/gen.hpp"

using namespace ldx;

namespace {

const char* kGroupFilter =
    "ROOT CHILDREN <A,B>\n"
    "    A LIKE [G,(?<X>.*),.*]\n"
    "    B LIKE [F,(?<X>.*),.*]\n";

const char* kCountrySplit =
    "ROOT CHILDREN <B1,B2>\n"
    "B1 LIKE [F,'country',eq,(?<X>.*)]\n"
    "B2 LIKE [F,'country',neq,(?<X>.*)]\n"
    "B1 CHILDREN <C1,C2>\n"
    "B2 CHILDREN <D1,D2>\n"
    "C1 LIKE [G,(?<Y>.*),.*]\n"
    "D1 LIKE [G,\\k<Y>,.*]\n"
    "C2 LIKE [G,(?<Z>.*),.*]\n"
    "D2 LIKE [G,\\k<Z>,.*]\n";

}  // namespace

TEST_CASE("group-and-filter query parses") {
  const LdxQuery q = parse_ldx(kGroupFilter);
  CHECK(q.statements.size() == 3);
  CHECK(q.named_nodes == std::set<std::string>{"ROOT", "A", "B"});
  CHECK(q.continuity_vars == std::set<std::string>{"X"});
  const auto [s, o] = partition(q);
  CHECK(s.size() == 1);
  CHECK(o.size() == 2);
}

TEST_CASE("plus items") {
  const LdxQuery q = parse_ldx("A CHILDREN <B,+>");
  REQUIRE(q.structural().size() == 1);
  CHECK(q.structural()[0].items == std::vector<std::string>{"B", "+"});
  CHECK(q.structural()[0].plus_count() == 1);
}

TEST_CASE("alternation literal pattern") {
  const LdxQuery q = parse_ldx("A LIKE [G,'country',SUM|AVG,*]");
  REQUIRE(q.operational().size() == 1);
  const auto& p = q.operational()[0].pattern;
  CHECK(p.captures().empty());
  CHECK(p.fields()[2] == "SUM|AVG");
  CHECK(p.regex().matches("G,country,avg,rating"));
}

TEST_CASE("country split query") {
  const LdxQuery q = parse_ldx(kCountrySplit);
  const auto [s, o] = partition(q);
  CHECK(s.size() == 3);
  CHECK(o.size() == 6);
  CHECK(q.continuity_vars == std::set<std::string>{"X", "Y", "Z"});
  CHECK(q.named_nodes.size() == 7);
}

TEST_CASE("only structure") {
  const LdxQuery q = parse_ldx("ROOT DESCENDANTS <A>");
  CHECK(q.operational().empty());
  CHECK(q.structural()[0].rel == Relation::Descendants);
}

TEST_CASE("keywords are case-insensitive and comments are skipped") {
  const LdxQuery q = parse_ldx("# comment\nroot children <A>\nA like [F,*,*,*]  # tail\n");
  CHECK(q.named_nodes.count("ROOT") == 1);
  CHECK(q.statements.size() == 2);
}

TEST_CASE("statements may share a line") {
  CHECK(parse_ldx("ROOT CHILDREN <A,B> A LIKE [G,*] B LIKE [F,*]").statements.size() == 3);
}

TEST_CASE("errors carry a position") {
  auto expect_error = [](const std::string& text, std::size_t line) {
    try {
      parse_ldx(text);
      FAIL("no error for: " << text);
    } catch (const ParseError& e) {
      CHECK_MESSAGE(e.line() == line, text);
    }
  };
  expect_error("ROOT SIBLINGS <A>", 1);
  expect_error("ROOT CHILDREN <A>\nA LIKE [F,*]\nA LIKE [G,*]", 3);
  expect_error("ROOT CHILDREN <>", 1);
  expect_error("ROOT CHILDREN <A,A>", 1);
  expect_error("A CHILDREN <ROOT>", 1);
  expect_error("ROOT LIKE [F,*]", 1);
  expect_error("A CHILDREN <A>", 1);
  expect_error("+ CHILDREN <A>", 1);
  expect_error("ROOT CHILDREN <A>\nA LIKE [G,\\k<Y>,*]", 2);
  expect_error("ROOT CHILDREN <A>\n\nA LIKE [G,(?<Y>.*]", 3);
  expect_error("ROOT CHILDREN <A", 1);
  expect_error("ROOT CHILDREN <A>\nA LIKE [F,(?<X>a)(?<X>b)]", 2);
}

TEST_CASE("quotes are resolved into escapes") {
  const LdxQuery q = parse_ldx("A LIKE [F,'a.b',eq,'x y']");
  const auto& p = q.operational()[0].pattern;
  CHECK(p.fields()[1] == "a\\.b");
  CHECK(p.regex().matches("F,a.b,eq,x y"));
  CHECK_FALSE(p.regex().matches("F,aXb,eq,x y"));
}

TEST_CASE("serialize round-trips the fixtures") {
  for (const char* text : {kGroupFilter, kCountrySplit, "A CHILDREN <B,+>\nB LIKE [F,'a b',eq,*]"}) {
    const LdxQuery q = parse_ldx(text);
    CHECK(parse_ldx(serialize(q)) == q);
  }
}

TEST_CASE("json dump lists statements and names") {
  const auto j = to_json(parse_ldx(kGroupFilter));
  CHECK(j["statements"].size() == 3);
  CHECK(j["continuity_vars"] == nlohmann::json::array({"X"}));
}

TEST_CASE("property: generated queries round-trip") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 500; ++i) {
    const std::string text = testgen::random_query_text(rng);
    const LdxQuery q = parse_ldx(text);
    const LdxQuery again = parse_ldx(serialize(q));
    CHECK_MESSAGE(again == q, text);
    CHECK(again.named_nodes == q.named_nodes);
    CHECK(again.continuity_vars == q.continuity_vars);
    // Every continuity variable is captured somewhere.
    std::set<std::string> captured;
    for (const auto& op : q.operational()) captured.insert(op.pattern.captures().begin(), op.pattern.captures().end());
    CHECK(captured == q.continuity_vars);
    const auto [s, o] = partition(q);
    CHECK(s.size() + o.size() == q.statements.size());
  }
}
