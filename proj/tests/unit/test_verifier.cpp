#include <random>
#include <regex>

#include "doctest.h"
#include "ldx/error.hpp"
#include "ldx/verifier.hpp"
#include "support/gen.hpp"

using namespace ldx;

namespace {

const char* kGroupFilter =
    "ROOT CHILDREN <A,B>\n"
    "A LIKE [G,(?<X>.*),.*]\n"
    "B LIKE [F,(?<X>.*),.*]\n";

LabeledTree make_tree(const std::vector<std::pair<int, std::optional<std::string>>>& nodes) {
  LabeledTree t;
  for (const auto& [parent, label] : nodes) t.add_child(parent, label);
  return t;
}

LabeledTree root_with_children(std::size_t n) {
  LabeledTree t;
  for (std::size_t i = 0; i < n; ++i) t.add_child(0, "F,type,eq,Movie");
  return t;
}

}  // namespace

TEST_CASE("group-and-filter compliant and violating trees") {
  const LdxQuery q = parse_ldx(kGroupFilter);
  const LabeledTree ok = make_tree({{0, "G,country,count,*"}, {0, "F,country,eq,India"}});
  CHECK(verify(ok, q));
  const auto all = enumerate_assignments(ok, q);
  REQUIRE(all.size() == 1);
  CHECK(all[0].phi_v.at("A") == 1);
  CHECK(all[0].phi_v.at("B") == 2);
  CHECK(all[0].phi_v.at("ROOT") == 0);
  CHECK(all[0].phi_c.at("X") == "country");
  const auto w = find_assignment(ok, q);
  REQUIRE(w.has_value());
  CHECK(*w == all[0]);

  const LabeledTree bad = make_tree({{0, "G,country,count,*"}, {0, "F,genre,eq,Kids"}});
  CHECK_FALSE(verify(bad, q));
  CHECK(enumerate_assignments(bad, q).empty());
}

TEST_CASE("node_matches") {
  const LdxQuery q = parse_ldx(kGroupFilter);
  const LabeledTree t = make_tree({{0, "F,type,eq,TV"}, {0, "G,country,count,*"}, {1, "F,genre,eq,Kids"}});
  const Stmt& a_like = q.statements[1];
  CHECK(node_matches(a_like, t, {}) == std::vector<int>{2});
  CHECK(node_matches(q.statements[0], t, {{"ROOT", 0}}) == std::vector<int>{0});
  const Stmt& b_like = q.statements[2];
  CHECK(node_matches(b_like, t, {}, {{"X", "country"}}).empty());
  CHECK(node_matches(b_like, t, {}, {{"X", "genre"}}) == std::vector<int>{3});
}

TEST_CASE("empty query is vacuously satisfied") {
  const LdxQuery q = make_query({});
  CHECK(verify(LabeledTree{}, q));
  CHECK(verify(root_with_children(3), q));
}

TEST_CASE("interchangeable nodes give two assignments") {
  const LdxQuery q = parse_ldx("ROOT CHILDREN <A,B>");
  CHECK(enumerate_assignments(root_with_children(2), q).size() == 2);
}

TEST_CASE("structural assignment counts") {
  const auto specs = parse_ldx("ROOT CHILDREN <A,B>").structural();
  CHECK(structural_assignments(root_with_children(2), specs).size() == 2);
  CHECK(structural_assignments(root_with_children(1), specs).empty());
  CHECK(structural_assignments(root_with_children(3), specs).size() == 6);
}

TEST_CASE("plus needs extra nodes") {
  const LdxQuery q = parse_ldx("ROOT CHILDREN <A,+>");
  CHECK_FALSE(verify(root_with_children(1), q));
  CHECK(verify(root_with_children(2), q));
}

TEST_CASE("descendants are strict and reach deeper levels") {
  const LdxQuery q = parse_ldx("ROOT CHILDREN <A>\nA DESCENDANTS <B>");
  const LabeledTree chain = make_tree({{0, "F,a,eq,1"}, {1, "F,b,eq,1"}, {2, "F,c,eq,1"}});
  CHECK(verify(chain, q));
  const LabeledTree single = make_tree({{0, "F,a,eq,1"}});
  CHECK_FALSE(verify(single, q));
}

TEST_CASE("root is never a LIKE match and names never map to the root") {
  const LdxQuery q = parse_ldx("A LIKE [.*]");
  CHECK_FALSE(verify(LabeledTree{}, q));
  CHECK(verify(root_with_children(1), q));
}

TEST_CASE("oracle guard") {
  LabeledTree big = root_with_children(kOracleMaxTreeNodes);
  CHECK_THROWS_AS(enumerate_assignments(big, parse_ldx("ROOT CHILDREN <A>")), Error);
  CHECK_THROWS_AS(enumerate_assignments(root_with_children(2), parse_ldx("ROOT CHILDREN <A,B,C,D,E>")), Error);
}

TEST_CASE("tree completion counts") {
  LabeledTree t;
  t.add_child(0, "F,a,eq,1");
  CHECK(tree_completions(t, 0).size() == 1);
  CHECK(tree_completions(t, 1).size() == 2);
  CHECK(tree_completions(t, 2).size() == 5);
  CHECK(catalan(0) == 1);
  CHECK(catalan(3) == 5);
  CHECK(catalan(10) == 16796);
}

TEST_CASE("feasibility examples") {
  const auto specs = parse_ldx("ROOT CHILDREN <A,B>").structural();
  const LabeledTree chain = make_tree({{0, "F,a,eq,1"}, {1, "F,b,eq,1"}});
  CHECK_FALSE(feasible(chain, specs, 0));
  CHECK(feasible(chain, specs, 1));
  CHECK(feasible(chain, {}, 0));
}

namespace {

bool brute_feasible(const LabeledTree& t, const std::vector<StructuralStmt>& specs, std::size_t remaining) {
  for (std::size_t j = 0; j <= remaining; ++j) {
    for (const auto& c : tree_completions(t, j)) {
      if (!structural_assignments(c, specs).empty()) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("property: verify agrees with the oracle") {
  std::mt19937_64 rng(41);
  int agree_true = 0;
  for (int i = 0; i < 400; ++i) {
    const LdxQuery q = parse_ldx(testgen::random_query_text(rng));
    const LabeledTree t = testgen::random_tree(rng, 1 + testgen::pick(rng, 8), 0.1);
    const bool v = verify(t, q);
    const auto all = enumerate_assignments(t, q);
    CHECK(v == !all.empty());
    if (v) {
      ++agree_true;
      const auto w = find_assignment(t, q);
      REQUIRE(w.has_value());
      CHECK(std::find(all.begin(), all.end(), *w) != all.end());
    }
  }
  CHECK(agree_true > 0);
}

TEST_CASE("property: loosening a literal never breaks compliance") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 300; ++i) {
    const std::string text = testgen::random_query_text(rng);
    const LdxQuery q = parse_ldx(text);
    const LabeledTree t = testgen::random_tree(rng, 1 + testgen::pick(rng, 8));
    if (!verify(t, q)) continue;
    std::vector<Stmt> loose;
    for (const auto& s : q.statements) {
      if (auto* op = std::get_if<OperationalStmt>(&s)) {
        auto fields = op->pattern.fields();
        for (auto& f : fields) {
          if (f.find('<') == std::string::npos && testgen::coin(rng)) f = ".*";
        }
        loose.push_back(OperationalStmt{op->subject, OpPattern(fields)});
      } else {
        loose.push_back(s);
      }
    }
    CHECK_MESSAGE(verify(t, make_query(loose)), text);
  }
}

TEST_CASE("property: completion counts stay under the Catalan bound") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 100; ++i) {
    const LabeledTree t = testgen::random_tree(rng, 1 + testgen::pick(rng, 4));
    const std::size_t k = testgen::pick(rng, 4);
    const auto completions = tree_completions(t, k);
    CHECK(completions.size() <= catalan(static_cast<unsigned>(t.size() - 1 + k)));
    for (const auto& c : completions) CHECK(c.size() == t.size() + k);
  }
}

TEST_CASE("property: feasible matches brute-force completion search") {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 200; ++i) {
    const LdxQuery q = parse_ldx(testgen::random_query_text(rng, 4, 0));
    const LabeledTree t = testgen::random_tree(rng, 1 + testgen::pick(rng, 5));
    const std::size_t r = testgen::pick(rng, 4);
    CHECK(feasible(t, q.structural(), r) == brute_feasible(t, q.structural(), r));
  }
}
