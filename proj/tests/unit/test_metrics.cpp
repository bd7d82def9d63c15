#include <random>

#include "doctest.h"
#include "ldx/error.hpp"
#include "ldx/metrics.hpp"
#include "support/gen.hpp"

using namespace ldx;

namespace {

const char* kGroupFilter =
    "ROOT CHILDREN <A,B>\n"
    "A LIKE [G,(?<X>.*),.*]\n"
    "B LIKE [F,(?<X>.*),.*]\n";

/// Textbook full-matrix edit distance.
std::size_t lev_oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
    }
  }
  return d[a.size()][b.size()];
}

double harmonic_distance(double x, double y) {
  const double p = 1.0 - x;
  const double q = 1.0 - y;
  return p + q == 0.0 ? 1.0 : 1.0 - 2.0 * p * q / (p + q);
}

}  // namespace

TEST_CASE("normalized levenshtein") {
  CHECK(normalized_lev("kitten", "sitting") == doctest::Approx(3.0 / 7.0));
  CHECK(normalized_lev("", "") == 0.0);
  CHECK(normalized_lev("abc", "") == 1.0);
  CHECK(normalized_lev("same", "same") == 0.0);
}

TEST_CASE("property: normalized levenshtein matches the full matrix") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 500; ++i) {
    std::string a, b;
    for (std::size_t k = rng() % 9; k > 0; --k) a.push_back("abc"[rng() % 3]);
    for (std::size_t k = rng() % 9; k > 0; --k) b.push_back("abc"[rng() % 3]);
    const std::size_t longer = std::max(a.size(), b.size());
    const double expected = longer ? static_cast<double>(lev_oracle(a, b)) / static_cast<double>(longer) : 0.0;
    CHECK(normalized_lev(a, b) == doctest::Approx(expected));
  }
}

TEST_CASE("canonical names ignore the original spelling") {
  const auto a = canonicalize(parse_ldx(kGroupFilter));
  const auto b = canonicalize(parse_ldx("ROOT CHILDREN <P,Q>\nP LIKE [G,(?<V>.*),.*]\nQ LIKE [F,(?<V>.*),.*]"));
  CHECK(a.structural == b.structural);
  CHECK(a.operational == b.operational);
  REQUIRE(a.structural.size() == 1);
  CHECK(a.structural[0].find("n1") != std::string::npos);
  CHECK(a.operational[0].find("att1") != std::string::npos);
}

TEST_CASE("lev2 of identical and renamed queries is zero") {
  const LdxQuery q = parse_ldx(kGroupFilter);
  CHECK(lev2(q, q) == 0.0);
  CHECK(lev2(q, parse_ldx("ROOT CHILDREN <P,Q>\nP LIKE [G,(?<V>.*),.*]\nQ LIKE [F,(?<V>.*),.*]")) == 0.0);
  CHECK(lev2(q, parse_ldx("B LIKE [F,(?<X>.*),.*]\nROOT CHILDREN <A,B>\nA LIKE [G,(?<X>.*),.*]")) == 0.0);
}

TEST_CASE("lev2 with one changed term by hand") {
  const LdxQuery a = parse_ldx("ROOT CHILDREN <A>\nA LIKE [F,country,eq,India]");
  const LdxQuery b = parse_ldx("ROOT CHILDREN <A>\nA LIKE [F,country,eq,UK]");
  const auto ca = canonicalize(a);
  const auto cb = canonicalize(b);
  REQUIRE(ca.operational.size() == 1);
  const std::size_t longer = std::max(ca.operational[0].size(), cb.operational[0].size());
  // India -> UK: two substitutions and three deletions.
  const double d_opr = 5.0 / static_cast<double>(longer);
  const Lev2Parts parts = lev2_parts(a, b);
  CHECK(parts.d_struct == 0.0);
  CHECK(parts.d_opr == doctest::Approx(d_opr));
  CHECK(parts.lev2 == doctest::Approx(harmonic_distance(0.0, d_opr)));
  CHECK(lev2(a, b) == doctest::Approx(parts.lev2));
}

TEST_CASE("minimal tree of the group-and-filter query") {
  const MinimalTree t = minimal_tree(parse_ldx(kGroupFilter));
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].children.size() == 2);
  const auto& a = t.nodes[static_cast<std::size_t>(t.nodes[0].children[0])];
  const auto& b = t.nodes[static_cast<std::size_t>(t.nodes[0].children[1])];
  CHECK(a.type == ChildrenType::Child);
  REQUIRE(a.fields.size() == 3);
  REQUIRE(b.fields.size() == 3);
  CHECK(a.fields[0] == "G");
  CHECK(b.fields[0] == "F");
  CHECK(a.fields[1] == b.fields[1]);
  CHECK(a.fields[1].find("att1") != std::string::npos);
}

TEST_CASE("minimal tree shapes") {
  const MinimalTree d = minimal_tree(parse_ldx("ROOT DESCENDANTS <A>\nA CHILDREN <B,+>"));
  REQUIRE(d.nodes.size() == 4);
  CHECK(d.nodes[1].type == ChildrenType::Descendant);
  int blanks = 0;
  for (const auto& n : d.nodes) blanks += n.blank;
  CHECK(blanks == 1);
  const MinimalTree orphan = minimal_tree(parse_ldx("A LIKE [F,*]"));
  REQUIRE(orphan.nodes.size() == 2);
  CHECK(orphan.nodes[1].parent == 0);
  CHECK(orphan.nodes[1].type == ChildrenType::Descendant);
  CHECK_THROWS_AS(minimal_tree(parse_ldx("A CHILDREN <B>\nB CHILDREN <A>")), Error);
}

TEST_CASE("xted by hand") {
  const LdxQuery one = parse_ldx("ROOT CHILDREN <A>\nA LIKE [F,country,eq,India]");
  // One node, one of four fields different, normalised by one non-root node.
  CHECK(xted(one, parse_ldx("ROOT CHILDREN <A>\nA LIKE [F,country,eq,UK]")) == doctest::Approx(0.25));
  // Two relabelled children types over two non-root nodes.
  CHECK(xted(parse_ldx("ROOT CHILDREN <A,B>"), parse_ldx("ROOT DESCENDANTS <A,B>")) == doctest::Approx(0.5));
  // One insertion over two non-root nodes.
  CHECK(xted(parse_ldx("ROOT CHILDREN <A>"), parse_ldx("ROOT CHILDREN <A,B>")) == doctest::Approx(0.5));
  CHECK(xted(one, one) == 0.0);
}

TEST_CASE("property: metric axioms on generated queries") {
  std::mt19937_64 rng(62);
  for (int i = 0; i < 300; ++i) {
    const LdxQuery a = parse_ldx(testgen::random_query_text(rng));
    const LdxQuery b = parse_ldx(testgen::random_query_text(rng));
    for (double d : {lev2(a, b), xted(a, b)}) {
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
    CHECK(lev2(a, a) == 0.0);
    CHECK(xted(a, a) == 0.0);
    CHECK(lev2(a, b) == doctest::Approx(lev2(b, a)));
    CHECK(xted(a, b) == doctest::Approx(xted(b, a)));
    const Lev2Parts p = lev2_parts(a, b);
    CHECK(p.lev2 == doctest::Approx(harmonic_distance(p.d_struct, p.d_opr)));
    CHECK(lev2(a, parse_ldx(serialize(a))) == 0.0);
  }
}
