#include <random>
#include <regex>
#include <stdexcept>

#include "doctest.h"
#include "ldx/pattern.hpp"

using namespace ldx::re;

TEST_CASE("literal fields match case-insensitively") {
  Regex r = Regex::compile({"F", "country", "eq", ".*"});
  CHECK(r.matches("F,country,eq,India"));
  CHECK(r.matches("f,Country,EQ,x"));
  CHECK_FALSE(r.matches("F,genre,eq,India"));
  CHECK_FALSE(r.matches("F,country,eq"));
}

TEST_CASE("star alone is sugar for dot star") {
  Regex a = Regex::compile({"G", "*", "*"});
  Regex b = Regex::compile({"G", ".*", ".*"});
  for (std::string s : {"G,a,count,*", "G,,", "G,x,y", "F,x,y"}) CHECK(a.matches(s) == b.matches(s));
}

TEST_CASE("last field may span the remaining fields") {
  Regex r = Regex::compile({"G", "(?<X>.*)", ".*"});
  auto m = r.match_all("G,country,count,*");
  REQUIRE(m.size() == 1);
  CHECK(m[0].at("X") == "country");
}

TEST_CASE("captures stay within their field") {
  Regex r = Regex::compile({"F", "(?<X>.*)", ".*"});
  auto m = r.match_all("F,country,eq,India");
  REQUIRE(m.size() == 1);
  CHECK(m[0].at("X") == "country");
}

TEST_CASE("bound captures compare exactly") {
  Regex r = Regex::compile({"F", "(?<X>.*)", ".*"});
  CHECK(r.matches("F,country,eq,India", {{"X", "country"}}));
  CHECK_FALSE(r.matches("F,genre,eq,Kids", {{"X", "country"}}));
  CHECK_FALSE(r.matches("F,Country,eq,India", {{"X", "country"}}));
}

TEST_CASE("back references") {
  Regex r = Regex::compile({"G", "\\k<Y>", ".*"});
  CHECK(r.backrefs() == std::vector<std::string>{"Y"});
  CHECK(r.matches("G,rating,count,*", {{"Y", "rating"}}));
  CHECK_FALSE(r.matches("G,type,count,*", {{"Y", "rating"}}));
  auto free = r.match_all("G,type,count,*");
  REQUIRE(free.size() == 1);
  CHECK(free[0].at("Y") == "type");
  Regex same = Regex::compile({"(?<A>.*)", "\\k<A>"});
  CHECK(same.matches("ab,ab"));
  CHECK_FALSE(same.matches("ab,ba"));
}

TEST_CASE("alternation and grouping") {
  Regex r = Regex::compile({"G", "country", "SUM|AVG", "*"});
  CHECK(r.matches("G,country,sum,price"));
  CHECK(r.matches("G,country,avg,price"));
  CHECK_FALSE(r.matches("G,country,count,*"));
  Regex g = Regex::compile_field("(ab)+c?", true);
  CHECK(g.matches("abab"));
  CHECK(g.matches("abc"));
  CHECK_FALSE(g.matches("c"));
}

TEST_CASE("a repeated group whose body matches empty") {
  CHECK(Regex::compile_field("(a*)+", true).matches(""));
  CHECK(Regex::compile_field("c(b*)+c", true).matches("cc"));
  CHECK(Regex::compile_field("(.*|aa)+", true).matches(""));
  CHECK_FALSE(Regex::compile_field("(a*)+", true).matches("b"));
}

TEST_CASE("ambiguous captures return every distinct binding") {
  Regex r = Regex::compile_field("(?<X>.*)(?<Y>.*)", true);
  CHECK(r.match_all("ab").size() == 3);
}

TEST_CASE("malformed patterns are rejected") {
  CHECK_THROWS_AS(Regex::compile_field("(ab", true), std::invalid_argument);
  CHECK_THROWS_AS(Regex::compile_field("(?<X>a)(?<X>b)", true), std::invalid_argument);
  CHECK_THROWS_AS(Regex::compile_field("(?=a)", true), std::invalid_argument);
  CHECK_THROWS_AS(Regex::compile_field("\\k<X", true), std::invalid_argument);
  CHECK_THROWS_AS(Regex::compile_field("'abc", true), std::invalid_argument);
}

TEST_CASE("normalize_field resolves quotes") {
  CHECK(normalize_field(" 'a.b'|c ") == "a\\.b|c");
  CHECK(normalize_field("'country'") == "country");
  CHECK(normalize_field("'TV-14'") == "TV-14");
  CHECK(normalize_field(normalize_field("' x '")) == normalize_field("' x '"));
  CHECK(Regex::compile_field(normalize_field("' x '"), true).matches(" x "));
}

TEST_CASE("split_fields respects quotes, escapes and groups") {
  CHECK(split_fields("F,'a,b',eq,x") == std::vector<std::string>{"F", "'a,b'", "eq", "x"});
  CHECK(split_fields("G,(a|b,c),x") == std::vector<std::string>{"G", "(a|b,c)", "x"});
  CHECK(split_fields("a\\,b,c") == std::vector<std::string>{"a\\,b", "c"});
}

TEST_CASE("wildcard detection") {
  CHECK(is_wildcard_field("*"));
  CHECK(is_wildcard_field(".*"));
  CHECK_FALSE(is_wildcard_field("a*"));
  CHECK_FALSE(is_wildcard_field("(?<X>.*)"));
}

namespace {

std::string gen_alt(std::mt19937_64& rng, int depth);

std::string gen_atom(std::mt19937_64& rng, int depth) {
  const int r = static_cast<int>(rng() % 10);
  if (r < 5) return std::string(1, "abc-"[rng() % 4]);
  if (r < 8 || depth > 0) return ".";
  return "(" + gen_alt(rng, depth + 1) + ")";
}

std::string gen_seq(std::mt19937_64& rng, int depth) {
  std::string out;
  const int n = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) {
    out += gen_atom(rng, depth);
    const int q = static_cast<int>(rng() % 6);
    if (q == 0) out += "*";
    else if (q == 1) out += "+";
    else if (q == 2) out += "?";
  }
  return out;
}

std::string gen_alt(std::mt19937_64& rng, int depth) {
  std::string out = gen_seq(rng, depth);
  if (rng() % 4 == 0) out += "|" + gen_seq(rng, depth);
  return out;
}

std::string gen_input(std::mt19937_64& rng) {
  std::string s;
  const int n = static_cast<int>(rng() % 7);
  for (int i = 0; i < n; ++i) s.push_back("abc-,"[rng() % 5]);
  return s;
}

/// ECMAScript translation: `.` outside the last field may not cross a comma.
std::string to_ecma(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    if (f) out += ",";
    out += "(?:";
    for (char c : fields[f]) {
      if (c == '.' && f + 1 < fields.size()) out += "[^,]";
      else out.push_back(c);
    }
    out += ")";
  }
  return out;
}

}  // namespace

TEST_CASE("property: matcher agrees with std::regex") {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int i = 0; i < 1500; ++i) {
    std::vector<std::string> fields;
    const int nf = 1 + static_cast<int>(rng() % 3);
    for (int f = 0; f < nf; ++f) fields.push_back(gen_alt(rng, 0));
    const Regex ours = Regex::compile(fields);
    const std::regex theirs(to_ecma(fields), std::regex::ECMAScript);
    for (int k = 0; k < 8; ++k) {
      std::string input = gen_input(rng);
      CHECK_MESSAGE(ours.matches(input) == std::regex_match(input, theirs), to_ecma(fields), " on ", input);
      ++checked;
    }
  }
  CHECK(checked == 12000);
}

TEST_CASE("property: escape_literal matches exactly itself") {
  std::mt19937_64 rng(22);
  const std::string alphabet = "ab.*+?|()\\,'[]<>{}^$ -";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const int n = static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) s.push_back(alphabet[rng() % alphabet.size()]);
    const Regex r = Regex::compile_field(escape_literal(s), true);
    CHECK(r.matches(s));
    CHECK_FALSE(r.matches(s + "a"));
    if (!s.empty()) CHECK_FALSE(r.matches(s.substr(1)));
  }
}
