#include <cmath>
#include <random>

#include "doctest.h"
#include "ldx/error.hpp"
#include "ldx/reward.hpp"
#include "support/gen.hpp"

using namespace ldx;

namespace {

std::shared_ptr<const Table> toy4() {
  return std::make_shared<const Table>(load_csv(std::string(LDX_TEST_DATA) + "/toy4.csv",
                                                {{"country", DType::Categorical}, {"rating", DType::Categorical}}));
}

const char* kGroupFilter =
    "ROOT CHILDREN <A,B>\n"
    "A LIKE [G,(?<X>.*),.*]\n"
    "B LIKE [F,(?<X>.*),.*]\n";

LabeledTree make_tree(const std::vector<std::pair<int, std::string>>& nodes) {
  LabeledTree t;
  for (const auto& [parent, label] : nodes) t.add_child(parent, label);
  return t;
}

}  // namespace

TEST_CASE("filter interestingness by hand") {
  SessionTree s(toy4());
  s.apply_op(FilterOp{"type", Cmp::Eq, "Movie"});
  // type: Movie 1 vs 0.5; country: India/USA 0.5 vs 0.5/0.25; rating: two of four.
  const double kl_type = std::log(1.0 / 0.5);
  const double kl_country = 0.5 * std::log(0.5 / 0.5) + 0.5 * std::log(0.5 / 0.25);
  const double kl_rating = 2 * 0.5 * std::log(0.5 / 0.25);
  const double expected = 1.0 - std::exp(-(kl_type + kl_country + kl_rating) / 3.0);
  CHECK(interestingness(s, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a filter that keeps every row is not interesting") {
  SessionTree s(toy4());
  s.apply_op(FilterOp{"country", Cmp::Neq, "Brazil"});
  CHECK(interestingness(s, 1) == doctest::Approx(0.0));
  s.back();
  s.apply_op(FilterOp{"type", Cmp::Eq, "Short"});
  CHECK(interestingness(s, 2) == 0.0);
}

TEST_CASE("group conciseness") {
  SessionTree s(toy4());
  s.apply_op(GroupOp{"type", AggFunc::Count, "*"});
  CHECK(interestingness(s, 1) == doctest::Approx(0.5));
  s.back();
  s.apply_op(GroupOp{"country", AggFunc::Count, "*"});
  CHECK(interestingness(s, 2) == doctest::Approx(1.0 / (1.0 + std::log2(3.0))));
  s.back();
  s.apply_op(FilterOp{"rating", Cmp::Eq, "R"});
  s.apply_op(GroupOp{"type", AggFunc::Count, "*"});
  CHECK(interestingness(s, 4) == doctest::Approx(1.0));
}

TEST_CASE("diversity is the minimum jaccard distance to earlier results") {
  SessionTree s(toy4());
  s.apply_op(FilterOp{"type", Cmp::Eq, "Movie"});
  s.back();
  s.apply_op(FilterOp{"country", Cmp::Eq, "India"});
  CHECK(diversity(s, 1) == 1.0);
  // {0,2} against {0,3}: one shared row out of three.
  CHECK(diversity(s, 2) == doctest::Approx(1.0 - 1.0 / 3.0));
  s.back();
  s.apply_op(GroupOp{"type", AggFunc::Count, "*"});
  CHECK(result_distance(s, 1, 3) == 1.0);
  s.back();
  s.apply_op(FilterOp{"type", Cmp::Eq, "Movie"});
  CHECK(diversity(s, 4) == 0.0);
}

TEST_CASE("operational parameter fraction") {
  const OpPattern p = parse_ldx("A LIKE [F,country,eq,India]").operational()[0].pattern;
  CHECK(opr_param_fraction(p, "F,country,eq,India") == 1.0);
  CHECK(opr_param_fraction(p, "F,country,neq,India") == doctest::Approx(2.0 / 3.0));
  CHECK(opr_param_fraction(p, "F,genre,neq,Kids") == 0.0);
  CHECK(opr_param_fraction(p, "G,country,count,*") == 0.0);
  const OpPattern wild = parse_ldx("A LIKE [F,country,*,*]").operational()[0].pattern;
  CHECK(opr_param_fraction(wild, "F,country,gt,3") == 1.0);
  CHECK(opr_param_fraction(wild, "F,genre,gt,3") == 0.0);
  const OpPattern group = parse_ldx("A LIKE [G,'country',count,*]").operational()[0].pattern;
  CHECK(opr_param_fraction(group, "G,rating,count,*") == doctest::Approx(0.5));
  const OpPattern type_only = parse_ldx("A LIKE [G,.*]").operational()[0].pattern;
  CHECK(opr_param_fraction(type_only, "G,a,count,*") == 1.0);
}

TEST_CASE("graded reward carries continuity values between statements") {
  const LdxQuery q = parse_ldx(
      "ROOT CHILDREN <A,B>\nA LIKE [F,country,eq,(?<X>.*)]\nB LIKE [F,country,neq,(?<X>.*)]\n"
      "A CHILDREN <C>\nB CHILDREN <D>\nC LIKE [G,(?<Y>.*),.*]\nD LIKE [G,\\k<Y>,.*]");
  const NodeMap phi{{"ROOT", 0}, {"A", 1}, {"C", 2}, {"B", 3}, {"D", 4}};
  auto tree = [](const std::string& b_term, const std::string& d_attr) {
    return make_tree({{0, "F,country,eq,India"}, {1, "G,type,count,*"}, {0, "F,country,neq," + b_term},
                      {3, "G," + d_attr + ",count,*"}});
  };
  CHECK(opr_reward(tree("India", "type"), q, phi) == doctest::Approx(4.0));
  CHECK(opr_reward(tree("Japan", "type"), q, phi) == doctest::Approx(3.0 + 2.0 / 3.0));
  CHECK(opr_reward(tree("India", "genre"), q, phi) == doctest::Approx(3.0));
  CHECK(opr_reward(tree("Japan", "genre"), q, phi) == doctest::Approx(2.0 + 2.0 / 3.0));
  re::Captures bound{{"X", "India"}};
  const OpPattern b = q.operational()[1].pattern;
  CHECK(opr_param_fraction(b, "F,country,neq,Japan", &bound) == doctest::Approx(2.0 / 3.0));
  CHECK(opr_param_fraction(b, "F,country,neq,Japan") == 1.0);
}

TEST_CASE("end-of-session reward has three outcomes") {
  const LdxQuery q = parse_ldx(kGroupFilter);
  RewardConfig cfg;
  bool ok = false;
  const LabeledTree good = make_tree({{0, "G,country,count,*"}, {0, "F,country,eq,India"}});
  CHECK(eos_compliance(good, q, cfg, &ok) == doctest::Approx(30.0));
  CHECK(ok);
  // Structure holds but the continuity variable disagrees: A binds X to
  // country, so B loses its only specified parameter.
  const LabeledTree partial = make_tree({{0, "G,country,count,*"}, {0, "F,genre,eq,Kids"}});
  const double graded = eos_compliance(partial, q, cfg, &ok);
  CHECK_FALSE(ok);
  CHECK(graded == doctest::Approx(1.0));
  const LabeledTree chain = make_tree({{0, "G,country,count,*"}});
  CHECK(eos_compliance(chain, q, cfg) == cfg.neg_reward);
  cfg.graded_eos = false;
  CHECK(eos_compliance(partial, q, cfg) == cfg.neg_reward);
  cfg.pos_reward = 7.0;
  CHECK(eos_compliance(good, q, cfg) == 7.0);
}

TEST_CASE("immediate compliance penalises unreachable structure") {
  const auto specs = parse_ldx(kGroupFilter).structural();
  RewardConfig cfg;
  const LabeledTree chain = make_tree({{0, "F,a,eq,1"}, {1, "F,b,eq,1"}, {2, "F,c,eq,1"}});
  CHECK(immediate_compliance(chain, specs, 3, 3, cfg) == cfg.imm_penalty);
  CHECK(immediate_compliance(chain, specs, 3, 2, cfg) == 0.0);
  CHECK(immediate_compliance(chain, specs, 4, 3, cfg) == 0.0);
  CHECK(immediate_compliance(chain, {}, 3, 3, cfg) == 0.0);
}

TEST_CASE("config validation and json") {
  RewardConfig cfg;
  cfg.alpha = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(reward_config_from_json({{"nope", 1}}), Error);
  CHECK_THROWS_AS(reward_config_from_json({{"neg_reward", 3}}), Error);
  const RewardConfig back = reward_config_from_json(to_json(RewardConfig{}));
  CHECK(to_json(back) == to_json(RewardConfig{}));
  CHECK(reward_config_from_json({{"beta", 0}}).beta == 0.0);
}

namespace {

SessionTree random_session(std::mt19937_64& rng, std::shared_ptr<const Table> t, int steps) {
  SessionTree s(t);
  const std::vector<std::string> attrs = {"type", "country", "rating"};
  for (int i = 0; i < steps; ++i) {
    const bool grouped = s.node(s.current()).view->kind() == ViewKind::Grouped;
    if (grouped || (s.current() != 0 && rng() % 4 == 0)) {
      s.back();
      continue;
    }
    const std::string& a = attrs[rng() % attrs.size()];
    if (rng() % 2) {
      s.apply_op(GroupOp{a, AggFunc::Count, "*"});
    } else {
      const auto& col = t->column(a).text;
      s.apply_op(FilterOp{a, rng() % 2 ? Cmp::Eq : Cmp::Neq, col[rng() % col.size()]});
    }
  }
  return s;
}

}  // namespace

TEST_CASE("property: per-step totals recombine from their components") {
  auto t = toy4();
  const LdxQuery q = parse_ldx(kGroupFilter);
  std::mt19937_64 rng(51);
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const SessionTree s = random_session(rng, t, n);
    RewardConfig cfg;
    cfg.alpha = 0.5 + static_cast<double>(rng() % 3);
    cfg.beta = static_cast<double>(rng() % 3);
    const RewardBreakdown b = total_reward(s, q, cfg, n + 1);
    REQUIRE(b.steps.size() == static_cast<std::size_t>(n + 1));
    double gen = 0.0;
    double imm = 0.0;
    double shares = 0.0;
    for (const auto& r : b.steps) {
      gen += cfg.mu * r.interestingness_sum + cfg.lambda * r.diversity;
      imm += r.imm;
      shares += r.eos_share;
      CHECK(r.total == doctest::Approx(combine(r, cfg)));
    }
    CHECK(shares == doctest::Approx(b.eos));
    CHECK(b.sum() == doctest::Approx(cfg.alpha * gen + cfg.beta * (cfg.gamma * b.eos + cfg.delta * imm)));
    CHECK(b.compliant == verify(s.labeled(), q));
  }
}

TEST_CASE("property: zero weights switch off their half") {
  auto t = toy4();
  const LdxQuery q = parse_ldx(kGroupFilter);
  std::mt19937_64 rng(52);
  for (int i = 0; i < 50; ++i) {
    const SessionTree s = random_session(rng, t, 4);
    RewardConfig no_gen;
    no_gen.alpha = 0.0;
    for (const auto& r : total_reward(s, q, no_gen).steps) {
      CHECK(r.total == doctest::Approx(no_gen.beta * (no_gen.gamma * r.eos_share + no_gen.delta * r.imm)));
    }
    RewardConfig no_spec;
    no_spec.beta = 0.0;
    const RewardBreakdown b = total_reward(s, q, no_spec);
    CHECK(b.eos == 0.0);
    for (const auto& r : b.steps) {
      CHECK(r.imm == 0.0);
      CHECK(r.total == doctest::Approx(no_spec.mu * r.interestingness_sum + no_spec.lambda * r.diversity));
    }
  }
}

TEST_CASE("property: compliant sessions outscore every non-compliant one at the end") {
  std::mt19937_64 rng(53);
  const RewardConfig cfg;
  for (int i = 0; i < 300; ++i) {
    const LdxQuery q = parse_ldx(testgen::random_query_text(rng));
    const LabeledTree t = testgen::random_tree(rng, 1 + testgen::pick(rng, 7));
    bool ok = false;
    const double eos = eos_compliance(t, q, cfg, &ok);
    const double ops = static_cast<double>(q.operational().size());
    if (ok) {
      CHECK(eos == doctest::Approx(cfg.pos_for(q)));
    } else {
      CHECK(eos <= ops);
      CHECK(eos < cfg.pos_for(q));
    }
  }
}

TEST_CASE("property: component ranges") {
  auto t = toy4();
  std::mt19937_64 rng(54);
  for (int i = 0; i < 100; ++i) {
    const SessionTree s = random_session(rng, t, 6);
    for (int id = 1; id < static_cast<int>(s.size()); ++id) {
      const double x = interestingness(s, id);
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
      const double d = diversity(s, id);
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}
