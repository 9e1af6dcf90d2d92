#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <lenus/checker.hpp>

#include "oracles.hpp"

using namespace lenus;

namespace {

/// Automaton with one window per row of lambda; lambda[t][i] is the label
/// of proposition "p{i+1}" at window t.
VideoAutomaton from_lambda(const std::vector<std::vector<double>>& lambda) {
  VideoAutomaton a;
  a.kappa = 16;
  a.state_count = static_cast<int>(lambda.size());
  a.frame_count = a.state_count * a.kappa;
  size_t k = lambda.empty() ? 0 : lambda[0].size();
  for (size_t i = 0; i < k; ++i) a.propositions.push_back("p" + std::to_string(i + 1));
  for (const auto& row : lambda)
    for (double x : row) a.labels.push_back(x);
  return a;
}

FormulaPtr parse(const std::string& text) { return parse_spec(text).formula; }

}  // namespace

TEST_CASE("worked satisfaction probabilities") {
  SUBCASE("eventually over one window") {
    auto a = from_lambda({{0.7}});
    CHECK(check(a, parse("F p1")).p_sat == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("eventually over two fair windows") {
    auto a = from_lambda({{0.5}, {0.5}});
    CHECK(check(a, parse("F p1")).p_sat == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("always multiplies the labels") {
    auto a = from_lambda({{0.9}, {0.9}, {0.9}});
    CHECK(check(a, parse("G p1")).p_sat == doctest::Approx(0.729).epsilon(1e-12));
  }
  SUBCASE("eventually over ten windows at 0.9") {
    std::vector<std::vector<double>> lambda(10, {0.9});
    auto a = from_lambda(lambda);
    CHECK(check(a, parse("F p1")).p_sat ==
          doctest::Approx(1.0 - std::pow(0.1, 10)).epsilon(1e-12));
  }
  SUBCASE("strong next fails at the final window") {
    auto a1 = from_lambda({{1.0}});
    CHECK(check(a1, parse("X p1")).p_sat == 0.0);
    auto a2 = from_lambda({{0.1}, {0.6}});
    CHECK(check(a2, parse("X p1")).p_sat == doctest::Approx(0.6).epsilon(1e-12));
    // X true is still false at the last window.
    CHECK(check(a1, parse("X (p1 | ! p1)")).p_sat == 0.0);
  }
  SUBCASE("until with a certain handoff") {
    auto a = from_lambda({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(check(a, parse("p1 U p2")).p_sat == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("until mixes the two branches") {
    // q now (0.2) or p now (0.9) and q next (0.5):
    // 0.2 + 0.8 * 0.9 * 0.5 = 0.56.
    auto a = from_lambda({{0.9, 0.2}, {0.0, 0.5}});
    CHECK(check(a, parse("p1 U p2")).p_sat == doctest::Approx(0.56).epsilon(1e-12));
  }
  SUBCASE("profile holds one suffix probability per window") {
    auto a = from_lambda({{0.5}, {0.5}, {0.5}});
    auto prof = check(a, parse("F p1"));
    REQUIRE(prof.p.size() == 3);
    CHECK(prof.p[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(prof.p[1] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(prof.p[0] == doctest::Approx(0.875).epsilon(1e-12));
  }
}

TEST_CASE("checker matches brute-force enumeration on random instances") {
  std::mt19937_64 rng(2024);
  for (int iter = 0; iter < 300; ++iter) {
    int n = 1 + static_cast<int>(rng() % 3);
    int k = 1 + static_cast<int>(rng() % 2);
    std::vector<std::vector<double>> lambda(static_cast<size_t>(n),
                                            std::vector<double>(static_cast<size_t>(k)));
    for (auto& row : lambda)
      for (auto& x : row) x = oracles::uniform01(rng);
    auto f = oracles::random_formula(rng, k, 3);
    auto a = from_lambda(lambda);
    auto prof = check(a, f);
    for (int t = 0; t < n; ++t) {
      double expect = oracles::brute_force_probability(f, lambda, static_cast<size_t>(t));
      CHECK(prof.p[static_cast<size_t>(t)] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("smoothing is a centered logistic") {
  CHECK(smooth({0.5}, 10.0)[0] == doctest::Approx(0.5));
  CHECK(smooth({0.9}, 10.0)[0] == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
  auto s = smooth({0.0, 0.25, 0.5, 0.75, 1.0}, 10.0);
  for (size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  CHECK_THROWS_AS(smooth({0.5}, 0.0), CheckerError);
}

TEST_CASE("unknown atoms and oversized formulas are rejected") {
  auto a = from_lambda({{0.5}});
  CHECK_THROWS_AS(check(a, parse("F unknown_prop")), CheckerError);
  CHECK_THROWS_AS(check(a, parse("p1"), 10.0, 0), CheckerError);
}

TEST_CASE("primary segment extraction") {
  // 20 windows; p1 true on 3-4, p2 true on 15-16.
  std::vector<std::vector<double>> lambda(20, {0.0, 0.0});
  lambda[3] = lambda[4] = {1.0, 0.0};
  lambda[15] = lambda[16] = {0.0, 1.0};
  auto a = from_lambda(lambda);
  auto f = parse("(F p1) & (F p2)");
  auto prof = check(a, f);
  CHECK(prof.p_sat == doctest::Approx(1.0));

  auto seg = extract_primary_segment(prof, a, f);
  CHECK_FALSE(seg.fallback);
  REQUIRE(seg.segments.size() == 1);
  CHECK(seg.core_start == 0);
  CHECK(seg.core_end == 15);  // first prefix containing both events
  CHECK(seg.segments[0] == std::array<int, 2>{0, 17});
  CHECK(seg.evidence_windows == 3);  // windows 3, 4, 15
}

TEST_CASE("multi-segment extraction drops the gap between events") {
  std::vector<std::vector<double>> lambda(20, {0.0, 0.0});
  lambda[3] = lambda[4] = {1.0, 0.0};
  lambda[15] = lambda[16] = {0.0, 1.0};
  auto a = from_lambda(lambda);
  auto f = parse("(F p1) & (F p2)");
  auto prof = check(a, f);

  auto multi = extract_multi_segments(prof, a, f);
  REQUIRE(multi.segments.size() == 2);
  CHECK(multi.segments[0] == std::array<int, 2>{1, 6});
  CHECK(multi.segments[1] == std::array<int, 2>{13, 17});
  CHECK(multi.evidence_windows == 3);
  CHECK(multi.total_windows == 11);

  auto primary = extract_primary_segment(prof, a, f);
  CHECK(multi.total_windows <= primary.total_windows);
}

TEST_CASE("overlapping extensions merge") {
  std::vector<std::vector<double>> lambda(10, {0.0});
  lambda[2] = lambda[5] = {1.0};
  auto a = from_lambda(lambda);
  auto f = parse("F p1");
  auto prof = check(a, f);
  auto multi = extract_multi_segments(prof, a, f);
  // end is window 2 (first satisfying prefix), so only the first run is in
  // scope and the result is a single extended segment.
  REQUIRE(multi.segments.size() == 1);
  CHECK(multi.segments[0] == std::array<int, 2>{0, 4});
}

TEST_CASE("fallback covers the whole video") {
  std::vector<std::vector<double>> lambda(8, {0.0});
  auto a = from_lambda(lambda);
  auto f = parse("F p1");
  auto prof = check(a, f);
  CHECK(prof.p_sat == 0.0);
  auto seg = extract_multi_segments(prof, a, f);
  CHECK(seg.fallback);
  REQUIRE(seg.segments.size() == 1);
  CHECK(seg.segments[0] == std::array<int, 2>{0, 7});
  CHECK(seg.total_windows == 8);
}

TEST_CASE("hit probability") {
  CHECK(hit_probability(1, 10, 32) == doctest::Approx(1.0 - std::pow(0.9, 32)));
  CHECK(hit_probability(10, 10, 1) == doctest::Approx(1.0));
  CHECK(hit_probability(0, 10, 5) == doctest::Approx(0.0));
  CHECK_THROWS_AS(hit_probability(5, 4, 1), CheckerError);
  CHECK_THROWS_AS(hit_probability(1, 10, 0), CheckerError);
}

TEST_CASE("checker report JSON") {
  std::vector<std::vector<double>> lambda(6, {0.0});
  lambda[2] = {1.0};
  auto a = from_lambda(lambda);
  auto f = parse("F p1");
  auto prof = check(a, f);
  auto seg = extract_multi_segments(prof, a, f);
  auto j = checker_report(prof, seg, a, {32});
  CHECK(j["P_sat"].get<double>() == doctest::Approx(1.0));
  CHECK(j["P"].size() == 6);
  CHECK_FALSE(j["fallback"].get<bool>());
  REQUIRE(j["segments"].size() == 1);
  CHECK(j["segments"][0]["start_frame"].get<int>() == j["segments"][0]["start_window"].get<int>() * 16);
  CHECK(j["hit_probability_at_budget"].contains("32"));
}

TEST_CASE("boolean trace evaluation") {
  auto [f, props] = parse_spec("p1 U p2");
  // p1 then p2: bits 0 and 1.
  std::vector<uint32_t> good = {0b01, 0b01, 0b10};
  CHECK(evaluate_boolean_trace(f, good, props));
  std::vector<uint32_t> bad = {0b01, 0b00, 0b10};
  CHECK_FALSE(evaluate_boolean_trace(f, bad, props));
  CHECK_FALSE(evaluate_boolean_trace(f, {}, props));
}
