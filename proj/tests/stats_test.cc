#include <doctest.h>

#include <cmath>
#include <sstream>

#include "modtraj/random.h"
#include "modtraj/stats.h"

using namespace modtraj;

namespace {

// Closed-form 2x2 Pearson statistic, and its dof-1 survival function via
// erfc (Q(1/2, x/2) = erfc(sqrt(x/2))).
double closed_form_chi2(const ContingencyTable2x2& t) {
  const double n = static_cast<double>(t.total());
  const double cross = static_cast<double>(t.a * t.d - t.b * t.c);
  return n * cross * cross /
         (static_cast<double>(t.a + t.b) * static_cast<double>(t.c + t.d) *
          static_cast<double>(t.a + t.c) * static_cast<double>(t.b + t.d));
}
double erfc_sf(double x) { return std::erfc(std::sqrt(x / 2.0)); }

BagOfWords bag(const std::string& text) {
  BagOfWords out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) ++out[w];
  return out;
}

const char* kCorpusA =
    "i am sorry for the edit war and i apologize to everyone i will not revert again and i "
    "will discuss on the talk page before any change i regret my mistake and i ask for "
    "forgiveness please unblock me so i can help the article improve from now on";
const char* kCorpusB =
    "why was i blocked this block is unfair and unjustified i was wrongly accused of vandalism "
    "by an admin who abused power the block is illegal and i will not accept it why should i "
    "apologize when i did nothing wrong at all and this is not fair to me";

}  // namespace

TEST_CASE("gamma_q against known values") {
  CHECK(gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(gamma_q(0.5, 0.39682539682539680) ==
        doctest::Approx(0.37299848361348686).epsilon(1e-12));
  CHECK(gamma_q(3.0, 0.5) ==
        doctest::Approx(std::exp(-0.5) * (1 + 0.5 + 0.125)).epsilon(1e-13));
  CHECK(gamma_q(0.5, 0.0) == 1.0);
  CHECK_THROWS_AS(gamma_q(0.0, 1.0), Error);
  // Both evaluation branches agree with erfc across the switch point.
  for (double x = 0.01; x < 60.0; x *= 1.37) {
    CHECK(std::fabs(gamma_q(0.5, x) - std::erfc(std::sqrt(x))) < 1e-12);
  }
}

TEST_CASE("normal_quantile") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.5) == 0.0);
  for (double p : {1e-10, 1e-5, 0.01, 0.2, 0.6, 0.9, 0.999999}) {
    const double x = normal_quantile(p);
    CHECK(0.5 * std::erfc(-x / std::sqrt(2.0)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("chi_squared_2x2 examples") {
  const auto independent = chi_squared_2x2({10, 10, 10, 10});
  CHECK(independent.statistic == 0.0);
  CHECK(independent.p_value == 1.0);
  CHECK(independent.dof == 1);

  const auto r = chi_squared_2x2({10, 20, 30, 40});
  CHECK(r.statistic == doctest::Approx(100.0 * 200.0 * 200.0 / (30.0 * 70 * 40 * 60)).epsilon(1e-13));
  CHECK(r.statistic == doctest::Approx(0.7936507936507936).epsilon(1e-13));
  CHECK(std::fabs(r.p_value - 0.37299848361348686) < 1e-10);

  const auto yates = chi_squared_2x2({10, 20, 30, 40}, true);
  CHECK(yates.statistic == doctest::Approx(0.4464285714285714).epsilon(1e-13));
  CHECK(std::fabs(yates.p_value - 0.5040358664525046) < 1e-10);

  CHECK(chi_squared_2x2({50, 0, 0, 50}).p_value < 1e-10);
}

TEST_CASE("chi_squared_2x2 errors") {
  CHECK_THROWS_WITH_AS(chi_squared_2x2({0, 0, 0, 0}), doctest::Contains("ZeroExpectedCount"), Error);
  CHECK_THROWS_WITH_AS(chi_squared_2x2({0, 0, 5, 5}), doctest::Contains("DegenerateTable"), Error);
  CHECK_THROWS_WITH_AS(chi_squared_2x2({3, 0, 5, 0}), doctest::Contains("DegenerateTable"), Error);
}

TEST_CASE("chi_squared_2x2 properties") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const ContingencyTable2x2 t{rng.between(1, 80), rng.between(1, 80), rng.between(1, 80),
                                rng.between(1, 80)};
    const auto r = chi_squared_2x2(t);
    CHECK(r.statistic == doctest::Approx(closed_form_chi2(t)).epsilon(1e-12));
    CHECK(std::fabs(r.p_value - erfc_sf(r.statistic)) < 1e-10);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
    // Transposition and swapping both labels.
    CHECK(chi_squared_2x2(t.transposed()).statistic == doctest::Approx(r.statistic).epsilon(1e-12));
    CHECK(chi_squared_2x2({t.d, t.c, t.b, t.a}).statistic ==
          doctest::Approx(r.statistic).epsilon(1e-12));
    // Scaling all cells by k scales the statistic by k.
    const std::int64_t k = rng.between(2, 9);
    CHECK(chi_squared_2x2({k * t.a, k * t.b, k * t.c, k * t.d}).statistic ==
          doctest::Approx(static_cast<double>(k) * r.statistic).epsilon(1e-11));
  }
}

TEST_CASE("wilson_ci") {
  const auto zero = wilson_ci(0, 10);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(0.2775327998628892).epsilon(1e-12));
  const auto all = wilson_ci(10, 10);
  CHECK(all.hi == 1.0);
  CHECK(all.lo == doctest::Approx(0.7224672001371107).epsilon(1e-12));
  const auto half = wilson_ci(5, 10);
  CHECK(half.lo == doctest::Approx(0.236593090512564).epsilon(1e-12));
  CHECK(half.hi == doctest::Approx(0.7634069094874361).epsilon(1e-12));
  CHECK(half.lo + half.hi == doctest::Approx(1.0).epsilon(1e-14));
  const auto third = wilson_ci(3, 17);
  CHECK(third.lo == doctest::Approx(0.061911266376209945).epsilon(1e-12));
  CHECK(third.hi == doctest::Approx(0.4102945856883413).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(wilson_ci(0, 0), doctest::Contains("EmptySample"), Error);
  CHECK_THROWS_AS(wilson_ci(11, 10), Error);

  // Width shrinks with n at a fixed proportion.
  double prev = 1.0;
  for (std::int64_t n = 4; n <= 4096; n *= 2) {
    const auto ci = wilson_ci(n / 4, n);
    CHECK(ci.hi - ci.lo < prev);
    CHECK(ci.lo <= 0.25);
    CHECK(ci.hi >= 0.25);
    prev = ci.hi - ci.lo;
  }
}

TEST_CASE("mcnemar_exact") {
  const std::vector<bool> same = {true, false, true, true};
  // std::vector<bool> is not contiguous; copy into arrays.
  bool a[4], b[4];
  for (int i = 0; i < 4; ++i) a[i] = b[i] = same[i];
  CHECK(mcnemar_exact(a, b).p_value == 1.0);

  // Two-sided binomial(20, 1/2) tail at 5.
  CHECK(mcnemar_exact_p(15, 5) == doctest::Approx(0.04138946533203125).epsilon(1e-12));
  CHECK(mcnemar_exact_p(5, 15) == doctest::Approx(0.04138946533203125).epsilon(1e-12));
  CHECK(mcnemar_exact_p(10, 10) == 1.0);
  CHECK(mcnemar_exact_p(0, 0) == 1.0);
  CHECK(mcnemar_exact_p(0, 3) == doctest::Approx(0.25).epsilon(1e-14));

  bool x[20], y[20];
  for (int i = 0; i < 20; ++i) {
    x[i] = i < 15;
    y[i] = !x[i];
  }
  CHECK(mcnemar_exact(x, y).p_value == doctest::Approx(0.04138946533203125).epsilon(1e-12));
  bool shorter[3] = {};
  CHECK_THROWS_AS(mcnemar_exact(x, std::span<const bool>(shorter, 3)), Error);
}

TEST_CASE("fightin_words") {
  SUBCASE("identical corpora give zero scores") {
    const auto res = fightin_words(bag("a b b c c c"), bag("a b b c c c"));
    for (const auto& r : res) CHECK(r.z == 0.0);
  }
  SUBCASE("a word only in A dominates") {
    BagOfWords a = bag("x y z w"), b = bag("x y z w");
    a["signal"] = 100;
    const auto res = fightin_words(a, b);
    CHECK(res.front().word == "signal");
    CHECK(res.front().count_a == 100);
    CHECK(res.front().count_b == 0);
  }
  SUBCASE("fixture matches precomputed values and flips under swap") {
    const BagOfWords a = bag(kCorpusA), b = bag(kCorpusB);
    const auto res = fightin_words(a, b, 500.0);
    REQUIRE(res.size() == 66);
    CHECK(res[0].word == "for");
    CHECK(res[0].z == doctest::Approx(0.4344774648132283).epsilon(1e-12));
    CHECK(res[1].word == "on");
    CHECK(res[2].word == "the");
    CHECK(res[2].z == doctest::Approx(0.31395740291778573).epsilon(1e-12));
    CHECK(res.back().word == "is");
    CHECK(res.back().z == doctest::Approx(-0.5375950479714858).epsilon(1e-12));

    const auto swapped = fightin_words(b, a, 500.0);
    std::map<std::string, double> z_of;
    for (const auto& r : swapped) z_of[r.word] = r.z;
    for (const auto& r : res) CHECK(z_of[r.word] == -r.z);
  }
  SUBCASE("errors") {
    CHECK_THROWS_WITH_AS(fightin_words({}, bag("a")), doctest::Contains("EmptyCorpus"), Error);
    CHECK_THROWS_AS(fightin_words(bag("a"), bag("a"), 0.0), Error);
  }
}

TEST_CASE("mosaic_table") {
  bool recid[6] = {true, false, false, true, true, false};
  bool cue[6] = {true, true, true, false, false, false};
  const auto m = mosaic_table("apology", recid, cue);
  CHECK(m.counts.a == 1);
  CHECK(m.counts.b == 2);
  CHECK(m.counts.c == 2);
  CHECK(m.counts.d == 1);
  CHECK(m.present_recid_ratio == doctest::Approx(1.0 / 3));
  CHECK(m.absent_recid_ratio == doctest::Approx(2.0 / 3));

  bool none[6] = {};
  CHECK_THROWS_WITH_AS(mosaic_table("apology", recid, none), doctest::Contains("DegenerateTable"),
                       Error);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}
