#ifndef MODTRAJ_STATS_H_
#define MODTRAJ_STATS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modtraj/common.h"

namespace modtraj {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series expansion below x < a + 1, Lentz continued fraction above.
double gamma_q(double a, double x);

double chi_squared_sf(double statistic, int dof);

// Inverse of the standard normal CDF (Wichura, AS 241).
double normal_quantile(double p);

// Rows: cue present / absent. Columns: recidivist / reformed.
struct ContingencyTable2x2 {
  std::int64_t a = 0;  // present, recidivist
  std::int64_t b = 0;  // present, reformed
  std::int64_t c = 0;  // absent, recidivist
  std::int64_t d = 0;  // absent, reformed

  std::int64_t total() const { return a + b + c + d; }
  ContingencyTable2x2 transposed() const { return {a, c, b, d}; }
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

// Pearson chi-squared on a 2x2 table, dof 1. Without continuity correction
// unless yates is set.
TestResult chi_squared_2x2(const ContingencyTable2x2& table, bool yates = false);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval, clamped to [0, 1].
Interval wilson_ci(std::int64_t successes, std::int64_t n, double level = 0.95);

// Exact two-sided McNemar test on paired correctness vectors. With no
// discordant pairs the result is p = 1.
TestResult mcnemar_exact(std::span<const bool> correct_a, std::span<const bool> correct_b);

// Two-sided exact binomial(n, 1/2) p-value for the smaller discordant count.
double mcnemar_exact_p(std::int64_t only_a_correct, std::int64_t only_b_correct);

using BagOfWords = std::map<std::string, std::int64_t>;

struct LogOddsResult {
  std::string word;
  double z = 0.0;
  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
};

// Log-odds ratio with an informative Dirichlet prior whose mass alpha0 is
// spread by pooled word frequency. Sorted by z descending, then by word.
std::vector<LogOddsResult> fightin_words(const BagOfWords& corpus_a, const BagOfWords& corpus_b,
                                         double alpha0 = 500.0);

// Column-normalized view of a 2x2 table plus its chi-squared test.
struct MosaicTable {
  std::string cue;
  ContingencyTable2x2 counts;
  double present_recid_ratio = 0.0;
  double absent_recid_ratio = 0.0;
  TestResult test;

  std::int64_t present_n() const { return counts.a + counts.b; }
  std::int64_t absent_n() const { return counts.c + counts.d; }
};

// outcome_positive[i]: user i recidivated. cue_present[i]: cue observed.
// Throws kDegenerateTable when a row or column is empty.
MosaicTable mosaic_table(std::string cue, std::span<const bool> outcome_positive,
                         std::span<const bool> cue_present);

// Same, for flags held in std::vector<bool>.
MosaicTable mosaic_table(std::string cue, const std::vector<bool>& outcome_positive,
                         const std::vector<bool>& cue_present);

double median(std::vector<double> values);

}  // namespace modtraj

#endif  // MODTRAJ_STATS_H_
