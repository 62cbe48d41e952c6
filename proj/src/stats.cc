#include "modtraj/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

namespace modtraj {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 10000;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Q(a, x) by the modified Lentz continued fraction; for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma_q requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_squared_sf(double statistic, int dof) {
  if (dof <= 0) throw Error(ErrorCode::kInvalidArgument, "dof must be positive");
  if (statistic <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::kInvalidArgument, "normal_quantile requires p in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                  0.24178072517745061177) * r + 1.27045825245236838258) * r +
                3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                  0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

TestResult chi_squared_2x2(const ContingencyTable2x2& t, bool yates) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) {
    throw Error(ErrorCode::kInvalidArgument, "contingency counts must be non-negative");
  }
  const double n = static_cast<double>(t.total());
  if (n == 0.0) throw Error(ErrorCode::kZeroExpectedCount, "empty contingency table");
  const double rows[2] = {static_cast<double>(t.a + t.b), static_cast<double>(t.c + t.d)};
  const double cols[2] = {static_cast<double>(t.a + t.c), static_cast<double>(t.b + t.d)};
  if (rows[0] == 0.0 || rows[1] == 0.0 || cols[0] == 0.0 || cols[1] == 0.0) {
    throw Error(ErrorCode::kDegenerateTable, "a row or column of the table sums to zero");
  }
  const double observed[2][2] = {{static_cast<double>(t.a), static_cast<double>(t.b)},
                                 {static_cast<double>(t.c), static_cast<double>(t.d)}};
  double statistic = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = rows[i] * cols[j] / n;
      double diff = std::fabs(observed[i][j] - expected);
      if (yates) diff = std::max(0.0, diff - 0.5);
      statistic += diff * diff / expected;
    }
  }
  return {statistic, chi_squared_sf(statistic, 1), 1};
}

Interval wilson_ci(std::int64_t successes, std::int64_t n, double level) {
  if (n <= 0) throw Error(ErrorCode::kEmptySample, "wilson_ci needs n > 0");
  if (successes < 0 || successes > n) {
    throw Error(ErrorCode::kInvalidArgument, "successes must lie in [0, n]");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "level must lie in (0, 1)");
  }
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lo = 0.0;
  if (successes == n) ci.hi = 1.0;
  return ci;
}

double mcnemar_exact_p(std::int64_t only_a_correct, std::int64_t only_b_correct) {
  if (only_a_correct < 0 || only_b_correct < 0) {
    throw Error(ErrorCode::kInvalidArgument, "discordant counts must be non-negative");
  }
  const std::int64_t n = only_a_correct + only_b_correct;
  if (n == 0) return 1.0;
  const std::int64_t k = std::min(only_a_correct, only_b_correct);
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double tail = 0.0;
  for (std::int64_t i = 0; i <= k; ++i) {
    const double log_term = lgn - std::lgamma(static_cast<double>(i) + 1.0) -
                            std::lgamma(static_cast<double>(n - i) + 1.0) + log_half_n;
    tail += std::exp(log_term);
  }
  return std::min(1.0, 2.0 * tail);
}

TestResult mcnemar_exact(std::span<const bool> correct_a, std::span<const bool> correct_b) {
  if (correct_a.size() != correct_b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "paired prediction vectors differ in length");
  }
  std::int64_t only_a = 0, only_b = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++only_a;
    if (!correct_a[i] && correct_b[i]) ++only_b;
  }
  return {static_cast<double>(std::min(only_a, only_b)), mcnemar_exact_p(only_a, only_b), 1};
}

std::vector<LogOddsResult> fightin_words(const BagOfWords& corpus_a, const BagOfWords& corpus_b,
                                         double alpha0) {
  if (!(alpha0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha0 must be positive");
  std::int64_t n_a = 0, n_b = 0;
  for (const auto& [w, c] : corpus_a) {
    if (c < 0) throw Error(ErrorCode::kInvalidArgument, "negative word count");
    n_a += c;
  }
  for (const auto& [w, c] : corpus_b) {
    if (c < 0) throw Error(ErrorCode::kInvalidArgument, "negative word count");
    n_b += c;
  }
  if (n_a == 0 || n_b == 0) throw Error(ErrorCode::kEmptyCorpus, "both corpora must be non-empty");

  std::set<std::string> vocabulary;
  for (const auto& [w, c] : corpus_a) if (c > 0) vocabulary.insert(w);
  for (const auto& [w, c] : corpus_b) if (c > 0) vocabulary.insert(w);

  const double total = static_cast<double>(n_a + n_b);
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  auto count_in = [](const BagOfWords& bag, const std::string& w) -> std::int64_t {
    auto it = bag.find(w);
    return it == bag.end() ? 0 : it->second;
  };

  std::vector<LogOddsResult> out;
  out.reserve(vocabulary.size());
  for (const auto& w : vocabulary) {
    const std::int64_t ya = count_in(corpus_a, w);
    const std::int64_t yb = count_in(corpus_b, w);
    double z = 0.0;
    if (vocabulary.size() > 1) {
      const double alpha = alpha0 * static_cast<double>(ya + yb) / total;
      const double ya_s = static_cast<double>(ya) + alpha;
      const double yb_s = static_cast<double>(yb) + alpha;
      const double delta = std::log(ya_s / (na + alpha0 - ya_s)) -
                           std::log(yb_s / (nb + alpha0 - yb_s));
      const double variance = 1.0 / ya_s + 1.0 / yb_s;
      z = delta / std::sqrt(variance);
    }
    out.push_back({w, z, ya, yb});
  }
  std::sort(out.begin(), out.end(), [](const LogOddsResult& x, const LogOddsResult& y) {
    return x.z != y.z ? x.z > y.z : x.word < y.word;
  });
  return out;
}

MosaicTable mosaic_table(std::string cue, std::span<const bool> outcome_positive,
                         std::span<const bool> cue_present) {
  if (outcome_positive.size() != cue_present.size()) {
    throw Error(ErrorCode::kInvalidArgument, "outcome and cue vectors differ in length");
  }
  MosaicTable m;
  m.cue = std::move(cue);
  for (std::size_t i = 0; i < cue_present.size(); ++i) {
    if (cue_present[i]) {
      (outcome_positive[i] ? m.counts.a : m.counts.b)++;
    } else {
      (outcome_positive[i] ? m.counts.c : m.counts.d)++;
    }
  }
  m.test = chi_squared_2x2(m.counts);
  m.present_recid_ratio = static_cast<double>(m.counts.a) / static_cast<double>(m.present_n());
  m.absent_recid_ratio = static_cast<double>(m.counts.c) / static_cast<double>(m.absent_n());
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptySample, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

MosaicTable mosaic_table(std::string cue, const std::vector<bool>& outcome_positive,
                         const std::vector<bool>& cue_present) {
  const std::size_t n = outcome_positive.size();
  if (cue_present.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "outcome and cue lengths differ");
  }
  auto outcome = std::make_unique<bool[]>(n);
  auto cue_flags = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    outcome[i] = outcome_positive[i];
    cue_flags[i] = cue_present[i];
  }
  return mosaic_table(std::move(cue), std::span<const bool>(outcome.get(), n),
                      std::span<const bool>(cue_flags.get(), n));
}

}  // namespace modtraj
