#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modtraj/model.h"
#include "modtraj/random.h"
#include "modtraj/stats.h"
#include "oracles.h"

using namespace modtraj;
using namespace modtraj::testing;

namespace {

std::string id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05d", prefix, i);
  return buf;
}

// Balanced matrix: row i has label +1 for even i. signal shifts the first
// column by +-signal/2; other columns are pure noise.
FeatureMatrix planted_matrix(int n, int cols, double signal, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  for (int j = 0; j < cols; ++j) m.columns.push_back("x" + std::to_string(j));
  for (int i = 0; i < n; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    m.users.push_back(id("u", i));
    m.labels.push_back(y);
    for (int j = 0; j < cols; ++j) {
      m.values.push_back(rng.normal() + (j == 0 ? 0.5 * signal * y : 0.0));
    }
  }
  return m;
}

Dataset as_dataset(const FeatureMatrix& m) {
  Dataset d;
  d.cols = m.cols();
  d.x = m.values;
  d.y = m.labels;
  return d;
}

double train_accuracy(const LinearModel& model, const Dataset& d) {
  int hits = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) hits += model.predict(d.row(i)) == d.y[i];
  return static_cast<double>(hits) / static_cast<double>(d.rows());
}

}  // namespace

TEST_CASE("feature sets have the documented columns") {
  CHECK(feature_columns(FeatureSet::kEngagement).size() == 6);
  CHECK(feature_columns(FeatureSet::kEngagementPlusAge).size() == 7);
  CHECK(feature_columns(FeatureSet::kCommunityAge) ==
        std::vector<std::string>{"community_age_days"});
  CHECK(feature_columns(FeatureSet::kBaselineReason) ==
        std::vector<std::string>{"reason_personal_attack", "reason_harassment",
                                 "reason_edit_warring", "reason_disruptive_editing"});
  CHECK(feature_columns(FeatureSet::kBaselineDuration).size() == 2);
  for (FeatureSet s : kAllFeatureSets) {
    UserFeatures f;
    CHECK(feature_row(f, s).size() == feature_columns(s).size());
  }
}

TEST_CASE("feature_row values") {
  UserFeatures f;
  f.engagement.received_per_day = 1.5;
  f.engagement.received_raw = 9;
  f.engagement.contributed_spread = 0.25;
  f.engagement.community_age_days = 40;
  f.context.reason_category = ReasonCategory::kEditWarring;
  f.context.original_duration_s = 3 * kSecondsPerDay;
  f.context.duration_class = DurationClass::kLong;
  const auto eng = feature_row(f, FeatureSet::kEngagementPlusAge);
  CHECK(eng[0] == 1.5);
  CHECK(eng[2] == 9);
  CHECK(std::isnan(eng[4]));
  CHECK(eng[5] == 0.25);
  CHECK(eng[6] == 40);
  CHECK(feature_row(f, FeatureSet::kBaselineReason) == std::vector<double>{0, 0, 1, 0});
  const auto dur = feature_row(f, FeatureSet::kBaselineDuration);
  CHECK(dur[0] == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(dur[1] == 0);
}

TEST_CASE("build_feature_matrix") {
  SUBCASE("1,156 pairs give 2,312 balanced rows sorted by user") {
    const auto fx = planted_pairs(1156, 0, 3);
    const auto m = build_feature_matrix(fx.pairs, fx.features, Task::kDeparture,
                                        FeatureSet::kEngagement);
    CHECK(m.rows() == 2312);
    CHECK(std::count(m.labels.begin(), m.labels.end(), 1) == 1156);
    CHECK(std::is_sorted(m.users.begin(), m.users.end()));
    CHECK(m.values.size() == m.rows() * m.cols());
  }
  SUBCASE("column stats equal a recount from the features") {
    const auto fx = planted_pairs(200, 1, 4);
    for (FeatureSet set : kAllFeatureSets) {
      const auto m = build_feature_matrix(fx.pairs, fx.features, Task::kDeparture, set);
      for (std::size_t j = 0; j < m.cols(); ++j) {
        double sum_m = 0, sum_f = 0;
        int nan_m = 0, nan_f = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
          const double v = m.row(r)[j];
          if (std::isnan(v)) ++nan_m;
          else sum_m += v;
        }
        // Recount straight from the inputs, in input order.
        for (const auto& f : fx.features) {
          double v = 0;
          const std::string& col = m.columns[j];
          const auto& e = f.engagement;
          if (col == "received_per_day") v = e.received_per_day;
          else if (col == "contributed_per_day") v = e.contributed_per_day;
          else if (col == "received_raw") v = static_cast<double>(e.received_raw);
          else if (col == "contributed_raw") v = static_cast<double>(e.contributed_raw);
          else if (col == "received_spread") v = e.received_spread ? *e.received_spread : NAN;
          else if (col == "contributed_spread") v = e.contributed_spread ? *e.contributed_spread : NAN;
          else if (col == "community_age_days") v = e.community_age_days;
          else if (col == "log1p_duration_days") v = std::log1p(f.context.original_duration_s / 86400.0);
          else if (col == "short_block") v = f.context.original_duration_s <= 86400;
          else v = col == std::string("reason_") + reason_category_name(f.context.reason_category);
          if (std::isnan(v)) ++nan_f;
          else sum_f += v;
        }
        CHECK(nan_m == nan_f);
        CHECK(sum_m == doctest::Approx(sum_f).epsilon(1e-12));
      }
    }
  }
  SUBCASE("only pairs of the task's kind are used") {
    auto fx = planted_pairs(12, 0, 5);
    fx.pairs[0].kind = PairKind::kRecidLong;
    const auto m = build_feature_matrix(fx.pairs, fx.features, Task::kDeparture,
                                        FeatureSet::kCommunityAge);
    CHECK(m.rows() == 22);
    CHECK(build_feature_matrix(fx.pairs, fx.features, Task::kRecidLong, FeatureSet::kCommunityAge)
              .rows() == 2);
  }
  SUBCASE("errors") {
    const auto fx = planted_pairs(5, 0, 6);
    try {
      build_feature_matrix({}, fx.features, Task::kDeparture, FeatureSet::kEngagement);
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyDataset);
    }
    auto missing = fx.features;
    missing.pop_back();
    try {
      build_feature_matrix(fx.pairs, missing, Task::kDeparture, FeatureSet::kEngagement);
      FAIL("expected MissingFeature");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingFeature);
    }
  }
}

TEST_CASE("standardizer") {
  FeatureMatrix m;
  m.columns = {"a", "const", "gappy"};
  m.users = {"u0", "u1", "u2", "u3"};
  m.labels = {1, -1, 1, -1};
  m.values = {1, 5, 2, 3, 5, NAN, 5, 5, 4, 100, 5, 9};
  const std::vector<std::size_t> train = {0, 1, 2};
  const auto st = fit_standardizer(m, train);
  REQUIRE(st.kept == std::vector<std::size_t>{0, 2});
  CHECK(st.mean[0] == 3);
  CHECK(st.stddev[0] == doctest::Approx(std::sqrt(8.0 / 3)));
  CHECK(st.mean[1] == 3);
  // The imputed row sits at the mean and adds nothing to the spread.
  CHECK(st.stddev[1] == doctest::Approx(std::sqrt(2.0 / 3)));
  const auto z = st.transform(m.row(1));
  CHECK(z[0] == doctest::Approx(0));
  CHECK(z[1] == 0);

  SUBCASE("held-out rows do not leak into the fit") {
    FeatureMatrix perturbed = m;
    for (std::size_t j = 0; j < m.cols(); ++j) perturbed.values[3 * m.cols() + j] = -1e6;
    const auto st2 = fit_standardizer(perturbed, train);
    CHECK(st2.kept == st.kept);
    CHECK(st2.mean == st.mean);
    CHECK(st2.stddev == st.stddev);
  }
}

TEST_CASE("train_linear_svm") {
  SUBCASE("separable clusters are fit exactly") {
    Rng rng(1);
    Dataset d;
    d.cols = 2;
    for (int i = 0; i < 60; ++i) {
      const int y = i % 2 ? 1 : -1;
      d.y.push_back(y);
      d.x.push_back(3 * y + 0.5 * rng.normal());
      d.x.push_back(rng.normal());
    }
    CHECK(train_accuracy(train_linear_svm(d, 1.0, 50, 7), d) == 1.0);
  }
  SUBCASE("identical rows with balanced labels give one half") {
    Dataset d;
    d.cols = 2;
    for (int i = 0; i < 20; ++i) {
      d.y.push_back(i % 2 ? 1 : -1);
      d.x.push_back(0.3);
      d.x.push_back(-1.0);
    }
    CHECK(train_accuracy(train_linear_svm(d, 1.0, 20, 3), d) == 0.5);
  }
  SUBCASE("single class is rejected") {
    Dataset d;
    d.cols = 1;
    d.x = {1, 2, 3};
    d.y = {1, 1, 1};
    try {
      train_linear_svm(d, 1.0, 5, 1);
      FAIL("expected DegenerateInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerateInput);
    }
  }
  SUBCASE("same seed gives bit-identical models") {
    const auto d = as_dataset(planted_matrix(80, 3, 1.0, 9));
    const auto a = train_linear_svm(d, 1.0, 30, 11);
    const auto b = train_linear_svm(d, 1.0, 30, 11);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
  }
  SUBCASE("objective falls with more epochs") {
    double early = 0, late = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto d = as_dataset(planted_matrix(60, 3, 1.0, 100 + s));
      early += svm_objective(train_linear_svm(d, 1.0, 1, s), d);
      late += svm_objective(train_linear_svm(d, 1.0, 50, s), d);
    }
    CHECK(late < early);
  }
}

TEST_CASE("svm objective is within 1% of a grid search on small data") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = as_dataset(planted_matrix(20, 2, 1.5, seed));
    for (double c : {0.1, 1.0}) {
      const auto model = train_linear_svm(d, c, 50, seed);
      const double got = svm_objective(model, d);
      // Independent evaluation of the balanced objective: a dense grid over
      // w, and for each w every hinge breakpoint as the bias, which is where
      // a piecewise-linear convex loss attains its minimum.
      const double lambda = 1.0 / (c * 20);
      double best = 1e300;
      const double step = 0.02;
      for (double w0 = -4; w0 <= 4; w0 += step) {
        for (double w1 = -4; w1 <= 4; w1 += step) {
          double s[20];
          for (int i = 0; i < 20; ++i) s[i] = w0 * d.x[2 * i] + w1 * d.x[2 * i + 1];
          for (int k = 0; k < 20; ++k) {
            const double b = d.y[k] - s[k];
            double loss = 0;
            for (int i = 0; i < 20; ++i) loss += std::max(0.0, 1 - d.y[i] * (s[i] + b));
            best = std::min(best, 0.5 * lambda * (w0 * w0 + w1 * w1) + loss / 20);
          }
        }
      }
      CAPTURE(seed);
      CAPTURE(c);
      CHECK(got <= best * 1.01);
    }
  }
}

TEST_CASE("stratified_split") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i < 30 ? 1 : -1);
  const auto [dev, rest] = stratified_split(labels, 0.2, 42);
  CHECK(dev.size() == 10);
  CHECK(rest.size() == 40);
  CHECK(std::count_if(dev.begin(), dev.end(), [&](std::size_t i) { return labels[i] > 0; }) == 6);
  CHECK(std::is_sorted(dev.begin(), dev.end()));
  const auto again = stratified_split(labels, 0.2, 42);
  CHECK(again.first == dev);
  CHECK(stratified_split(labels, 0.2, 43).first != dev);
}

TEST_CASE("evaluate_loocv") {
  EvalOptions opts;
  opts.epochs = 20;
  SUBCASE("planted linear signal is recovered") {
    const auto r = evaluate_loocv(planted_matrix(200, 3, 4.0, 21), opts);
    CHECK(r.accuracy > 0.9);
    CHECK(r.labels.size() == 160);
    CHECK(r.n_dev == 40);
  }
  SUBCASE("pure noise stays near one half") {
    const auto r = evaluate_loocv(planted_matrix(200, 3, 0.0, 22), opts);
    const auto n = static_cast<std::int64_t>(r.labels.size());
    const Interval ci = wilson_ci(n / 2, n);
    CAPTURE(r.accuracy);
    CHECK(r.accuracy >= ci.lo);
    CHECK(r.accuracy <= ci.hi);
  }
  SUBCASE("rerun is identical") {
    const auto m = planted_matrix(60, 2, 1.0, 23);
    const auto a = evaluate_loocv(m, opts);
    const auto b = evaluate_loocv(m, opts);
    CHECK(a.predictions == b.predictions);
    CHECK(a.chosen_c == b.chosen_c);
    CHECK(a.dev_accuracy == b.dev_accuracy);
  }
  SUBCASE("affine rescaling of a column leaves predictions unchanged") {
    const auto m = planted_matrix(60, 3, 1.0, 24);
    auto scaled = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      scaled.values[r * m.cols() + 1] = 8 * m.values[r * m.cols() + 1] + 1000;
    }
    CHECK(evaluate_loocv(m, opts).predictions == evaluate_loocv(scaled, opts).predictions);
  }
  SUBCASE("errors") {
    EvalOptions empty = opts;
    empty.c_grid.clear();
    try {
      evaluate_loocv(planted_matrix(40, 2, 1.0, 25), empty);
      FAIL("expected GridEmpty");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kGridEmpty);
    }
    try {
      evaluate_loocv(planted_matrix(8, 2, 1.0, 26), opts);
      FAIL("expected TooFewRows");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTooFewRows);
    }
  }
}

TEST_CASE("run_all_tasks") {
  EvalOptions opts;
  opts.epochs = 20;
  SUBCASE("engagement signal beats both baselines") {
    auto fx = planted_pairs(150, 2.5, 31);
    std::vector<TaskPairs> tasks = {{Task::kDeparture, fx.pairs}, {Task::kRecidLong, {}}};
    const auto report = run_all_tasks(tasks, fx.features, opts);
    REQUIRE(report.tasks.size() == 2);
    const auto& dep = report.tasks[0];
    REQUIRE(!dep.skipped);
    REQUIRE(dep.results.size() == 5);
    const double base = std::max(dep.results[0].accuracy, dep.results[1].accuracy);
    const auto& eng = dep.results[3];
    CHECK(eng.set == FeatureSet::kEngagement);
    CHECK(eng.accuracy >= base + 0.10);
    REQUIRE(dep.p_vs_baseline[3]);
    CHECK(*dep.p_vs_baseline[3] < 0.05);
    CHECK(!dep.p_vs_baseline[0]);
    CHECK(report.tasks[1].skipped);

    std::ostringstream csv;
    write_accuracy_csv(csv, report);
    CHECK(csv.str().rfind("task,feature_set,accuracy,c,n_eval,n_dev,p_vs_baseline,significant\n", 0) == 0);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    std::ostringstream json;
    write_eval_json(json, report);
    CHECK(json.str().find("\"predictions\"") != std::string::npos);
  }
  SUBCASE("pair order does not matter") {
    auto fx = planted_pairs(40, 1.0, 32);
    std::vector<TaskPairs> a = {{Task::kDeparture, fx.pairs}};
    std::reverse(fx.pairs.begin(), fx.pairs.end());
    std::reverse(fx.features.begin(), fx.features.end());
    std::vector<TaskPairs> b = {{Task::kDeparture, fx.pairs}};
    std::ostringstream ja, jb;
    write_eval_json(ja, run_all_tasks(a, fx.features, opts));
    write_eval_json(jb, run_all_tasks(b, fx.features, opts));
    CHECK(ja.str() == jb.str());
  }
}
