#include "modtraj/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "modtraj/csv.h"
#include "modtraj/parallel.h"
#include "modtraj/random.h"
#include "modtraj/stats.h"

namespace modtraj {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double dot(const std::vector<double>& w, const double* x) {
  double s = 0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

// Exact minimizer of the class-balanced hinge loss over the bias for fixed
// weights. Positive rows carry integer weight N and negative rows weight P,
// so each class totals P·N and the search runs in exact integer arithmetic.
double best_bias(const std::vector<double>& w, const Dataset& data, std::int64_t pos,
                 std::int64_t neg) {
  std::vector<std::pair<double, std::int64_t>> breaks;
  breaks.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double s = dot(w, data.row(i));
    if (data.y[i] > 0) breaks.emplace_back(1 - s, neg);
    else breaks.emplace_back(-1 - s, pos);
  }
  std::sort(breaks.begin(), breaks.end());
  // The slope starts at -P·N and rises by each break's weight.
  const std::int64_t target = pos * neg;
  std::int64_t cum = 0;
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    cum += breaks[k].second;
    if (cum < target) continue;
    if (cum == target && k + 1 < breaks.size()) {
      return 0.5 * (breaks[k].first + breaks[k + 1].first);
    }
    return breaks[k].first;
  }
  return 0;
}

std::pair<std::int64_t, std::int64_t> class_counts(std::span<const int> y) {
  std::int64_t pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg)++;
  return {pos, neg};
}

Dataset standardized(const FeatureMatrix& m, const Standardizer& st,
                     std::span<const std::size_t> rows) {
  Dataset d;
  d.cols = st.kept.size();
  d.x.reserve(rows.size() * d.cols);
  for (std::size_t r : rows) {
    const auto z = st.transform(m.row(r));
    d.x.insert(d.x.end(), z.begin(), z.end());
    d.y.push_back(m.labels[r]);
  }
  return d;
}

void validate_options(const EvalOptions& opts) {
  if (opts.c_grid.empty()) throw Error(ErrorCode::kGridEmpty, "the c grid is empty");
  for (double c : opts.c_grid) {
    if (!(c > 0) || !std::isfinite(c)) {
      throw Error(ErrorCode::kInvalidConfig, "c values must be positive, got " + fmt_double(c));
    }
  }
  if (!(opts.dev_fraction >= 0 && opts.dev_fraction < 1)) {
    throw Error(ErrorCode::kInvalidConfig, "dev fraction must be in [0, 1)");
  }
  if (opts.epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be at least 1");
}

}  // namespace

const char* feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::kBaselineReason: return "baseline_reason";
    case FeatureSet::kBaselineDuration: return "baseline_duration";
    case FeatureSet::kCommunityAge: return "community_age";
    case FeatureSet::kEngagement: return "engagement";
    case FeatureSet::kEngagementPlusAge: return "engagement_plus_age";
  }
  return "?";
}

bool is_baseline(FeatureSet set) {
  return set == FeatureSet::kBaselineReason || set == FeatureSet::kBaselineDuration;
}

std::vector<std::string> feature_columns(FeatureSet set) {
  static const std::vector<std::string> engagement = {
      "received_per_day", "contributed_per_day", "received_raw",
      "contributed_raw",  "received_spread",     "contributed_spread"};
  switch (set) {
    case FeatureSet::kBaselineReason: {
      std::vector<std::string> cols;
      for (ReasonCategory c : kDisruptionSubset) {
        cols.push_back(std::string("reason_") + reason_category_name(c));
      }
      return cols;
    }
    case FeatureSet::kBaselineDuration: return {"log1p_duration_days", "short_block"};
    case FeatureSet::kCommunityAge: return {"community_age_days"};
    case FeatureSet::kEngagement: return engagement;
    case FeatureSet::kEngagementPlusAge: {
      auto cols = engagement;
      cols.push_back("community_age_days");
      return cols;
    }
  }
  return {};
}

std::vector<double> feature_row(const UserFeatures& f, FeatureSet set) {
  const EngagementFeatures& e = f.engagement;
  auto engagement = [&] {
    return std::vector<double>{e.received_per_day,
                               e.contributed_per_day,
                               static_cast<double>(e.received_raw),
                               static_cast<double>(e.contributed_raw),
                               e.received_spread.value_or(kMissing),
                               e.contributed_spread.value_or(kMissing)};
  };
  switch (set) {
    case FeatureSet::kBaselineReason: {
      std::vector<double> row;
      for (ReasonCategory c : kDisruptionSubset) {
        row.push_back(f.context.reason_category == c ? 1.0 : 0.0);
      }
      return row;
    }
    case FeatureSet::kBaselineDuration:
      return {std::log1p(to_days(f.context.original_duration_s)),
              f.context.duration_class == DurationClass::kShort ? 1.0 : 0.0};
    case FeatureSet::kCommunityAge: return {e.community_age_days};
    case FeatureSet::kEngagement: return engagement();
    case FeatureSet::kEngagementPlusAge: {
      auto row = engagement();
      row.push_back(e.community_age_days);
      return row;
    }
  }
  return {};
}

const char* task_name(Task task) {
  switch (task) {
    case Task::kDeparture: return "departure";
    case Task::kRecidLong: return "recid_long";
    case Task::kRecidShort: return "recid_short";
  }
  return "?";
}

PairKind task_pair_kind(Task task) {
  switch (task) {
    case Task::kDeparture: return PairKind::kDepartureBlocked;
    case Task::kRecidLong: return PairKind::kRecidLong;
    case Task::kRecidShort: return PairKind::kRecidShort;
  }
  return PairKind::kDepartureBlocked;
}

FeatureMatrix build_feature_matrix(std::span<const MatchedPair> pairs,
                                   std::span<const UserFeatures> features, Task task,
                                   FeatureSet set) {
  std::map<UserId, int> label_of;
  const PairKind kind = task_pair_kind(task);
  for (const auto& p : pairs) {
    if (p.kind != kind) continue;
    for (const auto& [user, label] : {std::pair{p.left, 1}, std::pair{p.right, -1}}) {
      if (!label_of.emplace(user, label).second) {
        throw Error(ErrorCode::kInvalidArgument, user + " appears in more than one pair");
      }
    }
  }
  if (label_of.empty()) {
    throw Error(ErrorCode::kEmptyDataset, std::string("no ") + pair_kind_name(kind) + " pairs");
  }
  std::map<UserId, const UserFeatures*> by_user;
  for (const auto& f : features) by_user[f.user] = &f;

  FeatureMatrix m;
  m.set = set;
  m.task = task;
  m.columns = feature_columns(set);
  for (const auto& [user, label] : label_of) {
    const auto it = by_user.find(user);
    if (it == by_user.end()) throw Error(ErrorCode::kMissingFeature, "no features for " + user);
    const auto row = feature_row(*it->second, set);
    m.users.push_back(user);
    m.labels.push_back(label);
    m.values.insert(m.values.end(), row.begin(), row.end());
  }
  return m;
}

std::vector<double> Standardizer::transform(const double* raw) const {
  std::vector<double> z(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const double v = raw[kept[k]];
    z[k] = std::isnan(v) ? 0.0 : (v - mean[k]) / stddev[k];
  }
  return z;
}

Standardizer fit_standardizer(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  Standardizer st;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sum = 0;
    std::size_t seen = 0;
    for (std::size_t r : rows) {
      const double v = m.row(r)[j];
      if (std::isnan(v)) continue;
      sum += v;
      ++seen;
    }
    if (seen == 0) continue;
    const double mean = sum / static_cast<double>(seen);
    // Imputed entries equal the mean and add nothing to the sum of squares.
    double ss = 0;
    for (std::size_t r : rows) {
      const double v = m.row(r)[j];
      if (!std::isnan(v)) ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) continue;
    st.kept.push_back(j);
    st.mean.push_back(mean);
    st.stddev.push_back(sd);
  }
  return st;
}

double LinearModel::score(const double* x) const { return dot(weights, x) + bias; }

double svm_objective(const LinearModel& model, const Dataset& data) {
  const auto [pos, neg] = class_counts(data.y);
  const double n = static_cast<double>(data.rows());
  const double lambda = 1.0 / (model.c * n);
  double reg = 0;
  for (double w : model.weights) reg += w * w;
  double loss = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double margin = data.y[i] * model.score(data.row(i));
    const double weight = 0.5 / static_cast<double>(data.y[i] > 0 ? pos : neg);
    loss += weight * std::max(0.0, 1 - margin);
  }
  return 0.5 * lambda * reg + loss;
}

LinearModel train_linear_svm(const Dataset& data, double c, int epochs, std::uint64_t seed) {
  if (!(c > 0)) throw Error(ErrorCode::kInvalidArgument, "c must be positive");
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be at least 1");
  const auto [pos, neg] = class_counts(data.y);
  if (pos == 0 || neg == 0) throw Error(ErrorCode::kDegenerateInput, "labels have a single class");

  const std::size_t n = data.rows();
  const std::size_t d = data.cols;
  const double lambda = 1.0 / (c * static_cast<double>(n));
  // The optimum satisfies (λ/2)‖w‖² <= 1, so iterates are kept in that ball.
  const double radius = std::sqrt(2.0 / lambda);
  const double scale_pos = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  const double scale_neg = static_cast<double>(n) / (2.0 * static_cast<double>(neg));

  std::vector<double> w(d, 0.0), avg(d, 0.0);
  double b = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(epochs) * n;
  const std::uint64_t avg_from = total / 2;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::uint64_t t = 0;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double* x = data.row(i);
      const double y = data.y[i];
      const bool violated = y * (dot(w, x) + b) < 1;
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      for (double& v : w) v *= shrink;
      if (violated) {
        const double step = eta * y * (y > 0 ? scale_pos : scale_neg);
        for (std::size_t j = 0; j < d; ++j) w[j] += step * x[j];
      }
      double norm = 0;
      for (double v : w) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > radius) {
        for (double& v : w) v *= radius / norm;
      }
      if (t > avg_from) {
        for (std::size_t j = 0; j < d; ++j) avg[j] += w[j];
      }
    }
    b = best_bias(w, data, pos, neg);
  }

  LinearModel last{w, b, c};
  for (double& v : avg) v /= static_cast<double>(total - avg_from);
  LinearModel averaged{avg, best_bias(avg, data, pos, neg), c};
  return svm_objective(averaged, data) < svm_objective(last, data) ? averaged : last;
}

int SvmModel::predict(const double* raw) const {
  const auto z = standardization.transform(raw);
  return linear.predict(z.data());
}

SvmModel fit_svm(const FeatureMatrix& m, std::span<const std::size_t> rows, double c, int epochs,
                 std::uint64_t seed) {
  SvmModel model;
  model.standardization = fit_standardizer(m, rows);
  model.linear = train_linear_svm(standardized(m, model.standardization, rows), c, epochs, seed);
  return model;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const int> labels, double dev_fraction, std::uint64_t seed) {
  std::vector<std::size_t> dev, rest;
  for (int cls : {-1, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    Rng rng(derive_seed(seed, cls > 0 ? 1 : 0));
    rng.shuffle(members);
    const auto k = static_cast<std::size_t>(
        std::llround(dev_fraction * static_cast<double>(members.size())));
    dev.insert(dev.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(dev.begin(), dev.end());
  std::sort(rest.begin(), rest.end());
  return {dev, rest};
}

LoocvResult evaluate_loocv(const FeatureMatrix& m, const EvalOptions& opts) {
  validate_options(opts);
  if (m.rows() < 10) {
    throw Error(ErrorCode::kTooFewRows, std::to_string(m.rows()) + " rows, need at least 10");
  }
  const auto [dev, rest] = stratified_split(m.labels, opts.dev_fraction, opts.seed);
  std::vector<int> rest_labels;
  for (std::size_t r : rest) rest_labels.push_back(m.labels[r]);
  const auto [pos, neg] = class_counts(rest_labels);
  if (pos < 2 || neg < 2) {
    throw Error(ErrorCode::kTooFewRows, "each class needs two rows outside the dev split");
  }

  LoocvResult out;
  out.set = m.set;
  out.task = m.task;
  out.n_dev = dev.size();
  out.dev_accuracy.assign(opts.c_grid.size(), 0.0);
  if (!dev.empty()) {
    parallel_for(opts.c_grid.size(), [&](std::size_t g) {
      const SvmModel model = fit_svm(m, rest, opts.c_grid[g], opts.epochs, derive_seed(opts.seed, 2));
      std::size_t hits = 0;
      for (std::size_t r : dev) hits += model.predict(m.row(r)) == m.labels[r];
      out.dev_accuracy[g] = static_cast<double>(hits) / static_cast<double>(dev.size());
    });
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < opts.c_grid.size(); ++g) {
    const double a = out.dev_accuracy[g], b = out.dev_accuracy[best];
    if (a > b || (a == b && opts.c_grid[g] < opts.c_grid[best])) best = g;
  }
  out.chosen_c = opts.c_grid[best];

  out.predictions.assign(rest.size(), 0);
  parallel_for(rest.size(), [&](std::size_t k) {
    std::vector<std::size_t> train;
    train.reserve(rest.size() - 1);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (i != k) train.push_back(rest[i]);
    }
    const SvmModel model =
        fit_svm(m, train, out.chosen_c, opts.epochs, derive_seed(opts.seed, 1000 + rest[k]));
    out.predictions[k] = model.predict(m.row(rest[k]));
  });
  std::size_t hits = 0;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    out.users.push_back(m.users[rest[k]]);
    out.labels.push_back(m.labels[rest[k]]);
    hits += out.predictions[k] == out.labels.back();
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(rest.size());
  return out;
}

EvalReport run_all_tasks(std::span<const TaskPairs> tasks, std::span<const UserFeatures> features,
                         const EvalOptions& opts) {
  validate_options(opts);
  EvalReport report;
  report.options = opts;
  for (const auto& tp : tasks) {
    TaskReport tr;
    tr.task = tp.task;
    try {
      for (FeatureSet set : kAllFeatureSets) {
        tr.results.push_back(
            evaluate_loocv(build_feature_matrix(tp.pairs, features, tp.task, set), opts));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyDataset && e.code() != ErrorCode::kTooFewRows) throw;
      tr.skipped = e.what();
      tr.results.clear();
      report.tasks.push_back(std::move(tr));
      continue;
    }
    const LoocvResult& reason = tr.results[0];
    const LoocvResult& duration = tr.results[1];
    tr.best_baseline = duration.accuracy > reason.accuracy ? FeatureSet::kBaselineDuration
                                                           : FeatureSet::kBaselineReason;
    const LoocvResult& base = duration.accuracy > reason.accuracy ? duration : reason;
    for (const auto& r : tr.results) {
      if (is_baseline(r.set)) {
        tr.p_vs_baseline.emplace_back();
        continue;
      }
      std::int64_t only_set = 0, only_base = 0;
      for (std::size_t i = 0; i < r.labels.size(); ++i) {
        if (r.correct(i) && !base.correct(i)) ++only_set;
        if (!r.correct(i) && base.correct(i)) ++only_base;
      }
      tr.p_vs_baseline.push_back(mcnemar_exact_p(only_set, only_base));
    }
    report.tasks.push_back(std::move(tr));
  }
  return report;
}

namespace {

std::optional<double> baseline_accuracy(const TaskReport& tr) {
  if (!tr.best_baseline) return std::nullopt;
  for (const auto& r : tr.results) {
    if (r.set == *tr.best_baseline) return r.accuracy;
  }
  return std::nullopt;
}

bool significant(const TaskReport& tr, std::size_t k) {
  const auto p = tr.p_vs_baseline[k];
  const auto base = baseline_accuracy(tr);
  return p && base && *p < 0.05 && tr.results[k].accuracy > *base;
}

}  // namespace

void write_accuracy_csv(std::ostream& out, const EvalReport& report) {
  out << "task,feature_set,accuracy,c,n_eval,n_dev,p_vs_baseline,significant\n";
  for (const auto& tr : report.tasks) {
    for (std::size_t k = 0; k < tr.results.size(); ++k) {
      const auto& r = tr.results[k];
      out << task_name(tr.task) << ',' << feature_set_name(r.set) << ',' << fmt_double(r.accuracy)
          << ',' << fmt_double(r.chosen_c) << ',' << r.labels.size() << ',' << r.n_dev << ','
          << fmt_double(tr.p_vs_baseline[k]) << ',' << fmt_bool(significant(tr, k)) << '\n';
    }
  }
}

void write_eval_json(std::ostream& out, const EvalReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["options"] = {{"c_grid", report.options.c_grid},
                    {"dev_fraction", report.options.dev_fraction},
                    {"seed", report.options.seed},
                    {"epochs", report.options.epochs}};
  doc["tasks"] = ordered_json::array();
  for (const auto& tr : report.tasks) {
    ordered_json t;
    t["task"] = task_name(tr.task);
    if (tr.skipped) t["skipped"] = *tr.skipped;
    t["best_baseline"] = tr.best_baseline ? ordered_json(feature_set_name(*tr.best_baseline))
                                          : ordered_json(nullptr);
    t["results"] = ordered_json::array();
    for (std::size_t k = 0; k < tr.results.size(); ++k) {
      const auto& r = tr.results[k];
      ordered_json e;
      e["feature_set"] = feature_set_name(r.set);
      e["accuracy"] = r.accuracy;
      e["chosen_c"] = r.chosen_c;
      e["dev_accuracy"] = r.dev_accuracy;
      e["n_dev"] = r.n_dev;
      e["n_eval"] = r.labels.size();
      e["p_vs_baseline"] =
          tr.p_vs_baseline[k] ? ordered_json(*tr.p_vs_baseline[k]) : ordered_json(nullptr);
      e["significant"] = significant(tr, k);
      ordered_json preds = ordered_json::array();
      for (std::size_t i = 0; i < r.users.size(); ++i) {
        preds.push_back({{"user", r.users[i]}, {"label", r.labels[i]}, {"prediction", r.predictions[i]}});
      }
      e["predictions"] = std::move(preds);
      t["results"].push_back(std::move(e));
    }
    doc["tasks"].push_back(std::move(t));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace modtraj
