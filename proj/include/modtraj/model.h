#ifndef MODTRAJ_MODEL_H_
#define MODTRAJ_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modtraj/common.h"
#include "modtraj/features.h"
#include "modtraj/matching.h"

namespace modtraj {

enum class FeatureSet {
  kBaselineReason,
  kBaselineDuration,
  kCommunityAge,
  kEngagement,
  kEngagementPlusAge,
};

inline constexpr FeatureSet kAllFeatureSets[] = {
    FeatureSet::kBaselineReason, FeatureSet::kBaselineDuration, FeatureSet::kCommunityAge,
    FeatureSet::kEngagement, FeatureSet::kEngagementPlusAge};

const char* feature_set_name(FeatureSet set);
bool is_baseline(FeatureSet set);
std::vector<std::string> feature_columns(FeatureSet set);

// One row of the set's columns. Undefined spreads are NaN.
std::vector<double> feature_row(const UserFeatures& f, FeatureSet set);

enum class Task { kDeparture, kRecidLong, kRecidShort };

inline constexpr Task kAllTasks[] = {Task::kDeparture, Task::kRecidLong, Task::kRecidShort};

const char* task_name(Task task);

// The pair kind whose left users are the task's positive class.
PairKind task_pair_kind(Task task);

// Row-major values, rows sorted by user id. NaN marks a missing value.
struct FeatureMatrix {
  FeatureSet set = FeatureSet::kEngagement;
  Task task = Task::kDeparture;
  std::vector<std::string> columns;
  std::vector<UserId> users;
  std::vector<double> values;
  // +1 for the left user of a pair, -1 for the right.
  std::vector<int> labels;

  std::size_t rows() const { return users.size(); }
  std::size_t cols() const { return columns.size(); }
  const double* row(std::size_t r) const { return values.data() + r * cols(); }
};

// Both users of every pair of the task's kind become rows. Throws
// kEmptyDataset, kMissingFeature, or kInvalidArgument for a user listed twice.
FeatureMatrix build_feature_matrix(std::span<const MatchedPair> pairs,
                                   std::span<const UserFeatures> features, Task task,
                                   FeatureSet set);

// Per-column mean and standard deviation over training rows, with missing
// values replaced by the column mean. Constant columns are dropped.
struct Standardizer {
  std::vector<std::size_t> kept;
  std::vector<double> mean;
  std::vector<double> stddev;

  // Standardized values of the kept columns of a raw row.
  std::vector<double> transform(const double* raw) const;
};

Standardizer fit_standardizer(const FeatureMatrix& m, std::span<const std::size_t> rows);

// Rows for training: row-major values and labels in {-1, +1}.
struct Dataset {
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t rows() const { return y.size(); }
  const double* row(std::size_t r) const { return x.data() + r * cols; }
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0;
  double c = 0;

  double score(const double* x) const;
  // Ties go to +1.
  int predict(const double* x) const { return score(x) >= 0 ? 1 : -1; }
};

// Class-balanced objective: (λ/2)‖w‖² + Σ_i ω_i hinge(y_i(w·x_i + b)) with
// λ = 1/(c·n) and ω_i = 1/(2·n_class(i)). With balanced labels ω_i = 1/n.
double svm_objective(const LinearModel& model, const Dataset& data);

// Stochastic subgradient descent on the objective above with step 1/(λt),
// each epoch visiting rows in a seeded shuffled order. The bias is set to its
// exact minimizer after each epoch. Returns the lower-objective model of the
// final iterate and the average over the second half of the iterations.
// Throws kDegenerateInput for single-class labels, kInvalidArgument for
// c <= 0 or epochs < 1.
LinearModel train_linear_svm(const Dataset& data, double c, int epochs, std::uint64_t seed);

struct SvmModel {
  LinearModel linear;
  Standardizer standardization;

  int predict(const double* raw) const;
};

SvmModel fit_svm(const FeatureMatrix& m, std::span<const std::size_t> rows, double c, int epochs,
                 std::uint64_t seed);

struct EvalOptions {
  std::vector<double> c_grid{0.01, 0.1, 1, 10, 100};
  double dev_fraction = 0.2;
  std::uint64_t seed = 42;
  int epochs = 50;
};

// Seeded stratified split of row indices into (dev, rest), both ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const int> labels, double dev_fraction, std::uint64_t seed);

struct LoocvResult {
  FeatureSet set = FeatureSet::kEngagement;
  Task task = Task::kDeparture;
  double chosen_c = 0;
  // Dev accuracy per grid entry; zero when the dev split is empty.
  std::vector<double> dev_accuracy;
  std::size_t n_dev = 0;
  // Evaluated rows in canonical order.
  std::vector<UserId> users;
  std::vector<int> labels;
  std::vector<int> predictions;
  double accuracy = 0;

  bool correct(std::size_t i) const { return predictions[i] == labels[i]; }
};

// c is chosen on the dev split (ties to the smaller c), then every remaining
// row is predicted by a model fitted on all other remaining rows. Folds run
// in parallel. Throws kGridEmpty, kTooFewRows (< 10 rows), kInvalidConfig.
LoocvResult evaluate_loocv(const FeatureMatrix& m, const EvalOptions& opts = {});

struct TaskPairs {
  Task task = Task::kDeparture;
  std::vector<MatchedPair> pairs;
};

struct TaskReport {
  Task task = Task::kDeparture;
  // Why the task was not evaluated, when it was not.
  std::optional<std::string> skipped;
  std::vector<LoocvResult> results;  // in kAllFeatureSets order
  std::optional<FeatureSet> best_baseline;
  // Exact McNemar p of each non-baseline set against the best baseline.
  std::vector<std::optional<double>> p_vs_baseline;
};

struct EvalReport {
  EvalOptions options;
  std::vector<TaskReport> tasks;
};

// Every feature set on every task. A task with too few rows is reported as
// skipped rather than failing the run.
EvalReport run_all_tasks(std::span<const TaskPairs> tasks, std::span<const UserFeatures> features,
                         const EvalOptions& opts = {});

// Columns: task, feature_set, accuracy, c, n_eval, n_dev, p_vs_baseline,
// significant. Skipped tasks have no rows.
void write_accuracy_csv(std::ostream& out, const EvalReport& report);

// The full report with per-row predictions.
void write_eval_json(std::ostream& out, const EvalReport& report);

}  // namespace modtraj

#endif  // MODTRAJ_MODEL_H_
