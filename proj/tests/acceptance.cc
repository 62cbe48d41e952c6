// Acceptance suite. Prints one line per criterion and exits nonzero when any
// criterion fails. Criteria 11 to 15 need the processed public dataset: set
// MODTRAJ_DATASET_DIR to a directory holding blocks.jsonl and comments.jsonl.

#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "modtraj/lingcues.h"
#include "modtraj/model.h"
#include "modtraj/stats.h"
#include "oracles.h"
#include "pipeline.h"
#include "synth_util.h"

using namespace modtraj;
using namespace modtraj::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances, fixed here rather than tuned per run.
constexpr double kChiStatTol = 1e-9;         // relative
constexpr double kChiPTol = 1e-6;            // absolute
constexpr double kWilsonTol = 1e-12;         // absolute
constexpr double kFightinTol = 1e-9;         // absolute
constexpr double kPlantedP = 0.01;
constexpr double kNullP = 0.05;
constexpr int kNullReplicates = 100;
constexpr int kNullMinQuiet = 90;
constexpr double kClassifierMinAccuracy = 0.90;
constexpr double kClassifierMinMargin = 0.10;
constexpr double kClassifierP = 0.05;
constexpr double kDatasetRelTol = 0.05;
constexpr double kRateTol = 0.03;
constexpr double kMedianTtTolDays = 5;
constexpr double kDurationSdRelTol = 0.10;
constexpr double kReductionTolHours = 4;
constexpr double kSeverityMinGap = 0.03;
constexpr double kSeverityP = 0.01;
constexpr double kNoAssociationP = 0.05;
constexpr double kAccuracyTol = 0.03;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

// ---------------------------------------------------------------------------
// Always-on criteria
// ---------------------------------------------------------------------------

Outcome span_merging() {
  Rng rng(20240611);
  int equal = 0;
  constexpr int kLogs = 1000;
  for (int i = 0; i < kLogs; ++i) equal += spans_match_raster(random_block_log(rng), 10000);
  return pass_if(equal == kLogs, fmt("%d/%d random logs equal the raster", equal, kLogs));
}

// Pearson statistic from the cross product, p from the dof-1 tail
// Q(1/2, x/2) = erfc(sqrt(x/2)).
Outcome chi_squared() {
  const ContingencyTable2x2 tables[20] = {
      {10, 20, 30, 40},   {5, 5, 5, 5},       {1, 9, 9, 1},     {57, 105, 145, 233},
      {100, 1, 1, 100},   {3, 7, 11, 13},     {42, 58, 61, 39}, {1, 1, 1, 2},
      {250, 750, 300, 700}, {12, 0, 3, 9},    {0, 8, 4, 4},     {17, 23, 29, 31},
      {1000, 2000, 1100, 1900}, {6, 14, 2, 18}, {9, 9, 1, 30},  {33, 44, 55, 66},
      {2, 98, 8, 92},     {71, 29, 48, 52},   {15, 16, 17, 18}, {400, 5, 380, 25},
  };
  int ok = 0;
  double worst_stat = 0, worst_p = 0;
  for (const auto& t : tables) {
    const double n = static_cast<double>(t.total());
    const double cross = static_cast<double>(t.a) * t.d - static_cast<double>(t.b) * t.c;
    const double want = n * cross * cross /
                        (static_cast<double>(t.a + t.b) * static_cast<double>(t.c + t.d) *
                         static_cast<double>(t.a + t.c) * static_cast<double>(t.b + t.d));
    const double want_p = std::erfc(std::sqrt(want / 2));
    const TestResult got = chi_squared_2x2(t);
    const TestResult transposed = chi_squared_2x2(t.transposed());
    const double err = std::abs(got.statistic - want) / std::max(1.0, want);
    const double perr = std::abs(got.p_value - want_p);
    worst_stat = std::max(worst_stat, err);
    worst_p = std::max(worst_p, perr);
    ok += err <= kChiStatTol && perr <= kChiPTol &&
          close_rel(transposed.statistic, got.statistic, kChiStatTol) && got.dof == 1;
  }
  return pass_if(ok == 20, fmt("%d/20 tables; max rel stat err %.2e, max p err %.2e", ok,
                               worst_stat, worst_p));
}

// Wilson bounds solved directly from |p - phat| = z sqrt(p(1-p)/n).
Outcome wilson() {
  constexpr double z = 1.959963984540054;
  const std::pair<std::int64_t, std::int64_t> cases[20] = {
      {0, 10},  {10, 10}, {5, 10},   {3, 17},   {1, 1},     {0, 1},    {1, 2},
      {7, 9},   {50, 100}, {1, 100}, {99, 100}, {250, 1000}, {333, 999}, {12, 40},
      {2, 3},   {6026, 72332}, {18909, 21043}, {4, 7}, {0, 1000}, {1000, 1000},
  };
  int ok = 0;
  double worst = 0;
  for (const auto& [x, n] : cases) {
    const double nn = static_cast<double>(n), xx = static_cast<double>(x);
    const double root = z * std::sqrt(xx * (nn - xx) / nn + z * z / 4);
    double lo = (xx + z * z / 2 - root) / (nn + z * z);
    double hi = (xx + z * z / 2 + root) / (nn + z * z);
    if (x == 0) lo = 0;
    if (x == n) hi = 1;
    const Interval got = wilson_ci(x, n);
    const double err = std::max(std::abs(got.lo - lo), std::abs(got.hi - hi));
    worst = std::max(worst, err);
    const bool clamps = got.lo >= 0 && got.hi <= 1 && (x != 0 || got.lo == 0) &&
                        (x != n || got.hi == 1) && got.lo <= xx / nn && xx / nn <= got.hi;
    ok += err <= kWilsonTol && clamps;
  }
  return pass_if(ok == 20, fmt("%d/20 cases; max abs err %.2e", ok, worst));
}

BagOfWords bag(const std::string& text) {
  BagOfWords out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) ++out[w];
  return out;
}

// Log-odds with an informative Dirichlet prior, written out per word.
std::map<std::string, double> fightin_oracle(const BagOfWords& a, const BagOfWords& b,
                                             double alpha0) {
  double na = 0, nb = 0;
  for (const auto& [w, c] : a) na += static_cast<double>(c);
  for (const auto& [w, c] : b) nb += static_cast<double>(c);
  std::set<std::string> vocab;
  for (const auto& [w, c] : a) vocab.insert(w);
  for (const auto& [w, c] : b) vocab.insert(w);
  std::map<std::string, double> z;
  for (const auto& w : vocab) {
    const double ya = a.count(w) ? static_cast<double>(a.at(w)) : 0;
    const double yb = b.count(w) ? static_cast<double>(b.at(w)) : 0;
    const double aw = alpha0 * (ya + yb) / (na + nb);
    const double delta = std::log((ya + aw) / (na + alpha0 - ya - aw)) -
                         std::log((yb + aw) / (nb + alpha0 - yb - aw));
    z[w] = delta / std::sqrt(1 / (ya + aw) + 1 / (yb + aw));
  }
  return z;
}

Outcome fightin() {
  const BagOfWords a = bag(
      "i am sorry for the edit war and i apologize to everyone i will not revert again and i "
      "will discuss on the talk page before any change i regret my mistake and i ask for "
      "forgiveness please unblock me so i can help the article improve from now on");
  const BagOfWords b = bag(
      "why was i blocked this block is unfair and unjustified i was wrongly accused of vandalism "
      "by an admin who abused power the block is illegal and i will not accept it why should i "
      "apologize when i did nothing wrong at all and this is not fair to me");
  const auto want = fightin_oracle(a, b, 500);
  const auto got = fightin_words(a, b, 500);
  const auto swapped = fightin_words(b, a, 500);
  std::map<std::string, double> swapped_z;
  for (const auto& r : swapped) swapped_z[r.word] = r.z;
  double worst = 0;
  int flips = 0, nonzero = 0;
  bool same_vocab = got.size() == want.size();
  for (const auto& r : got) {
    auto it = want.find(r.word);
    if (it == want.end()) {
      same_vocab = false;
      continue;
    }
    worst = std::max(worst, std::abs(r.z - it->second));
    if (r.z != 0) {
      ++nonzero;
      flips += swapped_z.count(r.word) && std::signbit(swapped_z[r.word]) != std::signbit(r.z) &&
               std::abs(swapped_z[r.word] + r.z) <= kFightinTol;
    }
  }
  return pass_if(same_vocab && worst <= kFightinTol && flips == nonzero && nonzero > 0,
                 fmt("%zu words; max abs z err %.2e; %d/%d signs flip under swap", got.size(),
                     worst, flips, nonzero));
}

std::string pairs_csv(const MatchResult& r) {
  std::ostringstream out;
  write_pairs_csv(out, r.pairs);
  for (const auto& u : r.unmatched) out << "unmatched," << u << '\n';
  return out.str();
}

bool departure_control_ok(const MatchedPair& p, const std::vector<UserTimeline>& ts,
                          const std::vector<TrajectoryLabel>& labels, const CohortConfig& cfg,
                          double fraction) {
  const auto* anchor = find_label(labels, p.anchor);
  const auto* left = find_timeline(ts, p.left);
  const auto* right = find_timeline(ts, p.right);
  if (!anchor || !anchor->departure_time || !left || !right) return false;
  if (!left->spans.empty() || !right->spans.empty()) return false;
  const Timestamp date = *anchor->departure_time;
  const double gap = std::abs(to_days(*left->last_activity) - to_days(date));
  return gap <= fraction * to_days(date) && *right->first_activity <= date &&
         *right->last_activity >= date + cfg.horizon();
}

Outcome matching() {
  const CohortConfig cfg = matching_config();
  constexpr int kCohorts = 200;
  int ok = 0;
  std::int64_t pairs = 0;
  for (int seed = 0; seed < kCohorts; ++seed) {
    Rng rng(9000 + seed);
    const auto ts = random_population(rng, 80, 60);
    const auto labels = labels_for(ts, cfg);
    const auto dep = match_departure_pairs(ts, labels);
    const auto ctl = match_departure_controls(dep.pairs, ts, labels, cfg);
    const auto rs = match_recidivism_pairs(ts, labels, RecidWindow::kShort);
    const auto rl = match_recidivism_pairs(ts, labels, RecidWindow::kLong);
    const auto rc = match_recidivism_controls(ts, labels);
    bool good = true;
    for (const auto* r : {&dep, &ctl, &rs, &rl, &rc}) {
      good = good && pairs_disjoint(r->pairs);
      pairs += static_cast<std::int64_t>(r->pairs.size());
    }
    for (const auto& p : dep.pairs) good = good && departure_pair_ok(p, ts, labels, 0.01);
    for (const auto& p : ctl.pairs) good = good && departure_control_ok(p, ts, labels, cfg, 0.01);
    for (const auto* r : {&rs, &rl}) {
      for (const auto& p : r->pairs) good = good && recid_pair_ok(p, ts, labels);
    }
    for (const auto& p : rc.pairs) good = good && recid_control_ok(p, ts, labels);

    auto shuffled = labels;
    rng.shuffle(shuffled);
    good = good && pairs_csv(match_departure_pairs(ts, shuffled)) == pairs_csv(dep) &&
           pairs_csv(match_departure_controls(dep.pairs, ts, shuffled, cfg)) == pairs_csv(ctl) &&
           pairs_csv(match_recidivism_pairs(ts, shuffled, RecidWindow::kShort)) == pairs_csv(rs) &&
           pairs_csv(match_recidivism_pairs(ts, shuffled, RecidWindow::kLong)) == pairs_csv(rl) &&
           pairs_csv(match_recidivism_controls(ts, shuffled)) == pairs_csv(rc) &&
           pairs_csv(match_recidivism_controls(ts, labels)) == pairs_csv(rc);
    ok += good;
  }
  return pass_if(ok == kCohorts, fmt("%d/%d cohorts pass the exhaustive recheck and are order "
                                     "invariant (%lld pairs checked)",
                                     ok, kCohorts, static_cast<long long>(pairs)));
}

Outcome labels_vs_truth() {
  std::int64_t users = 0, mismatches = 0, labeled = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig cfg;
    cfg.n_users = 2000;
    cfg.seed = seed;
    const SynthRun run = run_synth(cfg);
    std::map<UserId, const TrajectoryLabel*> label_of;
    for (const auto& l : run.labels) label_of[l.user] = &l;
    for (const auto& t : run.corpus.truth) {
      ++users;
      const UserTimeline* tl = find_timeline(run.timelines, t.user);
      bool ok = tl && cohort_check(*tl, run.cohort_cfg) == t.exclusion;
      auto it = label_of.find(t.user);
      if (t.exclusion == CohortExclusion::kNone) {
        ok = ok && it != label_of.end();
        if (ok) {
          const TrajectoryLabel& l = *it->second;
          ++labeled;
          ok = l.departed_during_block == t.departed_during_block &&
               l.departed_within_horizon == t.departed_within_horizon &&
               l.recidivist_short == t.recidivist_short &&
               l.recidivist_long == t.recidivist_long && l.reformed == t.reformed &&
               l.time_to_reoffense_days.has_value() == t.time_to_reoffense_days.has_value() &&
               (!l.time_to_reoffense_days ||
                std::abs(*l.time_to_reoffense_days - *t.time_to_reoffense_days) < 1e-9);
        }
      } else {
        ok = ok && it == label_of.end();
      }
      mismatches += !ok;
    }
  }
  return pass_if(mismatches == 0,
                 fmt("%lld/%lld users agree (%lld cohort labels) over seeds 1-10",
                     static_cast<long long>(users - mismatches), static_cast<long long>(users),
                     static_cast<long long>(labeled)));
}

// Apology against long-term recidivism among cohort users who wrote while
// blocked.
MosaicTable apology_mosaic(const SynthConfig& cfg) {
  const SynthRun run = run_synth(cfg);
  const auto cues = compute_cues(run.timelines, run.cohort);
  std::map<UserId, bool> recid;
  for (const auto& l : run.labels) recid[l.user] = l.recidivist_long;
  std::vector<bool> outcome, present;
  for (const auto& uc : cues) {
    if (uc.flags.n_messages == 0) continue;
    outcome.push_back(recid.at(uc.user));
    present.push_back(uc.flags.apology);
  }
  return mosaic_table("apology", outcome, present);
}

Outcome planted_effect() {
  SynthConfig planted;
  planted.n_users = 2000;
  planted.seed = 7;
  planted.apology_recid_odds_ratio = 0.5;
  const MosaicTable effect = apology_mosaic(planted);
  const bool effect_ok = effect.present_recid_ratio < effect.absent_recid_ratio &&
                         effect.test.p_value < kPlantedP;

  int quiet = 0;
  for (int r = 0; r < kNullReplicates; ++r) {
    SynthConfig null_cfg;
    null_cfg.n_users = 2000;
    null_cfg.seed = 1000 + static_cast<std::uint64_t>(r);
    quiet += apology_mosaic(null_cfg).test.p_value > kNullP;
  }
  return pass_if(effect_ok && quiet >= kNullMinQuiet,
                 fmt("planted: recid %.3f with apology vs %.3f without, p = %.2e; null: %d/%d "
                     "replicates with p > %.2f",
                     effect.present_recid_ratio, effect.absent_recid_ratio, effect.test.p_value,
                     quiet, kNullReplicates, kNullP));
}

const LoocvResult& result_for(const TaskReport& r, FeatureSet set) {
  for (const auto& x : r.results) {
    if (x.set == set) return x;
  }
  throw std::runtime_error("missing feature set");
}

Outcome classifier() {
  const auto signal = planted_pairs(150, 4.0, 17);
  const EvalReport planted =
      run_all_tasks(std::vector<TaskPairs>{{Task::kDeparture, signal.pairs}}, signal.features);
  const TaskReport& t = planted.tasks.front();
  const double eng = result_for(t, FeatureSet::kEngagement).accuracy;
  const double reason = result_for(t, FeatureSet::kBaselineReason).accuracy;
  const double duration = result_for(t, FeatureSet::kBaselineDuration).accuracy;
  std::optional<double> p;
  for (std::size_t i = 0; i < t.results.size(); ++i) {
    if (t.results[i].set == FeatureSet::kEngagement) p = t.p_vs_baseline[i];
  }
  const bool signal_ok = !t.skipped && eng >= kClassifierMinAccuracy &&
                         eng - reason >= kClassifierMinMargin &&
                         eng - duration >= kClassifierMinMargin && p && *p < kClassifierP;

  const auto noise = planted_pairs(150, 0.0, 18);
  const EvalReport null_report =
      run_all_tasks(std::vector<TaskPairs>{{Task::kDeparture, noise.pairs}}, noise.features);
  const LoocvResult& null_eng = result_for(null_report.tasks.front(), FeatureSet::kEngagement);
  const auto n = static_cast<std::int64_t>(null_eng.labels.size());
  const Interval ci = wilson_ci(n / 2, n);
  const bool noise_ok = ci.lo <= null_eng.accuracy && null_eng.accuracy <= ci.hi;
  return pass_if(signal_ok && noise_ok,
                 fmt("planted: engagement %.3f, reason %.3f, duration %.3f, p = %.2e; noise: "
                     "engagement %.3f within [%.3f, %.3f]",
                     eng, reason, duration, p ? *p : 1.0, null_eng.accuracy, ci.lo, ci.hi));
}

Outcome cue_examples() {
  int ok = 0, n = 0;
  for (const auto& ex : kCueExamples) {
    ++n;
    bool exact = true;
    for (Cue cue : kAllCues) exact = exact && detect(cue, ex.text) == (cue == ex.cue);
    ok += exact;
  }
  return pass_if(ok == n, fmt("%d/%d example messages classify to exactly their cue", ok, n));
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[entry.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome pipeline_determinism() {
  const fs::path work = fs::temp_directory_path() / fmt("modtraj_accept_%d", ::getpid());
  fs::remove_all(work);
  const std::string cli = MODTRAJ_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const std::string in = (work / "in").string();
  bool ok = run("synth --seed 3 --n-users 400 --out " + in);
  const std::string inputs =
      " --input-blocks " + in + "/blocks.jsonl --input-comments " + in + "/comments.jsonl";
  ok = ok && run("all" + inputs + " --out " + (work / "a").string());
  ::setenv("MODTRAJ_THREADS", "3", 1);
  ok = ok && run("all" + inputs + " --out " + (work / "b").string());
  ::unsetenv("MODTRAJ_THREADS");
  if (!ok) {
    fs::remove_all(work);
    return {Status::kFail, "command line tool failed"};
  }
  const auto a = read_dir(work / "a");
  const auto b = read_dir(work / "b");
  fs::remove_all(work);
  int differing = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    differing += it == b.end() || it->second != bytes;
  }
  return pass_if(a.size() == b.size() && differing == 0 && a.size() == 11,
                 fmt("%zu files per run, %d differ", a.size(), differing));
}

// ---------------------------------------------------------------------------
// Dataset-gated criteria
// ---------------------------------------------------------------------------

struct DatasetRun {
  cli::RunConfig cfg;
  cli::Loaded data;
};

std::optional<DatasetRun>& dataset() {
  static std::optional<DatasetRun> d;
  return d;
}

std::string within(const char* name, double got, double want, bool ok) {
  return fmt("%s %.4g (want %.4g)%s", name, got, want, ok ? "" : " OUT");
}

Outcome dataset_tables() {
  const auto& d = dataset()->data;
  const DatasetSummary s = summarize_dataset(d.entries, d.timelines, d.cohort);
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"cohort", {double(s.cohort), 6026}},
      {"blocks", {double(s.block_entries), 104245}},
      {"blocked_users", {double(s.blocked_users), 72332}},
      {"moderators", {double(s.blocking_moderators), 1706}},
      {"any_disruption", {double(s.users_any_disruption), 21043}},
      {"first_disruption", {double(s.users_first_disruption), 18909}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, v] : rows) {
    const bool good = std::abs(v.first - v.second) <= kDatasetRelTol * v.second;
    ok = ok && good;
    detail += (detail.empty() ? "" : "; ") + within(name, v.first, v.second, good);
  }
  return pass_if(ok, detail);
}

Outcome dataset_rates() {
  const TrajectoryRates r = trajectory_rates(dataset()->data.labels);
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"within_horizon", {r.departed_within_horizon, 0.30}},
      {"during_block", {r.departed_during_block, 0.10}},
      {"recid_long", {r.recidivist_long, 0.385}},
      {"recid_short", {r.recidivist_short, 0.154}},
      {"never_reblocked", {r.never_reblocked, 0.477}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, v] : rows) {
    const bool good = std::abs(v.first - v.second) <= kRateTol;
    ok = ok && good;
    detail += (detail.empty() ? "" : "; ") + within(name, v.first, v.second, good);
  }
  const double tt = r.median_time_to_reoffense_days.value_or(NAN);
  const bool tt_ok = std::abs(tt - 32) <= kMedianTtTolDays;
  return pass_if(ok && tt_ok, detail + "; " + within("median_tt_days", tt, 32, tt_ok));
}

Outcome dataset_durations() {
  const auto& d = dataset()->data;
  const BlockDurationStats b = block_duration_stats(d.timelines, d.cohort);
  const bool median_ok = b.median_days == 1.0;
  const bool sd_ok = std::abs(b.stddev_days - 194) <= kDurationSdRelTol * 194;
  const bool unblock_ok = std::abs(b.unblock_rate - 0.15) <= kRateTol;
  const double red = b.median_reduction_hours.value_or(NAN);
  const bool red_ok = std::abs(red - 22) <= kReductionTolHours;
  return pass_if(median_ok && sd_ok && unblock_ok && red_ok,
                 within("median_days", b.median_days, 1, median_ok) + "; " +
                     within("sd_days", b.stddev_days, 194, sd_ok) + "; " +
                     within("unblock_rate", b.unblock_rate, 0.15, unblock_ok) + "; " +
                     within("median_reduction_h", red, 22, red_ok));
}

Outcome dataset_severity() {
  const auto& d = dataset()->data;
  const SeverityAnalysis s = severity_analysis(d.timelines, d.labels);
  const double gap = s.departed_long - s.departed_short;
  const double p_dep = s.departure_test ? s.departure_test->p_value : NAN;
  const double p_long = s.recid_long_test ? s.recid_long_test->p_value : NAN;
  const double p_short = s.recid_short_test ? s.recid_short_test->p_value : NAN;
  const bool ok = gap >= kSeverityMinGap && p_dep < kSeverityP && p_long >= kNoAssociationP &&
                  p_short >= kNoAssociationP;
  return pass_if(ok, fmt("departed long %.3f vs short %.3f (p = %.2e); recidivism p long %.3f, "
                         "short %.3f",
                         s.departed_long, s.departed_short, p_dep, p_long, p_short));
}

Outcome dataset_accuracies() {
  const auto& run = *dataset();
  const EvalReport report = run_all_tasks(cli::task_pairs(run.data, run.cfg),
                                          compute_features(run.data.timelines, run.data.cohort),
                                          run.cfg.eval);
  const std::map<std::pair<Task, FeatureSet>, double> want = {
      {{Task::kDeparture, FeatureSet::kBaselineReason}, 0.590},
      {{Task::kDeparture, FeatureSet::kBaselineDuration}, 0.567},
      {{Task::kDeparture, FeatureSet::kCommunityAge}, 0.586},
      {{Task::kDeparture, FeatureSet::kEngagement}, 0.614},
      {{Task::kDeparture, FeatureSet::kEngagementPlusAge}, 0.662},
      {{Task::kRecidLong, FeatureSet::kBaselineReason}, 0.529},
      {{Task::kRecidLong, FeatureSet::kBaselineDuration}, 0.500},
      {{Task::kRecidLong, FeatureSet::kCommunityAge}, 0.587},
      {{Task::kRecidLong, FeatureSet::kEngagement}, 0.590},
      {{Task::kRecidLong, FeatureSet::kEngagementPlusAge}, 0.606},
      {{Task::kRecidShort, FeatureSet::kBaselineReason}, 0.519},
      {{Task::kRecidShort, FeatureSet::kBaselineDuration}, 0.438},
      {{Task::kRecidShort, FeatureSet::kCommunityAge}, 0.563},
      {{Task::kRecidShort, FeatureSet::kEngagement}, 0.591},
      {{Task::kRecidShort, FeatureSet::kEngagementPlusAge}, 0.588},
  };
  int ok = 0, cells = 0;
  std::string detail;
  double best_departure = -1;
  FeatureSet best_set = FeatureSet::kBaselineReason;
  for (const auto& task : report.tasks) {
    for (const auto& r : task.results) {
      ++cells;
      const double w = want.at({task.task, r.set});
      const bool good = std::abs(r.accuracy - w) <= kAccuracyTol;
      ok += good;
      if (!good) {
        detail += fmt("%s%s/%s %.3f (want %.3f)", detail.empty() ? "" : "; ",
                      task_name(task.task), feature_set_name(r.set), r.accuracy, w);
      }
      if (task.task == Task::kDeparture && r.accuracy > best_departure) {
        best_departure = r.accuracy;
        best_set = r.set;
      }
    }
  }
  const bool order_ok = best_set == FeatureSet::kEngagementPlusAge;
  return pass_if(ok == 15 && cells == 15 && order_ok,
                 fmt("%d/%d cells within %.0f points; best departure set %s", ok, cells,
                     kAccuracyTol * 100, feature_set_name(best_set)) +
                     (detail.empty() ? "" : "; " + detail));
}

struct Criterion {
  int id;
  const char* name;
  bool needs_dataset;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "block-span merging equals the rasterization oracle", false, span_merging},
      {2, "chi-squared 2x2 matches the closed form", false, chi_squared},
      {3, "Wilson interval matches the direct formula", false, wilson},
      {4, "Fightin' Words matches the formula oracle", false, fightin},
      {5, "matched pairs satisfy their constraints", false, matching},
      {6, "trajectory labels equal generator truth", false, labels_vs_truth},
      {7, "planted apology effect is recovered, null is quiet", false, planted_effect},
      {8, "classifier recovers planted signal, noise is at chance", false, classifier},
      {9, "cue detectors label the example messages", false, cue_examples},
      {10, "full pipeline is byte-identical across runs", false, pipeline_determinism},
      {11, "dataset: cohort and upstream counts", true, dataset_tables},
      {12, "dataset: trajectory rates", true, dataset_rates},
      {13, "dataset: block duration statistics", true, dataset_durations},
      {14, "dataset: block severity and departure", true, dataset_severity},
      {15, "dataset: prediction accuracies", true, dataset_accuracies},
  };

  const char* dir = std::getenv("MODTRAJ_DATASET_DIR");
  std::string dataset_error;
  if (dir && *dir) {
    try {
      DatasetRun run;
      run.cfg.input_blocks = fs::path(dir) / "blocks.jsonl";
      run.cfg.input_comments = fs::path(dir) / "comments.jsonl";
      run.data = cli::load(run.cfg);
      dataset() = std::move(run);
    } catch (const std::exception& e) {
      dataset_error = e.what();
    }
  }

  int failed = 0, passed = 0, skipped = 0;
  for (const auto& c : criteria) {
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    if (c.needs_dataset && !dataset()) {
      o = dataset_error.empty()
              ? Outcome{Status::kSkip, "MODTRAJ_DATASET_DIR not set"}
              : Outcome{Status::kFail, "dataset could not be loaded: " + dataset_error};
    } else {
      try {
        o = c.run();
      } catch (const std::exception& e) {
        o = {Status::kFail, std::string("threw: ") + e.what()};
      }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL"
                                                                                    : "SKIP";
    std::printf("%s %2d %s: %s (%.1fs)\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.status == Status::kFail;
    passed += o.status == Status::kPass;
    skipped += o.status == Status::kSkip;
  }
  std::printf("%d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return failed == 0 ? 0 : 1;
}
