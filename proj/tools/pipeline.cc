#include "pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "modtraj/csv.h"
#include "modtraj/stats.h"

namespace modtraj::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return ss.str();
}

InputDigest digest(const fs::path& path, const std::string& bytes) {
  return {path.string(), sha256_hex(bytes), bytes.size()};
}

// Re-raises a parse failure with the offending file named.
template <typename F>
auto with_path(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string csv_end(std::optional<Timestamp> t) {
  if (!t || *t == kForever) return "";
  return std::to_string(*t);
}

json test_json(const std::optional<TestResult>& t) {
  if (!t) return nullptr;
  return {{"statistic", t->statistic}, {"p_value", t->p_value}, {"dof", t->dof}};
}

json opt_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json word_json(const LogOddsResult& r) {
  return {{"word", r.word}, {"z", r.z}, {"count_a", r.count_a}, {"count_b", r.count_b}};
}

}  // namespace

void RunConfig::validate() const {
  CohortConfig c = cohort;
  if (c.dataset_end <= 0) c.dataset_end = 1;
  c.validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (dataset_end_days && !(*dataset_end_days > 0)) fail("dataset-end-days must be positive");
  if (!(tolerance.fraction >= 0)) fail("tolerance must be non-negative");
  if (eval.c_grid.empty()) fail("c-grid is empty");
  for (double v : eval.c_grid) {
    if (!(v > 0)) fail("c-grid entries must be positive");
  }
  if (!(eval.dev_fraction >= 0 && eval.dev_fraction < 1)) fail("dev-fraction must be in [0, 1)");
  if (eval.epochs < 1) fail("epochs must be at least 1");
  synth.validate();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Loaded load(const RunConfig& cfg) {
  Loaded d;
  ParseOptions opts;
  opts.strict = cfg.strict;

  ReasonTable reasons = default_reason_table();
  if (cfg.reason_table) {
    std::string bytes = read_input(*cfg.reason_table);
    d.inputs.push_back(digest(*cfg.reason_table, bytes));
    std::istringstream in(bytes);
    reasons = with_path(*cfg.reason_table, [&] { return load_reason_table(in); });
  }
  d.lexicons = default_lexicons();
  if (cfg.lexicon) {
    std::string bytes = read_input(*cfg.lexicon);
    d.inputs.push_back(digest(*cfg.lexicon, bytes));
    std::istringstream in(bytes);
    d.lexicons = with_path(*cfg.lexicon, [&] { return load_lexicons(in); });
  }

  {
    std::string bytes = read_input(cfg.input_blocks);
    d.inputs.push_back(digest(cfg.input_blocks, bytes));
    std::istringstream in(bytes);
    auto parsed = with_path(cfg.input_blocks, [&] { return parse_block_log(in, opts); });
    d.entries = std::move(parsed.entries);
    d.skipped_blocks = parsed.skipped;
  }
  {
    std::string bytes = read_input(cfg.input_comments);
    d.inputs.push_back(digest(cfg.input_comments, bytes));
    std::istringstream in(bytes);
    auto parsed = with_path(cfg.input_comments, [&] { return load_comments(in, opts); });
    d.comments = std::move(parsed.index);
    d.skipped_comments = parsed.skipped;
  }
  if (d.entries.empty() && d.comments.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "both inputs are empty");
  }

  d.histories = reconstruct_block_histories(d.entries, reasons);
  d.timelines = build_timelines(d.comments, d.histories);
  d.cohort_cfg = cfg.cohort;
  d.cohort_cfg.dataset_end = cfg.dataset_end_days ? days_to_seconds(*cfg.dataset_end_days)
                                                  : latest_timestamp(d.comments, d.entries);
  d.cohort_cfg.validate();
  d.cohort = select_cohort(d.timelines, d.cohort_cfg);
  d.labels = label_cohort(d.timelines, d.cohort, d.cohort_cfg);
  return d;
}

std::vector<Artifact> ingest_artifacts(const Loaded& d) {
  std::ostringstream out;
  out << "user,span,start,original_end,effective_end,reduced_early,reduction_s,reason_category,"
         "entries\n";
  for (const auto& [user, spans] : d.histories.spans) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const BlockSpan& s = spans[i];
      out << csv_field(user) << ',' << i << ',' << s.start << ',' << csv_end(s.original_end) << ','
          << csv_end(s.effective_end) << ',' << fmt_bool(s.reduced_early) << ',' << s.reduction
          << ',' << reason_category_name(s.reason_category) << ',' << s.entries.size() << '\n';
    }
  }
  return {{"spans.csv", out.str()}};
}

std::vector<Artifact> cohort_artifacts(const Loaded& d) {
  std::ostringstream out;
  out << "user,first_block_start,exclusion\n";
  for (const auto& t : d.timelines) {
    const BlockSpan* first = t.first_span();
    if (!first) continue;
    out << csv_field(t.user) << ',' << first->start << ','
        << cohort_exclusion_name(cohort_check(t, d.cohort_cfg)) << '\n';
  }
  return {{"cohort.csv", out.str()}};
}

std::vector<Artifact> label_artifacts(const Loaded& d) {
  std::ostringstream out;
  write_labels_csv(out, d.labels);
  return {{"labels.csv", out.str()}};
}

std::vector<MatchedPair> all_pairs(const Loaded& d, const RunConfig& cfg) {
  std::vector<MatchedPair> out;
  auto append = [&out](const MatchResult& r) {
    out.insert(out.end(), r.pairs.begin(), r.pairs.end());
  };
  MatchResult departure = match_departure_pairs(d.timelines, d.labels, cfg.tolerance);
  append(departure);
  append(match_departure_controls(departure.pairs, d.timelines, d.labels, d.cohort_cfg,
                                  cfg.tolerance));
  append(match_recidivism_pairs(d.timelines, d.labels, RecidWindow::kShort));
  append(match_recidivism_pairs(d.timelines, d.labels, RecidWindow::kLong));
  append(match_recidivism_controls(d.timelines, d.labels));
  return out;
}

std::vector<Artifact> match_artifacts(const Loaded& d, const RunConfig& cfg) {
  std::ostringstream out;
  write_pairs_csv(out, all_pairs(d, cfg));
  return {{"pairs.csv", out.str()}};
}

std::vector<Artifact> feature_artifacts(const Loaded& d) {
  std::ostringstream out;
  write_features_csv(out, compute_features(d.timelines, d.cohort));
  return {{"features.csv", out.str()}};
}

std::vector<Artifact> cue_artifacts(const Loaded& d) {
  std::ostringstream out;
  write_cues_csv(out, compute_cues(d.timelines, d.cohort, d.lexicons));
  return {{"cues.csv", out.str()}};
}

std::vector<Artifact> stats_artifacts(const Loaded& d) {
  json j;
  j["parse"] = {{"block_entries", d.entries.size()},
                {"skipped_block_lines", d.skipped_blocks},
                {"comments", d.comments.size()},
                {"skipped_comment_lines", d.skipped_comments}};

  DatasetSummary s = summarize_dataset(d.entries, d.timelines, d.cohort);
  j["summary"] = {{"block_entries", s.block_entries},
                  {"log_entries", s.log_entries},
                  {"spans", s.spans},
                  {"blocked_users", s.blocked_users},
                  {"blocking_moderators", s.blocking_moderators},
                  {"users_any_disruption", s.users_any_disruption},
                  {"users_first_disruption", s.users_first_disruption},
                  {"cohort", s.cohort}};

  TrajectoryRates r = trajectory_rates(d.labels);
  j["rates"] = {{"n", r.n},
                {"departed_within_horizon", r.departed_within_horizon},
                {"departed_during_block", r.departed_during_block},
                {"recidivist_long", r.recidivist_long},
                {"recidivist_short", r.recidivist_short},
                {"never_reblocked", r.never_reblocked},
                {"median_time_to_reoffense_days", opt_json(r.median_time_to_reoffense_days)}};

  BlockDurationStats b = block_duration_stats(d.timelines, d.cohort);
  j["block_durations"] = {{"n", b.n},
                          {"median_days", b.median_days},
                          {"stddev_days", b.stddev_days},
                          {"unblock_rate", b.unblock_rate},
                          {"median_reduction_hours", opt_json(b.median_reduction_hours)}};

  SeverityAnalysis sev = severity_analysis(d.timelines, d.labels);
  j["severity"] = {{"departure_window_days", sev.departure_window_days},
                   {"n_short", sev.n_short},
                   {"n_long", sev.n_long},
                   {"departed_short", sev.departed_short},
                   {"departed_long", sev.departed_long},
                   {"recid_long_short", sev.recid_long_short},
                   {"recid_long_long", sev.recid_long_long},
                   {"recid_short_short", sev.recid_short_short},
                   {"recid_short_long", sev.recid_short_long},
                   {"departure_test", test_json(sev.departure_test)},
                   {"recid_long_test", test_json(sev.recid_long_test)},
                   {"recid_short_test", test_json(sev.recid_short_test)}};

  j["cue_detection"] = {{"approx", true}, {"method", "surface token patterns"}};

  // Mosaics over cohort users who wrote while blocked.
  std::vector<UserCues> cues = compute_cues(d.timelines, d.cohort, d.lexicons);
  std::map<UserId, const TrajectoryLabel*> label_of;
  for (const auto& l : d.labels) label_of[l.user] = &l;
  struct Outcome {
    const char* name;
    bool TrajectoryLabel::*field;
  };
  const Outcome outcomes[] = {{"recid_long", &TrajectoryLabel::recidivist_long},
                              {"recid_short", &TrajectoryLabel::recidivist_short},
                              {"departed_horizon", &TrajectoryLabel::departed_within_horizon}};
  json mosaics = json::array();
  for (Cue cue : kAllCues) {
    for (const auto& o : outcomes) {
      std::vector<bool> outcome, present;
      for (const auto& uc : cues) {
        if (uc.flags.n_messages == 0) continue;
        outcome.push_back(label_of.at(uc.user)->*o.field);
        present.push_back(uc.flags.has(cue));
      }
      json m = {{"cue", cue_name(cue)}, {"outcome", o.name}, {"n", outcome.size()}};
      try {
        MosaicTable t = mosaic_table(cue_name(cue), outcome, present);
        m["counts"] = {t.counts.a, t.counts.b, t.counts.c, t.counts.d};
        m["present_ratio"] = t.present_recid_ratio;
        m["absent_ratio"] = t.absent_recid_ratio;
        m["test"] = test_json(t.test);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateTable && e.code() != ErrorCode::kZeroExpectedCount) {
          throw;
        }
        m["degenerate"] = e.what();
      }
      mosaics.push_back(std::move(m));
    }
  }
  j["mosaics"] = std::move(mosaics);

  // Words of recidivists (a) against reformed users (b) while blocked.
  std::vector<UserId> recid, reformed;
  for (const auto& l : d.labels) (l.recidivist_long ? recid : reformed).push_back(l.user);
  json fw = {{"corpus_a", "recid_long"}, {"corpus_b", "reformed"}};
  try {
    auto words = fightin_words(in_block_bag(d.timelines, recid), in_block_bag(d.timelines, reformed));
    constexpr std::size_t kTop = 30;
    json top_a = json::array(), top_b = json::array();
    for (std::size_t i = 0; i < std::min(kTop, words.size()); ++i) {
      top_a.push_back(word_json(words[i]));
      top_b.push_back(word_json(words[words.size() - 1 - i]));
    }
    fw["top_a"] = std::move(top_a);
    fw["top_b"] = std::move(top_b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyCorpus) throw;
    fw["degenerate"] = e.what();
  }
  j["fightin_words"] = std::move(fw);

  return {{"stats.json", j.dump(2) + "\n"}};
}

std::vector<TaskPairs> task_pairs(const Loaded& d, const RunConfig& cfg) {
  return {
      {Task::kDeparture, match_departure_pairs(d.timelines, d.labels, cfg.tolerance).pairs},
      {Task::kRecidLong, match_recidivism_pairs(d.timelines, d.labels, RecidWindow::kLong).pairs},
      {Task::kRecidShort, match_recidivism_pairs(d.timelines, d.labels, RecidWindow::kShort).pairs},
  };
}

std::vector<Artifact> predict_artifacts(const Loaded& d, const RunConfig& cfg) {
  EvalReport report = run_all_tasks(task_pairs(d, cfg), compute_features(d.timelines, d.cohort),
                                    cfg.eval);
  std::ostringstream table, eval;
  write_accuracy_csv(table, report);
  write_eval_json(eval, report);
  return {{"accuracy.csv", table.str()}, {"eval.json", eval.str()}};
}

std::vector<Artifact> figure_artifacts(const Loaded& d) {
  constexpr int kMonths = 36;
  std::ostringstream out;
  out << "kind,month,condition,events,n,p,ci_lo,ci_hi\n";
  for (auto [kind, name] : {std::pair{HazardKind::kDeparture, "departure"},
                            std::pair{HazardKind::kBlock, "block"}}) {
    for (const auto& p : hazard_curves(d.timelines, kind, kMonths, d.cohort_cfg.dataset_end)) {
      out << name << ',' << p.month << ',' << hazard_condition_name(p.condition) << ','
          << p.events << ',' << p.n << ',' << fmt_double(p.p) << ',';
      if (p.ci) out << fmt_double(p.ci->lo) << ',' << fmt_double(p.ci->hi);
      else out << ',';
      out << '\n';
    }
  }
  return {{"hazard_curves.csv", out.str()}};
}

std::vector<Artifact> synth_artifacts(const RunConfig& cfg) {
  SynthCorpus corpus = generate(cfg.synth);
  std::ostringstream blocks, comments, truth;
  write_block_log(blocks, corpus.blocks);
  write_comments(comments, corpus.comments);
  write_truth_csv(truth, corpus.truth);
  return {{"blocks.jsonl", blocks.str()},
          {"comments.jsonl", comments.str()},
          {"truth.csv", truth.str()}};
}

void write_outputs(const RunConfig& cfg, const std::string& subcommand,
                   const std::vector<Artifact>& artifacts, const Loaded* loaded) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + cfg.out.string() + ": " + ec.message());

  json manifest;
  manifest["tool"] = "modtraj";
  manifest["version"] = kToolVersion;
  manifest["subcommand"] = subcommand;

  json config;
  if (subcommand == "synth") {
    const SynthConfig& s = cfg.synth;
    config = {{"n_users", s.n_users},
              {"seed", s.seed},
              {"block_rate", s.block_rate},
              {"apology_recid_odds_ratio", s.apology_recid_odds_ratio},
              {"horizon_days", s.horizon_days},
              {"short_window_days", s.short_window_days},
              {"min_tenure_days", s.min_tenure_days},
              {"min_comments", s.min_comments},
              {"burnin_days", s.community_burnin_days}};
  } else {
    const CohortConfig& c = loaded ? loaded->cohort_cfg : cfg.cohort;
    config = {{"horizon_days", c.horizon_days},
              {"short_window_days", c.short_window_days},
              {"min_comments", c.min_comments},
              {"min_tenure_days", c.min_tenure_days},
              {"burnin_days", c.community_burnin_days},
              {"dataset_end", c.dataset_end},
              {"tolerance", cfg.tolerance.fraction},
              {"seed", cfg.eval.seed},
              {"strict", cfg.strict},
              {"c_grid", cfg.eval.c_grid},
              {"dev_fraction", cfg.eval.dev_fraction},
              {"epochs", cfg.eval.epochs}};
  }
  manifest["config"] = std::move(config);

  json inputs = json::array();
  if (loaded) {
    for (const auto& in : loaded->inputs) {
      inputs.push_back({{"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes}});
    }
    manifest["counts"] = {{"block_entries", loaded->entries.size()},
                          {"skipped_block_lines", loaded->skipped_blocks},
                          {"comments", loaded->comments.size()},
                          {"skipped_comment_lines", loaded->skipped_comments},
                          {"users", loaded->timelines.size()},
                          {"cohort", loaded->cohort.size()}};
  }
  manifest["inputs"] = std::move(inputs);

  json listed = json::array();
  for (const auto& a : artifacts) {
    fs::path path = cfg.out / a.name;
    std::ofstream out(path, std::ios::binary);
    out << a.bytes;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    listed.push_back({{"name", a.name}, {"sha256", sha256_hex(a.bytes)}, {"bytes", a.bytes.size()}});
  }
  manifest["artifacts"] = std::move(listed);

  fs::path path = cfg.out / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

}  // namespace modtraj::cli
