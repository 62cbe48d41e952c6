#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pipeline.h"

namespace {

using modtraj::Error;
using modtraj::ErrorCode;
using namespace modtraj::cli;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int report(int status, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j = {{"error", kind}, {"message", message}, {"exit", status}};
  std::cerr << j.dump() << '\n';
  return status;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kGridEmpty:
      return kExitConfig;
    default:
      return kExitData;
  }
}

using Stage = std::function<std::vector<Artifact>(const Loaded&, const RunConfig&)>;

const std::map<std::string, Stage>& stages() {
  static const std::map<std::string, Stage> table = {
      {"ingest", [](const Loaded& d, const RunConfig&) { return ingest_artifacts(d); }},
      {"cohort", [](const Loaded& d, const RunConfig&) { return cohort_artifacts(d); }},
      {"label", [](const Loaded& d, const RunConfig&) { return label_artifacts(d); }},
      {"match", match_artifacts},
      {"features", [](const Loaded& d, const RunConfig&) { return feature_artifacts(d); }},
      {"cues", [](const Loaded& d, const RunConfig&) { return cue_artifacts(d); }},
      {"stats", [](const Loaded& d, const RunConfig&) { return stats_artifacts(d); }},
      {"predict", predict_artifacts},
      {"figures", [](const Loaded& d, const RunConfig&) { return figure_artifacts(d); }},
  };
  return table;
}

// Order of the stages chained by `all`.
const char* const kAllOrder[] = {"ingest",   "cohort", "label", "match",   "features",
                                 "cues",     "stats",  "predict", "figures"};

std::vector<Artifact> run_stages(const std::string& name, const RunConfig& cfg, const Loaded& d) {
  if (name != "all") return stages().at(name)(d, cfg);
  std::vector<Artifact> out;
  for (const char* stage : kAllOrder) {
    auto part = stages().at(stage)(d, cfg);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moderation trajectory analysis of block logs and talk-page comments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunConfig cfg;
  std::string input_blocks, input_comments, out = "out";
  std::string reason_table, lexicon;
  std::optional<double> dataset_end_days;
  std::vector<double> c_grid = cfg.eval.c_grid;
  std::uint64_t seed = 42;
  std::int64_t n_users = cfg.synth.n_users;
  double apology_or = cfg.synth.apology_recid_odds_ratio;
  double block_rate = cfg.synth.block_rate;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_option("--horizon-days", cfg.cohort.horizon_days)->capture_default_str();
    sub->add_option("--short-window-days", cfg.cohort.short_window_days)->capture_default_str();
    sub->add_option("--min-comments", cfg.cohort.min_comments)->capture_default_str();
    sub->add_option("--min-tenure-days", cfg.cohort.min_tenure_days)->capture_default_str();
    sub->add_option("--burnin-days", cfg.cohort.community_burnin_days)->capture_default_str();
    sub->add_option("--seed", seed)->capture_default_str();
  };
  auto add_inputs = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--input-blocks", input_blocks, "Block log, one JSON object per line")
        ->required();
    sub->add_option("--input-comments", input_comments, "Comment events, one JSON object per line")
        ->required();
    sub->add_option("--dataset-end-days", dataset_end_days,
                    "Dataset end in days since the epoch; default is the latest input timestamp");
    sub->add_option("--reason-table", reason_table, "JSON keyword table for block reasons");
    sub->add_option("--lexicon", lexicon, "JSON cue lexicons");
    sub->add_option("--tolerance", cfg.tolerance.fraction,
                    "Block date matching tolerance as a fraction of the date")
        ->capture_default_str();
    sub->add_flag("--strict", cfg.strict, "Fail on the first malformed line");
    sub->add_option("--c-grid", c_grid, "SVM regularization grid")->delimiter(',');
    sub->add_option("--dev-fraction", cfg.eval.dev_fraction)->capture_default_str();
    sub->add_option("--epochs", cfg.eval.epochs)->capture_default_str();
  };

  for (const auto& [name, stage] : stages()) add_inputs(app.add_subcommand(name));
  add_inputs(app.add_subcommand("all", "Run every stage"));

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  add_common(synth);
  synth->add_option("--n-users", n_users)->capture_default_str();
  synth->add_option("--block-rate", block_rate)->capture_default_str();
  synth->add_option("--apology-odds-ratio", apology_or,
                    "Factor on the odds of recidivism for users who apologize")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return report(kExitConfig, "config", e.what());
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    cfg.out = out;
    cfg.eval.c_grid = c_grid;
    cfg.eval.seed = seed;
    cfg.dataset_end_days = dataset_end_days;
    if (!input_blocks.empty()) cfg.input_blocks = input_blocks;
    if (!input_comments.empty()) cfg.input_comments = input_comments;
    if (!reason_table.empty()) cfg.reason_table = reason_table;
    if (!lexicon.empty()) cfg.lexicon = lexicon;
    cfg.synth.seed = seed;
    cfg.synth.n_users = n_users;
    cfg.synth.block_rate = block_rate;
    cfg.synth.apology_recid_odds_ratio = apology_or;
    cfg.synth.horizon_days = cfg.cohort.horizon_days;
    cfg.synth.short_window_days = cfg.cohort.short_window_days;
    cfg.synth.min_comments = cfg.cohort.min_comments;
    cfg.synth.min_tenure_days = cfg.cohort.min_tenure_days;
    cfg.synth.community_burnin_days = cfg.cohort.community_burnin_days;
    cfg.validate();

    if (sub == "synth") {
      write_outputs(cfg, sub, synth_artifacts(cfg), nullptr);
    } else {
      Loaded d = load(cfg);
      write_outputs(cfg, sub, run_stages(sub, cfg, d), &d);
    }
  } catch (const Error& e) {
    int status = exit_for(e.code());
    return report(status, status == kExitConfig ? "config" : "data", e.what());
  } catch (const std::exception& e) {
    return report(kExitInternal, "internal", e.what());
  }
  return 0;
}
