#ifndef MODTRAJ_TOOLS_PIPELINE_H_
#define MODTRAJ_TOOLS_PIPELINE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modtraj/features.h"
#include "modtraj/ingest.h"
#include "modtraj/lingcues.h"
#include "modtraj/matching.h"
#include "modtraj/model.h"
#include "modtraj/synth.h"
#include "modtraj/trajectory.h"

namespace modtraj::cli {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
  std::filesystem::path input_blocks;
  std::filesystem::path input_comments;
  std::filesystem::path out;
  std::optional<std::filesystem::path> reason_table;
  std::optional<std::filesystem::path> lexicon;
  CohortConfig cohort;
  // Days since the epoch; the latest input timestamp when unset.
  std::optional<double> dataset_end_days;
  DateTolerance tolerance;
  std::uint64_t seed = 42;
  bool strict = false;
  EvalOptions eval;
  SynthConfig synth;

  // Throws kInvalidConfig.
  void validate() const;
};

struct InputDigest {
  std::string path;
  std::string sha256;
  std::size_t bytes = 0;
};

// Everything downstream stages need, built from the raw inputs.
struct Loaded {
  std::vector<InputDigest> inputs;
  std::vector<BlockLogEntry> entries;
  CommentIndex comments;
  std::size_t skipped_blocks = 0;
  std::size_t skipped_comments = 0;
  BlockHistories histories;
  std::vector<UserTimeline> timelines;
  CohortConfig cohort_cfg;
  CueLexicons lexicons;
  std::vector<UserId> cohort;
  std::vector<TrajectoryLabel> labels;
};

// Throws kIo naming the path when an input cannot be read.
Loaded load(const RunConfig& cfg);

struct Artifact {
  std::string name;
  std::string bytes;
};

std::vector<Artifact> ingest_artifacts(const Loaded& d);
std::vector<Artifact> cohort_artifacts(const Loaded& d);
std::vector<Artifact> label_artifacts(const Loaded& d);
std::vector<Artifact> match_artifacts(const Loaded& d, const RunConfig& cfg);
std::vector<Artifact> feature_artifacts(const Loaded& d);
std::vector<Artifact> cue_artifacts(const Loaded& d);
std::vector<Artifact> stats_artifacts(const Loaded& d);
std::vector<Artifact> predict_artifacts(const Loaded& d, const RunConfig& cfg);
std::vector<Artifact> figure_artifacts(const Loaded& d);
std::vector<Artifact> synth_artifacts(const RunConfig& cfg);

// Every matched pair: departure, departure controls, short and long
// recidivism, recidivism controls.
std::vector<MatchedPair> all_pairs(const Loaded& d, const RunConfig& cfg);

std::vector<TaskPairs> task_pairs(const Loaded& d, const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);

// Writes the artifacts and manifest.json into cfg.out. The manifest holds
// the config, input digests and artifact digests; no wall-clock data.
void write_outputs(const RunConfig& cfg, const std::string& subcommand,
                   const std::vector<Artifact>& artifacts, const Loaded* loaded);

}  // namespace modtraj::cli

#endif  // MODTRAJ_TOOLS_PIPELINE_H_
