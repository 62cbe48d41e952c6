#ifndef MODTRAJ_SYNTH_H_
#define MODTRAJ_SYNTH_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modtraj/common.h"
#include "modtraj/ingest.h"
#include "modtraj/trajectory.h"

namespace modtraj {

// A stylized community. Blocked users are either planned cohort members,
// whose outcomes are assigned by exact quotas, or violators that fail exactly
// one cohort filter. Never-blocked users leave with a constant monthly
// hazard. Timestamps start at 0; the dataset ends at burn-in plus
// active_days.
struct SynthConfig {
  std::int64_t n_users = 2000;
  std::uint64_t seed = 1;

  double block_rate = 0.6;
  // Share of blocked users that fail one cohort filter.
  double filter_violation_rate = 0.1;
  // Never-blocked users: probability of leaving in each community-age month.
  double monthly_departure_hazard = 0.1;

  // Cohort outcome quotas. The during-block share is part of the horizon share.
  double departure_within_horizon = 0.30;
  double departure_during_block = 0.10;
  // Expected share of second blocks within the horizon and within the short
  // window; the short share is part of the long share.
  double recid_long_rate = 0.385;
  double recid_short_rate = 0.154;
  // Expected share of second blocks after the horizon.
  double reblock_after_horizon_rate = 0.138;

  // Share of cohort users with high pre-block activity, and the factor on
  // their odds of recidivism.
  double high_activity_rate = 0.3;
  double recid_multiplier_for_high_activity = 1.5;

  // Quota of cohort users writing on their own talk page while blocked, and
  // quotas of cues among them.
  double in_block_message_rate = 0.5;
  double apology_rate = 0.3;
  double question_rate = 0.25;
  double unfairness_rate = 0.2;
  // Factor on the odds of recidivism for users who apologize.
  double apology_recid_odds_ratio = 1.0;

  double unblock_rate = 0.15;
  double median_block_duration_days = 1;

  double horizon_days = 180;
  double short_window_days = 7;
  double min_tenure_days = 30;
  std::int64_t min_comments = 8;
  double community_burnin_days = 1826;
  double active_days = 1095;

  // Throws kInvalidConfig.
  void validate() const;

  Timestamp dataset_end() const;
  // Cohort settings matching the generator, with dataset_end filled in.
  CohortConfig cohort_config() const;
};

enum class SynthGroup { kNeverBlocked, kCohort, kViolator };

const char* synth_group_name(SynthGroup group);

// The planned trajectory of one user. Label fields are set for every user
// with a finite first block and an authored event.
struct SynthTruth {
  UserId user;
  SynthGroup group = SynthGroup::kNeverBlocked;
  CohortExclusion exclusion = CohortExclusion::kNeverBlocked;
  bool labeled = false;
  bool departed_during_block = false;
  bool departed_within_horizon = false;
  bool recidivist_short = false;
  bool recidivist_long = false;
  bool reformed = false;
  std::optional<double> time_to_reoffense_days;
  std::int64_t in_block_messages = 0;
  bool apology = false;
  bool direct_question = false;
  bool unfairness = false;
  bool high_activity = false;
};

struct SynthCorpus {
  std::vector<BlockLogEntry> blocks;     // sorted by time, then target
  std::vector<CommentEvent> comments;    // sorted by time, then id
  std::vector<SynthTruth> truth;         // sorted by user
  Timestamp dataset_end = 0;
};

// Identical configs give identical corpora. Single-threaded.
SynthCorpus generate(const SynthConfig& cfg);

// Columns: user, group, exclusion, departed_during, departed_horizon,
// recid_short, recid_long, reformed, tt_reoffense_days, in_block_messages,
// apology, direct_question, unfairness, high_activity. Label columns are
// empty for unlabeled users.
void write_truth_csv(std::ostream& out, std::span<const SynthTruth> truth);

}  // namespace modtraj

#endif  // MODTRAJ_SYNTH_H_
