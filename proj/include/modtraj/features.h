#ifndef MODTRAJ_FEATURES_H_
#define MODTRAJ_FEATURES_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "modtraj/common.h"
#include "modtraj/ingest.h"
#include "modtraj/stats.h"
#include "modtraj/trajectory.h"

namespace modtraj {

struct ActivityOptions {
  // Count Edit actions alongside Add actions.
  bool include_edits = false;
};

struct ActivityLevels {
  double received_per_day = 0;
  double contributed_per_day = 0;
  std::int64_t received_raw = 0;
  std::int64_t contributed_raw = 0;
};

// Contributed: the user's comments on other users' talk pages. Received:
// other users' comments on the user's own talk page. Both strictly before
// the cutoff, normalized by days since first activity.
// Throws kCutoffBeforeFirstActivity unless cutoff > first_activity.
ActivityLevels activity_levels(const UserTimeline& t, Timestamp cutoff, ActivityOptions opts = {});

struct ActivitySpread {
  // Distinct counterparts per comment; nullopt when there are no comments.
  std::optional<double> received;
  std::optional<double> contributed;
};

ActivitySpread activity_spread(const UserTimeline& t, Timestamp cutoff, ActivityOptions opts = {});

// Days from first activity to the cutoff. Throws like activity_levels.
double community_age_days(const UserTimeline& t, Timestamp cutoff);

struct EngagementFeatures {
  double received_per_day = 0;
  double contributed_per_day = 0;
  std::int64_t received_raw = 0;
  std::int64_t contributed_raw = 0;
  std::optional<double> received_spread;
  std::optional<double> contributed_spread;
  double community_age_days = 0;
};

EngagementFeatures engagement_features(const UserTimeline& t, Timestamp cutoff,
                                       ActivityOptions opts = {});

enum class DurationClass { kShort, kLong };

inline constexpr Seconds kShortBlockMax = kSecondsPerDay;

struct BlockContext {
  DurationClass duration_class = DurationClass::kShort;
  Seconds original_duration_s = 0;
  Seconds effective_duration_s = 0;
  ReasonCategory reason_category = ReasonCategory::kUnknown;
  bool unblocked_early = false;
  Seconds reduction_s = 0;
  // The span is a single Block that was never extended or lifted.
  bool duration_unchanged = false;
};

// Short means an imposed duration of at most one day. Throws kIndefiniteSpan.
BlockContext block_context(const BlockSpan& span);

struct UserFeatures {
  UserId user;
  EngagementFeatures engagement;
  BlockContext context;
};

// Features of each listed user at the start of their first block. Runs in
// parallel; output follows the order of users.
std::vector<UserFeatures> compute_features(std::span<const UserTimeline> timelines,
                                           std::span<const UserId> users,
                                           ActivityOptions opts = {});

// Columns: user, received_per_day, contributed_per_day, received_raw,
// contributed_raw, received_spread, contributed_spread, community_age_days,
// duration_class, original_duration_s, effective_duration_s,
// reason_category, unblocked_early, reduction_s. Undefined spreads are
// empty fields.
void write_features_csv(std::ostream& out, std::span<const UserFeatures> features);

// Short versus long first blocks among cohort users whose first block was
// never changed.
struct SeverityAnalysis {
  double departure_window_days = 30;
  std::int64_t n_short = 0;
  std::int64_t n_long = 0;
  double departed_short = 0;
  double departed_long = 0;
  double recid_long_short = 0;
  double recid_long_long = 0;
  double recid_short_short = 0;
  double recid_short_long = 0;
  // Rows long / short, columns event / no event. nullopt when degenerate.
  std::optional<TestResult> departure_test;
  std::optional<TestResult> recid_long_test;
  std::optional<TestResult> recid_short_test;
};

// Departure here is a last authored event within the window after the
// block start. labels must be aligned with users.
SeverityAnalysis severity_analysis(std::span<const UserTimeline> timelines,
                                   std::span<const TrajectoryLabel> labels,
                                   double departure_window_days = 30);

}  // namespace modtraj

#endif  // MODTRAJ_FEATURES_H_
