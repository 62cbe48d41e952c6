#ifndef MODTRAJ_TRAJECTORY_H_
#define MODTRAJ_TRAJECTORY_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modtraj/common.h"
#include "modtraj/ingest.h"
#include "modtraj/stats.h"

namespace modtraj {

// Everything known about one user: their authored events, the events others
// left on their user talk page, and their merged block spans.
struct UserTimeline {
  UserId user;
  // Earliest and latest authored event of any action on any page.
  std::optional<Timestamp> first_activity;
  std::optional<Timestamp> last_activity;
  std::vector<CommentEvent> authored;
  std::vector<CommentEvent> received;
  std::vector<BlockSpan> spans;

  const BlockSpan* first_span() const { return spans.empty() ? nullptr : &spans.front(); }
};

// One timeline per user who authored an event, owns a user talk page with
// events on it, or was blocked. Sorted by user id.
std::vector<UserTimeline> build_timelines(const CommentIndex& comments,
                                          const BlockHistories& histories);

// Position of a user in a timeline list, or nullptr.
const UserTimeline* find_timeline(std::span<const UserTimeline> timelines, const UserId& user);

enum class RecidivismAnchor { kFirstStart, kFirstEnd };

struct CohortConfig {
  double horizon_days = 180;
  double short_window_days = 7;
  double min_tenure_days = 30;
  std::int64_t min_comments = 8;
  double community_burnin_days = 1826;
  Timestamp dataset_end = 0;
  RecidivismAnchor anchor = RecidivismAnchor::kFirstStart;

  // Throws kInvalidConfig.
  void validate() const;

  Seconds horizon() const { return days_to_seconds(horizon_days); }
  Seconds short_window() const { return days_to_seconds(short_window_days); }
  Seconds min_tenure() const { return days_to_seconds(min_tenure_days); }
  Seconds burnin() const { return days_to_seconds(community_burnin_days); }
};

// Latest timestamp present in either input; the default dataset end.
Timestamp latest_timestamp(const CommentIndex& comments, std::span<const BlockLogEntry> entries);

enum class CohortExclusion {
  kNone,
  kNeverBlocked,
  kIndefiniteFirstBlock,
  kNotDisruption,
  kNoActivity,
  kTooFewComments,
  kShortTenure,
  kDuringBurnin,
  kTooCloseToEnd,
};

const char* cohort_exclusion_name(CohortExclusion reason);

// Authored Add events strictly before the given time.
std::int64_t comments_before(const UserTimeline& t, Timestamp cutoff);

// The first failing filter, or kNone for cohort members.
CohortExclusion cohort_check(const UserTimeline& t, const CohortConfig& cfg);

// Cohort members in user-id order.
std::vector<UserId> select_cohort(std::span<const UserTimeline> timelines, const CohortConfig& cfg);

struct DepartureLabel {
  bool departed_during_block = false;
  bool departed_within_horizon = false;
  Timestamp departure_time = 0;
};

// Departure is the last authored event. A block longer than the horizon
// cannot make a departure after the horizon count as "during".
// Throws kNoAuthoredComments and kIndefiniteSpan.
DepartureLabel label_departure(const UserTimeline& t, const CohortConfig& cfg);

struct RecidivismLabel {
  bool recidivist_long = false;
  bool recidivist_short = false;
  // Days from the first span start to the second span start, for any
  // second span regardless of the horizon.
  std::optional<double> time_to_reoffense_days;
};

RecidivismLabel label_recidivism(const UserTimeline& t, const CohortConfig& cfg);

struct TrajectoryLabel {
  UserId user;
  bool departed_during_block = false;
  bool departed_within_horizon = false;
  bool recidivist_long = false;
  bool recidivist_short = false;
  bool reformed = false;
  std::optional<double> time_to_reoffense_days;
  std::optional<Timestamp> departure_time;
};

TrajectoryLabel label_user(const UserTimeline& t, const CohortConfig& cfg);

// Labels for the given cohort, in cohort order. Runs in parallel.
std::vector<TrajectoryLabel> label_cohort(std::span<const UserTimeline> timelines,
                                          std::span<const UserId> cohort, const CohortConfig& cfg);

void write_labels_csv(std::ostream& out, std::span<const TrajectoryLabel> labels);

// ---------------------------------------------------------------------------
// Hazard curves
// ---------------------------------------------------------------------------

inline constexpr Seconds kSecondsPerMonth = 30 * kSecondsPerDay;

enum class HazardKind { kDeparture, kBlock };

// Block history of a user at a community-age month. kNeverBlocked and
// kBlockedPrior partition the users alive at the month start by whether a
// span started before it. kBlockedDuring holds users with a span starting
// inside the month and overlaps the other two.
enum class HazardCondition { kNeverBlocked, kBlockedPrior, kBlockedDuring };

const char* hazard_condition_name(HazardCondition condition);

struct HazardPoint {
  int month = 0;
  HazardCondition condition = HazardCondition::kNeverBlocked;
  std::int64_t events = 0;
  std::int64_t n = 0;
  // nullopt when n == 0.
  std::optional<double> p;
  std::optional<Interval> ci;
};

// Month m is the community-age window [first + 30m days, first + 30(m+1)
// days). A user contributes to month m when they were alive at its start
// (last activity at or after it) and the whole month lies before
// dataset_end. Departure events: last activity inside the month. Block
// events: a span starting inside the month; for kBlockedDuring the event is
// a second span starting in the same month. Output is ordered by month, then
// condition.
std::vector<HazardPoint> hazard_curves(std::span<const UserTimeline> timelines, HazardKind kind,
                                       int months, Timestamp dataset_end);

void write_hazard_csv(std::ostream& out, std::span<const HazardPoint> points);

// ---------------------------------------------------------------------------
// Dataset summaries
// ---------------------------------------------------------------------------

struct DatasetSummary {
  std::int64_t block_entries = 0;       // Block actions in the log
  std::int64_t log_entries = 0;         // all actions
  std::int64_t spans = 0;               // merged spans
  std::int64_t blocked_users = 0;
  std::int64_t blocking_moderators = 0;  // distinct admins issuing Block
  std::int64_t users_any_disruption = 0;
  std::int64_t users_first_disruption = 0;
  std::int64_t cohort = 0;
};

DatasetSummary summarize_dataset(std::span<const BlockLogEntry> entries,
                                 std::span<const UserTimeline> timelines,
                                 std::span<const UserId> cohort);

struct TrajectoryRates {
  std::int64_t n = 0;
  double departed_within_horizon = 0;
  double departed_during_block = 0;
  double recidivist_long = 0;
  double recidivist_short = 0;
  double never_reblocked = 0;
  std::optional<double> median_time_to_reoffense_days;
};

TrajectoryRates trajectory_rates(std::span<const TrajectoryLabel> labels);

// Statistics of the cohort's first spans.
struct BlockDurationStats {
  std::int64_t n = 0;
  double median_days = 0;
  double stddev_days = 0;  // population standard deviation
  double unblock_rate = 0;
  std::optional<double> median_reduction_hours;
};

BlockDurationStats block_duration_stats(std::span<const UserTimeline> timelines,
                                        std::span<const UserId> cohort);

}  // namespace modtraj

#endif  // MODTRAJ_TRAJECTORY_H_
