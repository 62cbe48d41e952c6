#ifndef MODTRAJ_MATCHING_H_
#define MODTRAJ_MATCHING_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modtraj/common.h"
#include "modtraj/trajectory.h"

namespace modtraj {

enum class PairKind { kDepartureBlocked, kDepartureControl, kRecidShort, kRecidLong, kRecidControl };

const char* pair_kind_name(PairKind kind);

// left holds the positive outcome (departer, recidivist, first offender),
// right the comparison user (stayer, reformed, clean).
struct MatchedPair {
  PairKind kind = PairKind::kDepartureBlocked;
  UserId left;
  UserId right;
  // Days between the matched dates, or the left user's action count.
  double match_stat = 0;
  // For control pairs, the left user of the pair being mirrored.
  UserId anchor;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  // Users that found no partner, in scan order.
  std::vector<UserId> unmatched;
};

struct DateTolerance {
  // Allowed distance as a fraction of the reference date in days since the
  // dataset epoch, unless an absolute number of days is given.
  double fraction = 0.01;
  std::optional<double> absolute_days;

  double allowed_days(double reference_day) const {
    return absolute_days ? *absolute_days : fraction * reference_day;
  }
};

// Pairs each user who departed during their first block with a cohort user
// who stayed past the horizon and whose first block falls on the nearest
// date within tolerance. Departers are scanned by (block date, id); ties in
// distance go to the smaller id. Without replacement.
MatchResult match_departure_pairs(std::span<const UserTimeline> timelines,
                                  std::span<const TrajectoryLabel> labels, DateTolerance tol = {});

// For each departure pair, a never-blocked user whose last activity is
// nearest the blocked departer's departure date within tolerance (left) and
// a never-blocked user active from before that date until at least the
// horizon past it, taking the earliest such last activity (right). Control
// departers are assigned for all pairs first, stayers second. A pair is
// emitted only when both are found; otherwise the anchor is unmatched.
MatchResult match_departure_controls(std::span<const MatchedPair> departure_pairs,
                                     std::span<const UserTimeline> timelines,
                                     std::span<const TrajectoryLabel> labels,
                                     const CohortConfig& cfg, DateTolerance tol = {});

enum class RecidWindow { kShort, kLong };

// Authored actions of every kind with timestamp in (after, upto].
std::int64_t actions_between(const UserTimeline& t, Timestamp after, Timestamp upto);

// Authored actions of every kind strictly before the cutoff.
std::int64_t actions_before(const UserTimeline& t, Timestamp cutoff);

// Each recidivist within the window, with a actions between their first and
// second block, is paired with the reformed user whose post-first-block
// action count is the smallest value >= a, ties by id. Recidivists are
// scanned by (a, id). Without replacement.
MatchResult match_recidivism_pairs(std::span<const UserTimeline> timelines,
                                   std::span<const TrajectoryLabel> labels, RecidWindow window);

// Each cohort user, with p actions before their first block, is paired with
// a non-cohort user who had not been blocked by that time and had the
// smallest action count >= p before it, ties by id. Offenders are scanned
// by (p, id). Without replacement.
MatchResult match_recidivism_controls(std::span<const UserTimeline> timelines,
                                      std::span<const TrajectoryLabel> labels);

void write_pairs_csv(std::ostream& out, std::span<const MatchedPair> pairs);

}  // namespace modtraj

#endif  // MODTRAJ_MATCHING_H_
