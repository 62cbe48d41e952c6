#include "modtraj/trajectory.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "modtraj/csv.h"
#include "modtraj/parallel.h"

namespace modtraj {

std::vector<UserTimeline> build_timelines(const CommentIndex& comments,
                                          const BlockHistories& histories) {
  std::set<UserId> users;
  for (const auto& [author, _] : comments.author_index()) users.insert(author);
  for (const auto& [owner, idx] : comments.owner_index()) {
    for (std::size_t i : idx) {
      if (comments.event(i).page_kind == PageKind::kUserTalk) {
        users.insert(owner);
        break;
      }
    }
  }
  for (const auto& [target, _] : histories.spans) users.insert(target);

  std::vector<UserTimeline> out(users.size());
  auto it = users.begin();
  for (auto& t : out) t.user = *it++;

  parallel_for(out.size(), [&](std::size_t k) {
    UserTimeline& t = out[k];
    for (std::size_t i : comments.authored_by(t.user)) t.authored.push_back(comments.event(i));
    for (std::size_t i : comments.on_page_of(t.user)) {
      const CommentEvent& e = comments.event(i);
      if (e.page_kind == PageKind::kUserTalk && e.author != t.user) t.received.push_back(e);
    }
    if (!t.authored.empty()) {
      t.first_activity = t.authored.front().timestamp;
      t.last_activity = t.authored.back().timestamp;
    }
    if (auto s = histories.spans.find(t.user); s != histories.spans.end()) t.spans = s->second;
  });
  return out;
}

const UserTimeline* find_timeline(std::span<const UserTimeline> timelines, const UserId& user) {
  auto it = std::lower_bound(timelines.begin(), timelines.end(), user,
                             [](const UserTimeline& t, const UserId& u) { return t.user < u; });
  return it != timelines.end() && it->user == user ? &*it : nullptr;
}

void CohortConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(horizon_days > 0)) fail("horizon_days must be positive");
  if (!(short_window_days > 0)) fail("short_window_days must be positive");
  if (!(short_window_days < horizon_days)) fail("short_window_days must be below horizon_days");
  if (!(min_tenure_days >= 0)) fail("min_tenure_days must be non-negative");
  if (min_comments < 0) fail("min_comments must be non-negative");
  if (!(community_burnin_days >= 0)) fail("community_burnin_days must be non-negative");
  if (dataset_end <= 0) fail("dataset_end must be positive");
}

Timestamp latest_timestamp(const CommentIndex& comments, std::span<const BlockLogEntry> entries) {
  Timestamp latest = 0;
  if (comments.size() > 0) latest = comments.events().back().timestamp;
  for (const auto& e : entries) latest = std::max(latest, e.timestamp);
  return latest;
}

const char* cohort_exclusion_name(CohortExclusion reason) {
  switch (reason) {
    case CohortExclusion::kNone: return "none";
    case CohortExclusion::kNeverBlocked: return "never_blocked";
    case CohortExclusion::kIndefiniteFirstBlock: return "indefinite_first_block";
    case CohortExclusion::kNotDisruption: return "not_disruption";
    case CohortExclusion::kNoActivity: return "no_activity";
    case CohortExclusion::kTooFewComments: return "too_few_comments";
    case CohortExclusion::kShortTenure: return "short_tenure";
    case CohortExclusion::kDuringBurnin: return "during_burnin";
    case CohortExclusion::kTooCloseToEnd: return "too_close_to_end";
  }
  return "?";
}

std::int64_t comments_before(const UserTimeline& t, Timestamp cutoff) {
  std::int64_t n = 0;
  for (const auto& e : t.authored) {
    if (e.timestamp >= cutoff) break;
    if (e.action == CommentAction::kAdd) ++n;
  }
  return n;
}

CohortExclusion cohort_check(const UserTimeline& t, const CohortConfig& cfg) {
  const BlockSpan* first = t.first_span();
  if (!first) return CohortExclusion::kNeverBlocked;
  if (first->indefinite()) return CohortExclusion::kIndefiniteFirstBlock;
  if (!in_disruption_subset(first->reason_category)) return CohortExclusion::kNotDisruption;
  if (!t.first_activity || *t.first_activity >= first->start) return CohortExclusion::kNoActivity;
  if (comments_before(t, first->start) < cfg.min_comments) return CohortExclusion::kTooFewComments;
  if (first->start - *t.first_activity < cfg.min_tenure()) return CohortExclusion::kShortTenure;
  if (first->start < cfg.burnin()) return CohortExclusion::kDuringBurnin;
  if (first->start > cfg.dataset_end - cfg.horizon()) return CohortExclusion::kTooCloseToEnd;
  return CohortExclusion::kNone;
}

std::vector<UserId> select_cohort(std::span<const UserTimeline> timelines, const CohortConfig& cfg) {
  cfg.validate();
  std::vector<char> keep(timelines.size(), 0);
  parallel_for(timelines.size(), [&](std::size_t i) {
    keep[i] = cohort_check(timelines[i], cfg) == CohortExclusion::kNone;
  });
  std::vector<UserId> out;
  for (std::size_t i = 0; i < timelines.size(); ++i) {
    if (keep[i]) out.push_back(timelines[i].user);
  }
  std::sort(out.begin(), out.end());
  return out;
}

DepartureLabel label_departure(const UserTimeline& t, const CohortConfig& cfg) {
  if (!t.last_activity) {
    throw Error(ErrorCode::kNoAuthoredComments, "user " + t.user + " has no authored events");
  }
  const BlockSpan* first = t.first_span();
  if (!first) throw Error(ErrorCode::kInvalidArgument, "user " + t.user + " was never blocked");
  if (first->indefinite()) {
    throw Error(ErrorCode::kIndefiniteSpan, "first block of " + t.user + " is indefinite");
  }
  DepartureLabel out;
  out.departure_time = *t.last_activity;
  out.departed_within_horizon = out.departure_time <= first->start + cfg.horizon();
  out.departed_during_block =
      out.departed_within_horizon && out.departure_time < first->effective_end;
  return out;
}

RecidivismLabel label_recidivism(const UserTimeline& t, const CohortConfig& cfg) {
  RecidivismLabel out;
  if (t.spans.size() < 2) return out;
  const BlockSpan& first = t.spans[0];
  const Timestamp second = t.spans[1].start;
  out.time_to_reoffense_days = to_days(second - first.start);
  const Timestamp anchor =
      cfg.anchor == RecidivismAnchor::kFirstStart ? first.start : first.effective_end;
  out.recidivist_long = second <= saturating_add(anchor, cfg.horizon());
  out.recidivist_short = second <= saturating_add(anchor, cfg.short_window());
  return out;
}

TrajectoryLabel label_user(const UserTimeline& t, const CohortConfig& cfg) {
  const DepartureLabel dep = label_departure(t, cfg);
  const RecidivismLabel rec = label_recidivism(t, cfg);
  TrajectoryLabel out;
  out.user = t.user;
  out.departed_during_block = dep.departed_during_block;
  out.departed_within_horizon = dep.departed_within_horizon;
  out.departure_time = dep.departure_time;
  out.recidivist_long = rec.recidivist_long;
  out.recidivist_short = rec.recidivist_short;
  out.reformed = !rec.recidivist_long;
  out.time_to_reoffense_days = rec.time_to_reoffense_days;
  return out;
}

std::vector<TrajectoryLabel> label_cohort(std::span<const UserTimeline> timelines,
                                          std::span<const UserId> cohort,
                                          const CohortConfig& cfg) {
  std::vector<TrajectoryLabel> out(cohort.size());
  parallel_for(cohort.size(), [&](std::size_t i) {
    const UserTimeline* t = find_timeline(timelines, cohort[i]);
    if (!t) throw Error(ErrorCode::kInvalidArgument, "no timeline for " + cohort[i]);
    out[i] = label_user(*t, cfg);
  });
  return out;
}

void write_labels_csv(std::ostream& out, std::span<const TrajectoryLabel> labels) {
  out << "user,departed_during,departed_horizon,recid_short,recid_long,reformed,"
         "tt_reoffense_days,departure_ts\n";
  for (const auto& l : labels) {
    out << csv_field(l.user) << ',' << fmt_bool(l.departed_during_block) << ','
        << fmt_bool(l.departed_within_horizon) << ',' << fmt_bool(l.recidivist_short) << ','
        << fmt_bool(l.recidivist_long) << ',' << fmt_bool(l.reformed) << ','
        << fmt_double(l.time_to_reoffense_days) << ',';
    if (l.departure_time) out << *l.departure_time;
    out << '\n';
  }
}

const char* hazard_condition_name(HazardCondition condition) {
  switch (condition) {
    case HazardCondition::kNeverBlocked: return "never_blocked_before";
    case HazardCondition::kBlockedPrior: return "blocked_prior";
    case HazardCondition::kBlockedDuring: return "blocked_during";
  }
  return "?";
}

std::vector<HazardPoint> hazard_curves(std::span<const UserTimeline> timelines, HazardKind kind,
                                       int months, Timestamp dataset_end) {
  if (months < 1) throw Error(ErrorCode::kInvalidArgument, "months must be at least 1");
  constexpr int kConditions = 3;
  std::vector<HazardPoint> points(static_cast<std::size_t>(months) * kConditions);
  for (int m = 0; m < months; ++m) {
    for (int c = 0; c < kConditions; ++c) {
      auto& p = points[static_cast<std::size_t>(m * kConditions + c)];
      p.month = m;
      p.condition = static_cast<HazardCondition>(c);
    }
  }
  auto bump = [&](int m, HazardCondition c, bool event) {
    auto& p = points[static_cast<std::size_t>(m * kConditions + static_cast<int>(c))];
    ++p.n;
    if (event) ++p.events;
  };

  for (const auto& t : timelines) {
    if (!t.first_activity) continue;
    const Timestamp first = *t.first_activity;
    const Timestamp last = *t.last_activity;
    for (int m = 0; m < months; ++m) {
      const Timestamp month_start = first + m * kSecondsPerMonth;
      const Timestamp month_end = month_start + kSecondsPerMonth;
      if (month_end > dataset_end || last < month_start) break;
      bool prior = false;
      int starts_inside = 0;
      for (const auto& s : t.spans) {
        if (s.start < month_start) prior = true;
        else if (s.start < month_end) ++starts_inside;
      }
      const bool departs = last < month_end;
      const bool event = kind == HazardKind::kDeparture ? departs : starts_inside > 0;
      bump(m, prior ? HazardCondition::kBlockedPrior : HazardCondition::kNeverBlocked, event);
      if (starts_inside > 0) {
        bump(m, HazardCondition::kBlockedDuring,
             kind == HazardKind::kDeparture ? departs : starts_inside > 1);
      }
    }
  }

  for (auto& p : points) {
    if (p.n == 0) continue;
    p.p = static_cast<double>(p.events) / static_cast<double>(p.n);
    p.ci = wilson_ci(p.events, p.n);
  }
  return points;
}

void write_hazard_csv(std::ostream& out, std::span<const HazardPoint> points) {
  out << "month,condition,p,ci_lo,ci_hi,n\n";
  for (const auto& p : points) {
    out << p.month << ',' << hazard_condition_name(p.condition) << ',' << fmt_double(p.p) << ',';
    if (p.ci) out << fmt_double(p.ci->lo) << ',' << fmt_double(p.ci->hi);
    else out << ',';
    out << ',' << p.n << '\n';
  }
}

DatasetSummary summarize_dataset(std::span<const BlockLogEntry> entries,
                                 std::span<const UserTimeline> timelines,
                                 std::span<const UserId> cohort) {
  DatasetSummary s;
  std::set<UserId> admins;
  s.log_entries = static_cast<std::int64_t>(entries.size());
  for (const auto& e : entries) {
    if (e.action != BlockAction::kBlock) continue;
    ++s.block_entries;
    admins.insert(e.admin);
  }
  s.blocking_moderators = static_cast<std::int64_t>(admins.size());
  for (const auto& t : timelines) {
    if (t.spans.empty()) continue;
    ++s.blocked_users;
    s.spans += static_cast<std::int64_t>(t.spans.size());
    if (in_disruption_subset(t.spans.front().reason_category)) ++s.users_first_disruption;
    if (std::any_of(t.spans.begin(), t.spans.end(),
                    [](const BlockSpan& b) { return in_disruption_subset(b.reason_category); })) {
      ++s.users_any_disruption;
    }
  }
  s.cohort = static_cast<std::int64_t>(cohort.size());
  return s;
}

TrajectoryRates trajectory_rates(std::span<const TrajectoryLabel> labels) {
  TrajectoryRates r;
  r.n = static_cast<std::int64_t>(labels.size());
  if (labels.empty()) return r;
  std::vector<double> delays;
  for (const auto& l : labels) {
    r.departed_within_horizon += l.departed_within_horizon;
    r.departed_during_block += l.departed_during_block;
    r.recidivist_long += l.recidivist_long;
    r.recidivist_short += l.recidivist_short;
    if (l.time_to_reoffense_days) delays.push_back(*l.time_to_reoffense_days);
    else r.never_reblocked += 1;
  }
  const double n = static_cast<double>(r.n);
  r.departed_within_horizon /= n;
  r.departed_during_block /= n;
  r.recidivist_long /= n;
  r.recidivist_short /= n;
  r.never_reblocked /= n;
  if (!delays.empty()) r.median_time_to_reoffense_days = median(std::move(delays));
  return r;
}

BlockDurationStats block_duration_stats(std::span<const UserTimeline> timelines,
                                        std::span<const UserId> cohort) {
  BlockDurationStats s;
  std::vector<double> days;
  std::vector<double> reductions;
  std::int64_t reduced = 0;
  for (const auto& user : cohort) {
    const UserTimeline* t = find_timeline(timelines, user);
    if (!t || !t->first_span() || t->first_span()->indefinite()) continue;
    const BlockSpan& b = *t->first_span();
    days.push_back(to_days(b.original_duration()));
    if (b.reduced_early) {
      ++reduced;
      reductions.push_back(static_cast<double>(b.reduction) / 3600.0);
    }
  }
  s.n = static_cast<std::int64_t>(days.size());
  if (days.empty()) return s;
  double mean = 0;
  for (double d : days) mean += d;
  mean /= static_cast<double>(days.size());
  double ss = 0;
  for (double d : days) ss += (d - mean) * (d - mean);
  s.stddev_days = std::sqrt(ss / static_cast<double>(days.size()));
  s.unblock_rate = static_cast<double>(reduced) / static_cast<double>(days.size());
  s.median_days = median(std::move(days));
  if (!reductions.empty()) s.median_reduction_hours = median(std::move(reductions));
  return s;
}

}  // namespace modtraj
