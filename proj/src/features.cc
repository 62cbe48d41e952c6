#include "modtraj/features.h"

#include <ostream>
#include <set>

#include "modtraj/csv.h"
#include "modtraj/parallel.h"

namespace modtraj {

namespace {

bool counts(const CommentEvent& e, const ActivityOptions& opts) {
  return e.action == CommentAction::kAdd || (opts.include_edits && e.action == CommentAction::kEdit);
}

bool is_contribution(const CommentEvent& e, const UserId& user) {
  return e.page_kind == PageKind::kUserTalk && e.owner != user;
}

double tenure_days(const UserTimeline& t, Timestamp cutoff) {
  if (!t.first_activity || cutoff <= *t.first_activity) {
    throw Error(ErrorCode::kCutoffBeforeFirstActivity,
                "cutoff " + std::to_string(cutoff) + " is not after the first activity of " +
                    t.user);
  }
  return to_days(cutoff - *t.first_activity);
}

}  // namespace

ActivityLevels activity_levels(const UserTimeline& t, Timestamp cutoff, ActivityOptions opts) {
  const double days = tenure_days(t, cutoff);
  ActivityLevels out;
  for (const auto& e : t.authored) {
    if (e.timestamp >= cutoff) break;
    if (counts(e, opts) && is_contribution(e, t.user)) ++out.contributed_raw;
  }
  for (const auto& e : t.received) {
    if (e.timestamp >= cutoff) break;
    if (counts(e, opts)) ++out.received_raw;
  }
  out.received_per_day = static_cast<double>(out.received_raw) / days;
  out.contributed_per_day = static_cast<double>(out.contributed_raw) / days;
  return out;
}

ActivitySpread activity_spread(const UserTimeline& t, Timestamp cutoff, ActivityOptions opts) {
  std::set<std::string> pages, authors;
  std::int64_t contributed = 0, received = 0;
  for (const auto& e : t.authored) {
    if (e.timestamp >= cutoff) break;
    if (!counts(e, opts) || !is_contribution(e, t.user)) continue;
    ++contributed;
    pages.insert(e.owner);
  }
  for (const auto& e : t.received) {
    if (e.timestamp >= cutoff) break;
    if (!counts(e, opts)) continue;
    ++received;
    authors.insert(e.author);
  }
  ActivitySpread out;
  if (received > 0) out.received = static_cast<double>(authors.size()) / static_cast<double>(received);
  if (contributed > 0) {
    out.contributed = static_cast<double>(pages.size()) / static_cast<double>(contributed);
  }
  return out;
}

double community_age_days(const UserTimeline& t, Timestamp cutoff) { return tenure_days(t, cutoff); }

EngagementFeatures engagement_features(const UserTimeline& t, Timestamp cutoff,
                                       ActivityOptions opts) {
  const ActivityLevels levels = activity_levels(t, cutoff, opts);
  const ActivitySpread spread = activity_spread(t, cutoff, opts);
  EngagementFeatures f;
  f.received_per_day = levels.received_per_day;
  f.contributed_per_day = levels.contributed_per_day;
  f.received_raw = levels.received_raw;
  f.contributed_raw = levels.contributed_raw;
  f.received_spread = spread.received;
  f.contributed_spread = spread.contributed;
  f.community_age_days = community_age_days(t, cutoff);
  return f;
}

BlockContext block_context(const BlockSpan& span) {
  if (span.indefinite()) {
    throw Error(ErrorCode::kIndefiniteSpan, "block of " + span.target + " is indefinite");
  }
  BlockContext c;
  c.original_duration_s = span.original_duration();
  c.effective_duration_s = span.effective_duration();
  c.duration_class =
      c.original_duration_s <= kShortBlockMax ? DurationClass::kShort : DurationClass::kLong;
  c.reason_category = span.reason_category;
  c.unblocked_early = span.reduced_early;
  c.reduction_s = span.reduction;
  c.duration_unchanged = span.duration_unchanged();
  return c;
}

std::vector<UserFeatures> compute_features(std::span<const UserTimeline> timelines,
                                           std::span<const UserId> users, ActivityOptions opts) {
  std::vector<UserFeatures> out(users.size());
  parallel_for(users.size(), [&](std::size_t i) {
    const UserTimeline* t = find_timeline(timelines, users[i]);
    if (!t || !t->first_span()) {
      throw Error(ErrorCode::kMissingFeature, "no block history for " + users[i]);
    }
    const BlockSpan& first = *t->first_span();
    out[i].user = users[i];
    out[i].engagement = engagement_features(*t, first.start, opts);
    out[i].context = block_context(first);
  });
  return out;
}

void write_features_csv(std::ostream& out, std::span<const UserFeatures> features) {
  out << "user,received_per_day,contributed_per_day,received_raw,contributed_raw,"
         "received_spread,contributed_spread,community_age_days,duration_class,"
         "original_duration_s,effective_duration_s,reason_category,unblocked_early,reduction_s\n";
  for (const auto& f : features) {
    const auto& e = f.engagement;
    const auto& c = f.context;
    out << csv_field(f.user) << ',' << fmt_double(e.received_per_day) << ','
        << fmt_double(e.contributed_per_day) << ',' << e.received_raw << ',' << e.contributed_raw
        << ',' << fmt_double(e.received_spread) << ',' << fmt_double(e.contributed_spread) << ','
        << fmt_double(e.community_age_days) << ','
        << (c.duration_class == DurationClass::kShort ? "short" : "long") << ','
        << c.original_duration_s << ',' << c.effective_duration_s << ','
        << reason_category_name(c.reason_category) << ',' << fmt_bool(c.unblocked_early) << ','
        << c.reduction_s << '\n';
  }
}

SeverityAnalysis severity_analysis(std::span<const UserTimeline> timelines,
                                   std::span<const TrajectoryLabel> labels,
                                   double departure_window_days) {
  SeverityAnalysis s;
  s.departure_window_days = departure_window_days;
  const Seconds window = days_to_seconds(departure_window_days);
  ContingencyTable2x2 dep, rl, rs;
  auto add = [](ContingencyTable2x2& table, bool is_long, bool event) {
    if (is_long) (event ? table.a : table.b)++;
    else (event ? table.c : table.d)++;
  };
  for (const auto& label : labels) {
    const UserTimeline* t = find_timeline(timelines, label.user);
    if (!t || !t->first_span() || !t->last_activity) continue;
    const BlockSpan& first = *t->first_span();
    if (first.indefinite() || !first.duration_unchanged()) continue;
    const bool is_long = first.original_duration() > kShortBlockMax;
    add(dep, is_long, *t->last_activity <= first.start + window);
    add(rl, is_long, label.recidivist_long);
    add(rs, is_long, label.recidivist_short);
  }
  s.n_long = dep.a + dep.b;
  s.n_short = dep.c + dep.d;
  auto rate = [](std::int64_t k, std::int64_t n) {
    return n > 0 ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
  };
  s.departed_long = rate(dep.a, s.n_long);
  s.departed_short = rate(dep.c, s.n_short);
  s.recid_long_long = rate(rl.a, s.n_long);
  s.recid_long_short = rate(rl.c, s.n_short);
  s.recid_short_long = rate(rs.a, s.n_long);
  s.recid_short_short = rate(rs.c, s.n_short);
  auto test = [](const ContingencyTable2x2& t) -> std::optional<TestResult> {
    try {
      return chi_squared_2x2(t);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  s.departure_test = test(dep);
  s.recid_long_test = test(rl);
  s.recid_short_test = test(rs);
  return s;
}

}  // namespace modtraj
