#include "modtraj/matching.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "modtraj/csv.h"

namespace modtraj {

namespace {

using Keyed = std::pair<Timestamp, UserId>;

const UserTimeline& timeline_of(std::span<const UserTimeline> timelines, const UserId& user) {
  const UserTimeline* t = find_timeline(timelines, user);
  if (!t) throw Error(ErrorCode::kInvalidArgument, "no timeline for " + user);
  return *t;
}

const BlockSpan& first_span_of(const UserTimeline& t) {
  if (!t.first_span()) throw Error(ErrorCode::kInvalidArgument, t.user + " was never blocked");
  return *t.first_span();
}

Seconds window_seconds(double days) {
  return static_cast<Seconds>(std::ceil(days * static_cast<double>(kSecondsPerDay))) + 1;
}

// Nearest entry to target in a (time, id) set within allowed days, ties by
// id. Entries failing accept are skipped.
template <typename Accept>
std::set<Keyed>::iterator nearest(std::set<Keyed>& pool, Timestamp target, double allowed_days,
                                  Accept&& accept) {
  const Seconds reach = window_seconds(allowed_days);
  auto best = pool.end();
  Seconds best_delta = 0;
  for (auto it = pool.lower_bound({target - reach, UserId()});
       it != pool.end() && it->first <= target + reach; ++it) {
    const Seconds delta = it->first > target ? it->first - target : target - it->first;
    if (to_days(delta) > allowed_days || !accept(*it)) continue;
    if (best == pool.end() || delta < best_delta ||
        (delta == best_delta && it->second < best->second)) {
      best = it;
      best_delta = delta;
    }
  }
  return best;
}

}  // namespace

const char* pair_kind_name(PairKind kind) {
  switch (kind) {
    case PairKind::kDepartureBlocked: return "departure_blocked";
    case PairKind::kDepartureControl: return "departure_control";
    case PairKind::kRecidShort: return "recid_short";
    case PairKind::kRecidLong: return "recid_long";
    case PairKind::kRecidControl: return "recid_control";
  }
  return "?";
}

MatchResult match_departure_pairs(std::span<const UserTimeline> timelines,
                                  std::span<const TrajectoryLabel> labels, DateTolerance tol) {
  std::vector<Keyed> departers;
  std::set<Keyed> stayers;
  for (const auto& l : labels) {
    const Timestamp start = first_span_of(timeline_of(timelines, l.user)).start;
    if (l.departed_during_block) departers.emplace_back(start, l.user);
    else if (!l.departed_within_horizon) stayers.emplace(start, l.user);
  }
  std::sort(departers.begin(), departers.end());

  MatchResult out;
  for (const auto& [start, user] : departers) {
    const double allowed = tol.allowed_days(to_days(start));
    auto best = nearest(stayers, start, allowed, [](const Keyed&) { return true; });
    if (best == stayers.end()) {
      out.unmatched.push_back(user);
      continue;
    }
    const Seconds delta = best->first > start ? best->first - start : start - best->first;
    out.pairs.push_back({PairKind::kDepartureBlocked, user, best->second, to_days(delta), {}});
    stayers.erase(best);
  }
  return out;
}

MatchResult match_departure_controls(std::span<const MatchedPair> departure_pairs,
                                     std::span<const UserTimeline> timelines,
                                     std::span<const TrajectoryLabel> labels,
                                     const CohortConfig& cfg, DateTolerance tol) {
  std::map<UserId, Timestamp> departure_of;
  for (const auto& l : labels) {
    if (l.departure_time) departure_of[l.user] = *l.departure_time;
  }
  std::set<Keyed> by_last;
  std::map<UserId, Timestamp> first_of;
  for (const auto& t : timelines) {
    if (!t.spans.empty() || !t.last_activity) continue;
    by_last.emplace(*t.last_activity, t.user);
    first_of[t.user] = *t.first_activity;
  }

  // Control departers are assigned for every pair before any stayer, so a
  // stayer pick cannot consume a later pair's only departer candidate.
  std::vector<Timestamp> dates;
  std::vector<std::optional<Keyed>> departers;
  for (const auto& p : departure_pairs) {
    auto d = departure_of.find(p.left);
    if (d == departure_of.end()) {
      throw Error(ErrorCode::kInvalidArgument, "no departure time for " + p.left);
    }
    const Timestamp date = d->second;
    dates.push_back(date);
    auto it = nearest(by_last, date, tol.allowed_days(to_days(date)),
                      [](const Keyed&) { return true; });
    if (it == by_last.end()) {
      departers.emplace_back();
    } else {
      departers.emplace_back(*it);
      by_last.erase(it);
    }
  }

  MatchResult out;
  for (std::size_t i = 0; i < departure_pairs.size(); ++i) {
    const Timestamp date = dates[i];
    auto stayer = by_last.end();
    if (departers[i]) {
      for (auto it = by_last.lower_bound({saturating_add(date, cfg.horizon()), UserId()});
           it != by_last.end(); ++it) {
        if (first_of[it->second] <= date) {
          stayer = it;
          break;
        }
      }
    }
    if (stayer == by_last.end()) {
      out.unmatched.push_back(departure_pairs[i].left);
      continue;
    }
    const Timestamp last = departers[i]->first;
    const Seconds delta = last > date ? last - date : date - last;
    out.pairs.push_back({PairKind::kDepartureControl, departers[i]->second, stayer->second,
                         to_days(delta), departure_pairs[i].left});
    by_last.erase(stayer);
  }
  return out;
}

std::int64_t actions_between(const UserTimeline& t, Timestamp after, Timestamp upto) {
  auto by_time = [](Timestamp ts, const CommentEvent& e) { return ts < e.timestamp; };
  const auto lo = std::upper_bound(t.authored.begin(), t.authored.end(), after, by_time);
  const auto hi = std::upper_bound(t.authored.begin(), t.authored.end(), upto, by_time);
  return hi > lo ? hi - lo : 0;
}

std::int64_t actions_before(const UserTimeline& t, Timestamp cutoff) {
  const auto it = std::lower_bound(
      t.authored.begin(), t.authored.end(), cutoff,
      [](const CommentEvent& e, Timestamp ts) { return e.timestamp < ts; });
  return it - t.authored.begin();
}

MatchResult match_recidivism_pairs(std::span<const UserTimeline> timelines,
                                   std::span<const TrajectoryLabel> labels, RecidWindow window) {
  using Counted = std::pair<std::int64_t, UserId>;
  std::vector<Counted> recidivists;
  std::set<Counted> reformed;
  for (const auto& l : labels) {
    const bool recid = window == RecidWindow::kShort ? l.recidivist_short : l.recidivist_long;
    const UserTimeline& t = timeline_of(timelines, l.user);
    const Timestamp start = first_span_of(t).start;
    if (recid) {
      if (t.spans.size() < 2) {
        throw Error(ErrorCode::kInvalidArgument, l.user + " is labeled a recidivist without a second block");
      }
      recidivists.emplace_back(actions_between(t, start, t.spans[1].start), l.user);
    } else if (l.reformed) {
      reformed.emplace(actions_between(t, start, kForever), l.user);
    }
  }
  std::sort(recidivists.begin(), recidivists.end());

  const PairKind kind = window == RecidWindow::kShort ? PairKind::kRecidShort : PairKind::kRecidLong;
  MatchResult out;
  for (const auto& [a, user] : recidivists) {
    auto it = reformed.lower_bound({a, UserId()});
    if (it == reformed.end()) {
      out.unmatched.push_back(user);
      continue;
    }
    out.pairs.push_back({kind, user, it->second, static_cast<double>(a), {}});
    reformed.erase(it);
  }
  return out;
}

MatchResult match_recidivism_controls(std::span<const UserTimeline> timelines,
                                      std::span<const TrajectoryLabel> labels) {
  std::set<UserId> cohort;
  for (const auto& l : labels) cohort.insert(l.user);

  struct Offender {
    std::int64_t actions;
    UserId user;
    Timestamp start;
  };
  std::vector<Offender> offenders;
  for (const auto& l : labels) {
    const UserTimeline& t = timeline_of(timelines, l.user);
    const Timestamp start = first_span_of(t).start;
    offenders.push_back({actions_before(t, start), l.user, start});
  }
  std::sort(offenders.begin(), offenders.end(), [](const Offender& a, const Offender& b) {
    return std::tie(a.actions, a.user) < std::tie(b.actions, b.user);
  });

  std::vector<const UserTimeline*> pool;
  for (const auto& t : timelines) {
    if (t.first_activity && !cohort.count(t.user)) pool.push_back(&t);
  }
  std::vector<char> used(pool.size(), 0);

  MatchResult out;
  for (const auto& o : offenders) {
    std::size_t best = pool.size();
    std::int64_t best_count = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      const UserTimeline& c = *pool[i];
      if (!c.spans.empty() && c.spans.front().start <= o.start) continue;
      const std::int64_t count = actions_before(c, o.start);
      // Pool is in id order, so strict comparison keeps the smaller id.
      if (count >= o.actions && (best == pool.size() || count < best_count)) {
        best = i;
        best_count = count;
      }
    }
    if (best == pool.size()) {
      out.unmatched.push_back(o.user);
      continue;
    }
    used[best] = 1;
    out.pairs.push_back(
        {PairKind::kRecidControl, o.user, pool[best]->user, static_cast<double>(o.actions), {}});
  }
  return out;
}

void write_pairs_csv(std::ostream& out, std::span<const MatchedPair> pairs) {
  out << "kind,left,right,match_stat\n";
  for (const auto& p : pairs) {
    out << pair_kind_name(p.kind) << ',' << csv_field(p.left) << ',' << csv_field(p.right) << ','
        << fmt_double(p.match_stat) << '\n';
  }
}

}  // namespace modtraj
