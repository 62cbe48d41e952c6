#include "modtraj/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "modtraj/csv.h"
#include "modtraj/random.h"

namespace modtraj {

namespace {

constexpr Seconds kHour = 3600;

const char* const kNeutral[] = {
    "I will wait for the block to expire.",
    "Thanks for the note.",
    "I understand the policy now.",
    "I will use the talk page before reverting next time.",
    "Please review my recent edits when you have time.",
    "I have read the guideline you linked.",
};

const char* const kApology[] = {
    "I apologize for my edits.",
    "Sorry, I lost my temper there.",
    "I regret the reverts and will stop.",
    "Please forgive my behaviour on that article.",
    "That was my mistake.",
};

const char* const kQuestion[] = {
    "Why was I blocked?",
    "How long will this block last?",
    "What did I do to deserve this?",
    "Who decided to block me?",
};

const char* const kUnfairness[] = {
    "This block is unfair.",
    "The block is unjustified.",
    "I was accused of things I did not do.",
    "This is an injustice.",
    "The reasons given are unfounded.",
};

const char* const kRegular[] = {
    "I added a citation for the second paragraph.",
    "Could you take a look at the sources here?",
    "The infobox needs an update.",
    "Merged the two sections as discussed.",
    "Thanks for fixing the formatting.",
    "I disagree with the recent change to the lead.",
    "See the archived discussion for background.",
    "Reverted an unsourced claim.",
};

const char* const kDisruptionReasons[][2] = {
    {"Personal attacks or incivility toward other editors", "[[WP:NPA|Personal attacks]]"},
    {"Harassment of another editor", "Hounding and harassment"},
    {"Edit warring", "Violation of the three-revert rule"},
    {"Disruptive editing", "Persistent disruptive editing"},
};

const char* const kOtherReasons[] = {
    "Vandalism",
    "Spamming external links",
    "Abusing multiple accounts (sockpuppetry)",
    "Making legal threats",
};

template <typename T, std::size_t N>
const char* pick(Rng& rng, T (&items)[N]) {
  return items[rng.below(N)];
}

Timestamp uniform_time(Rng& rng, Timestamp lo, Timestamp hi) {
  return hi <= lo ? lo : rng.between(lo, hi);
}

enum class Departure { kDuring, kAfter, kStay };
enum class Reblock { kNone, kShort, kLong, kLater };

struct Plan {
  SynthGroup group = SynthGroup::kNeverBlocked;
  CohortExclusion violation = CohortExclusion::kNone;

  // Never-blocked users.
  Timestamp join = 0;
  bool censored = false;

  // Blocked users.
  std::optional<Timestamp> first;  // first authored event before the block
  Timestamp start = 0;
  std::optional<Seconds> duration;  // nullopt: indefinite
  std::optional<Timestamp> unblock;
  ReasonCategory category = ReasonCategory::kEditWarring;
  std::string reason;
  std::int64_t pre_adds = 0;
  bool post_activity = true;  // violators without any activity set this false
  bool high = false;

  Departure departure = Departure::kStay;
  bool messaging = false;
  bool apology = false;
  bool question = false;
  bool unfairness = false;
  Reblock reblock = Reblock::kNone;

  // Filled while emitting.
  std::optional<Timestamp> last;
  std::optional<Timestamp> second_start;
  std::int64_t in_block = 0;

  Timestamp original_end() const { return duration ? start + *duration : kForever; }
  Timestamp effective_end() const { return unblock ? *unblock : original_end(); }
};

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg)
      : cfg_(cfg), cohort_(cfg.cohort_config()), end_(cfg.dataset_end()) {
    char buf[32];
    for (std::int64_t i = 0; i < cfg.n_users; ++i) {
      std::snprintf(buf, sizeof buf, "u%06lld", static_cast<long long>(i));
      ids_.emplace_back(buf);
    }
    plans_.resize(ids_.size());
    counters_.resize(ids_.size(), 0);
  }

  SynthCorpus run() {
    assign_groups();
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      Rng rng(derive_seed(cfg_.seed, 2 * i + 1));
      plan_user(i, rng);
    }
    assign_outcomes();
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      Rng rng(derive_seed(cfg_.seed, 2 * i + 2));
      emit_user(i, rng);
    }
    pin_end();
    return finish();
  }

 private:
  // Streams for whole-population draws, apart from the per-user streams.
  std::uint64_t side_seed(std::uint64_t k) const {
    return derive_seed(derive_seed(cfg_.seed, ~0ULL), k);
  }

  // ---- planning ----------------------------------------------------------

  void assign_groups() {
    Rng rng(side_seed(0));
    std::vector<std::size_t> order(plans_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_blocked = static_cast<std::size_t>(
        std::llround(cfg_.block_rate * static_cast<double>(order.size())));
    const auto n_violators = static_cast<std::size_t>(
        std::llround(cfg_.filter_violation_rate * static_cast<double>(n_blocked)));
    static const CohortExclusion kinds[] = {
        CohortExclusion::kIndefiniteFirstBlock, CohortExclusion::kNotDisruption,
        CohortExclusion::kNoActivity,           CohortExclusion::kTooFewComments,
        CohortExclusion::kShortTenure,          CohortExclusion::kDuringBurnin,
        CohortExclusion::kTooCloseToEnd};
    for (std::size_t k = 0; k < n_blocked; ++k) {
      Plan& p = plans_[order[k]];
      if (k < n_violators) {
        p.group = SynthGroup::kViolator;
        p.violation = kinds[k % std::size(kinds)];
      } else {
        p.group = SynthGroup::kCohort;
      }
    }
  }

  Seconds max_duration() const {
    const Seconds cap = std::min<Seconds>(120 * kSecondsPerDay, cohort_.horizon() * 6 / 10);
    return std::max<Seconds>(kHour, cap / kHour * kHour);
  }

  void plan_user(std::size_t i, Rng& rng) {
    Plan& p = plans_[i];
    if (p.group == SynthGroup::kNeverBlocked) {
      plan_never_blocked(p, rng);
      return;
    }
    const Seconds day = kSecondsPerDay;
    p.start = rng.between(cohort_.burnin() + day, end_ - cohort_.horizon() - 2 * day);
    const double dur_days = rng.lognormal(cfg_.median_block_duration_days, 1.3);
    p.duration = std::clamp<Seconds>(std::llround(dur_days * 24) * kHour, kHour, max_duration());
    const auto [reason, category] = disruption_reason(rng);
    p.reason = reason;
    p.category = category;
    p.high = rng.bernoulli(cfg_.high_activity_rate);
    const std::int64_t m = std::max<std::int64_t>(1, cfg_.min_comments);
    p.pre_adds = p.high ? rng.between(std::max<std::int64_t>(m, 30), std::max<std::int64_t>(m, 30) + 50)
                        : rng.between(m, m + 12);
    const Seconds tenure =
        cohort_.min_tenure() + day + static_cast<Seconds>(rng.exponential(300.0 * day));
    p.first = std::max<Timestamp>(0, p.start - tenure);
    if (rng.bernoulli(cfg_.unblock_rate)) {
      const auto cut = static_cast<Seconds>(rng.uniform(0.1, 0.9) * static_cast<double>(*p.duration));
      p.unblock = p.start + std::clamp<Seconds>(cut, 60, *p.duration - 60);
    }
    if (p.group == SynthGroup::kViolator) plan_violation(p, rng);
  }

  std::pair<std::string, ReasonCategory> disruption_reason(Rng& rng) const {
    const std::size_t k = rng.below(4);
    return {kDisruptionReasons[k][rng.below(2)], kDisruptionSubset[k]};
  }

  void plan_violation(Plan& p, Rng& rng) {
    const Seconds day = kSecondsPerDay;
    switch (p.violation) {
      case CohortExclusion::kIndefiniteFirstBlock:
        p.duration.reset();
        p.unblock.reset();
        break;
      case CohortExclusion::kNotDisruption:
        p.reason = pick(rng, kOtherReasons);
        p.category = categorize_reason(p.reason);
        break;
      case CohortExclusion::kNoActivity:
        p.first.reset();
        p.pre_adds = 0;
        p.post_activity = rng.bernoulli(0.5);
        break;
      case CohortExclusion::kTooFewComments:
        if (cfg_.min_comments >= 2) p.pre_adds = rng.between(1, cfg_.min_comments - 1);
        break;
      case CohortExclusion::kShortTenure:
        if (cohort_.min_tenure() >= 2 * kHour) {
          p.first = p.start - rng.between(kHour, cohort_.min_tenure() - kHour);
        }
        break;
      case CohortExclusion::kDuringBurnin: {
        const Timestamp lo = cohort_.min_tenure() + day;
        const Timestamp hi = cohort_.burnin() - day;
        if (hi > lo) {
          const Timestamp old = p.start;
          p.start = rng.between(lo, hi);
          p.first = rng.between(0, p.start - cohort_.min_tenure() - kHour);
          if (p.unblock) *p.unblock += p.start - old;
        }
        break;
      }
      case CohortExclusion::kTooCloseToEnd: {
        const Seconds shift = rng.between(end_ - cohort_.horizon() + day, end_ - kHour) - p.start;
        p.start += shift;
        if (p.first) *p.first += shift;
        p.unblock.reset();
        break;
      }
      default:
        break;
    }
  }

  void plan_never_blocked(Plan& p, Rng& rng) {
    p.join = rng.between(0, end_ - kHour);
    std::int64_t month = 0;
    while (!rng.bernoulli(cfg_.monthly_departure_hazard) && month < 100000) ++month;
    // Months that end by the dataset end are counted; later departures are
    // censored and placed after the last counted month.
    const std::int64_t counted = (end_ - p.join) / kSecondsPerMonth;
    if (month < counted) {
      p.last = p.join + month * kSecondsPerMonth + rng.between(0, kSecondsPerMonth - 1);
    } else {
      p.censored = true;
      p.last = rng.between(p.join + counted * kSecondsPerMonth, end_);
    }
  }

  // Odds solving mean(p_u) = rate with p_u = o·w_u / (1 + o·w_u).
  static double base_odds(const std::vector<double>& weights, double rate) {
    if (rate <= 0) return 0;
    double lo = -60, hi = 60;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double mean = 0;
      for (double w : weights) {
        const double ow = std::exp(mid) * w;
        mean += ow / (1 + ow);
      }
      mean /= static_cast<double>(weights.size());
      (mean < rate ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
  }

  void assign_outcomes() {
    std::vector<std::size_t> cohort;
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      if (plans_[i].group == SynthGroup::kCohort) cohort.push_back(i);
    }
    if (cohort.empty()) return;
    Rng rng(side_seed(1));
    const double n = static_cast<double>(cohort.size());
    auto quota = [&](double rate, double of) {
      return static_cast<std::size_t>(std::llround(rate * of));
    };

    auto order = cohort;
    rng.shuffle(order);
    const std::size_t n_during = quota(cfg_.departure_during_block, n);
    const std::size_t n_within = std::max(n_during, quota(cfg_.departure_within_horizon, n));
    for (std::size_t k = 0; k < order.size(); ++k) {
      Plan& p = plans_[order[k]];
      p.departure = k < n_during ? Departure::kDuring
                                 : k < n_within ? Departure::kAfter : Departure::kStay;
      p.messaging = k < n_during;
    }
    const std::size_t n_messaging = std::max(n_during, quota(cfg_.in_block_message_rate, n));
    std::vector<std::size_t> others(order.begin() + static_cast<std::ptrdiff_t>(n_during), order.end());
    rng.shuffle(others);
    for (std::size_t k = 0; k + n_during < n_messaging && k < others.size(); ++k) {
      plans_[others[k]].messaging = true;
    }

    std::vector<std::size_t> messaging;
    for (std::size_t i : cohort) {
      if (plans_[i].messaging) messaging.push_back(i);
    }
    const double n_msg = static_cast<double>(messaging.size());
    for (auto [rate, field] : {std::pair{cfg_.apology_rate, &Plan::apology},
                               std::pair{cfg_.question_rate, &Plan::question},
                               std::pair{cfg_.unfairness_rate, &Plan::unfairness}}) {
      auto pool = messaging;
      rng.shuffle(pool);
      const std::size_t take = std::min(pool.size(), quota(rate, n_msg));
      for (std::size_t k = 0; k < take; ++k) plans_[pool[k]].*field = true;
    }

    std::vector<double> weights;
    for (std::size_t i : cohort) {
      const Plan& p = plans_[i];
      weights.push_back((p.apology ? cfg_.apology_recid_odds_ratio : 1.0) *
                        (p.high ? cfg_.recid_multiplier_for_high_activity : 1.0));
    }
    const double odds = cfg_.recid_long_rate >= 1 ? 0 : base_odds(weights, cfg_.recid_long_rate);
    const double short_share =
        cfg_.recid_long_rate > 0 ? cfg_.recid_short_rate / cfg_.recid_long_rate : 0;
    const double later_share = cfg_.recid_long_rate < 1
                                   ? cfg_.reblock_after_horizon_rate / (1 - cfg_.recid_long_rate)
                                   : 0;
    const Seconds short_max = cohort_.short_window() - 2 * kHour;
    for (std::size_t k = 0; k < cohort.size(); ++k) {
      Plan& p = plans_[cohort[k]];
      const double prob =
          cfg_.recid_long_rate >= 1 ? 1.0 : odds * weights[k] / (1 + odds * weights[k]);
      if (rng.bernoulli(prob)) {
        const bool short_ok = *p.duration <= short_max;
        p.reblock = rng.bernoulli(short_share) && short_ok ? Reblock::kShort : Reblock::kLong;
      } else {
        p.reblock = rng.bernoulli(later_share) ? Reblock::kLater : Reblock::kNone;
      }
    }
  }

  // ---- emission ----------------------------------------------------------

  void add(std::size_t i, Timestamp t, const std::string& owner, PageKind kind,
           CommentAction action, std::string text) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s-%05d", ids_[i].c_str(), counters_[i]++);
    CommentEvent e;
    e.id = buf;
    e.author = ids_[i];
    e.owner = owner;
    e.page_kind = kind;
    e.timestamp = t;
    e.action = action;
    e.text = std::move(text);
    comments_.push_back(std::move(e));
  }

  // A comment somewhere other than the author's own talk page.
  void add_elsewhere(std::size_t i, Rng& rng, Timestamp t, CommentAction action) {
    if (ids_.size() > 1 && rng.bernoulli(0.6)) {
      std::size_t other = rng.below(ids_.size() - 1);
      if (other >= i) ++other;
      add(i, t, ids_[other], PageKind::kUserTalk, action, pick(rng, kRegular));
    } else {
      add(i, t, "Article_" + std::to_string(rng.below(400)), PageKind::kArticleTalk, action,
          pick(rng, kRegular));
    }
  }

  void block(Rng& rng, Timestamp t, const UserId& target, std::optional<Seconds> duration,
             const std::string& reason, BlockAction action = BlockAction::kBlock) {
    BlockLogEntry e;
    e.timestamp = t;
    char buf[16];
    std::snprintf(buf, sizeof buf, "admin%02d", static_cast<int>(rng.below(40)));
    e.admin = buf;
    e.target = target;
    e.action = action;
    e.duration = duration;
    e.reason = reason;
    blocks_.push_back(std::move(e));
  }

  void emit_user(std::size_t i, Rng& rng) {
    Plan& p = plans_[i];
    if (p.group == SynthGroup::kNeverBlocked) {
      emit_never_blocked(i, rng);
      return;
    }
    // The block log.
    block(rng, p.start, ids_[i], p.duration, p.reason);
    if (p.unblock) block(rng, *p.unblock, ids_[i], std::nullopt, "", BlockAction::kUnblock);

    // Activity before the block.
    if (p.first) {
      add_elsewhere(i, rng, *p.first, CommentAction::kAdd);
      for (std::int64_t k = 1; k < p.pre_adds; ++k) {
        add_elsewhere(i, rng, rng.between(*p.first, p.start - 1), CommentAction::kAdd);
      }
      const std::int64_t edits = rng.between(0, 3);
      for (std::int64_t k = 0; k < edits; ++k) {
        add_elsewhere(i, rng, rng.between(*p.first, p.start - 1), CommentAction::kEdit);
      }
    }
    if (p.group == SynthGroup::kCohort) {
      emit_cohort_after(i, rng);
    } else {
      emit_violator_after(i, rng);
    }
  }

  std::string message_text(Rng& rng, const std::vector<const char*>& cues) {
    std::vector<const char*> sentences = cues;
    sentences.push_back(pick(rng, kNeutral));
    rng.shuffle(sentences);
    std::string text;
    for (const char* s : sentences) {
      if (!text.empty()) text += ' ';
      text += s;
    }
    return text;
  }

  // Own talk page messages while blocked, the latest at `latest` when set.
  void emit_in_block(std::size_t i, Rng& rng, Timestamp lo, Timestamp hi,
                     std::optional<Timestamp> latest) {
    Plan& p = plans_[i];
    const auto k = static_cast<std::size_t>(rng.between(1, 3));
    std::vector<std::vector<const char*>> cues(k);
    if (p.apology) cues[rng.below(k)].push_back(pick(rng, kApology));
    if (p.question) cues[rng.below(k)].push_back(pick(rng, kQuestion));
    if (p.unfairness) cues[rng.below(k)].push_back(pick(rng, kUnfairness));
    Timestamp newest = lo;
    for (std::size_t m = 0; m < k; ++m) {
      const Timestamp t = latest && m + 1 == k ? *latest : uniform_time(rng, lo, hi);
      newest = std::max(newest, t);
      add(i, t, ids_[i], PageKind::kUserTalk, CommentAction::kAdd, message_text(rng, cues[m]));
    }
    p.in_block += static_cast<std::int64_t>(k);
    // A retracted apology is not an apology.
    if (rng.bernoulli(0.1)) {
      add(i, uniform_time(rng, lo, newest), ids_[i], PageKind::kUserTalk,
          CommentAction::kDelete, pick(rng, kApology));
    }
  }

  void emit_regular_until(std::size_t i, Rng& rng, Timestamp lo, Timestamp last) {
    const std::int64_t extra = rng.between(0, 8);
    for (std::int64_t k = 0; k < extra; ++k) {
      add_elsewhere(i, rng, uniform_time(rng, lo, last), CommentAction::kAdd);
    }
    add_elsewhere(i, rng, last, CommentAction::kAdd);
  }

  void emit_cohort_after(std::size_t i, Rng& rng) {
    Plan& p = plans_[i];
    const Timestamp s = p.start;
    const Timestamp eff = p.effective_end();
    const Timestamp horizon_end = s + cohort_.horizon();
    switch (p.departure) {
      case Departure::kDuring:
        p.last = rng.between(s + 1, std::min(eff - 1, horizon_end));
        emit_in_block(i, rng, s, *p.last, p.last);
        break;
      case Departure::kAfter:
        p.last = rng.between(eff, horizon_end);
        if (p.messaging) emit_in_block(i, rng, s, eff - 1, std::nullopt);
        emit_regular_until(i, rng, eff, *p.last);
        break;
      case Departure::kStay:
        p.last = rng.between(horizon_end + 1, end_);
        if (p.messaging) emit_in_block(i, rng, s, eff - 1, std::nullopt);
        emit_regular_until(i, rng, eff, *p.last);
        break;
    }

    const Timestamp orig = p.original_end();
    switch (p.reblock) {
      case Reblock::kNone: break;
      case Reblock::kShort:
        p.second_start = rng.between(orig + kHour, s + cohort_.short_window());
        break;
      case Reblock::kLong:
        p.second_start =
            rng.between(std::max(orig, s + cohort_.short_window()) + kHour, horizon_end);
        break;
      case Reblock::kLater:
        p.second_start = rng.between(horizon_end + kHour, end_);
        break;
    }
    if (p.second_start) {
      const Seconds dur = std::clamp<Seconds>(
          std::llround(rng.lognormal(cfg_.median_block_duration_days, 1.3) * 24) * kHour, kHour,
          max_duration());
      const auto [reason, category] = disruption_reason(rng);
      (void)category;
      block(rng, *p.second_start, ids_[i], dur, reason);
      const Timestamp third = *p.second_start + dur + kHour;
      if (third < end_ && rng.bernoulli(0.25)) {
        block(rng, rng.between(third, end_), ids_[i], dur, reason);
      }
    }
  }

  void emit_violator_after(std::size_t i, Rng& rng) {
    Plan& p = plans_[i];
    if (!p.post_activity) return;
    const Timestamp s = p.start;
    const Timestamp eff = p.effective_end();
    const Timestamp hi = std::min(end_, s + 400 * kSecondsPerDay);
    if (eff >= hi) {
      // Still blocked at the end of the window: only own talk page messages.
      p.last = rng.between(s + 1, std::min(hi, s + 30 * kSecondsPerDay));
      emit_in_block(i, rng, s, *p.last, p.last);
      return;
    }
    p.last = rng.between(eff, hi);
    emit_regular_until(i, rng, eff, *p.last);
  }

  void emit_never_blocked(std::size_t i, Rng& rng) {
    const Plan& p = plans_[i];
    const Timestamp last = *p.last;
    add_elsewhere(i, rng, p.join, CommentAction::kAdd);
    if (last == p.join) return;
    const double days = to_days(last - p.join);
    const std::int64_t extra = rng.between(0, std::min<std::int64_t>(30, 1 + static_cast<std::int64_t>(days / 4)));
    for (std::int64_t k = 0; k < extra; ++k) {
      const double u = rng.uniform();
      const CommentAction action =
          u < 0.85 ? CommentAction::kAdd : u < 0.95 ? CommentAction::kEdit : CommentAction::kDelete;
      add_elsewhere(i, rng, rng.between(p.join, last), action);
    }
    add_elsewhere(i, rng, last, CommentAction::kAdd);
  }

  // Makes the latest event fall exactly on the configured end, so that the
  // default dataset end of the pipeline agrees with the generator.
  void pin_end() {
    Timestamp latest = 0;
    for (const auto& e : comments_) latest = std::max(latest, e.timestamp);
    for (const auto& e : blocks_) latest = std::max(latest, e.timestamp);
    if (latest > end_) throw Error(ErrorCode::kInvalidArgument, "generated event after dataset end");
    if (latest == end_) return;
    for (std::size_t i = 0; i < plans_.size(); ++i) {
      Plan& p = plans_[i];
      const bool never = p.group == SynthGroup::kNeverBlocked && p.censored;
      const bool stayer = p.group == SynthGroup::kCohort && p.departure == Departure::kStay;
      if (!never && !stayer) continue;
      Rng rng(side_seed(2));
      add_elsewhere(i, rng, end_, CommentAction::kAdd);
      p.last = end_;
      return;
    }
  }

  CohortExclusion exclusion(const Plan& p, Timestamp dataset_end) const {
    if (p.group == SynthGroup::kNeverBlocked) return CohortExclusion::kNeverBlocked;
    if (!p.duration) return CohortExclusion::kIndefiniteFirstBlock;
    if (!in_disruption_subset(p.category)) return CohortExclusion::kNotDisruption;
    if (!p.first || *p.first >= p.start) return CohortExclusion::kNoActivity;
    if (p.pre_adds < cohort_.min_comments) return CohortExclusion::kTooFewComments;
    if (p.start - *p.first < cohort_.min_tenure()) return CohortExclusion::kShortTenure;
    if (p.start < cohort_.burnin()) return CohortExclusion::kDuringBurnin;
    if (p.start > dataset_end - cohort_.horizon()) return CohortExclusion::kTooCloseToEnd;
    return CohortExclusion::kNone;
  }

  SynthCorpus finish() {
    SynthCorpus out;
    std::sort(blocks_.begin(), blocks_.end(), [](const BlockLogEntry& a, const BlockLogEntry& b) {
      return std::tie(a.timestamp, a.target) < std::tie(b.timestamp, b.target);
    });
    std::sort(comments_.begin(), comments_.end(), [](const CommentEvent& a, const CommentEvent& b) {
      return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
    });
    Timestamp latest = 0;
    for (const auto& e : comments_) latest = std::max(latest, e.timestamp);
    for (const auto& e : blocks_) latest = std::max(latest, e.timestamp);
    out.dataset_end = latest;

    for (std::size_t i = 0; i < plans_.size(); ++i) {
      const Plan& p = plans_[i];
      SynthTruth t;
      t.user = ids_[i];
      t.group = p.group;
      t.exclusion = exclusion(p, out.dataset_end);
      t.high_activity = p.group == SynthGroup::kCohort && p.high;
      if (p.group != SynthGroup::kNeverBlocked && p.duration && p.last) {
        const Timestamp horizon_end = p.start + cohort_.horizon();
        t.labeled = true;
        t.departed_within_horizon = *p.last <= horizon_end;
        t.departed_during_block = t.departed_within_horizon && *p.last < p.effective_end();
        if (p.second_start) {
          t.recidivist_long = *p.second_start <= horizon_end;
          t.recidivist_short = *p.second_start <= p.start + cohort_.short_window();
          t.time_to_reoffense_days = to_days(*p.second_start - p.start);
        }
        t.reformed = !t.recidivist_long;
        t.in_block_messages = p.in_block;
        t.apology = p.apology;
        t.direct_question = p.question;
        t.unfairness = p.unfairness;
      }
      out.truth.push_back(std::move(t));
    }
    out.blocks = std::move(blocks_);
    out.comments = std::move(comments_);
    return out;
  }

  const SynthConfig& cfg_;
  const CohortConfig cohort_;
  const Timestamp end_;
  std::vector<UserId> ids_;
  std::vector<Plan> plans_;
  std::vector<int> counters_;
  std::vector<BlockLogEntry> blocks_;
  std::vector<CommentEvent> comments_;
};

void check_probability(double v, const char* name) {
  if (!(v >= 0 && v <= 1)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(name) + " must be in [0, 1]");
  }
}

void check_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(name) + " must be positive");
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users <= 0) throw Error(ErrorCode::kInvalidConfig, "n_users must be positive");
  check_probability(block_rate, "block_rate");
  check_probability(filter_violation_rate, "filter_violation_rate");
  check_probability(monthly_departure_hazard, "monthly_departure_hazard");
  if (monthly_departure_hazard == 0) {
    throw Error(ErrorCode::kInvalidConfig, "monthly_departure_hazard must be positive");
  }
  check_probability(departure_within_horizon, "departure_within_horizon");
  check_probability(departure_during_block, "departure_during_block");
  if (departure_during_block > departure_within_horizon) {
    throw Error(ErrorCode::kInvalidConfig, "departure_during_block exceeds departure_within_horizon");
  }
  check_probability(recid_long_rate, "recid_long_rate");
  check_probability(recid_short_rate, "recid_short_rate");
  check_probability(reblock_after_horizon_rate, "reblock_after_horizon_rate");
  if (recid_short_rate > recid_long_rate) {
    throw Error(ErrorCode::kInvalidConfig, "recid_short_rate exceeds recid_long_rate");
  }
  if (recid_long_rate + reblock_after_horizon_rate > 1) {
    throw Error(ErrorCode::kInvalidConfig, "recidivism rates sum above 1");
  }
  check_probability(high_activity_rate, "high_activity_rate");
  check_probability(in_block_message_rate, "in_block_message_rate");
  check_probability(apology_rate, "apology_rate");
  check_probability(question_rate, "question_rate");
  check_probability(unfairness_rate, "unfairness_rate");
  check_probability(unblock_rate, "unblock_rate");
  check_positive(recid_multiplier_for_high_activity, "recid_multiplier_for_high_activity");
  check_positive(apology_recid_odds_ratio, "apology_recid_odds_ratio");
  check_positive(median_block_duration_days, "median_block_duration_days");
  cohort_config().validate();
  if (short_window_days * 24 < 4) {
    throw Error(ErrorCode::kInvalidConfig, "short window must be at least four hours");
  }
  if (horizon_days - short_window_days < 1) {
    throw Error(ErrorCode::kInvalidConfig, "horizon must exceed the short window by a day");
  }
  if (community_burnin_days < min_tenure_days + 2) {
    throw Error(ErrorCode::kInvalidConfig, "burn-in must exceed the minimum tenure by two days");
  }
  if (active_days < horizon_days + 4) {
    throw Error(ErrorCode::kInvalidConfig, "active_days must exceed the horizon by four days");
  }
}

Timestamp SynthConfig::dataset_end() const {
  return days_to_seconds(community_burnin_days) + days_to_seconds(active_days);
}

CohortConfig SynthConfig::cohort_config() const {
  CohortConfig c;
  c.horizon_days = horizon_days;
  c.short_window_days = short_window_days;
  c.min_tenure_days = min_tenure_days;
  c.min_comments = min_comments;
  c.community_burnin_days = community_burnin_days;
  c.dataset_end = dataset_end();
  return c;
}

const char* synth_group_name(SynthGroup group) {
  switch (group) {
    case SynthGroup::kNeverBlocked: return "never_blocked";
    case SynthGroup::kCohort: return "cohort";
    case SynthGroup::kViolator: return "violator";
  }
  return "?";
}

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  return Generator(cfg).run();
}

void write_truth_csv(std::ostream& out, std::span<const SynthTruth> truth) {
  out << "user,group,exclusion,departed_during,departed_horizon,recid_short,recid_long,reformed,"
         "tt_reoffense_days,in_block_messages,apology,direct_question,unfairness,high_activity\n";
  for (const auto& t : truth) {
    out << csv_field(t.user) << ',' << synth_group_name(t.group) << ','
        << cohort_exclusion_name(t.exclusion) << ',';
    if (t.labeled) {
      out << fmt_bool(t.departed_during_block) << ',' << fmt_bool(t.departed_within_horizon) << ','
          << fmt_bool(t.recidivist_short) << ',' << fmt_bool(t.recidivist_long) << ','
          << fmt_bool(t.reformed) << ',' << fmt_double(t.time_to_reoffense_days) << ','
          << t.in_block_messages << ',' << fmt_bool(t.apology) << ','
          << fmt_bool(t.direct_question) << ',' << fmt_bool(t.unfairness) << ',';
    } else {
      out << ",,,,,,,,,,";
    }
    out << fmt_bool(t.high_activity) << '\n';
  }
}

}  // namespace modtraj
