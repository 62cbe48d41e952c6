#include "modtraj/ingest.h"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "modtraj/parallel.h"

namespace modtraj {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kUnknownAction: return "UnknownAction";
    case ErrorCode::kNonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kIndefiniteSpan: return "IndefiniteSpan";
    case ErrorCode::kNoAuthoredComments: return "NoAuthoredComments";
    case ErrorCode::kCutoffBeforeFirstActivity: return "CutoffBeforeFirstActivity";
    case ErrorCode::kZeroExpectedCount: return "ZeroExpectedCount";
    case ErrorCode::kDegenerateTable: return "DegenerateTable";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kMissingFeature: return "MissingFeature";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kGridEmpty: return "GridEmpty";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Reason categories
// ---------------------------------------------------------------------------

namespace {

constexpr ReasonCategory kPriorityOrder[] = {
    ReasonCategory::kPersonalAttack,   ReasonCategory::kHarassment,
    ReasonCategory::kEditWarring,      ReasonCategory::kDisruptiveEditing,
    ReasonCategory::kProtection,       ReasonCategory::kOtherDisruption,
};

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool in_disruption_subset(ReasonCategory category) {
  return std::find(std::begin(kDisruptionSubset), std::end(kDisruptionSubset),
                   category) != std::end(kDisruptionSubset);
}

const char* reason_category_name(ReasonCategory category) {
  switch (category) {
    case ReasonCategory::kPersonalAttack: return "personal_attack";
    case ReasonCategory::kHarassment: return "harassment";
    case ReasonCategory::kEditWarring: return "edit_warring";
    case ReasonCategory::kDisruptiveEditing: return "disruptive_editing";
    case ReasonCategory::kOtherDisruption: return "other_disruption";
    case ReasonCategory::kProtection: return "protection";
    case ReasonCategory::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<ReasonCategory> parse_reason_category(std::string_view name) {
  for (ReasonCategory c : kPriorityOrder) {
    if (name == reason_category_name(c)) return c;
  }
  if (name == "unknown") return ReasonCategory::kUnknown;
  return std::nullopt;
}

const ReasonTable& default_reason_table() {
  static const ReasonTable table{{
      {ReasonCategory::kPersonalAttack,
       {"personal attack", "wp:npa", "incivility", "uncivil", "civility", "insult"}},
      {ReasonCategory::kHarassment,
       {"harass", "hounding", "wp:hound", "stalking", "intimidat"}},
      {ReasonCategory::kEditWarring,
       {"edit war", "edit-war", "editwar", "3rr", "three-revert", "three revert",
        "revert war", "1rr"}},
      {ReasonCategory::kDisruptiveEditing, {"disruptive edit", "disruptive"}},
      {ReasonCategory::kProtection,
       {"legal threat", "copyright", "personal information", "outing",
        "privacy", "wp:nlt"}},
      {ReasonCategory::kOtherDisruption,
       {"vandal", "spam", "sock", "advertis", "username", "block evasion",
        "disruption"}},
  }};
  return table;
}

ReasonTable load_reason_table(std::istream& in) {
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "reason table must be a JSON object");
  }
  ReasonTable table;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!parse_reason_category(it.key()) || it.key() == "unknown") {
      throw Error(ErrorCode::kInvalidConfig, "unknown reason category '" + it.key() + "'");
    }
    if (!it.value().is_array()) {
      throw Error(ErrorCode::kInvalidConfig, "keywords for '" + it.key() + "' must be a list");
    }
  }
  for (ReasonCategory c : kPriorityOrder) {
    auto it = doc.find(reason_category_name(c));
    if (it == doc.end()) continue;
    std::vector<std::string> keywords;
    for (const auto& kw : *it) {
      if (!kw.is_string()) {
        throw Error(ErrorCode::kInvalidConfig, "keywords must be strings");
      }
      keywords.push_back(lowercase(kw.get<std::string>()));
    }
    table.rules.emplace_back(c, std::move(keywords));
  }
  return table;
}

ReasonCategory categorize_reason(std::string_view reason_text, const ReasonTable& table) {
  const std::string text = lowercase(reason_text);
  for (const auto& [category, keywords] : table.rules) {
    for (const auto& kw : keywords) {
      if (!kw.empty() && text.find(kw) != std::string::npos) return category;
    }
  }
  return ReasonCategory::kUnknown;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON helpers
// ---------------------------------------------------------------------------

namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

// Collects per-line failures; rethrows immediately in strict mode.
class IssueSink {
 public:
  IssueSink(ParseOptions options, std::size_t* skipped, std::vector<ParseIssue>* issues)
      : options_(options), skipped_(skipped), issues_(issues) {}

  void report(std::size_t line, ErrorCode code, std::string message) {
    if (options_.strict) {
      throw Error(code, "line " + std::to_string(line) + ": " + message);
    }
    ++*skipped_;
    issues_->push_back({line, code, std::move(message)});
  }

 private:
  ParseOptions options_;
  std::size_t* skipped_;
  std::vector<ParseIssue>* issues_;
};

struct LineError {
  ErrorCode code;
  std::string message;
};

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw LineError{ErrorCode::kMalformedRecord, std::string("missing key '") + key + "'"};
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) {
    throw LineError{ErrorCode::kMalformedRecord, std::string("'") + key + "' must be a string"};
  }
  return v.get<std::string>();
}

Timestamp require_timestamp(const nlohmann::json& obj) {
  const auto& v = require(obj, "ts");
  if (!v.is_number_integer()) {
    throw LineError{ErrorCode::kMalformedRecord, "'ts' must be an integer"};
  }
  const auto ts = v.get<std::int64_t>();
  if (ts < 0) throw LineError{ErrorCode::kMalformedRecord, "'ts' must be non-negative"};
  return ts;
}

nlohmann::json parse_object(const std::string& line) {
  nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw LineError{ErrorCode::kMalformedRecord, "not a JSON object"};
  }
  return obj;
}

BlockLogEntry parse_block_entry(const std::string& line) {
  const nlohmann::json obj = parse_object(line);
  BlockLogEntry e;
  e.timestamp = require_timestamp(obj);
  e.admin = require_string(obj, "admin");
  e.target = require_string(obj, "target");
  const std::string action = require_string(obj, "action");
  if (action == "block") {
    e.action = BlockAction::kBlock;
  } else if (action == "unblock") {
    e.action = BlockAction::kUnblock;
  } else if (action == "modify") {
    e.action = BlockAction::kModify;
  } else {
    throw LineError{ErrorCode::kUnknownAction, "unknown action '" + action + "'"};
  }
  auto dur = obj.find("duration_s");
  const bool has_duration = dur != obj.end() && !dur->is_null();
  if (e.action == BlockAction::kUnblock) {
    if (has_duration) {
      throw LineError{ErrorCode::kMalformedRecord, "unblock entries carry no duration"};
    }
  } else {
    if (!has_duration) {
      throw LineError{ErrorCode::kMalformedRecord, "missing key 'duration_s'"};
    }
    if (dur->is_string()) {
      if (dur->get<std::string>() != "indefinite") {
        throw LineError{ErrorCode::kMalformedRecord, "'duration_s' string must be \"indefinite\""};
      }
    } else if (dur->is_number_integer()) {
      const auto d = dur->get<std::int64_t>();
      if (d <= 0) {
        throw LineError{ErrorCode::kNonPositiveDuration, "duration must be positive"};
      }
      e.duration = d;
    } else {
      throw LineError{ErrorCode::kMalformedRecord, "'duration_s' must be an integer"};
    }
  }
  if (auto r = obj.find("reason"); r != obj.end() && !r->is_null()) {
    if (!r->is_string()) throw LineError{ErrorCode::kMalformedRecord, "'reason' must be a string"};
    e.reason = r->get<std::string>();
  }
  return e;
}

CommentEvent parse_comment(const std::string& line) {
  const nlohmann::json obj = parse_object(line);
  CommentEvent c;
  c.id = require_string(obj, "id");
  c.author = require_string(obj, "author");
  c.owner = require_string(obj, "owner");
  const std::string kind = require_string(obj, "page_kind");
  if (kind == "user") {
    c.page_kind = PageKind::kUserTalk;
  } else if (kind == "article") {
    c.page_kind = PageKind::kArticleTalk;
  } else {
    throw LineError{ErrorCode::kMalformedRecord, "unknown page_kind '" + kind + "'"};
  }
  c.timestamp = require_timestamp(obj);
  const std::string action = require_string(obj, "action");
  if (action == "add") {
    c.action = CommentAction::kAdd;
  } else if (action == "edit") {
    c.action = CommentAction::kEdit;
  } else if (action == "delete") {
    c.action = CommentAction::kDelete;
  } else {
    throw LineError{ErrorCode::kUnknownAction, "unknown action '" + action + "'"};
  }
  if (auto t = obj.find("text"); t != obj.end() && !t->is_null()) {
    if (!t->is_string()) throw LineError{ErrorCode::kMalformedRecord, "'text' must be a string"};
    c.text = t->get<std::string>();
  }
  if (c.text.empty() && c.action != CommentAction::kDelete) {
    throw LineError{ErrorCode::kMalformedRecord, "text may only be empty for deletions"};
  }
  return c;
}

const char* action_name(BlockAction a) {
  switch (a) {
    case BlockAction::kBlock: return "block";
    case BlockAction::kUnblock: return "unblock";
    case BlockAction::kModify: return "modify";
  }
  return "block";
}

const char* action_name(CommentAction a) {
  switch (a) {
    case CommentAction::kAdd: return "add";
    case CommentAction::kEdit: return "edit";
    case CommentAction::kDelete: return "delete";
  }
  return "add";
}

}  // namespace

BlockLogParse parse_block_log(std::istream& in, ParseOptions options) {
  BlockLogParse result;
  IssueSink sink(options, &result.skipped, &result.issues);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      result.entries.push_back(parse_block_entry(line));
    } catch (const LineError& err) {
      sink.report(line_no, err.code, err.message);
    }
  }
  return result;
}

std::string block_log_line(const BlockLogEntry& entry) {
  nlohmann::ordered_json obj;
  obj["ts"] = entry.timestamp;
  obj["admin"] = entry.admin;
  obj["target"] = entry.target;
  obj["action"] = action_name(entry.action);
  if (entry.action != BlockAction::kUnblock) {
    if (entry.duration) {
      obj["duration_s"] = *entry.duration;
    } else {
      obj["duration_s"] = "indefinite";
    }
  }
  obj["reason"] = entry.reason;
  return obj.dump();
}

void write_block_log(std::ostream& out, std::span<const BlockLogEntry> entries) {
  for (const auto& e : entries) out << block_log_line(e) << '\n';
}

// ---------------------------------------------------------------------------
// Span reconstruction
// ---------------------------------------------------------------------------

MergeResult merge_block_spans(std::span<const BlockLogEntry> entries,
                              const ReasonTable& table) {
  MergeResult result;
  auto& spans = result.spans;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const BlockLogEntry& e = entries[i];
    if (i > 0) {
      if (e.target != entries[0].target) {
        throw Error(ErrorCode::kInvalidArgument, "entries span more than one target");
      }
      if (e.timestamp < entries[i - 1].timestamp) {
        throw Error(ErrorCode::kInvalidArgument, "entries are not sorted by timestamp");
      }
    }
    const bool active_or_touching = !spans.empty() && e.timestamp <= spans.back().effective_end;

    if (e.action == BlockAction::kUnblock) {
      if (spans.empty() || e.timestamp >= spans.back().effective_end) {
        result.warnings.push_back({MergeWarningKind::kUnblockWithoutActiveBlock, i});
        continue;
      }
      BlockSpan& cur = spans.back();
      if (e.timestamp == cur.start) {
        spans.pop_back();
        result.warnings.push_back({MergeWarningKind::kEmptySpan, i});
        continue;
      }
      cur.effective_end = e.timestamp;
      cur.reduction = cur.original_end - e.timestamp;
      cur.reduced_early = cur.reduction > 0;
      cur.entries.push_back(e);
      continue;
    }

    const Timestamp end = e.duration ? saturating_add(e.timestamp, *e.duration) : kForever;
    if (active_or_touching) {
      BlockSpan& cur = spans.back();
      if (cur.reduced_early || e.action == BlockAction::kModify) {
        cur.original_end = end;
      } else {
        cur.original_end = std::max(cur.original_end, end);
      }
      cur.effective_end = cur.original_end;
      cur.reduced_early = false;
      cur.reduction = 0;
      cur.entries.push_back(e);
    } else {
      BlockSpan span;
      span.target = e.target;
      span.start = e.timestamp;
      span.original_end = end;
      span.effective_end = end;
      span.reason_category = categorize_reason(e.reason, table);
      span.entries.push_back(e);
      spans.push_back(std::move(span));
    }
  }
  return result;
}

std::map<UserId, std::vector<BlockLogEntry>> group_by_target(
    std::span<const BlockLogEntry> entries) {
  std::map<UserId, std::vector<BlockLogEntry>> groups;
  for (const auto& e : entries) groups[e.target].push_back(e);
  for (auto& [target, list] : groups) {
    std::stable_sort(list.begin(), list.end(),
                     [](const BlockLogEntry& a, const BlockLogEntry& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return groups;
}

BlockHistories reconstruct_block_histories(std::span<const BlockLogEntry> entries,
                                           const ReasonTable& table) {
  auto groups = group_by_target(entries);
  std::vector<const std::pair<const UserId, std::vector<BlockLogEntry>>*> order;
  order.reserve(groups.size());
  for (const auto& g : groups) order.push_back(&g);

  std::vector<MergeResult> merged(order.size());
  parallel_for(order.size(), [&](std::size_t i) {
    merged[i] = merge_block_spans(order[i]->second, table);
  });

  BlockHistories out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const UserId& user = order[i]->first;
    if (!merged[i].spans.empty()) out.spans.emplace(user, std::move(merged[i].spans));
    if (!merged[i].warnings.empty()) out.warnings.emplace(user, std::move(merged[i].warnings));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comments
// ---------------------------------------------------------------------------

CommentIndex::CommentIndex(std::vector<CommentEvent> events) : events_(std::move(events)) {
  std::sort(events_.begin(), events_.end(), [](const CommentEvent& a, const CommentEvent& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  std::unordered_set<std::string_view> seen;
  seen.reserve(events_.size());
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (!seen.insert(events_[i].id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate comment id '" + events_[i].id + "'");
    }
    by_author_[events_[i].author].push_back(i);
    by_owner_[events_[i].owner].push_back(i);
  }
}

std::span<const std::size_t> CommentIndex::authored_by(const UserId& user) const {
  auto it = by_author_.find(user);
  if (it == by_author_.end()) return {};
  return it->second;
}

std::span<const std::size_t> CommentIndex::on_page_of(const std::string& owner) const {
  auto it = by_owner_.find(owner);
  if (it == by_owner_.end()) return {};
  return it->second;
}

CommentParse load_comments(std::istream& in, ParseOptions options) {
  CommentParse result;
  IssueSink sink(options, &result.skipped, &result.issues);
  std::vector<CommentEvent> events;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      CommentEvent c = parse_comment(line);
      if (!ids.insert(c.id).second) {
        throw LineError{ErrorCode::kDuplicateId, "duplicate comment id '" + c.id + "'"};
      }
      events.push_back(std::move(c));
    } catch (const LineError& err) {
      sink.report(line_no, err.code, err.message);
    }
  }
  result.index = CommentIndex(std::move(events));
  return result;
}

std::string comment_line(const CommentEvent& event) {
  nlohmann::ordered_json obj;
  obj["id"] = event.id;
  obj["author"] = event.author;
  obj["owner"] = event.owner;
  obj["page_kind"] = event.page_kind == PageKind::kUserTalk ? "user" : "article";
  obj["ts"] = event.timestamp;
  obj["action"] = action_name(event.action);
  obj["text"] = event.text;
  return obj.dump();
}

void write_comments(std::ostream& out, std::span<const CommentEvent> events) {
  for (const auto& e : events) out << comment_line(e) << '\n';
}

}  // namespace modtraj
