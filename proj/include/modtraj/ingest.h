#ifndef MODTRAJ_INGEST_H_
#define MODTRAJ_INGEST_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modtraj/common.h"

namespace modtraj {

// ---------------------------------------------------------------------------
// Block log
// ---------------------------------------------------------------------------

enum class BlockAction { kBlock, kUnblock, kModify };

struct BlockLogEntry {
  Timestamp timestamp = 0;
  UserId admin;
  UserId target;
  BlockAction action = BlockAction::kBlock;
  // Block/Modify: the imposed duration, nullopt for an indefinite block.
  // Unblock: always nullopt.
  std::optional<Seconds> duration;
  std::string reason;

  bool indefinite() const { return action != BlockAction::kUnblock && !duration; }

  friend bool operator==(const BlockLogEntry&, const BlockLogEntry&) = default;
};

enum class ReasonCategory {
  kPersonalAttack,
  kHarassment,
  kEditWarring,
  kDisruptiveEditing,
  kOtherDisruption,
  kProtection,
  kUnknown,
};

inline constexpr ReasonCategory kDisruptionSubset[] = {
    ReasonCategory::kPersonalAttack, ReasonCategory::kHarassment,
    ReasonCategory::kEditWarring, ReasonCategory::kDisruptiveEditing};

bool in_disruption_subset(ReasonCategory category);
const char* reason_category_name(ReasonCategory category);
std::optional<ReasonCategory> parse_reason_category(std::string_view name);

// Keyword table in priority order: the first category with a keyword that is
// a substring of the lowercased reason wins.
struct ReasonTable {
  std::vector<std::pair<ReasonCategory, std::vector<std::string>>> rules;
};

const ReasonTable& default_reason_table();

// Reads a JSON object mapping category name to a list of lowercase
// substrings. Priority follows the fixed category order, not the file order.
ReasonTable load_reason_table(std::istream& in);

ReasonCategory categorize_reason(std::string_view reason_text,
                                 const ReasonTable& table = default_reason_table());

struct ParseOptions {
  // Throw on the first bad line instead of skipping it.
  bool strict = false;
};

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::kMalformedRecord;
  std::string message;
};

struct BlockLogParse {
  std::vector<BlockLogEntry> entries;
  std::size_t skipped = 0;
  std::vector<ParseIssue> issues;
};

// Line-delimited JSON: ts, admin, target, action, duration_s, reason.
// Blank lines are ignored and not counted as skipped.
BlockLogParse parse_block_log(std::istream& in, ParseOptions options = {});

std::string block_log_line(const BlockLogEntry& entry);
void write_block_log(std::ostream& out, std::span<const BlockLogEntry> entries);

// ---------------------------------------------------------------------------
// Block spans
// ---------------------------------------------------------------------------

struct BlockSpan {
  UserId target;
  Timestamp start = 0;
  // kForever when the imposed block is indefinite.
  Timestamp original_end = 0;
  Timestamp effective_end = 0;
  bool reduced_early = false;
  Seconds reduction = 0;
  ReasonCategory reason_category = ReasonCategory::kUnknown;
  std::vector<BlockLogEntry> entries;

  bool indefinite() const { return original_end == kForever; }
  Seconds original_duration() const { return original_end - start; }
  Seconds effective_duration() const { return effective_end - start; }
  // True when the span came from a single Block entry that was never
  // extended, modified or lifted.
  bool duration_unchanged() const { return entries.size() == 1 && !reduced_early; }
};

enum class MergeWarningKind { kUnblockWithoutActiveBlock, kEmptySpan };

struct MergeWarning {
  MergeWarningKind kind;
  std::size_t entry_index;  // index into the merged entry list
};

struct MergeResult {
  std::vector<BlockSpan> spans;
  std::vector<MergeWarning> warnings;
};

// Folds one target's time-ordered entries into disjoint, sorted spans.
//
// A Block at or before the current end extends the span (union of the two
// intervals); a Modify at or before the current end replaces the end. A Block
// or Modify issued exactly when a span was lifted reopens that span with the
// new end, since lift-and-reblock is how durations get changed in practice.
// An Unblock before the end truncates the effective end and records the
// reduction; an Unblock with no active span is ignored with a warning. The
// category of a span is the category of the entry that opened it.
MergeResult merge_block_spans(std::span<const BlockLogEntry> entries,
                              const ReasonTable& table = default_reason_table());

// Entries grouped per target, each list stably sorted by timestamp.
std::map<UserId, std::vector<BlockLogEntry>> group_by_target(
    std::span<const BlockLogEntry> entries);

struct BlockHistories {
  std::map<UserId, std::vector<BlockSpan>> spans;
  std::map<UserId, std::vector<MergeWarning>> warnings;
};

BlockHistories reconstruct_block_histories(
    std::span<const BlockLogEntry> entries,
    const ReasonTable& table = default_reason_table());

// ---------------------------------------------------------------------------
// Comments
// ---------------------------------------------------------------------------

enum class PageKind { kUserTalk, kArticleTalk };
enum class CommentAction { kAdd, kEdit, kDelete };

struct CommentEvent {
  std::string id;
  UserId author;
  // User id for user talk pages, article id for article talk pages.
  std::string owner;
  PageKind page_kind = PageKind::kUserTalk;
  Timestamp timestamp = 0;
  CommentAction action = CommentAction::kAdd;
  std::string text;

  bool on_user_talk_of(const UserId& user) const {
    return page_kind == PageKind::kUserTalk && owner == user;
  }

  friend bool operator==(const CommentEvent&, const CommentEvent&) = default;
};

// Immutable store of comment events with per-author and per-owner indices.
// Events are held sorted by (timestamp, id); index lists refer to positions in
// that order and are therefore time-sorted.
class CommentIndex {
 public:
  CommentIndex() = default;
  // Throws kDuplicateId when two events share an id.
  explicit CommentIndex(std::vector<CommentEvent> events);

  std::span<const CommentEvent> events() const { return events_; }
  const CommentEvent& event(std::size_t i) const { return events_[i]; }
  std::size_t size() const { return events_.size(); }

  std::span<const std::size_t> authored_by(const UserId& user) const;
  std::span<const std::size_t> on_page_of(const std::string& owner) const;

  const std::map<UserId, std::vector<std::size_t>>& author_index() const {
    return by_author_;
  }
  const std::map<std::string, std::vector<std::size_t>>& owner_index() const {
    return by_owner_;
  }

 private:
  std::vector<CommentEvent> events_;
  std::map<UserId, std::vector<std::size_t>> by_author_;
  std::map<std::string, std::vector<std::size_t>> by_owner_;
};

struct CommentParse {
  CommentIndex index;
  std::size_t skipped = 0;
  std::vector<ParseIssue> issues;
};

// Line-delimited JSON: id, author, owner, page_kind, ts, action, text.
// A repeated id is reported as kDuplicateId and the later line is dropped.
CommentParse load_comments(std::istream& in, ParseOptions options = {});

std::string comment_line(const CommentEvent& event);
void write_comments(std::ostream& out, std::span<const CommentEvent> events);

}  // namespace modtraj

#endif  // MODTRAJ_INGEST_H_
