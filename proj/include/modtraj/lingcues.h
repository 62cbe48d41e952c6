#ifndef MODTRAJ_LINGCUES_H_
#define MODTRAJ_LINGCUES_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modtraj/ingest.h"
#include "modtraj/stats.h"
#include "modtraj/trajectory.h"

namespace modtraj {

// Cue detection matches surface token patterns. It approximates
// dependency-tree pattern matching and is reported as approximate in run
// metadata.
inline constexpr bool kCueDetectionApproximate = true;

struct Token {
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
  std::string lower;
};

// Maximal runs of ASCII letters, digits, apostrophes and non-ASCII bytes,
// lowercased, with leading and trailing apostrophes trimmed.
std::vector<Token> tokenize(std::string_view text);

// A term is a token sequence; a trailing '*' on its last token makes that
// token a prefix match.
struct LexiconTerm {
  std::vector<std::string> tokens;
  bool prefix_last = false;
};

LexiconTerm parse_term(std::string_view spec);

struct Lexicon {
  std::vector<LexiconTerm> terms;
};

Lexicon make_lexicon(std::span<const std::string> specs);

struct CueLexicons {
  Lexicon apology;
  Lexicon unfairness;
  // Sentence openers for direct questions, matched as whole tokens.
  Lexicon question_openers;
};

const CueLexicons& default_lexicons();

// JSON object with optional keys "apology", "unfairness" and
// "question_openers", each a list of term strings. Absent keys keep the
// defaults. Throws kInvalidConfig.
CueLexicons load_lexicons(std::istream& in);

// Verbatim substrings of the text that matched, in text order; empty when
// nothing matched.
std::vector<std::string> match_lexicon(std::string_view text, const Lexicon& lexicon);

std::vector<std::string> detect_apology(std::string_view text,
                                        const CueLexicons& lex = default_lexicons());

// Sentences split after '.', '?' or '!' that begin with an opener and end
// with '?'. Returns the matching sentences.
std::vector<std::string> detect_direct_question(std::string_view text,
                                                const CueLexicons& lex = default_lexicons());

std::vector<std::string> detect_unfairness(std::string_view text,
                                           const CueLexicons& lex = default_lexicons());

enum class Cue { kApology, kDirectQuestion, kUnfairness };

inline constexpr Cue kAllCues[] = {Cue::kApology, Cue::kDirectQuestion, Cue::kUnfairness};

const char* cue_name(Cue cue);

// Add and Edit events the user made on their own talk page while the span
// was in effect.
std::vector<CommentEvent> in_block_messages(const UserTimeline& t, const BlockSpan& span);

struct CueFlags {
  bool apology = false;
  bool direct_question = false;
  bool unfairness = false;
  std::size_t n_messages = 0;
  std::vector<std::pair<Cue, std::string>> snippets;

  bool has(Cue cue) const;
};

CueFlags cue_flags(const UserTimeline& t, const BlockSpan& span,
                   const CueLexicons& lex = default_lexicons());

struct UserCues {
  UserId user;
  CueFlags flags;
};

// Cues in each listed user's first block. Runs in parallel.
std::vector<UserCues> compute_cues(std::span<const UserTimeline> timelines,
                                   std::span<const UserId> users,
                                   const CueLexicons& lex = default_lexicons());

// The approx column is always 1: cues come from surface token patterns, not
// from a dependency parse.
void write_cues_csv(std::ostream& out, std::span<const UserCues> cues);

// Bag of tokens over the in-block messages of the listed users.
BagOfWords in_block_bag(std::span<const UserTimeline> timelines, std::span<const UserId> users);

}  // namespace modtraj

#endif  // MODTRAJ_LINGCUES_H_
