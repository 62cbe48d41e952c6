#include "modtraj/lingcues.h"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "modtraj/csv.h"
#include "modtraj/parallel.h"

namespace modtraj {

namespace {

bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '\'' ||
         c >= 0x80;
}

char lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

bool token_matches(const std::string& token, const std::string& pattern, bool prefix) {
  if (prefix) return token.compare(0, pattern.size(), pattern) == 0;
  return token == pattern;
}

// Term occurrences as token index ranges [i, i + size).
template <typename Fn>
void for_each_match(std::span<const Token> tokens, const LexiconTerm& term, Fn&& fn) {
  const std::size_t k = term.tokens.size();
  if (k == 0 || tokens.size() < k) return;
  for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < k && ok; ++j) {
      ok = token_matches(tokens[i + j].lower, term.tokens[j], term.prefix_last && j + 1 == k);
    }
    if (ok) fn(i, k);
  }
}

bool starts_with_term(std::span<const Token> tokens, const LexiconTerm& term) {
  const std::size_t k = term.tokens.size();
  if (k == 0 || tokens.size() < k) return false;
  for (std::size_t j = 0; j < k; ++j) {
    if (!token_matches(tokens[j].lower, term.tokens[j], term.prefix_last && j + 1 == k)) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> strings(std::initializer_list<const char*> items) {
  return {items.begin(), items.end()};
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word_byte(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && text[b] == '\'') ++b;
    while (e > b && text[e - 1] == '\'') --e;
    if (b < e) {
      Token t;
      t.begin = b;
      t.end = e;
      t.lower.reserve(e - b);
      for (std::size_t k = b; k < e; ++k) t.lower += lower(text[k]);
      out.push_back(std::move(t));
    }
    i = j;
  }
  return out;
}

LexiconTerm parse_term(std::string_view spec) {
  LexiconTerm term;
  std::string s(spec);
  if (!s.empty() && s.back() == '*') {
    term.prefix_last = true;
    s.pop_back();
  }
  for (auto& t : tokenize(s)) term.tokens.push_back(std::move(t.lower));
  if (term.tokens.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "lexicon term '" + std::string(spec) + "' has no words");
  }
  return term;
}

Lexicon make_lexicon(std::span<const std::string> specs) {
  Lexicon lex;
  for (const auto& s : specs) lex.terms.push_back(parse_term(s));
  return lex;
}

const CueLexicons& default_lexicons() {
  static const CueLexicons lex = [] {
    CueLexicons l;
    l.apology = make_lexicon(strings({"apolog*", "sorry*", "forgiv*", "regret*", "excuse me",
                                      "my mistake", "my bad"}));
    l.unfairness = make_lexicon(strings({"unjust", "unjustified", "illegitimate", "illegal",
                                         "unfair", "not fair", "accus*", "wrongly", "falsely",
                                         "injustice", "unfounded", "alleg*", "unwarranted"}));
    l.question_openers = make_lexicon(strings({"why", "how", "what", "who", "so what", "so why"}));
    return l;
  }();
  return lex;
}

CueLexicons load_lexicons(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("lexicon file: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidConfig, "lexicon file must be an object");
  CueLexicons lex = default_lexicons();
  auto read = [&](const char* key, Lexicon& target) {
    if (!doc.contains(key)) return;
    const auto& v = doc[key];
    if (!v.is_array()) throw Error(ErrorCode::kInvalidConfig, std::string(key) + " must be a list");
    std::vector<std::string> specs;
    for (const auto& item : v) {
      if (!item.is_string()) {
        throw Error(ErrorCode::kInvalidConfig, std::string(key) + " entries must be strings");
      }
      specs.push_back(item.get<std::string>());
    }
    target = make_lexicon(specs);
  };
  for (const auto& [key, _] : doc.items()) {
    if (key != "apology" && key != "unfairness" && key != "question_openers") {
      throw Error(ErrorCode::kInvalidConfig, "unknown lexicon '" + key + "'");
    }
  }
  read("apology", lex.apology);
  read("unfairness", lex.unfairness);
  read("question_openers", lex.question_openers);
  return lex;
}

std::vector<std::string> match_lexicon(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& term : lexicon.terms) {
    for_each_match(tokens, term, [&](std::size_t i, std::size_t k) {
      ranges.emplace_back(tokens[i].begin, tokens[i + k - 1].end);
    });
  }
  std::sort(ranges.begin(), ranges.end());
  ranges.erase(std::unique(ranges.begin(), ranges.end()), ranges.end());
  std::vector<std::string> out;
  for (const auto& [b, e] : ranges) out.emplace_back(text.substr(b, e - b));
  return out;
}

std::vector<std::string> detect_apology(std::string_view text, const CueLexicons& lex) {
  return match_lexicon(text, lex.apology);
}

std::vector<std::string> detect_direct_question(std::string_view text, const CueLexicons& lex) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    const std::string_view sentence = text.substr(start, i + 1 - start);
    start = i + 1;
    if (c != '?') continue;
    const auto tokens = tokenize(sentence);
    for (const auto& opener : lex.question_openers.terms) {
      if (starts_with_term(tokens, opener)) {
        out.emplace_back(sentence.substr(tokens.front().begin));
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> detect_unfairness(std::string_view text, const CueLexicons& lex) {
  return match_lexicon(text, lex.unfairness);
}

const char* cue_name(Cue cue) {
  switch (cue) {
    case Cue::kApology: return "apology";
    case Cue::kDirectQuestion: return "direct_question";
    case Cue::kUnfairness: return "unfairness";
  }
  return "?";
}

std::vector<CommentEvent> in_block_messages(const UserTimeline& t, const BlockSpan& span) {
  std::vector<CommentEvent> out;
  for (const auto& e : t.authored) {
    if (e.timestamp >= span.effective_end) break;
    if (e.timestamp < span.start || !e.on_user_talk_of(t.user)) continue;
    if (e.action == CommentAction::kAdd || e.action == CommentAction::kEdit) out.push_back(e);
  }
  return out;
}

bool CueFlags::has(Cue cue) const {
  switch (cue) {
    case Cue::kApology: return apology;
    case Cue::kDirectQuestion: return direct_question;
    case Cue::kUnfairness: return unfairness;
  }
  return false;
}

CueFlags cue_flags(const UserTimeline& t, const BlockSpan& span, const CueLexicons& lex) {
  CueFlags flags;
  const auto messages = in_block_messages(t, span);
  flags.n_messages = messages.size();
  auto record = [&](Cue cue, std::vector<std::string> hits, bool& flag) {
    if (!hits.empty()) flag = true;
    for (auto& h : hits) flags.snippets.emplace_back(cue, std::move(h));
  };
  for (const auto& m : messages) {
    record(Cue::kApology, detect_apology(m.text, lex), flags.apology);
    record(Cue::kDirectQuestion, detect_direct_question(m.text, lex), flags.direct_question);
    record(Cue::kUnfairness, detect_unfairness(m.text, lex), flags.unfairness);
  }
  return flags;
}

std::vector<UserCues> compute_cues(std::span<const UserTimeline> timelines,
                                   std::span<const UserId> users, const CueLexicons& lex) {
  std::vector<UserCues> out(users.size());
  parallel_for(users.size(), [&](std::size_t i) {
    out[i].user = users[i];
    const UserTimeline* t = find_timeline(timelines, users[i]);
    if (t && t->first_span()) out[i].flags = cue_flags(*t, *t->first_span(), lex);
  });
  return out;
}

void write_cues_csv(std::ostream& out, std::span<const UserCues> cues) {
  out << "user,apology,direct_question,unfairness,n_messages,approx\n";
  for (const auto& c : cues) {
    out << csv_field(c.user) << ',' << fmt_bool(c.flags.apology) << ','
        << fmt_bool(c.flags.direct_question) << ',' << fmt_bool(c.flags.unfairness) << ','
        << c.flags.n_messages << ",1\n";
  }
}

BagOfWords in_block_bag(std::span<const UserTimeline> timelines, std::span<const UserId> users) {
  BagOfWords bag;
  for (const auto& user : users) {
    const UserTimeline* t = find_timeline(timelines, user);
    if (!t || !t->first_span()) continue;
    for (const auto& m : in_block_messages(*t, *t->first_span())) {
      for (auto& tok : tokenize(m.text)) ++bag[std::move(tok.lower)];
    }
  }
  return bag;
}

}  // namespace modtraj
