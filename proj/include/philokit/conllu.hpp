#pragma once

// CoNLL-U reading, writing and tree checks.

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace philokit::conllu {

/// One syntactic word (a CoNLL-U line with an integer ID).
struct Token {
  int id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  /// FEATS as ordered attribute/value pairs; empty means "_".
  std::vector<std::pair<std::string, std::string>> feats;
  /// HEAD column; 0 is ROOT.
  int head = 0;
  std::string deprel;
  /// DEPS column, kept verbatim.
  std::string deps = "_";
  /// MISC column, kept verbatim.
  std::string raw_misc = "_";

  bool operator==(const Token&) const = default;
};

/// Multiword-token range or empty-node line, kept verbatim at its original position.
struct OpaqueLine {
  /// Index into Sentence::tokens of the token this line precedes (tokens.size() for "at end").
  std::size_t before_token = 0;
  std::string text;

  bool operator==(const OpaqueLine&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  /// Every comment line in file order, including the leading '#'.
  std::vector<std::string> comments;
  std::vector<OpaqueLine> opaque;

  std::optional<std::string> sent_id() const;
  std::optional<std::string> text_comment() const;
  /// Comments other than sent_id and text, in order.
  std::vector<std::string> other_comments() const;

  std::size_t size() const noexcept { return tokens.size(); }

  bool operator==(const Sentence&) const = default;
};

/// Distinct-value counts over a treebank.
struct TagsetSummary {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t lemmata = 0;
  std::size_t forms = 0;
  std::size_t upos = 0;
  std::size_t xpos = 0;
  std::size_t deprels = 0;

  bool operator==(const TagsetSummary&) const = default;
};

struct Treebank {
  std::vector<Sentence> sentences;

  /// Recomputed from sentences on every call. "_" values are not counted as tags.
  TagsetSummary summary() const;
};

struct ParseOptions {
  /// Reject sentences whose heads do not form a single tree rooted at 0.
  bool strict_tree = false;
};

Treebank parse(std::istream& in, const ParseOptions& opts = {});
Treebank parse(std::string_view text, const ParseOptions& opts = {});
Treebank read_file(const std::string& path, const ParseOptions& opts = {});

std::string serialize(const Treebank& tb);
void serialize(const Treebank& tb, std::ostream& out);
void write_file(const Treebank& tb, const std::string& path);

std::string format_feats(const std::vector<std::pair<std::string, std::string>>& feats);

/// Outcome of checking a head assignment.
struct TreeCheck {
  bool is_tree = false;     // every token reaches 0, no cycles
  std::size_t roots = 0;    // tokens attached to 0
  std::string problem;      // empty when is_tree
};

/// heads[k] is the head of token k+1, 0 for ROOT.
TreeCheck check_tree(const std::vector<int>& heads);
TreeCheck check_tree(const Sentence& s);
std::vector<int> heads_of(const Sentence& s);

/// Perseus positional XPoS: slot 0 is the word class, slots 1..8 are person,
/// number, tense, mood, voice, gender, case and degree. '-' marks an empty slot.
enum class MorphSlot {
  word_class = 0,
  person,
  number,
  tense,
  mood,
  voice,
  gender,
  grammatical_case,
  degree,
};

inline constexpr std::size_t kMorphSlots = 9;
inline constexpr char kEmptySlot = '-';

struct MorphTagSet {
  std::array<char, kMorphSlots> slots{};

  char operator[](MorphSlot s) const { return slots[static_cast<std::size_t>(s)]; }
  bool empty(MorphSlot s) const { return (*this)[s] == kEmptySlot; }
  std::string join() const { return {slots.begin(), slots.end()}; }

  bool operator==(const MorphTagSet&) const = default;
};

std::string_view slot_name(MorphSlot s);

/// Throws philokit::Error unless xpos is exactly 9 bytes.
MorphTagSet split_xpos_perseus(std::string_view xpos);

}  // namespace philokit::conllu
