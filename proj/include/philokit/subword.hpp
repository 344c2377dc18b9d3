#pragma once

// Byte-pair-encoding subword segmentation with first-subword alignment.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace philokit::subword {

/// Appended to the last character of every word before merging.
inline constexpr std::string_view kEndOfWord = "</w>";
inline constexpr std::string_view kUnk = "<unk>";
// Target-token delimiters for lemmatization inputs; atomic, never split.
inline constexpr std::string_view kTokBeg = "<t_tok_beg>";
inline constexpr std::string_view kTokSep = "<t_tok_sep>";
inline constexpr std::string_view kTokEnd = "<t_tok_end>";

/// Symbols that always map to a fixed id and are never segmented. <unk> is id 0.
const std::vector<std::string>& reserved_symbols();

class BpeModel {
 public:
  using Pair = std::pair<std::string, std::string>;

  BpeModel() = default;
  /// merges in learned order; symbols in id order (must start with reserved_symbols()).
  BpeModel(std::vector<Pair> merges, std::vector<std::string> symbols);

  const std::vector<Pair>& merges() const noexcept { return merges_; }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::size_t vocab_size() const noexcept { return symbols_.size(); }

  /// Id of a symbol, or the <unk> id.
  int id(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  static constexpr int unk_id() { return 0; }

  /// Symbols of one word after applying merges in learned order.
  std::vector<std::string> apply(std::string_view word) const;

  std::string save() const;
  static BpeModel load(std::string_view text);
  void save_file(const std::string& path) const;
  static BpeModel load_file(const std::string& path);

 private:
  std::vector<Pair> merges_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
  std::unordered_map<std::string, std::size_t> rank_;  // "a\x1fb" -> merge index
};

/// Greedy merge learning. Each corpus string is split on ASCII whitespace into words.
/// target_vocab_size counts the non-reserved inventory (initial symbols + merged symbols);
/// learning stops at that size or when no adjacent pair remains. Ties on pair frequency
/// go to the lexicographically smallest pair. Throws on an empty corpus.
BpeModel learn_bpe(const std::vector<std::string>& corpus, std::size_t target_vocab_size);

/// Number of distinct initial symbols (characters, with end-of-word variants) in a corpus.
std::size_t initial_inventory_size(const std::vector<std::string>& corpus);

struct Segmentation {
  std::vector<int> subword_ids;
  /// Surface text of each subword (end-of-word marker included); unknown pieces keep their text.
  std::vector<std::string> pieces;
  /// token index -> position of its first subword
  std::vector<std::size_t> token_first_subword;

  std::size_t token_count() const noexcept { return token_first_subword.size(); }
  /// Subwords belonging to token i.
  std::pair<std::size_t, std::size_t> token_range(std::size_t i) const;
};

/// Segments each token independently. Reserved symbols map to themselves.
Segmentation segment(const BpeModel& model, const std::vector<std::string>& tokens);

/// Inverse of segment(): recovers the original token strings.
std::vector<std::string> detokenize(const Segmentation& seg);

/// UTF-8 code points of s as separate strings; stray bytes become one-byte strings.
std::vector<std::string> utf8_chars(std::string_view s);

}  // namespace philokit::subword
