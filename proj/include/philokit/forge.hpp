#pragma once

// Corpus curation: Greek-book detection, normalization, vocabulary-coverage line filtering,
// long-repeat removal and wc-compatible token statistics.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace philokit::forge {

enum class DropReason { vocab_coverage, duplicate, not_greek };
std::string_view reason_name(DropReason r);

struct CorpusLine {
  std::string text;
  std::string source_id;
  std::size_t line_no = 0;  // 1-based within the source
  bool kept = true;
  std::optional<DropReason> drop_reason;

  void drop(DropReason r) {
    kept = false;
    drop_reason = r;
  }
};

struct FilterConfig {
  std::vector<std::string> stopwords{"τουτο", "και", "τον", "το", "γαρ"};
  /// A stopword must occur strictly more often than this.
  int stopword_min_count = 10;
  /// Strip diacritics from document tokens (and stopwords) before matching.
  bool strip_stopword_diacritics = true;
  /// Keep a line iff in-vocab / total > coverage_threshold.
  double coverage_threshold = 0.90;
  /// Tokens made only of punctuation are left out of the coverage ratio.
  bool exclude_punctuation = false;
  /// Repeats longer than this many characters are removed.
  std::size_t dup_min_chars = 300;

  /// Throws when a value is out of range.
  void validate() const;
};

/// True iff input is well-formed UTF-8 (no surrogates, no overlongs).
bool is_valid_utf8(std::string_view s);

/// NFC. Throws Error on invalid UTF-8.
std::string normalize(std::string_view text);

/// Canonical decomposition with nonspacing marks removed, recomposed. Invalid bytes become U+FFFD.
std::string strip_diacritics(std::string_view text);

/// Words exactly as `wc -w` delimits them in a UTF-8 locale.
std::vector<std::string_view> wc_tokens(std::string_view text);

/// Same count as `wc -w` in a UTF-8 locale.
std::size_t count_tokens(std::string_view text);

/// Every configured stopword occurs more than stopword_min_count times as a whole token.
bool detect_greek(std::string_view document, const FilterConfig& cfg);

using Vocabulary = std::unordered_set<std::string>;

/// Normalized whitespace tokens of born-digital text.
Vocabulary build_vocabulary(const std::vector<std::string>& texts);
/// One token per line; lines are normalized, blank lines ignored.
Vocabulary load_vocabulary(const std::string& path);

/// True when every code point of the token is punctuation.
bool is_punctuation_token(std::string_view token);

/// In-vocab and counted tokens of a line under cfg.
struct Coverage {
  std::size_t in_vocab = 0;
  std::size_t total = 0;
  bool passes(double threshold) const {
    return total > 0 &&
           static_cast<double>(in_vocab) / static_cast<double>(total) > threshold;
  }
};
Coverage line_coverage(std::string_view line, const Vocabulary& vocab, const FilterConfig& cfg);

/// Marks kept lines that fail the coverage rule (empty lines included).
void filter_lines(std::vector<CorpusLine>& lines, const Vocabulary& vocab, const FilterConfig& cfg);

/// Walks the kept lines in order and drops each line that would make some window of
/// dup_min_chars + 1 code points occur twice in the kept text (lines joined by '\n').
void dedup(std::vector<CorpusLine>& lines, const FilterConfig& cfg);

struct Document {
  std::string source_id;
  std::string text;
};

/// Lines of a text split on '\n' (a trailing newline does not start a new line).
std::vector<std::string> split_lines(std::string_view text);

struct SourceStats {
  std::string source_id;
  std::size_t lines = 0;
  std::size_t kept = 0;
  std::size_t tokens = 0;  // wc -w of the kept text
};

struct CurateOptions {
  FilterConfig filter;
  /// Drop whole documents that fail detect_greek.
  bool require_greek = false;
};

struct CurateResult {
  std::vector<Document> outputs;  // kept text per source, one line per line
  std::vector<CorpusLine> lines;  // every input line with its verdict
  std::vector<SourceStats> stats;
};

/// normalize -> detect (optional) -> filter -> dedup, documents in source_id order.
CurateResult curate(std::vector<Document> docs, const Vocabulary& vocab, const CurateOptions& opts);

/// TSV with a header and an Overall row; millions to two decimals.
std::string format_stats(const std::vector<SourceStats>& stats);
/// TSV drop-log: source_id, line_no, reason.
std::string format_drop_log(const std::vector<CorpusLine>& lines);

}  // namespace philokit::forge
