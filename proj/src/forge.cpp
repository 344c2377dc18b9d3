#include "philokit/forge.hpp"

#include <algorithm>
#include <clocale>
#include <cstdio>
#include <cwchar>
#include <cwctype>
#include <locale.h>
#include <map>
#include <memory>
#include <unordered_map>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/ustring.h>
#include <unicode/utf8.h>

#include "philokit/error.hpp"
#include "philokit/io.hpp"

namespace philokit::forge {
namespace {

const icu::Normalizer2& nfc() {
  UErrorCode st = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(st);
  if (U_FAILURE(st)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(st));
  return *n;
}

const icu::Normalizer2& nfd() {
  UErrorCode st = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(st);
  if (U_FAILURE(st)) throw Error(std::string("ICU NFD unavailable: ") + u_errorName(st));
  return *n;
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

// Decodes UTF-8 into code points; invalid sequences become U+FFFD.
std::u32string code_points(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

// Thread-local UTF-8 ctype locale for the wc rules.
class Utf8Locale {
 public:
  Utf8Locale() {
    loc_ = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (!loc_) loc_ = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(nullptr));
    if (!loc_) throw Error("no UTF-8 locale available for token counting");
    prev_ = uselocale(loc_);
  }
  ~Utf8Locale() {
    uselocale(prev_);
    freelocale(loc_);
  }
  Utf8Locale(const Utf8Locale&) = delete;
  Utf8Locale& operator=(const Utf8Locale&) = delete;

 private:
  locale_t loc_;
  locale_t prev_;
};

std::vector<CorpusLine*> kept_lines(std::vector<CorpusLine>& lines) {
  std::vector<CorpusLine*> out;
  for (auto& l : lines)
    if (l.kept) out.push_back(&l);
  return out;
}

// GNU wc also splits on the no-break spaces.
bool is_nbspace(wchar_t c) { return c == 0x00A0 || c == 0x2007 || c == 0x202F || c == 0x2060; }

}  // namespace

std::string_view reason_name(DropReason r) {
  switch (r) {
    case DropReason::vocab_coverage: return "vocab_coverage";
    case DropReason::duplicate: return "duplicate";
    case DropReason::not_greek: return "not_greek";
  }
  return "unknown";
}

void FilterConfig::validate() const {
  if (!(coverage_threshold > 0.0 && coverage_threshold < 1.0))
    throw Error("coverage threshold must lie strictly between 0 and 1");
  if (dup_min_chars == 0) throw Error("dup_min_chars must be positive");
  if (stopword_min_count < 0) throw Error("stopword_min_count must be non-negative");
}

bool is_valid_utf8(std::string_view s) {
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

std::string normalize(std::string_view text) {
  if (!is_valid_utf8(text)) throw Error("normalize: invalid UTF-8");
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode st = U_ZERO_ERROR;
  const icu::UnicodeString out = nfc().normalize(u, st);
  if (U_FAILURE(st)) throw Error(std::string("normalize: ") + u_errorName(st));
  return to_utf8(out);
}

std::string strip_diacritics(std::string_view text) {
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode st = U_ZERO_ERROR;
  const icu::UnicodeString d = nfd().normalize(u, st);
  if (U_FAILURE(st)) throw Error(std::string("strip_diacritics: ") + u_errorName(st));
  icu::UnicodeString kept;
  for (int32_t i = 0; i < d.length();) {
    const UChar32 c = d.char32At(i);
    if (u_charType(c) != U_NON_SPACING_MARK) kept.append(c);
    i += U16_LENGTH(c);
  }
  const icu::UnicodeString out = nfc().normalize(kept, st);
  if (U_FAILURE(st)) throw Error(std::string("strip_diacritics: ") + u_errorName(st));
  return to_utf8(out);
}

std::vector<std::string_view> wc_tokens(std::string_view text) {
  Utf8Locale guard;
  std::vector<std::string_view> out;
  std::mbstate_t state{};
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_word = false;
  auto close = [&](std::size_t end) {
    if (in_word) out.push_back(text.substr(start, end - start));
    in_word = false;
  };
  while (i < text.size()) {
    wchar_t wc = 0;
    const std::size_t len = std::mbrtowc(&wc, text.data() + i, text.size() - i, &state);
    if (len == static_cast<std::size_t>(-1) || len == static_cast<std::size_t>(-2)) {
      state = std::mbstate_t{};
      ++i;
      continue;
    }
    const std::size_t step = len == 0 ? 1 : len;
    switch (wc) {
      case L'\n':
      case L'\r':
      case L'\f':
      case L'\t':
      case L' ':
      case L'\v':
        close(i);
        break;
      default:
        if (std::iswprint(static_cast<wint_t>(wc))) {
          if (std::iswspace(static_cast<wint_t>(wc)) || is_nbspace(wc)) {
            close(i);
          } else if (!in_word) {
            in_word = true;
            start = i;
          }
        }
        break;
    }
    i += step;
  }
  close(text.size());
  return out;
}

std::size_t count_tokens(std::string_view text) { return wc_tokens(text).size(); }

bool detect_greek(std::string_view document, const FilterConfig& cfg) {
  std::map<std::string, int> counts;
  for (const auto& w : cfg.stopwords)
    counts[cfg.strip_stopword_diacritics ? strip_diacritics(w) : std::string(w)] = 0;
  if (counts.empty()) return false;
  for (std::string_view tok : wc_tokens(document)) {
    const std::string key = cfg.strip_stopword_diacritics ? strip_diacritics(tok) : std::string(tok);
    auto it = counts.find(key);
    if (it != counts.end()) ++it->second;
  }
  return std::all_of(counts.begin(), counts.end(),
                     [&](const auto& kv) { return kv.second > cfg.stopword_min_count; });
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts) {
  Vocabulary v;
  for (const auto& t : texts) {
    const std::string norm = normalize(t);
    for (std::string_view tok : wc_tokens(norm)) v.emplace(tok);
  }
  return v;
}

Vocabulary load_vocabulary(const std::string& path) {
  const std::string text = io::read_text(path);
  Vocabulary v;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    std::string_view t = line;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ' || t.back() == '\t')) t.remove_suffix(1);
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
    if (t.empty()) continue;
    if (!is_valid_utf8(t)) throw ParseError(line_no, path + ": invalid UTF-8 in vocabulary");
    v.insert(normalize(t));
  }
  return v;
}

bool is_punctuation_token(std::string_view token) {
  const std::u32string cps = code_points(token);
  if (cps.empty()) return false;
  return std::all_of(cps.begin(), cps.end(),
                     [](char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; });
}

Coverage line_coverage(std::string_view line, const Vocabulary& vocab, const FilterConfig& cfg) {
  Coverage c;
  for (std::string_view tok : wc_tokens(line)) {
    if (cfg.exclude_punctuation && is_punctuation_token(tok)) continue;
    ++c.total;
    if (vocab.count(std::string(tok))) ++c.in_vocab;
  }
  return c;
}

void filter_lines(std::vector<CorpusLine>& lines, const Vocabulary& vocab, const FilterConfig& cfg) {
  cfg.validate();
  for (auto& l : lines) {
    if (!l.kept) continue;
    if (!line_coverage(l.text, vocab, cfg).passes(cfg.coverage_threshold))
      l.drop(DropReason::vocab_coverage);
  }
}

void dedup(std::vector<CorpusLine>& lines, const FilterConfig& cfg) {
  cfg.validate();
  const std::size_t w = cfg.dup_min_chars + 1;
  constexpr std::uint64_t kBase = 1000003ULL;
  std::uint64_t base_pow = 1;  // kBase^(w-1)
  for (std::size_t k = 1; k < w; ++k) base_pow *= kBase;

  std::u32string buf;  // accepted text
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;  // hash -> window starts

  auto window_hash = [&](std::size_t start) {
    std::uint64_t h = 0;
    for (std::size_t k = 0; k < w; ++k) h = h * kBase + buf[start + k];
    return h;
  };
  auto same = [&](std::size_t a, std::size_t b) {
    return std::equal(buf.begin() + static_cast<std::ptrdiff_t>(a),
                      buf.begin() + static_cast<std::ptrdiff_t>(a + w),
                      buf.begin() + static_cast<std::ptrdiff_t>(b));
  };

  for (CorpusLine* line : kept_lines(lines)) {
    const std::size_t old_size = buf.size();
    if (!buf.empty()) buf.push_back(U'\n');
    buf += code_points(line->text);
    std::vector<std::pair<std::uint64_t, std::size_t>> added;
    bool duplicate = false;
    if (buf.size() >= w) {
      // Windows ending at or after old_size.
      std::size_t first = old_size + 1 >= w ? old_size + 1 - w : 0;
      std::uint64_t h = 0;
      for (std::size_t s = first; s + w <= buf.size() && !duplicate; ++s) {
        h = s == first ? window_hash(s) : (h - buf[s - 1] * base_pow) * kBase + buf[s + w - 1];
        auto& bucket = seen[h];
        for (std::size_t prev : bucket)
          if (same(prev, s)) {
            duplicate = true;
            break;
          }
        if (!duplicate) {
          bucket.push_back(s);
          added.emplace_back(h, s);
        }
      }
    }
    if (duplicate) {
      for (auto it = added.rbegin(); it != added.rend(); ++it) {
        auto& bucket = seen[it->first];
        bucket.pop_back();
        if (bucket.empty()) seen.erase(it->first);
      }
      buf.resize(old_size);
      line->drop(DropReason::duplicate);
    }
  }
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      break;
    }
    out.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

CurateResult curate(std::vector<Document> docs, const Vocabulary& vocab, const CurateOptions& opts) {
  opts.filter.validate();
  std::stable_sort(docs.begin(), docs.end(),
                   [](const Document& a, const Document& b) { return a.source_id < b.source_id; });
  CurateResult r;
  for (const auto& d : docs) {
    const auto raw = split_lines(d.text);
    const bool greek = !opts.require_greek || detect_greek(d.text, opts.filter);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CorpusLine l;
      l.source_id = d.source_id;
      l.line_no = i + 1;
      if (!is_valid_utf8(raw[i]))
        throw Error(d.source_id + ": line " + std::to_string(i + 1) + ": invalid UTF-8");
      l.text = normalize(raw[i]);
      if (!greek) l.drop(DropReason::not_greek);
      r.lines.push_back(std::move(l));
    }
  }
  filter_lines(r.lines, vocab, opts.filter);
  dedup(r.lines, opts.filter);

  std::size_t k = 0;
  for (const auto& d : docs) {
    Document out{d.source_id, {}};
    SourceStats st{d.source_id, 0, 0, 0};
    for (; k < r.lines.size() && r.lines[k].source_id == d.source_id; ++k) {
      ++st.lines;
      if (!r.lines[k].kept) continue;
      ++st.kept;
      out.text += r.lines[k].text;
      out.text += '\n';
    }
    st.tokens = count_tokens(out.text);
    r.outputs.push_back(std::move(out));
    r.stats.push_back(std::move(st));
  }
  return r;
}

std::string format_stats(const std::vector<SourceStats>& stats) {
  std::string out = "source_id\tlines\tkept\ttokens\tmillions\n";
  SourceStats total{"Overall", 0, 0, 0};
  auto row = [&](const SourceStats& s) {
    char millions[64];
    std::snprintf(millions, sizeof millions, "%.2f", static_cast<double>(s.tokens) / 1e6);
    out += s.source_id + '\t' + std::to_string(s.lines) + '\t' + std::to_string(s.kept) + '\t' +
           std::to_string(s.tokens) + '\t' + millions + '\n';
  };
  for (const auto& s : stats) {
    row(s);
    total.lines += s.lines;
    total.kept += s.kept;
    total.tokens += s.tokens;
  }
  row(total);
  return out;
}

std::string format_drop_log(const std::vector<CorpusLine>& lines) {
  std::string out = "source_id\tline_no\treason\n";
  for (const auto& l : lines)
    if (l.drop_reason)
      out += l.source_id + '\t' + std::to_string(l.line_no) + '\t' +
             std::string(reason_name(*l.drop_reason)) + '\n';
  return out;
}

}  // namespace philokit::forge
