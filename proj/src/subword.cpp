#include "philokit/subword.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "philokit/error.hpp"

namespace philokit::subword {
namespace {

std::string pair_key(std::string_view a, std::string_view b) {
  std::string k(a);
  k += '\x1f';
  k += b;
  return k;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool is_reserved(std::string_view w) {
  for (const auto& r : reserved_symbols())
    if (r == w) return true;
  return false;
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto chars = utf8_chars(word);
  if (!chars.empty()) chars.back() += kEndOfWord;
  return chars;
}

std::map<std::string, long> word_counts(const std::vector<std::string>& corpus) {
  std::map<std::string, long> counts;
  for (const auto& line : corpus)
    for (auto w : split_words(line))
      if (!is_reserved(w)) ++counts[std::string(w)];
  return counts;
}

// Pair statistics with O(log n) best-pair lookup, updated per affected word.
class PairStats {
 public:
  using Pair = BpeModel::Pair;

  void add_word(const std::vector<std::string>& syms, long freq, std::size_t word) {
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const Pair p{syms[i], syms[i + 1]};
      bump(p, freq);
      where_[p].insert(word);
    }
  }

  void remove_word(const std::vector<std::string>& syms, long freq) {
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) bump({syms[i], syms[i + 1]}, -freq);
  }

  bool empty() const { return order_.empty(); }

  Pair best() const {
    const auto& [neg, a, b] = *order_.begin();
    return {a, b};
  }

  std::set<std::size_t> take_words(const Pair& p) {
    auto it = where_.find(p);
    if (it == where_.end()) return {};
    std::set<std::size_t> out = std::move(it->second);
    where_.erase(it);
    return out;
  }

 private:
  void bump(const Pair& p, long delta) {
    long& c = count_[p];
    if (c > 0) order_.erase({-c, p.first, p.second});
    c += delta;
    if (c > 0)
      order_.insert({-c, p.first, p.second});
    else
      count_.erase(p);
  }

  std::map<Pair, long> count_;
  std::set<std::tuple<long, std::string, std::string>> order_;
  std::map<Pair, std::set<std::size_t>> where_;
};

std::vector<std::string> merge_pair(const std::vector<std::string>& syms, const std::string& a,
                                    const std::string& b) {
  std::vector<std::string> out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
      out.push_back(a + b);
      ++i;
    } else {
      out.push_back(syms[i]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c <= 0xF4)
      len = 4;
    else if (c >= 0xE0)
      len = 3;
    else if (c >= 0xC2 && c < 0xE0)
      len = 2;
    bool ok = i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k)
      ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    if (!ok || (c >= 0x80 && c < 0xC2) || c > 0xF4) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

const std::vector<std::string>& reserved_symbols() {
  static const std::vector<std::string> r{std::string(kUnk), std::string(kTokBeg),
                                          std::string(kTokSep), std::string(kTokEnd)};
  return r;
}

BpeModel::BpeModel(std::vector<Pair> merges, std::vector<std::string> symbols)
    : merges_(std::move(merges)), symbols_(std::move(symbols)) {
  const auto& reserved = reserved_symbols();
  if (symbols_.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), symbols_.begin()))
    throw Error("BPE vocabulary must start with the reserved symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second)
      throw Error("BPE vocabulary has duplicate symbol '" + symbols_[i] + "'");
  for (std::size_t i = 0; i < merges_.size(); ++i)
    rank_.emplace(pair_key(merges_[i].first, merges_[i].second), i);
}

int BpeModel::id(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? unk_id() : it->second;
}

bool BpeModel::contains(std::string_view symbol) const {
  return ids_.count(std::string(symbol)) != 0;
}

std::vector<std::string> BpeModel::apply(std::string_view word) const {
  auto syms = initial_symbols(word);
  while (syms.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find(pair_key(syms[i], syms[i + 1]));
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    const auto& [a, b] = merges_[best_rank];
    syms = merge_pair(syms, a, b);
  }
  return syms;
}

std::string BpeModel::save() const {
  std::ostringstream out;
  out << "#philokit-bpe 1\n";
  out << "merges " << merges_.size() << '\n';
  for (const auto& [a, b] : merges_) out << a << ' ' << b << '\n';
  out << "vocab " << symbols_.size() << '\n';
  for (const auto& s : symbols_) out << s << '\n';
  return out.str();
}

BpeModel BpeModel::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of BPE model");
    ++line_no;
    return std::string_view(line);
  };
  if (next() != "#philokit-bpe 1") throw ParseError(line_no, "not a philokit BPE model");
  auto count_after = [&](std::string_view head) {
    auto l = next();
    if (l.substr(0, head.size()) != head) throw ParseError(line_no, "expected '" + std::string(head) + "'");
    return static_cast<std::size_t>(std::stoul(std::string(l.substr(head.size()))));
  };
  std::vector<Pair> merges;
  const std::size_t m = count_after("merges ");
  for (std::size_t i = 0; i < m; ++i) {
    auto l = next();
    const auto sp = l.find(' ');
    if (sp == std::string_view::npos) throw ParseError(line_no, "malformed merge line");
    merges.emplace_back(std::string(l.substr(0, sp)), std::string(l.substr(sp + 1)));
  }
  std::vector<std::string> symbols;
  const std::size_t v = count_after("vocab ");
  for (std::size_t i = 0; i < v; ++i) symbols.emplace_back(next());
  return BpeModel(std::move(merges), std::move(symbols));
}

void BpeModel::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << save();
}

BpeModel BpeModel::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load(text);
}

std::size_t initial_inventory_size(const std::vector<std::string>& corpus) {
  std::set<std::string> inv;
  for (const auto& [w, c] : word_counts(corpus))
    for (auto& s : initial_symbols(w)) inv.insert(std::move(s));
  return inv.size();
}

BpeModel learn_bpe(const std::vector<std::string>& corpus, std::size_t target_vocab_size) {
  const auto counts = word_counts(corpus);
  if (counts.empty()) throw Error("learn_bpe: empty corpus");

  std::vector<std::vector<std::string>> words;
  std::vector<long> freqs;
  std::set<std::string> initial;
  for (const auto& [w, c] : counts) {
    words.push_back(initial_symbols(w));
    freqs.push_back(c);
    initial.insert(words.back().begin(), words.back().end());
  }

  PairStats stats;
  for (std::size_t i = 0; i < words.size(); ++i) stats.add_word(words[i], freqs[i], i);

  std::set<std::string> inventory = initial;
  std::vector<std::string> merged_order;
  std::vector<BpeModel::Pair> merges;
  while (inventory.size() < target_vocab_size && !stats.empty()) {
    const auto [a, b] = stats.best();
    merges.emplace_back(a, b);
    for (std::size_t w : stats.take_words({a, b})) {
      stats.remove_word(words[w], freqs[w]);
      words[w] = merge_pair(words[w], a, b);
      stats.add_word(words[w], freqs[w], w);
    }
    if (inventory.insert(a + b).second) merged_order.push_back(a + b);
  }

  std::vector<std::string> symbols = reserved_symbols();
  for (const auto& s : initial)
    if (!is_reserved(s)) symbols.push_back(s);
  for (const auto& s : merged_order)
    if (!initial.count(s) && !is_reserved(s)) symbols.push_back(s);
  return BpeModel(std::move(merges), std::move(symbols));
}

std::pair<std::size_t, std::size_t> Segmentation::token_range(std::size_t i) const {
  const std::size_t begin = token_first_subword.at(i);
  const std::size_t end =
      i + 1 < token_first_subword.size() ? token_first_subword[i + 1] : subword_ids.size();
  return {begin, end};
}

Segmentation segment(const BpeModel& model, const std::vector<std::string>& tokens) {
  Segmentation seg;
  seg.token_first_subword.reserve(tokens.size());
  for (const auto& tok : tokens) {
    seg.token_first_subword.push_back(seg.subword_ids.size());
    if (is_reserved(tok)) {
      seg.subword_ids.push_back(model.id(tok));
      seg.pieces.push_back(tok);
      continue;
    }
    if (tok.empty()) throw Error("segment: empty token");
    for (auto& piece : model.apply(tok)) {
      seg.subword_ids.push_back(model.id(piece));
      seg.pieces.push_back(std::move(piece));
    }
  }
  return seg;
}

std::vector<std::string> detokenize(const Segmentation& seg) {
  std::vector<std::string> out;
  out.reserve(seg.token_count());
  for (std::size_t i = 0; i < seg.token_count(); ++i) {
    const auto [b, e] = seg.token_range(i);
    std::string tok;
    for (std::size_t k = b; k < e; ++k) tok += seg.pieces[k];
    if (!is_reserved(tok)) {
      if (tok.size() < kEndOfWord.size() ||
          std::string_view(tok).substr(tok.size() - kEndOfWord.size()) != kEndOfWord)
        throw Error("detokenize: token without end-of-word marker");
      tok.resize(tok.size() - kEndOfWord.size());
    }
    out.push_back(std::move(tok));
  }
  return out;
}

}  // namespace philokit::subword
