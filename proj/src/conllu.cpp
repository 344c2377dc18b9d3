#include "philokit/conllu.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "philokit/error.hpp"

namespace philokit::conllu {
namespace {

constexpr std::size_t kColumns = 10;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::pair<std::string, std::string>> parse_feats(std::string_view s,
                                                              std::size_t line_no) {
  std::vector<std::pair<std::string, std::string>> out;
  if (s == "_") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t bar = s.find('|', start);
    if (bar == std::string_view::npos) bar = s.size();
    const std::string_view item = s.substr(start, bar - start);
    const std::size_t eq = item.find('=');
    if (item.empty() || eq == std::string_view::npos)
      throw ParseError(line_no, "malformed FEATS entry '" + std::string(item) + "'");
    out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    start = bar + 1;
  }
  return out;
}

std::optional<std::string> comment_value(const std::vector<std::string>& comments,
                                         std::string_view key) {
  for (const auto& c : comments) {
    std::string_view v(c);
    v.remove_prefix(1);
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    if (v.substr(0, key.size()) != key) continue;
    v.remove_prefix(key.size());
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    if (v.empty() || v.front() != '=') continue;
    v.remove_prefix(1);
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    return std::string(v);
  }
  return std::nullopt;
}

class Reader {
 public:
  explicit Reader(const ParseOptions& opts) : opts_(opts) {}

  void line(std::string_view text, std::size_t line_no) {
    if (text.empty()) {
      finish();
      return;
    }
    if (!open_) {
      open_ = true;
      start_line_ = line_no;
      current_ = Sentence{};
      token_lines_.clear();
    }
    if (text.front() == '#') {
      current_.comments.emplace_back(text);
      return;
    }
    const auto cols = split_tabs(text);
    if (cols.size() != kColumns)
      throw ParseError(line_no, "expected 10 tab-separated fields, found " +
                                    std::to_string(cols.size()));
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      current_.opaque.push_back({current_.tokens.size(), std::string(text)});
      return;
    }
    const auto num = to_int(id);
    if (!num) throw ParseError(line_no, "non-integer token id '" + std::string(id) + "'");
    const auto head = to_int(cols[6]);
    if (!head) throw ParseError(line_no, "non-integer head '" + std::string(cols[6]) + "'");
    if (*num >= 1 && static_cast<std::size_t>(*num) <= current_.tokens.size())
      throw ParseError(line_no, "duplicate token id " + std::to_string(*num));
    if (*num != static_cast<int>(current_.tokens.size()) + 1)
      throw ParseError(line_no, "token id " + std::to_string(*num) + " out of sequence, expected " +
                                    std::to_string(current_.tokens.size() + 1));
    Token t;
    t.id = *num;
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = parse_feats(cols[5], line_no);
    t.head = *head;
    t.deprel = cols[7];
    t.deps = cols[8];
    t.raw_misc = cols[9];
    current_.tokens.push_back(std::move(t));
    token_lines_.push_back(line_no);
  }

  void finish() {
    if (!open_) return;
    open_ = false;
    const int n = static_cast<int>(current_.tokens.size());
    for (std::size_t k = 0; k < current_.tokens.size(); ++k) {
      const Token& t = current_.tokens[k];
      if (t.head < 0 || t.head > n)
        throw ParseError(token_lines_[k], "head " + std::to_string(t.head) + " outside sentence");
      if (t.head == t.id) throw ParseError(token_lines_[k], "token is its own head");
    }
    if (opts_.strict_tree && !current_.tokens.empty()) {
      const TreeCheck c = check_tree(current_);
      if (!c.is_tree || c.roots != 1)
        throw ParseError(start_line_, "sentence is not a single-rooted tree: " +
                                          (c.is_tree ? std::to_string(c.roots) + " roots"
                                                     : c.problem));
    }
    out_.sentences.push_back(std::move(current_));
  }

  Treebank take() { return std::move(out_); }

 private:
  ParseOptions opts_;
  Treebank out_;
  Sentence current_;
  std::vector<std::size_t> token_lines_;
  bool open_ = false;
  std::size_t start_line_ = 0;
};

void write_token(const Token& t, std::ostream& out) {
  out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
      << format_feats(t.feats) << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t'
      << t.raw_misc << '\n';
}

}  // namespace

std::optional<std::string> Sentence::sent_id() const { return comment_value(comments, "sent_id"); }

std::optional<std::string> Sentence::text_comment() const {
  return comment_value(comments, "text");
}

std::vector<std::string> Sentence::other_comments() const {
  std::vector<std::string> out;
  for (const auto& c : comments) {
    const std::vector<std::string> one{c};
    if (comment_value(one, "sent_id") || comment_value(one, "text")) continue;
    out.push_back(c);
  }
  return out;
}

TagsetSummary Treebank::summary() const {
  std::set<std::string> lemmata, forms, upos, xpos, deprels;
  TagsetSummary s;
  s.sentences = sentences.size();
  auto add = [](std::set<std::string>& set, const std::string& v) {
    if (v != "_") set.insert(v);
  };
  for (const auto& sent : sentences) {
    s.tokens += sent.tokens.size();
    for (const auto& t : sent.tokens) {
      add(lemmata, t.lemma);
      add(forms, t.form);
      add(upos, t.upos);
      add(xpos, t.xpos);
      add(deprels, t.deprel);
    }
  }
  s.lemmata = lemmata.size();
  s.forms = forms.size();
  s.upos = upos.size();
  s.xpos = xpos.size();
  s.deprels = deprels.size();
  return s;
}

Treebank parse(std::string_view text, const ParseOptions& opts) {
  Reader reader(opts);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    reader.line(text.substr(start, nl - start), ++line_no);
    start = nl + 1;
  }
  reader.finish();
  return reader.take();
}

Treebank parse(std::istream& in, const ParseOptions& opts) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(std::string_view(text), opts);
}

Treebank read_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return parse(in, opts);
}

std::string format_feats(const std::vector<std::pair<std::string, std::string>>& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (const auto& [k, v] : feats) {
    if (!out.empty()) out += '|';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

void serialize(const Treebank& tb, std::ostream& out) {
  for (const auto& s : tb.sentences) {
    for (const auto& c : s.comments) out << c << '\n';
    std::size_t next_opaque = 0;
    for (std::size_t k = 0; k <= s.tokens.size(); ++k) {
      while (next_opaque < s.opaque.size() && s.opaque[next_opaque].before_token == k)
        out << s.opaque[next_opaque++].text << '\n';
      if (k < s.tokens.size()) write_token(s.tokens[k], out);
    }
    out << '\n';
  }
}

std::string serialize(const Treebank& tb) {
  std::ostringstream out;
  serialize(tb, out);
  return out.str();
}

void write_file(const Treebank& tb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  serialize(tb, out);
  if (!out) throw IoError(path, "write failed");
}

std::vector<int> heads_of(const Sentence& s) {
  std::vector<int> heads;
  heads.reserve(s.tokens.size());
  for (const auto& t : s.tokens) heads.push_back(t.head);
  return heads;
}

TreeCheck check_tree(const std::vector<int>& heads) {
  TreeCheck c;
  const int n = static_cast<int>(heads.size());
  for (int h : heads) {
    if (h < 0 || h > n) {
      c.problem = "head outside sentence";
      return c;
    }
    if (h == 0) ++c.roots;
  }
  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<int> state(static_cast<std::size_t>(n) + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int v = start;
    while (state[static_cast<std::size_t>(v)] == 0) {
      state[static_cast<std::size_t>(v)] = 1;
      path.push_back(v);
      v = heads[static_cast<std::size_t>(v) - 1];
    }
    if (state[static_cast<std::size_t>(v)] == 1) {
      c.problem = "cycle through token " + std::to_string(v);
      return c;
    }
    for (int p : path) state[static_cast<std::size_t>(p)] = 2;
  }
  c.is_tree = true;
  return c;
}

TreeCheck check_tree(const Sentence& s) { return check_tree(heads_of(s)); }

std::string_view slot_name(MorphSlot s) {
  switch (s) {
    case MorphSlot::word_class: return "word_class";
    case MorphSlot::person: return "person";
    case MorphSlot::number: return "number";
    case MorphSlot::tense: return "tense";
    case MorphSlot::mood: return "mood";
    case MorphSlot::voice: return "voice";
    case MorphSlot::gender: return "gender";
    case MorphSlot::grammatical_case: return "case";
    case MorphSlot::degree: return "degree";
  }
  return "?";
}

MorphTagSet split_xpos_perseus(std::string_view xpos) {
  if (xpos.size() != kMorphSlots)
    throw Error("Perseus XPoS must have 9 positions, got '" + std::string(xpos) + "'");
  MorphTagSet m;
  std::copy(xpos.begin(), xpos.end(), m.slots.begin());
  return m;
}

}  // namespace philokit::conllu
