#include "philokit/lemma.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "philokit/error.hpp"
#include "philokit/forge.hpp"
#include "philokit/io.hpp"
#include "philokit/kernels.hpp"
#include "philokit/subword.hpp"

namespace philokit::lemma {
namespace {

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t sp = s.find(' ', pos);
    out.push_back(s.substr(pos, sp == std::string_view::npos ? std::string_view::npos : sp - pos));
    if (sp == std::string_view::npos) break;
    pos = sp + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& xs, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

nlohmann::json param_json(const nn::Param& p) { return nn::to_json(p.value); }

void param_from_json(nn::Param& p, const std::string& name, const nlohmann::json& j) {
  p.name = name;
  p.value = nn::matrix_from_json(j);
  p.grad = nn::Matrix(p.value.rows(), p.value.cols());
}

void check_log_probs(std::span<const double> lp) {
  if (lp.empty()) throw Error("beam_search: scorer returned an empty distribution");
  for (double x : lp)
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
      throw Error("beam_search: scorer returned a non-finite log-probability");
}

}  // namespace

std::vector<LemmaExample> make_lemma_examples(const conllu::Sentence& s, bool char_mode) {
  std::vector<std::string> forms;
  for (const auto& t : s.tokens) forms.push_back(forge::normalize(t.form));
  std::vector<LemmaExample> out;
  const std::string sent_id = s.sent_id().value_or("");
  for (std::size_t k = 0; k < forms.size(); ++k) {
    std::vector<std::string> toks(forms.begin(), forms.begin() + static_cast<std::ptrdiff_t>(k));
    toks.emplace_back(subword::kTokBeg);
    toks.push_back(forms[k]);
    if (char_mode) {
      toks.emplace_back(subword::kTokSep);
      for (auto& c : subword::utf8_chars(forms[k])) toks.push_back(std::move(c));
    }
    toks.emplace_back(subword::kTokEnd);
    toks.insert(toks.end(), forms.begin() + static_cast<std::ptrdiff_t>(k) + 1, forms.end());
    out.push_back({join(toks), forge::normalize(s.tokens[k].lemma), sent_id, s.tokens[k].id});
  }
  return out;
}

SourceParts split_source(std::string_view source) {
  const auto toks = split_spaces(source);
  std::size_t beg = toks.size(), end = toks.size();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] == subword::kTokBeg) {
      if (beg != toks.size()) throw Error("lemma source: more than one " + std::string(subword::kTokBeg));
      beg = i;
    } else if (toks[i] == subword::kTokEnd) {
      if (end != toks.size()) throw Error("lemma source: more than one " + std::string(subword::kTokEnd));
      end = i;
    }
  }
  if (beg == toks.size() || end == toks.size())
    throw Error("lemma source: missing target delimiters");
  if (end < beg + 2) throw Error("lemma source: no target token between delimiters");
  SourceParts p;
  for (std::size_t i = 0; i < beg; ++i) p.left.emplace_back(toks[i]);
  p.target = std::string(toks[beg + 1]);
  if (end > beg + 2) {
    if (toks[beg + 2] != subword::kTokSep)
      throw Error("lemma source: expected one token or a character expansion between delimiters");
    p.char_mode = true;
    for (std::size_t i = beg + 3; i < end; ++i)
      if (toks[i] == subword::kTokSep) throw Error("lemma source: repeated separator");
  }
  for (std::size_t i = end + 1; i < toks.size(); ++i) p.right.emplace_back(toks[i]);
  return p;
}

std::string strip_lemma_source(std::string_view source) {
  SourceParts p = split_source(source);
  std::vector<std::string> toks = std::move(p.left);
  toks.push_back(std::move(p.target));
  toks.insert(toks.end(), p.right.begin(), p.right.end());
  return join(toks);
}

std::string format_examples(const std::vector<LemmaExample>& xs) {
  std::string out;
  for (const auto& x : xs) {
    const nlohmann::json j{{"source", x.source},
                           {"target", x.target},
                           {"sent_id", x.sent_id},
                           {"token_id", x.token_id}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LemmaExample> parse_examples(std::string_view text) {
  std::vector<LemmaExample> out;
  std::size_t line_no = 0;
  for (const auto& line : forge::split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LemmaExample x;
      x.source = j.at("source").get<std::string>();
      x.target = j.value("target", std::string());
      x.sent_id = j.value("sent_id", std::string());
      x.token_id = j.value("token_id", 0);
      split_source(x.source);
      out.push_back(std::move(x));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

void write_examples(const std::vector<LemmaExample>& xs, const std::string& path) {
  io::write_text(path, format_examples(xs));
}

std::vector<LemmaExample> read_examples(const std::string& path) {
  try {
    return parse_examples(io::read_text(path));
  } catch (const ParseError& e) {
    throw IoError(path, e.what());
  }
}

bool ranks_before(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.finished && !b.finished;
}

std::vector<BeamHypothesis> beam_search(const NextTokenScorer& scorer, std::size_t width,
                                        std::size_t max_len) {
  if (width < 1) throw Error("beam_search: width must be at least 1");
  std::vector<BeamHypothesis> beam{BeamHypothesis{}};
  std::vector<BeamHypothesis> finished;
  for (std::size_t step = 0; !beam.empty(); ++step) {
    std::vector<BeamHypothesis> cands;
    for (const auto& h : beam) {
      const std::vector<double> lp = scorer(h.tokens);
      check_log_probs(lp);
      if (step >= max_len) {
        if (lp[kEnd] != kNegInf) cands.push_back({h.tokens, h.log_prob + lp[kEnd], true});
        continue;
      }
      for (std::size_t v = 0; v < lp.size(); ++v) {
        if (lp[v] == kNegInf) continue;
        BeamHypothesis c{h.tokens, h.log_prob + lp[v], v == kEnd};
        if (v != kEnd) c.tokens.push_back(static_cast<int>(v));
        cands.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      ranks_before);
    beam.clear();
    for (std::size_t i = 0; i < keep; ++i)
      (cands[i].finished ? finished : beam).push_back(std::move(cands[i]));
  }
  std::sort(finished.begin(), finished.end(), ranks_before);
  if (finished.size() > width) finished.resize(width);
  return finished;
}

double lemma_accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.size() != gold.size())
    throw Error("lemma_accuracy: " + std::to_string(pred.size()) + " predictions for " +
                std::to_string(gold.size()) + " gold lemmata");
  if (gold.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) ok += forge::normalize(pred[i]) == forge::normalize(gold[i]);
  return 100.0 * static_cast<double>(ok) / static_cast<double>(gold.size());
}

CharLemmaScorer::CharLemmaScorer(const std::vector<LemmaExample>& train, const ScorerConfig& cfg,
                                 nn::Rng& rng) {
  if (train.empty()) throw Error("lemma scorer: empty training set");
  if (cfg.embed_dim == 0 || cfg.hidden == 0) throw Error("lemma scorer: widths must be positive");
  std::set<std::string> src, out, words;
  for (const auto& x : train) {
    const SourceParts p = split_source(x.source);
    for (auto& c : subword::utf8_chars(forge::normalize(p.target))) {
      src.insert(c);
      out.insert(c);
    }
    for (auto& c : subword::utf8_chars(forge::normalize(x.target))) out.insert(c);
    words.insert(p.left.begin(), p.left.end());
    words.insert(p.right.begin(), p.right.end());
  }
  src_chars_.assign(src.begin(), src.end());
  out_chars_.push_back("");
  out_chars_.insert(out_chars_.end(), out.begin(), out.end());
  words_.assign(words.begin(), words.end());
  rebuild_index();

  const std::size_t e = cfg.embed_dim;
  src_emb = nn::Param("lemma.src_emb", src_chars_.size() + 2, e);
  len_emb = nn::Param("lemma.len_emb", kLengthBuckets, e);
  out_emb = nn::Param("lemma.out_emb", out_chars_.size(), e);
  word_emb = nn::Param("lemma.word_emb", words_.size() + 1, e);
  hidden_w = nn::Param("lemma.hidden_w", cfg.hidden, 6 * e);
  hidden_b = nn::Param("lemma.hidden_b", 1, cfg.hidden);
  out_w = nn::Param("lemma.out_w", out_chars_.size(), cfg.hidden);
  out_b = nn::Param("lemma.out_b", 1, out_chars_.size());
  for (nn::Param* p : {&src_emb, &len_emb, &out_emb, &word_emb, &hidden_w, &out_w})
    nn::init_uniform(p->value, rng, cfg.init_scale);
}

void CharLemmaScorer::rebuild_index() {
  src_index_.clear();
  out_index_.clear();
  word_index_.clear();
  for (std::size_t i = 0; i < src_chars_.size(); ++i) src_index_[src_chars_[i]] = static_cast<int>(i);
  for (std::size_t i = 1; i < out_chars_.size(); ++i) out_index_[out_chars_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < words_.size(); ++i) word_index_[words_[i]] = static_cast<int>(i);
}

nn::ParamList CharLemmaScorer::params() {
  return {&src_emb, &len_emb, &out_emb, &word_emb, &hidden_w, &hidden_b, &out_w, &out_b};
}

LemmaInput CharLemmaScorer::encode(std::string_view source) const {
  const SourceParts p = split_source(source);
  LemmaInput in;
  for (const auto& c : subword::utf8_chars(forge::normalize(p.target))) {
    auto it = src_index_.find(c);
    in.chars.push_back(it == src_index_.end() ? 1 : it->second + 2);
  }
  auto add_words = [&](const std::vector<std::string>& ws) {
    for (const auto& w : ws) {
      auto it = word_index_.find(w);
      in.context.push_back(it == word_index_.end() ? 0 : it->second + 1);
    }
  };
  add_words(p.left);
  add_words(p.right);
  return in;
}

std::vector<int> CharLemmaScorer::target_ids(std::string_view lemma) const {
  std::vector<int> ids;
  for (const auto& c : subword::utf8_chars(forge::normalize(lemma))) {
    auto it = out_index_.find(c);
    ids.push_back(it == out_index_.end() ? -1 : it->second);
  }
  return ids;
}

std::string CharLemmaScorer::decode_ids(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id <= 0 || static_cast<std::size_t>(id) >= out_chars_.size())
      throw Error("lemma scorer: output id outside inventory");
    out += out_chars_[static_cast<std::size_t>(id)];
  }
  return out;
}

CharLemmaScorer::StepFeatures CharLemmaScorer::features(const LemmaInput& in,
                                                        std::span<const int> prefix) const {
  StepFeatures f{};
  const auto t = static_cast<long>(prefix.size());
  const auto len = static_cast<long>(in.chars.size());
  for (std::size_t k = 0; k < kWindow; ++k) {
    const long pos = t + static_cast<long>(k) - 1;
    f.src[k] = pos >= 0 && pos < len ? static_cast<std::size_t>(in.chars[static_cast<std::size_t>(pos)]) : 0;
  }
  const long rem = len - t;
  f.len_bucket = rem <= 0 ? 0 : static_cast<std::size_t>(std::min<long>(rem, kLengthBuckets - 1));
  f.prev = prefix.empty() ? 0 : static_cast<std::size_t>(prefix.back());
  return f;
}

void CharLemmaScorer::input_vector(const LemmaInput& in, const StepFeatures& f,
                                   std::span<double> x) const {
  const std::size_t e = src_emb.value.cols();
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t k = 0; k < kWindow; ++k) {
    const auto row = src_emb.value.row(f.src[k]);
    std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(k * e));
  }
  const auto lrow = len_emb.value.row(f.len_bucket);
  std::copy(lrow.begin(), lrow.end(), x.begin() + static_cast<std::ptrdiff_t>(3 * e));
  if (f.prev >= out_emb.value.rows()) throw Error("lemma scorer: prefix id outside inventory");
  const auto prow = out_emb.value.row(f.prev);
  std::copy(prow.begin(), prow.end(), x.begin() + static_cast<std::ptrdiff_t>(4 * e));
  if (!in.context.empty()) {
    const double coef = 1.0 / static_cast<double>(in.context.size());
    for (int w : in.context)
      kernels::axpy(coef, word_emb.value.row(static_cast<std::size_t>(w)), x.subspan(5 * e, e));
  }
}

std::vector<double> CharLemmaScorer::next_log_probs(const LemmaInput& in,
                                                    std::span<const int> prefix) const {
  const std::size_t h = hidden_w.value.rows();
  const std::size_t xin = hidden_w.value.cols();
  std::vector<double> x(xin), hid(h, 0.0), logits(out_chars_.size(), 0.0);
  input_vector(in, features(in, prefix), x);
  kernels::gemv(hidden_w.value.flat(), h, xin, x, hid);
  for (std::size_t k = 0; k < h; ++k) hid[k] = std::tanh(hid[k] + hidden_b.value(0, k));
  kernels::gemv(out_w.value.flat(), logits.size(), h, hid, logits);
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += out_b.value(0, k);
  const double lse = nn::log_sum_exp(logits);
  for (double& l : logits) l -= lse;
  return logits;
}

double CharLemmaScorer::sequence_loss(const LemmaInput& in, std::span<const int> target,
                                      double scale, bool accumulate_gradients) {
  const std::size_t e = src_emb.value.cols();
  const std::size_t h = hidden_w.value.rows();
  const std::size_t xin = hidden_w.value.cols();
  const std::size_t o = out_chars_.size();
  for (int id : target)
    if (id <= 0 || static_cast<std::size_t>(id) >= o)
      throw Error("lemma scorer: target character outside output inventory");

  double loss = 0.0;
  std::vector<double> x(xin), hid(h), probs(o), logits(o), dh(h), dx(xin);
  for (std::size_t t = 0; t <= target.size(); ++t) {
    const auto prefix = target.first(t);
    const std::size_t gold = t < target.size() ? static_cast<std::size_t>(target[t]) : kEnd;
    const StepFeatures f = features(in, prefix);
    input_vector(in, f, x);
    std::fill(hid.begin(), hid.end(), 0.0);
    kernels::gemv(hidden_w.value.flat(), h, xin, x, hid);
    for (std::size_t k = 0; k < h; ++k) hid[k] = std::tanh(hid[k] + hidden_b.value(0, k));
    std::fill(logits.begin(), logits.end(), 0.0);
    kernels::gemv(out_w.value.flat(), o, h, hid, logits);
    for (std::size_t k = 0; k < o; ++k) logits[k] += out_b.value(0, k);
    nn::softmax(logits, probs);
    loss -= std::log(probs[gold]);
    if (!accumulate_gradients) continue;

    for (std::size_t k = 0; k < o; ++k) probs[k] = scale * (probs[k] - (k == gold ? 1.0 : 0.0));
    kernels::ger(1.0, probs, hid, out_w.grad.flat());
    kernels::axpy(1.0, probs, out_b.grad.row(0));
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::gemv_t_acc(out_w.value.flat(), o, h, probs, dh);
    for (std::size_t k = 0; k < h; ++k) dh[k] *= 1.0 - hid[k] * hid[k];
    kernels::ger(1.0, dh, x, hidden_w.grad.flat());
    kernels::axpy(1.0, dh, hidden_b.grad.row(0));
    std::fill(dx.begin(), dx.end(), 0.0);
    kernels::gemv_t_acc(hidden_w.value.flat(), h, xin, dh, dx);
    const std::span<const double> dxs(dx);
    for (std::size_t k = 0; k < kWindow; ++k) kernels::axpy(1.0, dxs.subspan(k * e, e), src_emb.grad.row(f.src[k]));
    kernels::axpy(1.0, dxs.subspan(3 * e, e), len_emb.grad.row(f.len_bucket));
    kernels::axpy(1.0, dxs.subspan(4 * e, e), out_emb.grad.row(f.prev));
    if (!in.context.empty()) {
      const double coef = 1.0 / static_cast<double>(in.context.size());
      for (int w : in.context)
        kernels::axpy(coef, dxs.subspan(5 * e, e), word_emb.grad.row(static_cast<std::size_t>(w)));
    }
  }
  return loss;
}

std::vector<std::pair<std::string, double>> CharLemmaScorer::decode(std::string_view source,
                                                                    std::size_t width,
                                                                    std::size_t max_len) const {
  const LemmaInput in = encode(source);
  const auto hyps = beam_search(
      [&](std::span<const int> prefix) { return next_log_probs(in, prefix); }, width, max_len);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& hy : hyps) out.emplace_back(decode_ids(hy.tokens), hy.log_prob);
  return out;
}

nlohmann::json CharLemmaScorer::to_json() const {
  return {{"kind", "philokit-lemma"},
          {"src_chars", src_chars_},
          {"out_chars", out_chars_},
          {"words", words_},
          {"src_emb", param_json(src_emb)},
          {"len_emb", param_json(len_emb)},
          {"out_emb", param_json(out_emb)},
          {"word_emb", param_json(word_emb)},
          {"hidden_w", param_json(hidden_w)},
          {"hidden_b", param_json(hidden_b)},
          {"out_w", param_json(out_w)},
          {"out_b", param_json(out_b)}};
}

CharLemmaScorer CharLemmaScorer::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "philokit-lemma") throw Error("not a lemma model");
  CharLemmaScorer m;
  m.src_chars_ = j.at("src_chars").get<std::vector<std::string>>();
  m.out_chars_ = j.at("out_chars").get<std::vector<std::string>>();
  m.words_ = j.at("words").get<std::vector<std::string>>();
  if (m.out_chars_.empty() || !m.out_chars_[0].empty()) throw Error("lemma model: bad output inventory");
  m.rebuild_index();
  param_from_json(m.src_emb, "lemma.src_emb", j.at("src_emb"));
  param_from_json(m.len_emb, "lemma.len_emb", j.at("len_emb"));
  param_from_json(m.out_emb, "lemma.out_emb", j.at("out_emb"));
  param_from_json(m.word_emb, "lemma.word_emb", j.at("word_emb"));
  param_from_json(m.hidden_w, "lemma.hidden_w", j.at("hidden_w"));
  param_from_json(m.hidden_b, "lemma.hidden_b", j.at("hidden_b"));
  param_from_json(m.out_w, "lemma.out_w", j.at("out_w"));
  param_from_json(m.out_b, "lemma.out_b", j.at("out_b"));
  return m;
}

double decode_accuracy(const CharLemmaScorer& model, const std::vector<LemmaExample>& xs,
                       std::size_t width, std::size_t max_len) {
  std::vector<std::string> pred, gold;
  for (const auto& x : xs) {
    const auto ranked = model.decode(x.source, width, max_len);
    pred.push_back(ranked.empty() ? std::string() : ranked.front().first);
    gold.push_back(x.target);
  }
  return lemma_accuracy(pred, gold);
}

nn::TrainHistory train_lemma_scorer(CharLemmaScorer& model, const std::vector<LemmaExample>& train,
                                    const std::vector<LemmaExample>& dev,
                                    const LemmaTrainOptions& opts) {
  if (train.empty()) throw Error("train_lemma_scorer: empty training set");
  if (dev.empty()) throw Error("train_lemma_scorer: empty dev set");
  std::vector<LemmaInput> inputs;
  std::vector<std::vector<int>> targets;
  for (std::size_t k = 0; k < train.size(); ++k) {
    inputs.push_back(model.encode(train[k].source));
    targets.push_back(model.target_ids(train[k].target));
    if (std::find(targets.back().begin(), targets.back().end(), -1) != targets.back().end())
      throw Error("train_lemma_scorer: example " + std::to_string(k + 1) +
                  " has a lemma character missing from the output inventory");
  }
  const nn::BatchStep step = [&](std::span<const std::size_t> batch) {
    std::size_t steps = 0;
    for (std::size_t k : batch) steps += targets[k].size() + 1;
    const double scale = 1.0 / static_cast<double>(steps);
    double loss = 0.0;
    for (std::size_t k : batch) loss += model.sequence_loss(inputs[k], targets[k], scale);
    return loss * scale;
  };
  const nn::DevEval eval = [&]() {
    const double acc = decode_accuracy(model, dev, opts.dev_beam, opts.max_len);
    return std::pair{acc, acc};
  };
  return nn::train_loop(train.size(), opts.schedule, model.params(), step, eval);
}

}  // namespace philokit::lemma
