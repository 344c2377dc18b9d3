#include "philokit/parser.hpp"

#include <cmath>
#include <set>

#include "philokit/error.hpp"
#include "philokit/kernels.hpp"

namespace philokit::parser {
namespace {

using Scores = std::vector<std::vector<double>>;

// Maximum spanning arborescence rooted at node 0 by recursive cycle contraction.
std::vector<int> max_arborescence(const Scores& s) {
  const std::size_t n = s.size();
  std::vector<int> parent(n, -1);
  for (std::size_t v = 1; v < n; ++v) {
    double best = kMasked;
    for (std::size_t u = 0; u < n; ++u)
      if (u != v && s[u][v] > best) {
        best = s[u][v];
        parent[v] = static_cast<int>(u);
      }
    if (parent[v] < 0) throw Error("chu_liu_edmonds: no spanning arborescence with finite score");
  }

  // Find one cycle among the parent pointers.
  std::vector<int> color(n, 0);  // 0 new, 1 on stack, 2 done
  color[0] = 2;
  std::vector<std::size_t> cycle;
  for (std::size_t start = 1; start < n && cycle.empty(); ++start) {
    std::vector<std::size_t> path;
    std::size_t v = start;
    while (color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = static_cast<std::size_t>(parent[v]);
    }
    if (color[v] == 1) {
      std::size_t x = v;
      do {
        cycle.push_back(x);
        x = static_cast<std::size_t>(parent[x]);
      } while (x != v);
    }
    for (std::size_t p : path) color[p] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<bool> in_cycle(n, false);
  for (std::size_t c : cycle) in_cycle[c] = true;
  std::vector<int> to_new(n, -1);
  std::vector<std::size_t> to_old;
  for (std::size_t v = 0; v < n; ++v)
    if (!in_cycle[v]) {
      to_new[v] = static_cast<int>(to_old.size());
      to_old.push_back(v);
    }
  const std::size_t m = to_old.size() + 1;
  const std::size_t c = m - 1;

  Scores ns(m, std::vector<double>(m, kMasked));
  std::vector<std::size_t> enter_at(m, 0);  // for new source u: cycle node it enters
  std::vector<std::size_t> leave_from(m, 0);  // for new target v: cycle node it leaves from
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 1; v < n; ++v) {
      if (u == v || s[u][v] == kMasked) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        ns[static_cast<std::size_t>(to_new[u])][static_cast<std::size_t>(to_new[v])] = s[u][v];
      } else if (!in_cycle[u] && in_cycle[v]) {
        const auto nu = static_cast<std::size_t>(to_new[u]);
        const double val = s[u][v] - s[static_cast<std::size_t>(parent[v])][v];
        if (val > ns[nu][c]) {
          ns[nu][c] = val;
          enter_at[nu] = v;
        }
      } else if (in_cycle[u] && !in_cycle[v]) {
        const auto nv = static_cast<std::size_t>(to_new[v]);
        if (s[u][v] > ns[c][nv]) {
          ns[c][nv] = s[u][v];
          leave_from[nv] = u;
        }
      }
    }
  }

  const std::vector<int> sub = max_arborescence(ns);
  std::vector<int> out = parent;  // cycle nodes keep their cycle parents
  for (std::size_t nv = 1; nv < m; ++nv) {
    const auto nu = static_cast<std::size_t>(sub[nv]);
    if (nv == c) {
      out[enter_at[nu]] = static_cast<int>(to_old[nu]);
    } else {
      const std::size_t v = to_old[nv];
      out[v] = nu == c ? static_cast<int>(leave_from[nv]) : static_cast<int>(to_old[nu]);
    }
  }
  return out;
}

Scores to_scores(const WeightedDigraph& g) {
  const std::size_t n = g.size();
  Scores s(n + 1, std::vector<double>(n + 1, kMasked));
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 1; i <= n; ++i) s[j][i] = g.score(j, i);
  return s;
}

std::size_t root_children(const std::vector<int>& head) {
  std::size_t r = 0;
  for (std::size_t i = 1; i < head.size(); ++i) r += head[i] == 0;
  return r;
}

void check_emb(const EdgeScorerParams& p, const encoder::EmbeddingSequence& emb) {
  if (emb.dim() != p.dim())
    throw Error("parser: embedding width " + std::to_string(emb.dim()) + " does not match scorer " +
                std::to_string(p.dim()));
  if (emb.vectors.rows() == 0) throw Error("parser: embedding sequence has no ROOT row");
}

nlohmann::json param_json(const nn::Param& p) { return nn::to_json(p.value); }

void param_from_json(nn::Param& p, const std::string& name, const nlohmann::json& j) {
  p.name = name;
  p.value = nn::matrix_from_json(j);
  p.grad = nn::Matrix(p.value.rows(), p.value.cols());
}

// Forward pieces of the label network, kept for backward.
struct LabelForward {
  std::vector<double> input;  // [e_i; e_j]
  std::vector<double> pre;
  std::vector<double> hidden;
  std::vector<double> probs;
};

LabelForward label_forward(const EdgeScorerParams& p, const encoder::EmbeddingSequence& emb,
                           std::size_t head, std::size_t dep) {
  check_emb(p, emb);
  const std::size_t d = p.dim();
  LabelForward f;
  f.input.resize(2 * d);
  const auto ei = emb.row(dep);
  const auto ej = emb.row(head);
  std::copy(ei.begin(), ei.end(), f.input.begin());
  std::copy(ej.begin(), ej.end(), f.input.begin() + static_cast<std::ptrdiff_t>(d));
  const std::size_t h = p.label_hidden();
  f.pre.assign(h, 0.0);
  kernels::gemv(p.label_w1.value.flat(), h, 2 * d, f.input, f.pre);
  f.hidden.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    f.pre[k] += p.label_b1.value(0, k);
    f.hidden[k] = f.pre[k] > 0.0 ? f.pre[k] : 0.0;
  }
  std::vector<double> logits(p.labels.size());
  kernels::gemv(p.label_w2.value.flat(), logits.size(), h, f.hidden, logits);
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += p.label_b2.value(0, k);
  f.probs.resize(logits.size());
  nn::softmax(logits, f.probs);
  return f;
}

}  // namespace

WeightedDigraph::WeightedDigraph(std::size_t n) : n_(n), cells_((n + 1) * (n + 1), 0.0) {
  for (std::size_t j = 0; j <= n; ++j) {
    cells_[j * (n + 1)] = kMasked;
    cells_[j * (n + 1) + j] = kMasked;
  }
}

void WeightedDigraph::set(std::size_t head, std::size_t dep, double value) {
  if (dep == 0 || dep > n_ || head > n_) throw Error("digraph: cell outside graph");
  if (head == dep) throw Error("digraph: self edges are masked");
  cells_[head * (n_ + 1) + dep] = value;
}

double tree_score(const WeightedDigraph& g, const std::vector<int>& head) {
  double s = 0.0;
  for (std::size_t i = 1; i < head.size(); ++i) s += g.score(static_cast<std::size_t>(head[i]), i);
  return s;
}

bool is_arborescence(const std::vector<int>& head) {
  if (head.empty()) return false;
  std::vector<int> heads(head.begin() + 1, head.end());
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (heads[i] == static_cast<int>(i + 1)) return false;
  return conllu::check_tree(heads).is_tree;
}

std::vector<double> head_distribution(const WeightedDigraph& g, std::size_t dep) {
  if (dep == 0 || dep > g.size()) throw Error("head_distribution: dependent outside sentence");
  std::vector<double> col(g.size() + 1);
  for (std::size_t j = 0; j <= g.size(); ++j) col[j] = g.score(j, dep);
  std::vector<double> p(col.size());
  nn::softmax(col, p);
  return p;
}

GreedyResult greedy_heads(const WeightedDigraph& g) {
  GreedyResult r;
  r.head.assign(g.size() + 1, -1);
  for (std::size_t i = 1; i <= g.size(); ++i) {
    double best = kMasked;
    for (std::size_t j = 0; j <= g.size(); ++j)
      if (g.score(j, i) > best) {
        best = g.score(j, i);
        r.head[i] = static_cast<int>(j);
      }
    if (r.head[i] < 0) r.head[i] = i == 1 ? 0 : 0;
  }
  r.is_tree = is_arborescence(r.head);
  return r;
}

std::vector<int> chu_liu_edmonds(const WeightedDigraph& g, const DecodeOptions& opts) {
  const std::size_t n = g.size();
  if (n == 0) return {-1};
  for (std::size_t i = 1; i <= n; ++i) {
    bool finite = false;
    for (std::size_t j = 0; j <= n && !finite; ++j) finite = g.score(j, i) != kMasked;
    if (!finite) throw Error("chu_liu_edmonds: token " + std::to_string(i) + " has no finite head");
  }
  const GreedyResult greedy = greedy_heads(g);
  if (greedy.is_tree && (!opts.single_root || root_children(greedy.head) == 1)) return greedy.head;

  if (!opts.single_root) {
    auto out = max_arborescence(to_scores(g));
    out[0] = -1;
    return out;
  }

  std::vector<int> best;
  double best_score = kMasked;
  for (std::size_t r = 1; r <= n; ++r) {
    if (g.score(0, r) == kMasked) continue;
    Scores s = to_scores(g);
    for (std::size_t i = 1; i <= n; ++i)
      if (i != r) s[0][i] = kMasked;
    std::vector<int> cand;
    try {
      cand = max_arborescence(s);
    } catch (const Error&) {
      continue;
    }
    cand[0] = -1;
    const double sc = tree_score(g, cand);
    if (best.empty() || sc > best_score) {
      best = std::move(cand);
      best_score = sc;
    }
  }
  if (best.empty()) throw Error("chu_liu_edmonds: no single-rooted arborescence");
  return best;
}

EdgeScorerParams::EdgeScorerParams(std::size_t dim, tagging::LabelSet label_set,
                                   const ScorerConfig& cfg, nn::Rng& rng)
    : u("parser.U", cfg.attention, dim),
      w("parser.W", cfg.attention, dim),
      v("parser.v", 1, cfg.attention),
      label_w1("parser.label_w1", cfg.label_hidden ? cfg.label_hidden : dim, 2 * dim),
      label_b1("parser.label_b1", 1, cfg.label_hidden ? cfg.label_hidden : dim),
      label_w2("parser.label_w2", label_set.size(), cfg.label_hidden ? cfg.label_hidden : dim),
      label_b2("parser.label_b2", 1, label_set.size()),
      labels(std::move(label_set)) {
  if (dim == 0 || cfg.attention == 0) throw Error("parser: widths must be positive");
  if (labels.size() == 0) throw Error("parser: empty label inventory");
  nn::init_uniform(u.value, rng, cfg.init_scale);
  nn::init_uniform(w.value, rng, cfg.init_scale);
  nn::init_uniform(v.value, rng, cfg.init_scale);
  nn::init_uniform(label_w1.value, rng, cfg.init_scale);
  nn::init_uniform(label_w2.value, rng, cfg.init_scale);
}

nn::ParamList EdgeScorerParams::params() {
  return {&u, &w, &v, &label_w1, &label_b1, &label_w2, &label_b2};
}

nlohmann::json EdgeScorerParams::to_json() const {
  return {{"U", param_json(u)},
          {"W", param_json(w)},
          {"v", param_json(v)},
          {"label_w1", param_json(label_w1)},
          {"label_b1", param_json(label_b1)},
          {"label_w2", param_json(label_w2)},
          {"label_b2", param_json(label_b2)},
          {"labels", labels.labels()}};
}

EdgeScorerParams EdgeScorerParams::from_json(const nlohmann::json& j) {
  EdgeScorerParams p;
  param_from_json(p.u, "parser.U", j.at("U"));
  param_from_json(p.w, "parser.W", j.at("W"));
  param_from_json(p.v, "parser.v", j.at("v"));
  param_from_json(p.label_w1, "parser.label_w1", j.at("label_w1"));
  param_from_json(p.label_b1, "parser.label_b1", j.at("label_b1"));
  param_from_json(p.label_w2, "parser.label_w2", j.at("label_w2"));
  param_from_json(p.label_b2, "parser.label_b2", j.at("label_b2"));
  p.labels = tagging::LabelSet(j.at("labels").get<std::vector<std::string>>());
  return p;
}

WeightedDigraph score_edges(const EdgeScorerParams& p, const encoder::EmbeddingSequence& emb) {
  check_emb(p, emb);
  const std::size_t n = emb.token_count();
  const std::size_t d = p.dim();
  const std::size_t a = p.attention();
  nn::Matrix ue(n + 1, a);
  nn::Matrix we(n + 1, a);
  for (std::size_t j = 0; j <= n; ++j) {
    kernels::gemv(p.u.value.flat(), a, d, emb.row(j), ue.row(j));
    if (j > 0) kernels::gemv(p.w.value.flat(), a, d, emb.row(j), we.row(j));
  }
  WeightedDigraph g(n);
  std::vector<double> t(a);
  const auto v = p.v.value.row(0);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < a; ++k) t[k] = std::tanh(ue(j, k) + we(i, k));
      g.set(j, i, kernels::dot(v, t));
    }
  return g;
}

std::vector<double> label_distribution(const EdgeScorerParams& p,
                                       const encoder::EmbeddingSequence& emb, std::size_t head,
                                       std::size_t dep) {
  if (dep == 0 || dep > emb.token_count() || head > emb.token_count())
    throw Error("label_distribution: edge outside sentence");
  return label_forward(p, emb, head, dep).probs;
}

SentenceLoss parse_loss(EdgeScorerParams& p, const encoder::EmbeddingSequence& emb,
                        const std::vector<int>& gold_head, const std::vector<int>& gold_label,
                        double scale, bool accumulate_gradients) {
  check_emb(p, emb);
  const std::size_t n = emb.token_count();
  const std::size_t d = p.dim();
  const std::size_t a = p.attention();
  if (gold_head.size() != n + 1 || gold_label.size() != n + 1)
    throw Error("parse_loss: gold arrays must have n+1 entries");

  nn::Matrix ue(n + 1, a);
  nn::Matrix we(n + 1, a);
  for (std::size_t j = 0; j <= n; ++j) {
    kernels::gemv(p.u.value.flat(), a, d, emb.row(j), ue.row(j));
    if (j > 0) kernels::gemv(p.w.value.flat(), a, d, emb.row(j), we.row(j));
  }
  const auto v = p.v.value.row(0);

  SentenceLoss out;
  out.d_emb = nn::Matrix(n + 1, d);
  nn::Matrix g_ue(n + 1, a);  // sum over dependents of delta into U e_j
  nn::Matrix g_we(n + 1, a);  // sum over heads of delta into W e_i
  nn::Matrix tanh_cache(n + 1, a);
  std::vector<double> col(n + 1);
  std::vector<double> prob(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    const int gh = gold_head[i];
    if (gh < 0 || static_cast<std::size_t>(gh) > n || static_cast<std::size_t>(gh) == i)
      throw Error("parse_loss: invalid gold head for token " + std::to_string(i));
    for (std::size_t j = 0; j <= n; ++j) {
      if (j == i) {
        col[j] = kMasked;
        continue;
      }
      auto t = tanh_cache.row(j);
      for (std::size_t k = 0; k < a; ++k) t[k] = std::tanh(ue(j, k) + we(i, k));
      col[j] = kernels::dot(v, t);
    }
    nn::softmax(col, prob);
    out.loss -= std::log(prob[static_cast<std::size_t>(gh)]);

    if (accumulate_gradients) {
      for (std::size_t j = 0; j <= n; ++j) {
        if (j == i) continue;
        const double ds = scale * (prob[j] - (static_cast<int>(j) == gh ? 1.0 : 0.0));
        const auto t = tanh_cache.row(j);
        kernels::axpy(ds, t, p.v.grad.row(0));
        for (std::size_t k = 0; k < a; ++k) {
          const double delta = ds * v[k] * (1.0 - t[k] * t[k]);
          g_ue(j, k) += delta;
          g_we(i, k) += delta;
        }
      }
    }

    const int gl = gold_label[i];
    if (gl < 0 || static_cast<std::size_t>(gl) >= p.labels.size())
      throw Error("parse_loss: invalid gold label for token " + std::to_string(i));
    const LabelForward lf = label_forward(p, emb, static_cast<std::size_t>(gh), i);
    out.loss -= std::log(lf.probs[static_cast<std::size_t>(gl)]);
    if (accumulate_gradients) {
      const std::size_t h = p.label_hidden();
      std::vector<double> dlogit(lf.probs);
      dlogit[static_cast<std::size_t>(gl)] -= 1.0;
      for (double& x : dlogit) x *= scale;
      kernels::ger(1.0, dlogit, lf.hidden, p.label_w2.grad.flat());
      kernels::axpy(1.0, dlogit, p.label_b2.grad.row(0));
      std::vector<double> dh(h, 0.0);
      kernels::gemv_t_acc(p.label_w2.value.flat(), dlogit.size(), h, dlogit, dh);
      for (std::size_t k = 0; k < h; ++k)
        if (lf.pre[k] <= 0.0) dh[k] = 0.0;
      kernels::ger(1.0, dh, lf.input, p.label_w1.grad.flat());
      kernels::axpy(1.0, dh, p.label_b1.grad.row(0));
      std::vector<double> dx(2 * d, 0.0);
      kernels::gemv_t_acc(p.label_w1.value.flat(), h, 2 * d, dh, dx);
      const std::span<const double> dxs(dx);
      kernels::axpy(1.0, dxs.first(d), out.d_emb.row(i));
      kernels::axpy(1.0, dxs.subspan(d), out.d_emb.row(static_cast<std::size_t>(gh)));
    }
  }

  if (accumulate_gradients) {
    for (std::size_t j = 0; j <= n; ++j) {
      kernels::ger(1.0, g_ue.row(j), emb.row(j), p.u.grad.flat());
      kernels::gemv_t_acc(p.u.value.flat(), a, d, g_ue.row(j), out.d_emb.row(j));
      if (j == 0) continue;
      kernels::ger(1.0, g_we.row(j), emb.row(j), p.w.grad.flat());
      kernels::gemv_t_acc(p.w.value.flat(), a, d, g_we.row(j), out.d_emb.row(j));
    }
  }
  return out;
}

encoder::EmbeddingSequence Parser::embed(const conllu::Sentence& s) const {
  return encoder.encode(subword::segment(bpe, encoder::forms_of(s)));
}

Arborescence Parser::parse(const encoder::EmbeddingSequence& emb) const {
  Arborescence a;
  const std::size_t n = emb.token_count();
  if (n == 0) return a;
  const WeightedDigraph g = score_edges(scorer, emb);
  a.head = chu_liu_edmonds(g, decode);
  a.labels.assign(n + 1, std::string());
  for (std::size_t i = 1; i <= n; ++i) {
    const auto p = label_distribution(scorer, emb, static_cast<std::size_t>(a.head[i]), i);
    const auto best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    a.labels[i] = scorer.labels.label(best);
  }
  return a;
}

Arborescence Parser::parse(const conllu::Sentence& s) const { return parse(embed(s)); }

conllu::Sentence Parser::annotate(const conllu::Sentence& s) const {
  conllu::Sentence out = s;
  if (s.tokens.empty()) return out;
  const Arborescence a = parse(s);
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    out.tokens[i].head = a.head[i + 1];
    out.tokens[i].deprel = a.labels[i + 1];
  }
  return out;
}

nlohmann::json Parser::to_json() const {
  return {{"kind", "philokit-parser"},
          {"bpe", bpe.save()},
          {"encoder", encoder.to_json()},
          {"scorer", scorer.to_json()},
          {"single_root", decode.single_root}};
}

Parser Parser::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "philokit-parser") throw Error("not a parser model");
  Parser p;
  p.bpe = subword::BpeModel::load(j.at("bpe").get<std::string>());
  p.encoder = encoder::ToyEncoder::from_json(j.at("encoder"));
  p.scorer = EdgeScorerParams::from_json(j.at("scorer"));
  p.decode.single_root = j.value("single_root", false);
  return p;
}

AttachmentScores attachment_scores(const Parser& model, const std::vector<conllu::Sentence>& dev,
                                   const encoder::EmbeddingProvider* frozen) {
  std::size_t total = 0, head_ok = 0, both_ok = 0;
  for (std::size_t k = 0; k < dev.size(); ++k) {
    const auto& s = dev[k];
    if (s.tokens.empty()) continue;
    const Arborescence a = model.parse(frozen ? frozen->embed(k, s) : model.embed(s));
    for (std::size_t i = 0; i < s.size(); ++i) {
      ++total;
      if (a.head[i + 1] == s.tokens[i].head) {
        ++head_ok;
        if (a.labels[i + 1] == s.tokens[i].deprel) ++both_ok;
      }
    }
  }
  if (total == 0) return {};
  return {100.0 * static_cast<double>(head_ok) / static_cast<double>(total),
          100.0 * static_cast<double>(both_ok) / static_cast<double>(total)};
}

nn::TrainHistory train_parser(Parser& model, const std::vector<conllu::Sentence>& train,
                              const std::vector<conllu::Sentence>& dev,
                              const ParserTrainOptions& opts) {
  if (train.empty()) throw Error("train_parser: empty training split");
  if (dev.empty()) throw Error("train_parser: empty dev split");
  const bool frozen = opts.train_embeddings != nullptr;

  std::vector<subword::Segmentation> segs;
  std::vector<std::vector<int>> heads, labels;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const auto& s = train[k];
    const auto check = conllu::check_tree(s);
    if (!check.is_tree)
      throw Error("train_parser: invalid gold tree in sentence " +
                  s.sent_id().value_or("#" + std::to_string(k + 1)) + ": " + check.problem);
    std::vector<int> h{-1}, l{-1};
    for (const auto& t : s.tokens) {
      h.push_back(t.head);
      const int id = model.scorer.labels.id(t.deprel);
      if (id < 0)
        throw Error("train_parser: relation '" + t.deprel + "' missing from label inventory");
      l.push_back(id);
    }
    heads.push_back(std::move(h));
    labels.push_back(std::move(l));
    if (!frozen) segs.push_back(subword::segment(model.bpe, encoder::forms_of(s)));
  }

  nn::ParamList params = model.scorer.params();
  if (!frozen)
    for (auto* p : model.encoder.params()) params.push_back(p);

  const nn::BatchStep step = [&](std::span<const std::size_t> batch) {
    std::size_t deps = 0;
    for (std::size_t k : batch) deps += train[k].size();
    if (deps == 0) return 0.0;
    const double scale = 1.0 / static_cast<double>(deps);
    double loss = 0.0;
    for (std::size_t k : batch) {
      if (train[k].tokens.empty()) continue;
      const auto emb =
          frozen ? opts.train_embeddings->embed(k, train[k]) : model.encoder.encode(segs[k]);
      const auto r = parse_loss(model.scorer, emb, heads[k], labels[k], scale);
      loss += r.loss;
      if (!frozen) model.encoder.backward(segs[k], r.d_emb);
    }
    return loss * scale;
  };
  const nn::DevEval eval = [&]() {
    const auto s = attachment_scores(model, dev, opts.dev_embeddings);
    return std::pair{s.uas, s.las};
  };
  return nn::train_loop(train.size(), opts.schedule, params, step, eval);
}

Parser make_parser(const std::vector<conllu::Sentence>& train, std::size_t bpe_vocab,
                   const encoder::EncoderConfig& enc, const ScorerConfig& scorer,
                   std::uint64_t seed) {
  Parser p;
  std::vector<std::string> corpus;
  std::set<std::string> rels;
  for (const auto& s : train)
    for (const auto& t : s.tokens) {
      corpus.push_back(t.form);
      rels.insert(t.deprel);
    }
  p.bpe = subword::learn_bpe(corpus, bpe_vocab);
  nn::Rng rng(seed);
  p.encoder = encoder::ToyEncoder(p.bpe.vocab_size(), enc, rng);
  p.scorer = EdgeScorerParams(enc.embed_dim,
                              tagging::LabelSet(std::vector<std::string>(rels.begin(), rels.end())),
                              scorer, rng);
  return p;
}

}  // namespace philokit::parser
