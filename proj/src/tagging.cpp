#include "philokit/tagging.hpp"

#include <cmath>
#include <set>

#include "philokit/error.hpp"
#include "philokit/kernels.hpp"

namespace philokit::tagging {
namespace {

void check_dims(const TaggerHeads& heads, const encoder::EmbeddingSequence& emb) {
  if (emb.dim() != heads.dim())
    throw Error("tagger: embedding width " + std::to_string(emb.dim()) + " does not match heads " +
                std::to_string(heads.dim()));
}

nlohmann::json param_json(const nn::Param& p) { return nn::to_json(p.value); }

void param_from_json(nn::Param& p, const std::string& name, const nlohmann::json& j) {
  p.name = name;
  p.value = nn::matrix_from_json(j);
  p.grad = nn::Matrix(p.value.rows(), p.value.cols());
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "upos") return Task::upos;
  if (name == "xpos-perseus") return Task::xpos_perseus;
  if (name == "xpos-proiel") return Task::xpos_proiel;
  throw Error("unknown tagging task '" + std::string(name) + "'");
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::upos: return "upos";
    case Task::xpos_perseus: return "xpos-perseus";
    case Task::xpos_proiel: return "xpos-proiel";
  }
  return "?";
}

std::size_t head_count(Task t) { return t == Task::xpos_perseus ? conllu::kMorphSlots : 1; }

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second)
      throw Error("duplicate label '" + labels_[i] + "'");
}

int LabelSet::id(std::string_view label) const {
  auto it = index_.find(std::string(label));
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> token_labels(const conllu::Token& t, Task task) {
  switch (task) {
    case Task::upos: return {t.upos};
    case Task::xpos_proiel: return {t.xpos};
    case Task::xpos_perseus: {
      const auto m = conllu::split_xpos_perseus(t.xpos);
      std::vector<std::string> out;
      for (char c : m.slots) out.emplace_back(1, c);
      return out;
    }
  }
  return {};
}

std::string join_labels(const std::vector<std::string>& per_head, Task task) {
  if (task != Task::xpos_perseus) return per_head.at(0);
  std::string s;
  for (const auto& l : per_head) s += l;
  return s;
}

std::vector<LabelSet> build_label_sets(const std::vector<conllu::Sentence>& train, Task task) {
  std::vector<std::set<std::string>> seen(head_count(task));
  for (const auto& s : train)
    for (const auto& t : s.tokens) {
      const auto labels = token_labels(t, task);
      for (std::size_t m = 0; m < labels.size(); ++m) seen[m].insert(labels[m]);
    }
  std::vector<LabelSet> out;
  for (const auto& set : seen) {
    if (set.empty()) throw Error("tagger: training split has no tokens");
    out.emplace_back(std::vector<std::string>(set.begin(), set.end()));
  }
  return out;
}

TaggerHeads::TaggerHeads(std::size_t dim, std::vector<LabelSet> labels, const HeadsConfig& cfg,
                         nn::Rng& rng)
    : dim_(dim) {
  if (labels.size() != 1 && labels.size() != conllu::kMorphSlots)
    throw Error("tagger: head count must be 1 or 9");
  for (std::size_t m = 0; m < labels.size(); ++m) {
    Head h;
    const std::string p = "tagger.head" + std::to_string(m) + ".";
    const std::size_t in = cfg.hidden ? cfg.hidden : dim;
    h.hidden_w = nn::Param(p + "hidden_w", cfg.hidden, cfg.hidden ? dim : 0);
    h.hidden_b = nn::Param(p + "hidden_b", cfg.hidden ? 1 : 0, cfg.hidden);
    h.out_w = nn::Param(p + "out_w", labels[m].size(), in);
    h.out_b = nn::Param(p + "out_b", 1, labels[m].size());
    nn::init_uniform(h.hidden_w.value, rng, cfg.init_scale);
    nn::init_uniform(h.out_w.value, rng, cfg.init_scale);
    h.labels = std::move(labels[m]);
    heads.push_back(std::move(h));
  }
}

nn::ParamList TaggerHeads::params() {
  nn::ParamList out;
  for (auto& h : heads) {
    if (h.has_hidden()) {
      out.push_back(&h.hidden_w);
      out.push_back(&h.hidden_b);
    }
    out.push_back(&h.out_w);
    out.push_back(&h.out_b);
  }
  return out;
}

nlohmann::json TaggerHeads::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  for (const auto& h : heads) {
    nlohmann::json hj;
    hj["labels"] = h.labels.labels();
    if (h.has_hidden()) {
      hj["hidden_w"] = param_json(h.hidden_w);
      hj["hidden_b"] = param_json(h.hidden_b);
    }
    hj["out_w"] = param_json(h.out_w);
    hj["out_b"] = param_json(h.out_b);
    j["heads"].push_back(hj);
  }
  return j;
}

TaggerHeads TaggerHeads::from_json(const nlohmann::json& j) {
  TaggerHeads t;
  t.dim_ = j.at("dim").get<std::size_t>();
  std::size_t m = 0;
  for (const auto& hj : j.at("heads")) {
    Head h;
    const std::string p = "tagger.head" + std::to_string(m++) + ".";
    h.labels = LabelSet(hj.at("labels").get<std::vector<std::string>>());
    if (hj.contains("hidden_w")) {
      param_from_json(h.hidden_w, p + "hidden_w", hj["hidden_w"]);
      param_from_json(h.hidden_b, p + "hidden_b", hj["hidden_b"]);
    }
    param_from_json(h.out_w, p + "out_w", hj.at("out_w"));
    param_from_json(h.out_b, p + "out_b", hj.at("out_b"));
    t.heads.push_back(std::move(h));
  }
  return t;
}

TagDistributions tag_forward(const TaggerHeads& heads, const encoder::EmbeddingSequence& emb) {
  check_dims(heads, emb);
  TagDistributions d;
  d.tokens = emb.token_count();
  d.heads = heads.size();
  d.probs.resize(d.tokens * d.heads);
  d.hidden.resize(d.tokens * d.heads);
  for (std::size_t t = 0; t < d.tokens; ++t) {
    const auto x = emb.row(t + 1);
    for (std::size_t m = 0; m < d.heads; ++m) {
      const Head& h = heads.heads[m];
      std::span<const double> in = x;
      auto& hid = d.hidden[t * d.heads + m];
      if (h.has_hidden()) {
        hid.assign(h.hidden_w.value.rows(), 0.0);
        kernels::gemv(h.hidden_w.value.flat(), h.hidden_w.value.rows(), h.hidden_w.value.cols(), x,
                      hid);
        for (std::size_t k = 0; k < hid.size(); ++k) hid[k] = std::tanh(hid[k] + h.hidden_b.value(0, k));
        in = hid;
      }
      std::vector<double> logits(h.labels.size());
      kernels::gemv(h.out_w.value.flat(), h.out_w.value.rows(), h.out_w.value.cols(), in, logits);
      for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += h.out_b.value(0, k);
      auto& p = d.probs[t * d.heads + m];
      p.resize(logits.size());
      nn::softmax(logits, p);
    }
  }
  return d;
}

std::vector<double> head_losses(const TagDistributions& d, const GoldLabels& gold) {
  if (gold.size() != d.tokens) throw Error("tagger: gold/token count mismatch");
  std::vector<double> losses(d.heads, 0.0);
  if (d.tokens == 0) return losses;
  for (std::size_t t = 0; t < d.tokens; ++t) {
    if (gold[t].size() != d.heads) throw Error("tagger: gold/head count mismatch");
    for (std::size_t m = 0; m < d.heads; ++m) {
      const int g = gold[t][m];
      if (g < 0) throw Error("tagger: gold label unseen in training");
      losses[m] -= std::log(d.at(t, m)[static_cast<std::size_t>(g)]);
    }
  }
  for (double& l : losses) l /= static_cast<double>(d.tokens);
  return losses;
}

double combine_head_losses(std::span<const double> per_head) {
  if (per_head.empty()) throw Error("tagger: no heads");
  const double w = 1.0 / static_cast<double>(per_head.size());
  double total = 0.0;
  for (double l : per_head) total += w * l;
  return total;
}

double multitask_loss(const TagDistributions& d, const GoldLabels& gold) {
  const auto losses = head_losses(d, gold);
  return combine_head_losses(losses);
}

nn::Matrix tag_backward(TaggerHeads& heads, const encoder::EmbeddingSequence& emb,
                        const TagDistributions& d, const GoldLabels& gold, double scale) {
  check_dims(heads, emb);
  nn::Matrix demb(emb.vectors.rows(), emb.dim());
  const double w = scale / static_cast<double>(d.heads);
  for (std::size_t t = 0; t < d.tokens; ++t) {
    const auto x = emb.row(t + 1);
    auto dx = demb.row(t + 1);
    for (std::size_t m = 0; m < d.heads; ++m) {
      Head& h = heads.heads[m];
      const int g = gold.at(t).at(m);
      if (g < 0) throw Error("tagger: gold label unseen in training");
      const auto p = d.at(t, m);
      std::vector<double> dlogit(p.begin(), p.end());
      dlogit[static_cast<std::size_t>(g)] -= 1.0;
      for (double& v : dlogit) v *= w;

      const auto& hid = d.hidden[t * d.heads + m];
      const std::span<const double> in = h.has_hidden() ? std::span<const double>(hid) : x;
      kernels::ger(1.0, dlogit, in, h.out_w.grad.flat());
      kernels::axpy(1.0, dlogit, h.out_b.grad.row(0));
      std::vector<double> din(in.size(), 0.0);
      kernels::gemv_t_acc(h.out_w.value.flat(), h.out_w.value.rows(), h.out_w.value.cols(), dlogit,
                          din);
      if (h.has_hidden()) {
        for (std::size_t k = 0; k < din.size(); ++k) din[k] *= 1.0 - hid[k] * hid[k];
        kernels::ger(1.0, din, x, h.hidden_w.grad.flat());
        kernels::axpy(1.0, din, h.hidden_b.grad.row(0));
        kernels::gemv_t_acc(h.hidden_w.value.flat(), h.hidden_w.value.rows(),
                            h.hidden_w.value.cols(), din, dx);
      } else {
        kernels::axpy(1.0, din, dx);
      }
    }
  }
  return demb;
}

GoldLabels gold_ids(const TaggerHeads& heads, const conllu::Sentence& s, Task task, bool training) {
  GoldLabels out;
  out.reserve(s.size());
  for (const auto& t : s.tokens) {
    std::vector<std::string> labels;
    try {
      labels = token_labels(t, task);
    } catch (const Error&) {
      if (training) throw;
      labels.assign(heads.size(), std::string());
    }
    std::vector<int> ids;
    for (std::size_t m = 0; m < heads.size(); ++m) {
      const int id = heads.heads[m].labels.id(labels.at(m));
      if (id < 0 && training)
        throw Error("tagger: gold label '" + labels[m] + "' of token " + std::to_string(t.id) +
                    " unseen in training");
      ids.push_back(id);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<std::vector<int>> predict_ids(const TagDistributions& d) {
  std::vector<std::vector<int>> out(d.tokens, std::vector<int>(d.heads, 0));
  for (std::size_t t = 0; t < d.tokens; ++t)
    for (std::size_t m = 0; m < d.heads; ++m) {
      const auto p = d.at(t, m);
      out[t][m] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
  return out;
}

encoder::EmbeddingSequence Tagger::embed(const conllu::Sentence& s) const {
  return encoder.encode(subword::segment(bpe, encoder::forms_of(s)));
}

std::vector<std::string> Tagger::predict(const encoder::EmbeddingSequence& emb) const {
  const auto d = tag_forward(heads, emb);
  std::vector<std::string> out;
  for (const auto& ids : predict_ids(d)) {
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < ids.size(); ++m) labels.push_back(heads.heads[m].labels.label(ids[m]));
    out.push_back(join_labels(labels, task));
  }
  return out;
}

std::vector<std::string> Tagger::predict(const conllu::Sentence& s) const {
  return predict(embed(s));
}

nlohmann::json Tagger::to_json() const {
  return {{"kind", "philokit-tagger"},
          {"task", std::string(task_name(task))},
          {"bpe", bpe.save()},
          {"encoder", encoder.to_json()},
          {"heads", heads.to_json()}};
}

Tagger Tagger::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "philokit-tagger") throw Error("not a tagger model");
  Tagger t;
  t.task = parse_task(j.at("task").get<std::string>());
  t.bpe = subword::BpeModel::load(j.at("bpe").get<std::string>());
  t.encoder = encoder::ToyEncoder::from_json(j.at("encoder"));
  t.heads = TaggerHeads::from_json(j.at("heads"));
  return t;
}

double tag_accuracy(const Tagger& model, const std::vector<conllu::Sentence>& dev,
                    const encoder::EmbeddingProvider* frozen) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const auto& s = dev[i];
    const auto emb = frozen ? frozen->embed(i, s) : model.embed(s);
    const auto d = tag_forward(model.heads, emb);
    const auto gold = gold_ids(model.heads, s, model.task, false);
    const auto pred = predict_ids(d);
    for (std::size_t t = 0; t < s.size(); ++t) {
      ++total;
      if (pred[t] == gold[t]) ++correct;
    }
  }
  return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

nn::TrainHistory train_tagger(Tagger& model, const std::vector<conllu::Sentence>& train,
                              const std::vector<conllu::Sentence>& dev,
                              const TaggerTrainOptions& opts) {
  if (train.empty()) throw Error("train_tagger: empty training split");
  if (dev.empty()) throw Error("train_tagger: empty dev split");
  const bool frozen = opts.train_embeddings != nullptr;

  std::vector<subword::Segmentation> segs;
  std::vector<GoldLabels> gold;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!frozen) segs.push_back(subword::segment(model.bpe, encoder::forms_of(train[i])));
    gold.push_back(gold_ids(model.heads, train[i], model.task, true));
  }

  nn::ParamList params = model.heads.params();
  if (!frozen)
    for (auto* p : model.encoder.params()) params.push_back(p);

  const nn::BatchStep step = [&](std::span<const std::size_t> batch) {
    std::size_t tokens = 0;
    for (std::size_t i : batch) tokens += train[i].size();
    if (tokens == 0) return 0.0;
    const double scale = 1.0 / static_cast<double>(tokens);
    std::vector<double> sums(model.heads.size(), 0.0);
    for (std::size_t i : batch) {
      const auto emb =
          frozen ? opts.train_embeddings->embed(i, train[i]) : model.encoder.encode(segs[i]);
      const auto d = tag_forward(model.heads, emb);
      const auto per_head = head_losses(d, gold[i]);
      for (std::size_t m = 0; m < sums.size(); ++m)
        sums[m] += per_head[m] * static_cast<double>(train[i].size());
      const auto demb = tag_backward(model.heads, emb, d, gold[i], scale);
      if (!frozen) model.encoder.backward(segs[i], demb);
    }
    for (double& s : sums) s *= scale;
    return combine_head_losses(sums);
  };
  const nn::DevEval eval = [&]() {
    return std::pair{tag_accuracy(model, dev, opts.dev_embeddings), 0.0};
  };
  return nn::train_loop(train.size(), opts.schedule, params, step, eval);
}

Tagger make_tagger(Task task, const std::vector<conllu::Sentence>& train, std::size_t bpe_vocab,
                   const encoder::EncoderConfig& enc, const HeadsConfig& heads,
                   std::uint64_t seed) {
  Tagger t;
  t.task = task;
  std::vector<std::string> corpus;
  for (const auto& s : train)
    for (const auto& tok : s.tokens) corpus.push_back(tok.form);
  t.bpe = subword::learn_bpe(corpus, bpe_vocab);
  nn::Rng rng(seed);
  t.encoder = encoder::ToyEncoder(t.bpe.vocab_size(), enc, rng);
  t.heads = TaggerHeads(enc.embed_dim, build_label_sets(train, task), heads, rng);
  return t;
}

}  // namespace philokit::tagging
