#pragma once

// Token-level PoS tagging: a single softmax head, or nine parallel heads for the
// Perseus positional tag with the loss averaged over heads.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "philokit/conllu.hpp"
#include "philokit/encoder.hpp"
#include "philokit/nn.hpp"
#include "philokit/subword.hpp"

namespace philokit::tagging {

enum class Task { upos, xpos_perseus, xpos_proiel };

Task parse_task(std::string_view name);
std::string_view task_name(Task t);
/// 9 for Perseus XPoS, 1 otherwise.
std::size_t head_count(Task t);

/// Label inventory of one head, fixed from the training split.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  /// -1 when unseen.
  int id(std::string_view label) const;
  const std::string& label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

/// Gold label strings of every head for one token.
std::vector<std::string> token_labels(const conllu::Token& t, Task task);
/// Joins per-head predictions back into a tag string (the 9 slots for Perseus).
std::string join_labels(const std::vector<std::string>& per_head, Task task);

/// Sorted label inventories per head, from a training split.
std::vector<LabelSet> build_label_sets(const std::vector<conllu::Sentence>& train, Task task);

struct HeadsConfig {
  /// 0: one affine map per head; >0: one tanh hidden layer of this width before it.
  std::size_t hidden = 0;
  double init_scale = 0.1;
};

/// One classification head: [tanh(A e + a)] -> W x + b -> softmax.
struct Head {
  LabelSet labels;
  nn::Param hidden_w;  // hidden x d (empty when no hidden layer)
  nn::Param hidden_b;  // 1 x hidden
  nn::Param out_w;     // |labels| x in
  nn::Param out_b;     // 1 x |labels|

  bool has_hidden() const noexcept { return hidden_w.value.rows() != 0; }
};

class TaggerHeads {
 public:
  TaggerHeads() = default;
  TaggerHeads(std::size_t dim, std::vector<LabelSet> labels, const HeadsConfig& cfg, nn::Rng& rng);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return heads.size(); }
  nn::ParamList params();

  nlohmann::json to_json() const;
  static TaggerHeads from_json(const nlohmann::json& j);

  std::vector<Head> heads;

 private:
  std::size_t dim_ = 0;
};

/// Per-token, per-head softmax outputs (plus hidden activations kept for backward).
struct TagDistributions {
  std::size_t tokens = 0;
  std::size_t heads = 0;
  std::vector<std::vector<double>> probs;   // [token * heads + head]
  std::vector<std::vector<double>> hidden;  // same indexing; empty vectors without hidden layer

  std::span<const double> at(std::size_t token, std::size_t head) const {
    return probs[token * heads + head];
  }
};

/// Row 0 (ROOT) of emb is ignored.
TagDistributions tag_forward(const TaggerHeads& heads, const encoder::EmbeddingSequence& emb);

/// Gold label ids [token][head]; -1 marks a label unseen in training.
using GoldLabels = std::vector<std::vector<int>>;

/// Mean-over-tokens cross-entropy per head.
std::vector<double> head_losses(const TagDistributions& d, const GoldLabels& gold);

/// sum_m L_m / H.
double combine_head_losses(std::span<const double> per_head);

/// Multi-task loss over a sentence. Unseen gold labels are an error.
double multitask_loss(const TagDistributions& d, const GoldLabels& gold);

/// Accumulates head gradients of  scale * sum_t sum_m CE(t, m) / H  and returns d/d(emb).
nn::Matrix tag_backward(TaggerHeads& heads, const encoder::EmbeddingSequence& emb,
                        const TagDistributions& d, const GoldLabels& gold, double scale);

/// Gold ids for a sentence; throws on unseen labels when training is true.
GoldLabels gold_ids(const TaggerHeads& heads, const conllu::Sentence& s, Task task, bool training);

/// Argmax label id per head per token.
std::vector<std::vector<int>> predict_ids(const TagDistributions& d);

/// Complete tagger: segmentation, encoder and heads.
struct Tagger {
  Task task = Task::upos;
  subword::BpeModel bpe;
  encoder::ToyEncoder encoder;
  TaggerHeads heads;

  encoder::EmbeddingSequence embed(const conllu::Sentence& s) const;
  /// Predicted tag string per token.
  std::vector<std::string> predict(const conllu::Sentence& s) const;
  std::vector<std::string> predict(const encoder::EmbeddingSequence& emb) const;

  nlohmann::json to_json() const;
  static Tagger from_json(const nlohmann::json& j);
};

/// Percentage of tokens whose full tag (all heads) is right.
double tag_accuracy(const Tagger& model, const std::vector<conllu::Sentence>& dev,
                    const encoder::EmbeddingProvider* frozen = nullptr);

struct TaggerTrainOptions {
  nn::Schedule schedule;
  /// When set, embeddings come from here and the encoder is not trained.
  const encoder::EmbeddingProvider* train_embeddings = nullptr;
  const encoder::EmbeddingProvider* dev_embeddings = nullptr;
};

/// Mini-batch training with early stopping on dev accuracy. Loss per batch is the
/// multi-task loss with per-head means taken over all tokens of the batch.
nn::TrainHistory train_tagger(Tagger& model, const std::vector<conllu::Sentence>& train,
                              const std::vector<conllu::Sentence>& dev,
                              const TaggerTrainOptions& opts);

/// Fresh tagger: label sets from train, BPE learned on train forms.
Tagger make_tagger(Task task, const std::vector<conllu::Sentence>& train, std::size_t bpe_vocab,
                   const encoder::EncoderConfig& enc, const HeadsConfig& heads, std::uint64_t seed);

}  // namespace philokit::tagging
