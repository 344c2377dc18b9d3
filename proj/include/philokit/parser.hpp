#pragma once

// Dependency parsing as head selection with maximum-spanning-arborescence repair.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "philokit/conllu.hpp"
#include "philokit/encoder.hpp"
#include "philokit/nn.hpp"
#include "philokit/subword.hpp"
#include "philokit/tagging.hpp"

namespace philokit::parser {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

/// Dense head scores: score(j, i) for candidate head j in 0..n of dependent i in 1..n.
/// Self edges and edges into ROOT are masked.
class WeightedDigraph {
 public:
  WeightedDigraph() = default;
  /// All admissible cells start at 0, masked cells at -inf.
  explicit WeightedDigraph(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double score(std::size_t head, std::size_t dep) const { return cells_[head * (n_ + 1) + dep]; }
  /// Throws when setting a self edge or an edge into ROOT.
  void set(std::size_t head, std::size_t dep, double value);
  /// Sets any cell, used for masking extra edges (e.g. forcing a single root).
  void set_raw(std::size_t head, std::size_t dep, double value) {
    cells_[head * (n_ + 1) + dep] = value;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> cells_;  // (n+1) x (n+1), column 0 unused
};

/// Head per dependent (index 0 unused) plus optional labels.
struct Arborescence {
  std::vector<int> head;  // size n+1, head[0] = -1
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return head.empty() ? 0 : head.size() - 1; }
};

/// Sum of score(head[i], i) over i = 1..n, accumulated in that order.
double tree_score(const WeightedDigraph& g, const std::vector<int>& head);

/// True iff head (index 0 unused) is a spanning arborescence rooted at 0.
bool is_arborescence(const std::vector<int>& head);

/// p_head(j | i): softmax of column i; masked cells get 0.
std::vector<double> head_distribution(const WeightedDigraph& g, std::size_t dep);

struct GreedyResult {
  std::vector<int> head;
  bool is_tree = false;
};

/// Independent argmax per dependent (ties go to the lowest head index).
GreedyResult greedy_heads(const WeightedDigraph& g);

struct DecodeOptions {
  /// Require exactly one dependent of ROOT.
  bool single_root = false;
};

/// Maximum spanning arborescence rooted at 0. Returns the greedy heads unchanged when they
/// already form a tree (and satisfy single_root when requested). Throws when a dependent has
/// no finite-score candidate head.
std::vector<int> chu_liu_edmonds(const WeightedDigraph& g, const DecodeOptions& opts = {});

struct ScorerConfig {
  /// Attention width d'.
  std::size_t attention = 16;
  /// Hidden width of the label network; 0 means "same as the embedding width".
  std::size_t label_hidden = 0;
  double init_scale = 0.1;
};

/// f(e_j, e_i) = v . tanh(U e_j + W e_i) and the rectifier label network g([e_i; e_j]).
struct EdgeScorerParams {
  EdgeScorerParams() = default;
  EdgeScorerParams(std::size_t dim, tagging::LabelSet labels, const ScorerConfig& cfg,
                   nn::Rng& rng);

  std::size_t dim() const noexcept { return u.value.cols(); }
  std::size_t attention() const noexcept { return u.value.rows(); }
  std::size_t label_hidden() const noexcept { return label_w1.value.rows(); }

  nn::ParamList params();
  nlohmann::json to_json() const;
  static EdgeScorerParams from_json(const nlohmann::json& j);

  nn::Param u;         // d' x d
  nn::Param w;         // d' x d
  nn::Param v;         // 1 x d'
  nn::Param label_w1;  // h x 2d, input [e_i; e_j]
  nn::Param label_b1;  // 1 x h
  nn::Param label_w2;  // |L| x h
  nn::Param label_b2;  // 1 x |L|
  tagging::LabelSet labels;
};

WeightedDigraph score_edges(const EdgeScorerParams& p, const encoder::EmbeddingSequence& emb);

/// p_label(l | j, i) over the label inventory.
std::vector<double> label_distribution(const EdgeScorerParams& p,
                                       const encoder::EmbeddingSequence& emb, std::size_t head,
                                       std::size_t dep);

/// Training loss of one sentence, given gold heads (index 0 unused) and gold label ids:
///   sum_i [ -log p_head(gold_i | i) - log p_label(gold_label_i | gold_i, i) ]
/// Gradients of  scale * loss  are accumulated into p and returned w.r.t. emb.
struct SentenceLoss {
  double loss = 0.0;
  nn::Matrix d_emb;
};
SentenceLoss parse_loss(EdgeScorerParams& p, const encoder::EmbeddingSequence& emb,
                        const std::vector<int>& gold_head, const std::vector<int>& gold_label,
                        double scale, bool accumulate_gradients = true);

struct Parser {
  subword::BpeModel bpe;
  encoder::ToyEncoder encoder;
  EdgeScorerParams scorer;
  DecodeOptions decode;

  encoder::EmbeddingSequence embed(const conllu::Sentence& s) const;
  /// Greedy heads repaired by CLE, plus argmax labels.
  Arborescence parse(const encoder::EmbeddingSequence& emb) const;
  Arborescence parse(const conllu::Sentence& s) const;
  /// Copy of s with HEAD and DEPREL replaced by predictions.
  conllu::Sentence annotate(const conllu::Sentence& s) const;

  nlohmann::json to_json() const;
  static Parser from_json(const nlohmann::json& j);
};

struct AttachmentScores {
  double uas = 0.0;
  double las = 0.0;
};

AttachmentScores attachment_scores(const Parser& model, const std::vector<conllu::Sentence>& dev,
                                   const encoder::EmbeddingProvider* frozen = nullptr);

struct ParserTrainOptions {
  nn::Schedule schedule;
  const encoder::EmbeddingProvider* train_embeddings = nullptr;
  const encoder::EmbeddingProvider* dev_embeddings = nullptr;
};

/// Loss per batch is the mean over the batch's dependents. Early stopping on dev UAS.
/// Throws when a gold training tree is invalid (naming the sentence).
nn::TrainHistory train_parser(Parser& model, const std::vector<conllu::Sentence>& train,
                              const std::vector<conllu::Sentence>& dev,
                              const ParserTrainOptions& opts);

Parser make_parser(const std::vector<conllu::Sentence>& train, std::size_t bpe_vocab,
                   const encoder::EncoderConfig& enc, const ScorerConfig& scorer,
                   std::uint64_t seed);

}  // namespace philokit::parser
