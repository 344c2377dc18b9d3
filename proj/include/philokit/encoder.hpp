#pragma once

// Contextual token embeddings e_0..e_n consumed by the tagging, parsing and probing heads.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "philokit/conllu.hpp"
#include "philokit/nn.hpp"
#include "philokit/subword.hpp"

namespace philokit::encoder {

/// Row 0 is the artificial ROOT embedding; row i (1..n) belongs to token i.
struct EmbeddingSequence {
  nn::Matrix vectors;

  std::size_t token_count() const noexcept { return vectors.rows() == 0 ? 0 : vectors.rows() - 1; }
  std::size_t dim() const noexcept { return vectors.cols(); }
  std::span<const double> row(std::size_t i) const { return vectors.row(i); }
};

struct EncoderConfig {
  std::size_t embed_dim = 16;
  std::size_t context_radius = 1;
  /// Initial value of the trainable position scale.
  double position_scale = 1.0;
  /// Token i gets position i / position_norm.
  double position_norm = 32.0;
  double init_scale = 0.1;
};

/// Windowed-mean encoder over first subwords with a positional channel on the last coordinate.
///
///   e_i = mean(table[s] for s in window(first(i), r)) + scale * (i / norm) * u_last
///   e_0 = root
class ToyEncoder {
 public:
  ToyEncoder() = default;
  ToyEncoder(std::size_t vocab_size, const EncoderConfig& cfg, nn::Rng& rng);

  std::size_t dim() const noexcept { return table.value.cols(); }
  std::size_t vocab_size() const noexcept { return table.value.rows(); }
  std::size_t radius() const noexcept { return radius_; }
  double position_norm() const noexcept { return position_norm_; }
  double position_scale() const { return scale.value(0, 0); }

  EmbeddingSequence encode(const subword::Segmentation& seg) const;

  /// Accumulates parameter gradients for an upstream gradient of shape (n+1) x d.
  void backward(const subword::Segmentation& seg, const nn::Matrix& upstream);

  nn::ParamList params() { return {&table, &root, &scale}; }

  nlohmann::json to_json() const;
  static ToyEncoder from_json(const nlohmann::json& j);

  nn::Param table;  // |vocab| x d
  nn::Param root;   // 1 x d
  nn::Param scale;  // 1 x 1

 private:
  std::size_t radius_ = 1;
  double position_norm_ = 32.0;
};

/// Source of embeddings for whole sentences; lets precomputed vectors stand in for the toy encoder.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingSequence embed(std::size_t sentence_index,
                                  const conllu::Sentence& sentence) const = 0;
};

/// Embeddings read from a text file, one block per sentence:
///   n d
///   <n+1 rows of d numbers, ROOT row first>
class PrecomputedEmbeddings : public EmbeddingProvider {
 public:
  static PrecomputedEmbeddings load_file(const std::string& path);
  static PrecomputedEmbeddings parse(std::string_view text);
  void save_file(const std::string& path) const;

  explicit PrecomputedEmbeddings(std::vector<EmbeddingSequence> rows) : blocks_(std::move(rows)) {}

  EmbeddingSequence embed(std::size_t sentence_index,
                          const conllu::Sentence& sentence) const override;
  std::size_t size() const noexcept { return blocks_.size(); }

 private:
  std::vector<EmbeddingSequence> blocks_;
};

/// Token forms of a sentence, in order.
std::vector<std::string> forms_of(const conllu::Sentence& s);

}  // namespace philokit::encoder
