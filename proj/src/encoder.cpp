#include "philokit/encoder.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "philokit/error.hpp"
#include "philokit/kernels.hpp"

namespace philokit::encoder {
namespace {

struct Window {
  std::size_t lo;
  std::size_t hi;  // inclusive
};

Window window_for(const subword::Segmentation& seg, std::size_t token, std::size_t radius) {
  const std::size_t f = seg.token_first_subword[token];
  const std::size_t last = seg.subword_ids.size() - 1;
  return {f >= radius ? f - radius : 0, std::min(last, f + radius)};
}

}  // namespace

ToyEncoder::ToyEncoder(std::size_t vocab_size, const EncoderConfig& cfg, nn::Rng& rng)
    : table("encoder.table", vocab_size, cfg.embed_dim),
      root("encoder.root", 1, cfg.embed_dim),
      scale("encoder.position_scale", 1, 1),
      radius_(cfg.context_radius),
      position_norm_(cfg.position_norm) {
  if (cfg.embed_dim == 0) throw Error("encoder: embed_dim must be positive");
  if (vocab_size == 0) throw Error("encoder: empty vocabulary");
  nn::init_uniform(table.value, rng, cfg.init_scale);
  nn::init_uniform(root.value, rng, cfg.init_scale);
  scale.value(0, 0) = cfg.position_scale;
}

EmbeddingSequence ToyEncoder::encode(const subword::Segmentation& seg) const {
  const std::size_t n = seg.token_count();
  const std::size_t d = dim();
  EmbeddingSequence out{nn::Matrix(n + 1, d)};
  std::copy(root.value.flat().begin(), root.value.flat().end(), out.vectors.row(0).begin());
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = window_for(seg, i, radius_);
    const double coef = 1.0 / static_cast<double>(hi - lo + 1);
    auto e = out.vectors.row(i + 1);
    for (std::size_t s = lo; s <= hi; ++s) {
      const auto id = static_cast<std::size_t>(seg.subword_ids[s]);
      if (id >= vocab_size()) throw Error("encoder: subword id outside table");
      kernels::axpy(coef, table.value.row(id), e);
    }
    e[d - 1] += scale.value(0, 0) * static_cast<double>(i + 1) / position_norm_;
  }
  return out;
}

void ToyEncoder::backward(const subword::Segmentation& seg, const nn::Matrix& upstream) {
  const std::size_t n = seg.token_count();
  const std::size_t d = dim();
  if (upstream.rows() != n + 1 || upstream.cols() != d)
    throw Error("encoder backward: upstream gradient has shape " + std::to_string(upstream.rows()) +
                "x" + std::to_string(upstream.cols()) + ", expected " + std::to_string(n + 1) +
                "x" + std::to_string(d));
  kernels::axpy(1.0, upstream.row(0), root.grad.row(0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = upstream.row(i + 1);
    const auto [lo, hi] = window_for(seg, i, radius_);
    const double coef = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::size_t s = lo; s <= hi; ++s)
      kernels::axpy(coef, g, table.grad.row(static_cast<std::size_t>(seg.subword_ids[s])));
    scale.grad(0, 0) += g[d - 1] * static_cast<double>(i + 1) / position_norm_;
  }
}

nlohmann::json ToyEncoder::to_json() const {
  return {{"radius", radius_},
          {"position_norm", position_norm_},
          {"table", nn::to_json(table.value)},
          {"root", nn::to_json(root.value)},
          {"position_scale", scale.value(0, 0)}};
}

ToyEncoder ToyEncoder::from_json(const nlohmann::json& j) {
  ToyEncoder e;
  e.radius_ = j.at("radius").get<std::size_t>();
  e.position_norm_ = j.at("position_norm").get<double>();
  e.table = nn::Param("encoder.table", 0, 0);
  e.table.value = nn::matrix_from_json(j.at("table"));
  e.table.grad = nn::Matrix(e.table.value.rows(), e.table.value.cols());
  e.root = nn::Param("encoder.root", 0, 0);
  e.root.value = nn::matrix_from_json(j.at("root"));
  e.root.grad = nn::Matrix(1, e.root.value.cols());
  e.scale = nn::Param("encoder.position_scale", 1, 1);
  e.scale.value(0, 0) = j.at("position_scale").get<double>();
  return e;
}

PrecomputedEmbeddings PrecomputedEmbeddings::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<EmbeddingSequence> blocks;
  std::size_t n = 0;
  std::size_t d = 0;
  while (in >> n >> d) {
    if (d == 0) throw Error("embedding file: zero width in block " + std::to_string(blocks.size()));
    EmbeddingSequence e{nn::Matrix(n + 1, d)};
    for (double& x : e.vectors.flat()) {
      if (!(in >> x)) throw Error("embedding file: truncated block " + std::to_string(blocks.size()));
      if (!std::isfinite(x)) throw Error("embedding file: non-finite value");
    }
    blocks.push_back(std::move(e));
  }
  if (!in.eof()) throw Error("embedding file: malformed header after block " +
                             std::to_string(blocks.size()));
  return PrecomputedEmbeddings(std::move(blocks));
}

PrecomputedEmbeddings PrecomputedEmbeddings::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

void PrecomputedEmbeddings::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out.precision(17);
  for (const auto& b : blocks_) {
    out << b.token_count() << ' ' << b.dim() << '\n';
    for (std::size_t r = 0; r < b.vectors.rows(); ++r) {
      for (std::size_t c = 0; c < b.dim(); ++c) out << (c ? " " : "") << b.vectors(r, c);
      out << '\n';
    }
  }
}

EmbeddingSequence PrecomputedEmbeddings::embed(std::size_t sentence_index,
                                               const conllu::Sentence& sentence) const {
  if (sentence_index >= blocks_.size())
    throw Error("no precomputed embeddings for sentence " + std::to_string(sentence_index));
  const auto& b = blocks_[sentence_index];
  if (b.token_count() != sentence.size())
    throw Error("precomputed embeddings for sentence " + std::to_string(sentence_index) + " have " +
                std::to_string(b.token_count()) + " tokens, sentence has " +
                std::to_string(sentence.size()));
  return b;
}

std::vector<std::string> forms_of(const conllu::Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.tokens.size());
  for (const auto& t : s.tokens) out.push_back(t.form);
  return out;
}

}  // namespace philokit::encoder
