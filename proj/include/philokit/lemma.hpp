#pragma once

// Contextual lemmatization examples, beam search over a next-token scorer, and a small
// character-level scorer that can be trained end to end.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "philokit/conllu.hpp"
#include "philokit/nn.hpp"

namespace philokit::lemma {

struct LemmaExample {
  /// Space-separated tokens with the target wrapped in <t_tok_beg> ... <t_tok_end>.
  std::string source;
  std::string target;
  std::string sent_id;
  int token_id = 0;

  bool operator==(const LemmaExample&) const = default;
};

/// One example per token. Forms and lemmata are NFC-normalized. In char mode the target's
/// code points follow <t_tok_sep>, separated by spaces.
std::vector<LemmaExample> make_lemma_examples(const conllu::Sentence& s, bool char_mode);

/// Pieces of an example source.
struct SourceParts {
  std::vector<std::string> left;
  std::string target;
  std::vector<std::string> right;
  bool char_mode = false;
};

/// Throws unless there is exactly one <t_tok_beg> followed by exactly one <t_tok_end>.
SourceParts split_source(std::string_view source);

/// Removes the delimiters and the character expansion: the original sentence, tokens joined
/// by single spaces.
std::string strip_lemma_source(std::string_view source);

/// JSON lines with fields source, target, sent_id, token_id.
std::string format_examples(const std::vector<LemmaExample>& xs);
std::vector<LemmaExample> parse_examples(std::string_view text);
void write_examples(const std::vector<LemmaExample>& xs, const std::string& path);
std::vector<LemmaExample> read_examples(const std::string& path);

/// Output id 0 is END.
inline constexpr int kEnd = 0;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct BeamHypothesis {
  std::vector<int> tokens;  // END not included
  double log_prob = 0.0;
  bool finished = false;
};

/// Log-probabilities of the next output id given the prefix emitted so far.
/// -inf marks an impossible continuation.
using NextTokenScorer = std::function<std::vector<double>(std::span<const int> prefix)>;

/// Length-capped beam search. Every step keeps the best `width` extensions among all
/// candidates; extensions by END leave the beam as finished hypotheses. After max_len
/// tokens END is forced. Returns at most `width` finished hypotheses ordered by score
/// (descending), ties broken by ascending token sequence.
std::vector<BeamHypothesis> beam_search(const NextTokenScorer& scorer, std::size_t width,
                                        std::size_t max_len);

/// Orders hypotheses as beam_search ranks them.
bool ranks_before(const BeamHypothesis& a, const BeamHypothesis& b);

/// Exact-match percentage after NFC normalization.
double lemma_accuracy(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

struct ScorerConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden = 64;
  double init_scale = 0.1;
};

/// Encoded model input: code points of the target form and the context word ids.
struct LemmaInput {
  std::vector<int> chars;
  std::vector<int> context;
};

/// Character transducer. At output step t it sees the target form's characters at t-1, t, t+1,
/// a bucket of the remaining source length, the previous output character and the mean
/// embedding of the context words, and applies one tanh layer and a softmax.
class CharLemmaScorer {
 public:
  static constexpr std::size_t kLengthBuckets = 5;
  static constexpr std::size_t kWindow = 3;

  CharLemmaScorer() = default;
  /// Vocabularies from the training examples.
  CharLemmaScorer(const std::vector<LemmaExample>& train, const ScorerConfig& cfg, nn::Rng& rng);

  LemmaInput encode(std::string_view source) const;
  /// Output ids of a lemma; -1 for characters outside the output inventory.
  std::vector<int> target_ids(std::string_view lemma) const;
  std::string decode_ids(std::span<const int> ids) const;

  std::size_t output_size() const noexcept { return out_chars_.size(); }

  std::vector<double> next_log_probs(const LemmaInput& in, std::span<const int> prefix) const;

  /// sum_t -log p(target_t | prefix) including the final END. Gradients of scale * loss are
  /// accumulated when requested.
  double sequence_loss(const LemmaInput& in, std::span<const int> target, double scale,
                       bool accumulate_gradients = true);

  /// Ranked lemma candidates with their log-probabilities.
  std::vector<std::pair<std::string, double>> decode(std::string_view source, std::size_t width,
                                                     std::size_t max_len) const;

  nn::ParamList params();
  nlohmann::json to_json() const;
  static CharLemmaScorer from_json(const nlohmann::json& j);

  nn::Param src_emb;   // (|chars| + 2) x e, row 0 padding, row 1 unknown
  nn::Param len_emb;   // kLengthBuckets x e
  nn::Param out_emb;   // |out| x e, row 0 doubles as the start symbol
  nn::Param word_emb;  // (|words| + 1) x e, row 0 unknown
  nn::Param hidden_w;  // h x (6e)
  nn::Param hidden_b;  // 1 x h
  nn::Param out_w;     // |out| x h
  nn::Param out_b;     // 1 x |out|

 private:
  struct StepFeatures {
    std::size_t src[kWindow];
    std::size_t len_bucket;
    std::size_t prev;
  };
  StepFeatures features(const LemmaInput& in, std::span<const int> prefix) const;
  void input_vector(const LemmaInput& in, const StepFeatures& f, std::span<double> x) const;
  void rebuild_index();

  std::vector<std::string> src_chars_;
  std::vector<std::string> out_chars_;  // index 0 is END (empty string)
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> src_index_;
  std::unordered_map<std::string, int> out_index_;
  std::unordered_map<std::string, int> word_index_;
};

struct LemmaTrainOptions {
  nn::Schedule schedule;
  /// Beam width used for the dev metric during training.
  std::size_t dev_beam = 1;
  std::size_t max_len = 50;
};

/// Exact-match percentage of the top beam hypothesis.
double decode_accuracy(const CharLemmaScorer& model, const std::vector<LemmaExample>& xs,
                       std::size_t width, std::size_t max_len);

/// Cross-entropy training, loss per batch averaged over output steps. Throws on an empty
/// training set or on target characters missing from the output inventory.
nn::TrainHistory train_lemma_scorer(CharLemmaScorer& model, const std::vector<LemmaExample>& train,
                                    const std::vector<LemmaExample>& dev,
                                    const LemmaTrainOptions& opts);

}  // namespace philokit::lemma
