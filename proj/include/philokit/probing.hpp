#pragma once

// Knowledge probes: few-shot synonym/antonym filling with k-fold cross-validation, and
// recall@k over ranked entity predictions.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace philokit::probing {

inline constexpr std::string_view kMask = "<mask>";
inline constexpr std::string_view kSynonymFiller = "πάντως";
inline constexpr std::string_view kAntonymFiller = "οὐχ";

enum class Relation { synonym, antonym };
std::string_view relation_name(Relation r);
Relation parse_relation(std::string_view name);
std::string_view gold_filler(Relation r);

struct PairProbe {
  std::string word_a;
  std::string word_b;
  Relation relation = Relation::synonym;
  std::string prompt;
};

/// "τὸ {A} καὶ τὸ {B}· <mask> ὁμοῖά ἐστιν"
std::string render_pair_prompt(std::string_view a, std::string_view b);
/// Sets pair.prompt from its words and returns it.
std::string render_pair_prompt(PairProbe& pair);
/// A warning for degenerate pairs (identical words), nothing otherwise.
std::optional<std::string> lint_pair(const PairProbe& pair);

struct RelationProbe {
  std::string prompt;
  std::string gold_entity;
  std::string relation_type;
};

/// JSON lines with fields prompt, gold, relation (pairs may add word_a, word_b).
std::vector<PairProbe> parse_pair_probes(std::string_view text);
std::vector<RelationProbe> parse_relation_probes(std::string_view text);
std::string format_pair_probes(const std::vector<PairProbe>& xs);
/// JSON lines with a "predictions" array per line.
std::vector<std::vector<std::string>> parse_predictions(std::string_view text);

/// Class-stratified folds of example indices: each class is shuffled, classes are laid out
/// one after another and positions are dealt round-robin. Indices within a fold ascend.
std::vector<std::vector<std::size_t>> kfold_split(const std::vector<int>& classes, std::size_t k,
                                                  std::uint64_t seed);

/// A filler model trained on a handful of shots.
class PairClassifier {
 public:
  virtual ~PairClassifier() = default;
  /// Score of filling the mask of `probe` with `filler`; higher is better.
  virtual double score(const PairProbe& probe, std::string_view filler) const = 0;
};

/// Builds a classifier from training probes. Must not look at anything else.
using ClassifierFactory = std::function<std::unique_ptr<PairClassifier>(
    const std::vector<const PairProbe*>& shots, std::uint64_t seed)>;

/// True iff the gold filler outscores the other one (ties count as wrong).
bool predict_correct(const PairClassifier& c, const PairProbe& probe);

struct CurvePoint {
  std::size_t shots = 0;  // per class
  double mean = 0.0;      // accuracy percentage over folds
  double std = 0.0;       // population standard deviation over folds
  std::vector<double> per_fold;
};

/// For each shot size s, and each fold: s examples per class drawn from the other folds,
/// evaluated on the fold. Throws when a class has fewer than s training candidates.
std::vector<CurvePoint> fewshot_eval(const std::vector<PairProbe>& probes,
                                     const std::vector<std::vector<std::size_t>>& folds,
                                     const std::vector<std::size_t>& shot_sizes,
                                     const ClassifierFactory& factory, std::uint64_t seed);

/// Normalized and trimmed form used for entity matching.
std::string entity_key(std::string_view s);

/// recall@k for each k (0 means the whole list). Throws on a length mismatch.
std::vector<double> recall_at_k(const std::vector<std::vector<std::string>>& ranked,
                                const std::vector<std::string>& gold,
                                const std::vector<std::size_t>& ks);

/// Logistic regression over hashed prompt-token features. Positive class is the synonym filler.
class HashedFillerClassifier : public PairClassifier {
 public:
  static constexpr std::size_t kBuckets = 512;

  HashedFillerClassifier(const std::vector<const PairProbe*>& shots, std::uint64_t seed,
                         int epochs = 50, double learning_rate = 0.5);
  double score(const PairProbe& probe, std::string_view filler) const override;
  /// Logit for "synonym".
  double logit(const PairProbe& probe) const;

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

ClassifierFactory hashed_filler_factory();

}  // namespace philokit::probing
