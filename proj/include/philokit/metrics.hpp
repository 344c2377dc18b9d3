#pragma once

// UD-style scores under identical gold tokenization.

#include <cstddef>
#include <string>

#include "philokit/conllu.hpp"

namespace philokit::metrics {

struct EvalReport {
  double upos_acc = 0.0;
  double xpos_acc = 0.0;
  double uas = 0.0;
  double las = 0.0;
  double lemma_acc = 0.0;
  std::size_t token_count = 0;
};

/// Scores over every syntactic word. DEPREL is compared on its universal part (before ':').
/// A lemma counts as right wherever the gold lemma is "_". Throws Error naming the first
/// sentence whose segmentation or forms differ.
EvalReport evaluate(const conllu::Treebank& gold, const conllu::Treebank& pred);

/// "metric\tvalue" lines, values to two decimals.
std::string format_report(const EvalReport& r);

/// Percentage as the reference scorer computes it: 100 * 2c / (2t).
double percent(std::size_t correct, std::size_t total);

}  // namespace philokit::metrics
