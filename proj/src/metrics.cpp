#include "philokit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <string_view>

#include "philokit/error.hpp"

namespace philokit::metrics {
namespace {

std::string_view universal(std::string_view rel) { return rel.substr(0, rel.find(':')); }

std::string sentence_name(const conllu::Sentence& s, std::size_t index) {
  if (auto id = s.sent_id()) return "'" + *id + "'";
  return "#" + std::to_string(index + 1);
}

}  // namespace

double percent(std::size_t correct, std::size_t total) {
  if (total == 0) return 0.0;
  return 100.0 * (2.0 * static_cast<double>(correct) / (2.0 * static_cast<double>(total)));
}

EvalReport evaluate(const conllu::Treebank& gold, const conllu::Treebank& pred) {
  std::size_t total = 0, upos = 0, xpos = 0, uas = 0, las = 0, lemma = 0;
  const std::size_t n = std::min(gold.sentences.size(), pred.sentences.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& g = gold.sentences[k];
    const auto& p = pred.sentences[k];
    if (g.size() != p.size())
      throw Error("segmentation mismatch in sentence " + sentence_name(g, k) + ": " +
                  std::to_string(g.size()) + " gold words, " + std::to_string(p.size()) +
                  " predicted");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& gt = g.tokens[i];
      const auto& pt = p.tokens[i];
      if (gt.form != pt.form)
        throw Error("segmentation mismatch in sentence " + sentence_name(g, k) + ": word " +
                    std::to_string(i + 1) + " is '" + gt.form + "' in gold, '" + pt.form +
                    "' in prediction");
      ++total;
      upos += gt.upos == pt.upos;
      xpos += gt.xpos == pt.xpos;
      lemma += gt.lemma == "_" || gt.lemma == pt.lemma;
      if (gt.head == pt.head) {
        ++uas;
        las += universal(gt.deprel) == universal(pt.deprel);
      }
    }
  }
  if (gold.sentences.size() != pred.sentences.size()) {
    const auto& longer = gold.sentences.size() > pred.sentences.size() ? gold : pred;
    throw Error("segmentation mismatch in sentence " + sentence_name(longer.sentences[n], n) +
                ": present only in " + (&longer == &gold ? "gold" : "prediction"));
  }
  return {percent(upos, total), percent(xpos, total), percent(uas, total),
          percent(las, total),  percent(lemma, total), total};
}

std::string format_report(const EvalReport& r) {
  std::string out = "metric\tvalue\n";
  auto row = [&](const char* name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s\t%.2f\n", name, v);
    out += buf;
  };
  row("UPOS", r.upos_acc);
  row("XPOS", r.xpos_acc);
  row("UAS", r.uas);
  row("LAS", r.las);
  row("Lemmas", r.lemma_acc);
  out += "Words\t" + std::to_string(r.token_count) + "\n";
  return out;
}

}  // namespace philokit::metrics
