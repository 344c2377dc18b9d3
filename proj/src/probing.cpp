#include "philokit/probing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "philokit/error.hpp"
#include "philokit/forge.hpp"
#include "philokit/nn.hpp"

namespace philokit::probing {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> feature_keys(const PairProbe& p) {
  std::vector<std::string> keys;
  if (!p.word_a.empty() || !p.word_b.empty()) {
    keys.push_back("a=" + p.word_a);
    keys.push_back("b=" + p.word_b);
    keys.push_back("ab=" + p.word_a + "|" + p.word_b);
  }
  for (std::string_view tok : forge::wc_tokens(p.prompt)) keys.push_back("t=" + std::string(tok));
  return keys;
}

template <typename F>
void for_each_json_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  for (const auto& line : forge::split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

}  // namespace

std::string_view relation_name(Relation r) {
  return r == Relation::synonym ? "synonym" : "antonym";
}

Relation parse_relation(std::string_view name) {
  if (name == "synonym") return Relation::synonym;
  if (name == "antonym") return Relation::antonym;
  throw Error("unknown pair relation '" + std::string(name) + "'");
}

std::string_view gold_filler(Relation r) {
  return r == Relation::synonym ? kSynonymFiller : kAntonymFiller;
}

std::string render_pair_prompt(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) throw Error("pair prompt: words must be nonempty");
  return "τὸ " + std::string(a) + " καὶ τὸ " + std::string(b) + "· " + std::string(kMask) +
         " ὁμοῖά ἐστιν";
}

std::string render_pair_prompt(PairProbe& pair) {
  pair.prompt = render_pair_prompt(pair.word_a, pair.word_b);
  return pair.prompt;
}

std::optional<std::string> lint_pair(const PairProbe& pair) {
  if (pair.word_a == pair.word_b)
    return "pair (" + pair.word_a + ", " + pair.word_b + ") compares a word with itself";
  return std::nullopt;
}

std::vector<PairProbe> parse_pair_probes(std::string_view text) {
  std::vector<PairProbe> out;
  for_each_json_line(text, [&](const nlohmann::json& j) {
    PairProbe p;
    p.word_a = j.value("word_a", std::string());
    p.word_b = j.value("word_b", std::string());
    p.relation = parse_relation(j.at("relation").get<std::string>());
    p.prompt = j.contains("prompt") ? j.at("prompt").get<std::string>()
                                    : render_pair_prompt(p.word_a, p.word_b);
    std::size_t masks = 0;
    for (std::size_t pos = p.prompt.find(kMask); pos != std::string::npos;
         pos = p.prompt.find(kMask, pos + 1))
      ++masks;
    if (masks != 1) throw Error("prompt must contain exactly one " + std::string(kMask));
    if (j.contains("gold") && j.at("gold").get<std::string>() != gold_filler(p.relation))
      throw Error("gold filler does not match the relation");
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<RelationProbe> parse_relation_probes(std::string_view text) {
  std::vector<RelationProbe> out;
  for_each_json_line(text, [&](const nlohmann::json& j) {
    RelationProbe p{j.at("prompt").get<std::string>(), j.at("gold").get<std::string>(),
                    j.value("relation", std::string())};
    if (p.gold_entity.empty()) throw Error("gold entity is empty");
    out.push_back(std::move(p));
  });
  return out;
}

std::string format_pair_probes(const std::vector<PairProbe>& xs) {
  std::string out;
  for (const auto& p : xs) {
    out += nlohmann::json{{"prompt", p.prompt},
                          {"gold", gold_filler(p.relation)},
                          {"relation", relation_name(p.relation)},
                          {"word_a", p.word_a},
                          {"word_b", p.word_b}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::string>> parse_predictions(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  for_each_json_line(text, [&](const nlohmann::json& j) {
    out.push_back(j.at("predictions").get<std::vector<std::string>>());
  });
  return out;
}

std::vector<std::vector<std::size_t>> kfold_split(const std::vector<int>& classes, std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 2) throw Error("kfold_split: k must be at least 2");
  if (k > classes.size())
    throw Error("kfold_split: k = " + std::to_string(k) + " exceeds " +
                std::to_string(classes.size()) + " examples");
  std::vector<int> labels(classes.begin(), classes.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  nn::Rng rng(seed);
  std::vector<std::size_t> order;
  for (int c : labels) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == c) members.push_back(i);
    nn::shuffle(members, rng);
    order.insert(order.end(), members.begin(), members.end());
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < order.size(); ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

bool predict_correct(const PairClassifier& c, const PairProbe& probe) {
  const double gold = c.score(probe, gold_filler(probe.relation));
  const Relation other = probe.relation == Relation::synonym ? Relation::antonym : Relation::synonym;
  return gold > c.score(probe, gold_filler(other));
}

std::vector<CurvePoint> fewshot_eval(const std::vector<PairProbe>& probes,
                                     const std::vector<std::vector<std::size_t>>& folds,
                                     const std::vector<std::size_t>& shot_sizes,
                                     const ClassifierFactory& factory, std::uint64_t seed) {
  if (folds.size() < 2) throw Error("fewshot_eval: need at least two folds");
  std::vector<CurvePoint> curve;
  for (std::size_t s : shot_sizes) {
    if (s == 0) throw Error("fewshot_eval: shot size must be positive");
    CurvePoint pt;
    pt.shots = s;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const std::unordered_set<std::size_t> eval_ids(folds[f].begin(), folds[f].end());
      std::vector<std::size_t> pool[2];
      for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g == f) continue;
        for (std::size_t i : folds[g]) {
          if (i >= probes.size()) throw Error("fewshot_eval: fold index outside probe set");
          pool[probes[i].relation == Relation::synonym ? 0 : 1].push_back(i);
        }
      }
      nn::Rng rng(seed + 1000003ULL * f + 7919ULL * s);
      std::vector<const PairProbe*> shots;
      for (auto& cls : pool) {
        if (cls.size() < s)
          throw Error("fewshot_eval: " + std::to_string(s) + " shots per class requested but fold " +
                      std::to_string(f + 1) + " leaves only " + std::to_string(cls.size()));
        std::sort(cls.begin(), cls.end());
        nn::shuffle(cls, rng);
        for (std::size_t k = 0; k < s; ++k) {
          if (eval_ids.count(cls[k])) throw Error("fewshot_eval: training shot drawn from the evaluation fold");
          shots.push_back(&probes[cls[k]]);
        }
      }
      const auto model = factory(shots, seed + f);
      std::size_t ok = 0;
      for (std::size_t i : folds[f]) ok += predict_correct(*model, probes[i]);
      pt.per_fold.push_back(folds[f].empty() ? 0.0
                                             : 100.0 * static_cast<double>(ok) /
                                                   static_cast<double>(folds[f].size()));
    }
    double sum = 0.0;
    for (double a : pt.per_fold) sum += a;
    pt.mean = sum / static_cast<double>(pt.per_fold.size());
    double var = 0.0;
    for (double a : pt.per_fold) var += (a - pt.mean) * (a - pt.mean);
    pt.std = std::sqrt(var / static_cast<double>(pt.per_fold.size()));
    curve.push_back(std::move(pt));
  }
  return curve;
}

std::string entity_key(std::string_view s) {
  std::string n = forge::normalize(s);
  const auto first = n.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string::npos) return {};
  const auto last = n.find_last_not_of(" \t\r\n\f\v");
  return n.substr(first, last - first + 1);
}

std::vector<double> recall_at_k(const std::vector<std::vector<std::string>>& ranked,
                                const std::vector<std::string>& gold,
                                const std::vector<std::size_t>& ks) {
  if (ranked.size() != gold.size())
    throw Error("recall_at_k: " + std::to_string(ranked.size()) + " prediction lists for " +
                std::to_string(gold.size()) + " gold entities");
  // Rank of the first match per example; npos when absent.
  std::vector<std::size_t> rank(gold.size(), std::string::npos);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::string g = entity_key(gold[i]);
    for (std::size_t r = 0; r < ranked[i].size(); ++r)
      if (entity_key(ranked[i][r]) == g) {
        rank[i] = r;
        break;
      }
  }
  std::vector<double> out;
  for (std::size_t k : ks) {
    std::size_t hit = 0;
    for (std::size_t r : rank) hit += r != std::string::npos && (k == 0 || r < k);
    out.push_back(gold.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(gold.size()));
  }
  return out;
}

HashedFillerClassifier::HashedFillerClassifier(const std::vector<const PairProbe*>& shots,
                                               std::uint64_t seed, int epochs,
                                               double learning_rate)
    : w_(kBuckets, 0.0) {
  std::vector<std::vector<std::size_t>> feats;
  for (const PairProbe* p : shots) {
    std::vector<std::size_t> f;
    for (const auto& key : feature_keys(*p)) f.push_back(fnv1a(key) % kBuckets);
    feats.push_back(std::move(f));
  }
  std::vector<std::size_t> order(shots.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  nn::Rng rng(seed);
  for (int e = 0; e < epochs; ++e) {
    nn::shuffle(order, rng);
    for (std::size_t i : order) {
      double z = b_;
      for (std::size_t f : feats[i]) z += w_[f];
      const double y = shots[i]->relation == Relation::synonym ? 1.0 : 0.0;
      const double g = 1.0 / (1.0 + std::exp(-z)) - y;
      b_ -= learning_rate * g;
      for (std::size_t f : feats[i]) w_[f] -= learning_rate * g;
    }
  }
}

double HashedFillerClassifier::logit(const PairProbe& probe) const {
  double z = b_;
  for (const auto& key : feature_keys(probe)) z += w_[fnv1a(key) % kBuckets];
  return z;
}

double HashedFillerClassifier::score(const PairProbe& probe, std::string_view filler) const {
  const double z = logit(probe);
  // log sigma(z) for the synonym filler, log sigma(-z) for the antonym filler.
  auto log_sigmoid = [](double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); };
  if (filler == kSynonymFiller) return log_sigmoid(z);
  if (filler == kAntonymFiller) return log_sigmoid(-z);
  return -std::numeric_limits<double>::infinity();
}

ClassifierFactory hashed_filler_factory() {
  return [](const std::vector<const PairProbe*>& shots, std::uint64_t seed) {
    return std::make_unique<HashedFillerClassifier>(shots, seed);
  };
}

}  // namespace philokit::probing
