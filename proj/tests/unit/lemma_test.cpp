#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "philokit/error.hpp"
#include "philokit/forge.hpp"
#include "philokit/lemma.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace philokit;
using namespace philokit::lemma;

namespace {

conllu::Sentence sentence_of(const std::vector<std::string>& forms) {
  conllu::Sentence s;
  s.comments.push_back("# sent_id = t1");
  for (std::size_t i = 0; i < forms.size(); ++i) {
    conllu::Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = forms[i];
    t.lemma = forms[i];
    s.tokens.push_back(t);
  }
  return s;
}

// Random next-token tables for every prefix up to max_len over `symbols` output ids plus END.
struct TableScorer {
  std::map<std::vector<int>, std::vector<double>> table;

  TableScorer(nn::Rng& rng, std::size_t symbols, std::size_t max_len, bool coarse) {
    std::vector<std::vector<int>> frontier{{}};
    for (std::size_t len = 0; len <= max_len; ++len) {
      std::vector<std::vector<int>> next;
      for (const auto& p : frontier) {
        std::vector<double> logits(symbols + 1);
        for (auto& x : logits)
          x = coarse ? static_cast<double>(testsupport::pick(rng, 3)) : nn::uniform(rng, 3.0);
        if (testsupport::pick(rng, 6) == 0) logits[testsupport::pick(rng, symbols + 1)] = kNegInf;
        const double z = nn::log_sum_exp(logits);
        for (auto& x : logits) x -= z;
        table[p] = logits;
        for (std::size_t v = 1; v <= symbols; ++v) {
          auto q = p;
          q.push_back(static_cast<int>(v));
          next.push_back(q);
        }
      }
      frontier = std::move(next);
    }
  }

  NextTokenScorer scorer() const {
    return [this](std::span<const int> prefix) {
      return table.at(std::vector<int>(prefix.begin(), prefix.end()));
    };
  }
};

}  // namespace

TEST_CASE("contextual examples in both modes") {
  auto s = sentence_of({"ξυνοιδα", "ἐμαυτῷ", "οὐδὲν", "ἐπισταμένῳ"});
  s.tokens[1].lemma = "ἐμαυτοῦ";
  const auto plain = make_lemma_examples(s, false);
  REQUIRE(plain.size() == 4);
  CHECK(plain[1].source == "ξυνοιδα <t_tok_beg> ἐμαυτῷ <t_tok_end> οὐδὲν ἐπισταμένῳ");
  CHECK(plain[1].target == "ἐμαυτοῦ");
  CHECK(plain[1].sent_id == "t1");
  CHECK(plain[1].token_id == 2);
  const auto chars = make_lemma_examples(s, true);
  CHECK(chars[1].source ==
        "ξυνοιδα <t_tok_beg> ἐμαυτῷ <t_tok_sep> ἐ μ α υ τ ῷ <t_tok_end> οὐδὲν ἐπισταμένῳ");
  const auto single = make_lemma_examples(sentence_of({"λόγος"}), false);
  CHECK(single[0].source == "<t_tok_beg> λόγος <t_tok_end>");
}

TEST_CASE("forms and lemmata are NFC") {
  auto s = sentence_of({"λο\xCC\x81γος"});  // decomposed acute
  s.tokens[0].lemma = "λο\xCC\x81γος";
  const auto x = make_lemma_examples(s, true);
  CHECK(x[0].source == "<t_tok_beg> λόγος <t_tok_sep> λ ό γ ο ς <t_tok_end>");
  CHECK(x[0].target == "λόγος");
}

TEST_CASE("stripping delimiters restores the sentence") {
  nn::Rng rng(17);
  std::size_t cases = 0;
  for (int t = 0; t < 400; ++t) {
    const auto s = testsupport::random_sentence(rng, 1, 8);
    std::string original;
    for (const auto& tok : s.tokens) original += (original.empty() ? "" : " ") + forge::normalize(tok.form);
    for (bool mode : {false, true})
      for (const auto& x : make_lemma_examples(s, mode)) {
        REQUIRE(strip_lemma_source(x.source) == original);
        const auto parts = split_source(x.source);
        CHECK(parts.char_mode == mode);
        ++cases;
      }
  }
  CHECK(cases >= 1000);
}

TEST_CASE("malformed sources") {
  CHECK_THROWS_AS(split_source("a b c"), Error);
  CHECK_THROWS_AS(split_source("<t_tok_beg> <t_tok_end>"), Error);
  CHECK_THROWS_AS(split_source("<t_tok_end> x <t_tok_beg>"), Error);
  CHECK_THROWS_AS(split_source("<t_tok_beg> x <t_tok_beg> y <t_tok_end>"), Error);
  CHECK_THROWS_AS(split_source("<t_tok_beg> x y <t_tok_end>"), Error);
}

TEST_CASE("example files round trip") {
  nn::Rng rng(3);
  std::vector<LemmaExample> xs;
  for (int t = 0; t < 20; ++t)
    for (auto& x : make_lemma_examples(testsupport::random_sentence(rng, 1, 4), t % 2)) xs.push_back(x);
  CHECK(parse_examples(format_examples(xs)) == xs);
  const auto path = testsupport::temp_path("lemma") + ".jsonl";
  write_examples(xs, path);
  CHECK(read_examples(path) == xs);
  try {
    parse_examples("{\"source\": \"<t_tok_beg> a <t_tok_end>\", \"target\": \"a\"}\nnot json\n");
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(read_examples("/nonexistent/x.jsonl"), IoError);
}

TEST_CASE("lemma accuracy") {
  CHECK(lemma_accuracy({"a", "b"}, {"a", "b"}) == 100.0);
  std::vector<std::string> gold(10, "x"), pred(10, "x");
  pred[3] = "y";
  CHECK(lemma_accuracy(pred, gold) == 90.0);
  CHECK(lemma_accuracy({"λο\xCC\x81γος"}, {"λόγος"}) == 100.0);
  CHECK_THROWS_AS(lemma_accuracy({"a"}, {}), Error);
}

TEST_CASE("END at the first step gives one empty output") {
  const NextTokenScorer end_only = [](std::span<const int>) {
    return std::vector<double>{0.0, kNegInf, kNegInf};
  };
  const auto out = beam_search(end_only, 5, 10);
  REQUIRE(out.size() == 1);
  CHECK(out[0].tokens.empty());
  CHECK(out[0].log_prob == 0.0);
  CHECK(out[0].finished);
  CHECK_THROWS_AS(beam_search(end_only, 0, 3), Error);
  const NextTokenScorer nan = [](std::span<const int>) { return std::vector<double>{std::nan(""), 0.0}; };
  CHECK_THROWS_AS(beam_search(nan, 2, 3), Error);
}

TEST_CASE("width one is greedy") {
  nn::Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    TableScorer s(rng, 3, 4, false);
    const auto scorer = s.scorer();
    std::vector<int> prefix;
    double total = 0.0;
    while (true) {
      const auto lp = scorer(prefix);
      std::size_t best = 0;
      for (std::size_t v = 1; v < lp.size(); ++v)
        if (prefix.size() < 4 && lp[v] > lp[best]) best = v;
      total += lp[best];
      if (best == kEnd) break;
      prefix.push_back(static_cast<int>(best));
    }
    if (total == kNegInf) continue;
    const auto out = beam_search(scorer, 1, 4);
    REQUIRE(out.size() == 1);
    CHECK(out[0].tokens == prefix);
    CHECK(out[0].log_prob == total);
  }
}

TEST_CASE("wide beam equals exhaustive search including ties") {
  nn::Rng rng(43);
  for (int t = 0; t < 100; ++t) {
    TableScorer s(rng, 3, 3, t % 2 == 0);
    const auto all = testsupport::exhaustive_sequences(s.scorer(), 3, 3);
    const auto out = beam_search(s.scorer(), 40, 3);
    REQUIRE(out.size() == std::min<std::size_t>(40, all.size()));
    for (std::size_t k = 0; k < out.size(); ++k) {
      CHECK(out[k].tokens == all[k].tokens);
      CHECK(out[k].log_prob == all[k].log_prob);
    }
  }
}

TEST_CASE("beam output is sorted, distinct and scores never rise along a prefix") {
  nn::Rng rng(47);
  for (int t = 0; t < 100; ++t) {
    TableScorer s(rng, 3, 5, t % 3 == 0);
    const auto out = beam_search(s.scorer(), 1 + testsupport::pick(rng, 6), 5);
    std::set<std::vector<int>> seen;
    for (std::size_t k = 0; k < out.size(); ++k) {
      CHECK(seen.insert(out[k].tokens).second);
      if (k) CHECK_FALSE(ranks_before(out[k], out[k - 1]));
      double running = 0.0;
      std::vector<int> prefix;
      for (int tok : out[k].tokens) {
        const double next = running + s.scorer()(prefix)[static_cast<std::size_t>(tok)];
        CHECK(next <= running);
        running = next;
        prefix.push_back(tok);
      }
    }
  }
}

TEST_CASE("no width beats an exhaustive beam") {
  // Narrow-vs-wider comparisons are not monotone for pruned beams; only the unpruned one is a bound.
  nn::Rng rng(53);
  for (int t = 0; t < 300; ++t) {
    TableScorer s(rng, 3, 4, t % 2 == 0);
    const auto full = beam_search(s.scorer(), 121, 4);
    for (std::size_t w = 1; w < 8; ++w) {
      const auto a = beam_search(s.scorer(), w, 4);
      if (!a.empty()) CHECK(full[0].log_prob >= a[0].log_prob);
    }
  }
}

TEST_CASE("lemma scorer gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    nn::Rng rng(seed);
    std::vector<LemmaExample> train;
    for (int k = 0; k < 3; ++k) {
      auto s = testsupport::random_sentence(rng, 1, 3);
      for (auto& x : make_lemma_examples(s, false)) train.push_back(x);
    }
    ScorerConfig cfg;
    cfg.embed_dim = 1 + testsupport::pick(rng, 2);
    cfg.hidden = 1 + testsupport::pick(rng, 3);
    cfg.init_scale = 1.0;
    CharLemmaScorer m(train, cfg, rng);
    const auto& x = train[testsupport::pick(rng, train.size())];
    const auto in = m.encode(x.source);
    auto target = m.target_ids(x.target);
    if (target.size() > 3) target.resize(3);
    auto loss = [&] { return m.sequence_loss(in, target, 1.0, false); };
    nn::zero_grads(m.params());
    m.sequence_loss(in, target, 1.0);
    CHECK(testsupport::max_gradient_error(m.params(), loss) < 1e-5);
  }
}

TEST_CASE("scorer basics") {
  const auto data = testsupport::copy_lemma_dataset(1, 30, 5);
  nn::Rng rng(2);
  CharLemmaScorer m(data.train, ScorerConfig{}, rng);
  const auto in = m.encode(data.train[0].source);
  const auto lp = m.next_log_probs(in, {});
  CHECK(lp.size() == m.output_size());
  double z = 0.0;
  for (double v : lp) z += std::exp(v);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
  const auto ids = m.target_ids(data.train[0].target);
  CHECK(m.decode_ids(ids) == data.train[0].target);
  CHECK(m.target_ids("Q")[0] == -1);
  const auto back = CharLemmaScorer::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.decode(data.dev[0].source, 5, 20) == m.decode(data.dev[0].source, 5, 20));
  CHECK_THROWS_AS(CharLemmaScorer({}, ScorerConfig{}, rng), Error);
}

TEST_CASE("lemma training at zero step keeps accuracy") {
  const auto data = testsupport::copy_lemma_dataset(2, 40, 10);
  nn::Rng rng(3);
  CharLemmaScorer m(data.train, ScorerConfig{}, rng);
  const double before = decode_accuracy(m, data.dev, 1, 20);
  LemmaTrainOptions opts;
  opts.schedule.learning_rate = 0.0;
  opts.schedule.weight_decay = 0.0;
  opts.schedule.optimizer = nn::OptimizerKind::sgd;
  opts.schedule.epochs = 2;
  opts.max_len = 20;
  train_lemma_scorer(m, data.train, data.dev, opts);
  CHECK(decode_accuracy(m, data.dev, 1, 20) == before);
  CHECK_THROWS_AS(train_lemma_scorer(m, {}, data.dev, opts), Error);
}
