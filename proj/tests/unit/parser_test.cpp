#include <doctest.h>

#include <chrono>
#include <cmath>

#include "philokit/error.hpp"
#include "philokit/parser.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace philokit;
using namespace philokit::parser;

namespace {

WeightedDigraph random_graph(nn::Rng& rng, std::size_t n, bool integers) {
  WeightedDigraph g(n);
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 1; i <= n; ++i)
      if (i != j) g.set(j, i, integers ? static_cast<double>(testsupport::pick(rng, 4)) : nn::uniform(rng, 5.0));
  return g;
}

tagging::LabelSet labels(std::size_t k) {
  std::vector<std::string> ls;
  for (std::size_t i = 0; i < k; ++i) ls.push_back("r" + std::to_string(i));
  return tagging::LabelSet(ls);
}

encoder::EmbeddingSequence random_emb(nn::Rng& rng, std::size_t n, std::size_t d) {
  encoder::EmbeddingSequence e{nn::Matrix(n + 1, d)};
  nn::init_uniform(e.vectors, rng, 1.0);
  return e;
}

// Independent reachability check for a head vector with head[0] unused.
bool reaches_root(const std::vector<int>& head) {
  const std::size_t n = head.size() - 1;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t cur = i, steps = 0;
    while (cur != 0 && steps++ <= n) cur = static_cast<std::size_t>(head[cur]);
    if (cur != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("digraph masks self edges and ROOT as dependent") {
  WeightedDigraph g(3);
  CHECK(g.score(1, 1) == kMasked);
  CHECK(g.score(2, 0) == kMasked);
  CHECK(g.score(0, 2) == 0.0);
  CHECK_THROWS_AS(g.set(2, 2, 1.0), Error);
  CHECK_THROWS_AS(g.set(1, 0, 1.0), Error);
}

TEST_CASE("head distribution") {
  WeightedDigraph g(3);
  for (double p : head_distribution(g, 2)) CHECK((p == 0.0 || std::abs(p - 1.0 / 3.0) < 1e-15));
  CHECK(head_distribution(g, 2)[2] == 0.0);
  g.set(3, 1, 100.0);
  CHECK(head_distribution(g, 1)[3] > 1.0 - 1e-9);
  WeightedDigraph h(3);
  h.set(0, 1, 1), h.set(2, 1, 2), h.set(3, 1, -1);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(-1.0);
  const auto p = head_distribution(h, 1);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-14));
  CHECK(p[3] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
}

TEST_CASE("head distribution is invariant to a constant shift of a column") {
  nn::Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + testsupport::pick(rng, 6);
    auto g = random_graph(rng, n, false);
    auto shifted = g;
    const double c = nn::uniform(rng, 50.0);
    for (std::size_t j = 0; j <= n; ++j)
      for (std::size_t i = 1; i <= n; ++i)
        if (i != j) shifted.set(j, i, g.score(j, i) + c);
    for (std::size_t i = 1; i <= n; ++i) {
      const auto a = head_distribution(g, i), b = head_distribution(shifted, i);
      for (std::size_t j = 0; j <= n; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
    }
    CHECK(chu_liu_edmonds(g) == chu_liu_edmonds(shifted));
  }
}

TEST_CASE("greedy heads") {
  const auto one = greedy_heads(WeightedDigraph(1));
  CHECK(one.head[1] == 0);
  CHECK(one.is_tree);
  WeightedDigraph cyc(2);
  cyc.set(2, 1, 5), cyc.set(1, 2, 5), cyc.set(0, 1, 1), cyc.set(0, 2, 3);
  CHECK_FALSE(greedy_heads(cyc).is_tree);
  // Swapping 1 <- 2 for 1 <- ROOT costs 4, swapping 2 <- 1 costs 2.
  const auto best = chu_liu_edmonds(cyc);
  CHECK(best[1] == 2);
  CHECK(best[2] == 0);
  CHECK(tree_score(cyc, best) == 8.0);
  nn::Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const auto g = random_graph(rng, 6, t % 2);
    const auto r = greedy_heads(g);
    CHECK(r.is_tree == reaches_root(r.head));
  }
}

TEST_CASE("a greedy tree is returned unchanged") {
  nn::Rng rng(21);
  int seen = 0;
  for (int t = 0; t < 300; ++t) {
    const auto g = random_graph(rng, 1 + testsupport::pick(rng, 5), false);
    const auto greedy = greedy_heads(g);
    if (!greedy.is_tree) continue;
    ++seen;
    CHECK(chu_liu_edmonds(g) == greedy.head);
  }
  CHECK(seen > 10);
}

TEST_CASE("CLE matches exhaustive search") {
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    nn::Rng rng(seed);
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto g = random_graph(rng, n, seed % 4 == 0);
      for (bool single : {false, true}) {
        const auto tree = chu_liu_edmonds(g, DecodeOptions{single});
        REQUIRE(is_arborescence(tree));
        REQUIRE(reaches_root(tree));
        if (single) {
          int roots = 0;
          for (std::size_t i = 1; i <= n; ++i) roots += tree[i] == 0;
          CHECK(roots == 1);
        }
        CHECK(tree_score(g, tree) == testsupport::brute_force_best_tree(g, single));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 10.0);
}

TEST_CASE("CLE with masked edges and errors") {
  WeightedDigraph g(3);
  for (std::size_t j = 0; j <= 3; ++j) g.set_raw(j, 2, kMasked);
  CHECK_THROWS_AS(chu_liu_edmonds(g), Error);
  nn::Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + testsupport::pick(rng, 4);
    auto h = random_graph(rng, n, false);
    for (std::size_t j = 1; j <= n; ++j)
      for (std::size_t i = 1; i <= n; ++i)
        if (i != j && testsupport::pick(rng, 3) == 0) h.set_raw(j, i, kMasked);
    const double best = testsupport::brute_force_best_tree(h, false);
    CHECK(tree_score(h, chu_liu_edmonds(h)) == best);
  }
}

TEST_CASE("edge scores follow the tanh form") {
  nn::Rng rng(5);
  ScorerConfig cfg;
  cfg.attention = 2;
  EdgeScorerParams p(2, labels(2), cfg, rng);
  const auto emb = random_emb(rng, 2, 2);
  const auto g = score_edges(p, emb);
  for (std::size_t j = 0; j <= 2; ++j)
    for (std::size_t i = 1; i <= 2; ++i) {
      if (i == j) continue;
      double s = 0;
      for (std::size_t a = 0; a < 2; ++a) {
        double z = 0;
        for (std::size_t c = 0; c < 2; ++c) z += p.u.value(a, c) * emb.vectors(j, c) + p.w.value(a, c) * emb.vectors(i, c);
        s += p.v.value(0, a) * std::tanh(z);
      }
      CHECK(g.score(j, i) == doctest::Approx(s).epsilon(1e-14));
    }
  p.v.value.fill(0.0);
  CHECK(score_edges(p, emb).score(0, 1) == 0.0);
  nn::init_uniform(p.v.value, rng, 1.0);
  p.u.value.fill(0.0);
  p.w.value.fill(0.0);
  CHECK(score_edges(p, emb).score(2, 1) == 0.0);
  CHECK_THROWS_AS(score_edges(p, random_emb(rng, 2, 3)), Error);
}

TEST_CASE("label distribution is a rectifier network over [e_i; e_j]") {
  nn::Rng rng(6);
  ScorerConfig cfg;
  cfg.label_hidden = 3;
  cfg.init_scale = 1.0;
  EdgeScorerParams p(2, labels(2), cfg, rng);
  const auto emb = random_emb(rng, 2, 2);
  const auto dist = label_distribution(p, emb, 2, 1);
  double x[4] = {emb.vectors(1, 0), emb.vectors(1, 1), emb.vectors(2, 0), emb.vectors(2, 1)};
  double hidden[3];
  for (int k = 0; k < 3; ++k) {
    double z = p.label_b1.value(0, k);
    for (int c = 0; c < 4; ++c) z += p.label_w1.value(k, c) * x[c];
    hidden[k] = std::max(0.0, z);
  }
  double logit[2];
  for (int l = 0; l < 2; ++l) {
    logit[l] = p.label_b2.value(0, l);
    for (int k = 0; k < 3; ++k) logit[l] += p.label_w2.value(l, k) * hidden[k];
  }
  const double p0 = 1.0 / (1.0 + std::exp(logit[1] - logit[0]));
  CHECK(dist[0] == doctest::Approx(p0).epsilon(1e-14));
  for (auto* q : p.params()) q->value.fill(0.0);
  CHECK(label_distribution(p, emb, 0, 2)[1] == 0.5);
  EdgeScorerParams single(2, labels(1), cfg, rng);
  CHECK(label_distribution(single, emb, 1, 2)[0] == 1.0);
}

TEST_CASE("edge scorer and labeler gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    nn::Rng rng(seed);
    const std::size_t n = 1 + testsupport::pick(rng, 3);
    const std::size_t d = 1 + testsupport::pick(rng, 3);
    ScorerConfig cfg;
    cfg.attention = 1 + testsupport::pick(rng, 3);
    cfg.label_hidden = 1 + testsupport::pick(rng, 3);
    cfg.init_scale = 1.0;
    const std::size_t nl = 1 + testsupport::pick(rng, 3);
    EdgeScorerParams p(d, labels(nl), cfg, rng);
    auto emb = random_emb(rng, n, d);
    auto heads = testsupport::random_tree(rng, n);
    std::vector<int> gold_head{-1}, gold_label{-1};
    for (std::size_t i = 0; i < n; ++i) {
      gold_head.push_back(heads[i]);
      gold_label.push_back(static_cast<int>(testsupport::pick(rng, nl)));
    }
    auto loss = [&] { return parse_loss(p, emb, gold_head, gold_label, 1.0, false).loss; };
    nn::zero_grads(p.params());
    const auto r = parse_loss(p, emb, gold_head, gold_label, 1.0);
    CHECK(testsupport::max_gradient_error(p.params(), loss) < 1e-5);
    CHECK(testsupport::max_gradient_error(emb.vectors, r.d_emb, loss) < 1e-5);
  }
}

TEST_CASE("parse loss is head and label negative log-likelihood") {
  nn::Rng rng(12);
  EdgeScorerParams p(3, labels(2), ScorerConfig{}, rng);
  const auto emb = random_emb(rng, 2, 3);
  const std::vector<int> head{-1, 0, 1}, lab{-1, 1, 0};
  const auto g = score_edges(p, emb);
  double expected = 0.0;
  for (std::size_t i = 1; i <= 2; ++i) {
    expected -= std::log(head_distribution(g, i)[static_cast<std::size_t>(head[i])]);
    expected -= std::log(label_distribution(p, emb, static_cast<std::size_t>(head[i]), i)[static_cast<std::size_t>(lab[i])]);
  }
  CHECK(parse_loss(p, emb, head, lab, 1.0, false).loss == doctest::Approx(expected).epsilon(1e-13));
  CHECK_THROWS_AS(parse_loss(p, emb, {-1, 1, 1}, lab, 1.0, false), Error);
}

TEST_CASE("training validates gold trees and keeps parameters at zero step") {
  auto corpus = testsupport::head_initial_corpus(3, 20, 5);
  encoder::EncoderConfig enc;
  enc.context_radius = 0;
  auto model = make_parser(corpus.train, 300, enc, ScorerConfig{}, 4);
  const auto before = model.to_json();
  ParserTrainOptions opts;
  opts.schedule.learning_rate = 0.0;
  opts.schedule.weight_decay = 0.0;
  opts.schedule.optimizer = nn::OptimizerKind::sgd;
  opts.schedule.epochs = 2;
  train_parser(model, corpus.train, corpus.dev, opts);
  CHECK(model.to_json() == before);

  auto broken = corpus.train;
  broken[3].comments.push_back("# sent_id = bad-one");
  broken[3].tokens[0].head = 2;
  try {
    train_parser(model, broken, corpus.dev, opts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad-one") != std::string::npos);
  }
}

TEST_CASE("annotated sentences carry valid trees and the model round trips") {
  auto corpus = testsupport::head_initial_corpus(7, 15, 5);
  auto model = make_parser(corpus.train, 300, {}, ScorerConfig{}, 2);
  const auto back = Parser::from_json(nlohmann::json::parse(model.to_json().dump()));
  for (const auto& s : corpus.dev) {
    const auto a = model.annotate(s);
    CHECK(conllu::check_tree(a).is_tree);
    CHECK(back.annotate(s) == a);
  }
  const auto perfect = attachment_scores(model, corpus.dev);
  CHECK(perfect.las <= perfect.uas);
}
