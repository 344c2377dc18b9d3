#include <doctest.h>

#include <set>
#include <sstream>

#include "philokit/conllu.hpp"
#include "philokit/error.hpp"
#include "support/synthetic.hpp"

using namespace philokit::conllu;

namespace {

const char* const kTwoTokens =
    "# sent_id = a1\n"
    "# text = λέγει ἀνήρ\n"
    "1\tλέγει\tλέγω\tVERB\tv3spia---\tMood=Ind|Number=Sing\t0\troot\t_\t_\n"
    "2\tἀνήρ\tἀνήρ\tNOUN\tn-s---mn-\t_\t1\tnsubj\t_\tSpaceAfter=No\n"
    "\n";

// Reachability from every token, step by step: accepted iff all reach 0 and exactly one hangs on 0.
bool reaches_root_once(const std::vector<int>& heads) {
  std::size_t roots = 0;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] == 0) ++roots;
    std::set<int> seen;
    int cur = static_cast<int>(i) + 1;
    while (cur != 0) {
      if (!seen.insert(cur).second) return false;
      if (cur < 1 || cur > static_cast<int>(heads.size())) return false;
      cur = heads[static_cast<std::size_t>(cur) - 1];
    }
  }
  return roots == 1;
}

std::string line_error(const std::string& text) {
  try {
    parse(text);
  } catch (const philokit::ParseError& e) {
    return std::to_string(e.line());
  }
  return "none";
}

}  // namespace

TEST_CASE("minimal tree") {
  const auto tb = parse(std::string_view(kTwoTokens));
  REQUIRE(tb.sentences.size() == 1);
  const auto& s = tb.sentences[0];
  CHECK(s.size() == 2);
  CHECK(s.sent_id() == "a1");
  CHECK(s.text_comment() == "λέγει ἀνήρ");
  CHECK(s.tokens[0].feats.size() == 2);
  CHECK(s.tokens[1].raw_misc == "SpaceAfter=No");
  const auto check = check_tree(s);
  CHECK(check.is_tree);
  CHECK(check.roots == 1);
  CHECK(serialize(tb) == kTwoTokens);
}

TEST_CASE("heads (2, 0) attach one token to ROOT") {
  const auto tb = parse(std::string_view("1\tα\t_\t_\t_\t_\t2\tdep\t_\t_\n2\tβ\t_\t_\t_\t_\t0\troot\t_\t_\n\n"));
  CHECK(heads_of(tb.sentences[0]) == std::vector<int>{2, 0});
  CHECK(check_tree(tb.sentences[0]).roots == 1);
}

TEST_CASE("empty treebank serializes to nothing") {
  CHECK(serialize(Treebank{}).empty());
  CHECK(parse(std::string_view("")).sentences.empty());
}

TEST_CASE("comments keep their order and multiword lines their place") {
  const std::string text =
      "# newdoc\n# sent_id = x\n# note\n"
      "1-2\tκἀγώ\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tκαί\tκαί\tCCONJ\t_\t_\t2\tcc\t_\t_\n"
      "2\tἐγώ\tἐγώ\tPRON\t_\t_\t0\troot\t_\t_\n"
      "2.1\tε\t_\t_\t_\t_\t_\t_\t2:dep\t_\n"
      "\n";
  const auto tb = parse(text);
  const auto& s = tb.sentences[0];
  CHECK(s.size() == 2);
  CHECK(s.other_comments() == std::vector<std::string>{"# newdoc", "# note"});
  REQUIRE(s.opaque.size() == 2);
  CHECK(s.opaque[0].before_token == 0);
  CHECK(s.opaque[1].before_token == 2);
  CHECK(serialize(tb) == text);
}

TEST_CASE("malformed lines name their line number") {
  CHECK(line_error("# c\n1\tα\t_\t_\t_\t_\t0\troot\t_\n\n") == "2");
  CHECK(line_error("x\tα\t_\t_\t_\t_\t0\troot\t_\t_\n\n") == "1");
  CHECK(line_error("1\tα\t_\t_\t_\t_\tz\troot\t_\t_\n\n") == "1");
  CHECK(line_error("1\tα\t_\t_\t_\t_\t0\troot\t_\t_\n1\tβ\t_\t_\t_\t_\t1\tdep\t_\t_\n\n") == "2");
  CHECK(line_error("1\tα\t_\t_\t_\t_\t0\troot\t_\t_\n3\tβ\t_\t_\t_\t_\t1\tdep\t_\t_\n\n") == "2");
  CHECK(line_error("1\tα\t_\t_\t_\t_\t5\troot\t_\t_\n\n") == "1");
  CHECK(line_error("1\tα\t_\t_\t_\t_\t1\troot\t_\t_\n\n") == "1");
  CHECK(line_error("1\tα\t_\t_\t_\tBad\t0\troot\t_\t_\n\n") == "1");
}

TEST_CASE("tree validation is opt-in") {
  const std::string two_roots = "1\tα\t_\t_\t_\t_\t0\troot\t_\t_\n2\tβ\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
  CHECK_NOTHROW(parse(two_roots));
  CHECK_THROWS_AS(parse(two_roots, ParseOptions{true}), philokit::ParseError);
  CHECK(check_tree(parse(two_roots).sentences[0]).roots == 2);
}

TEST_CASE("tree check agrees with brute-force reachability") {
  philokit::nn::Rng rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + testsupport::pick(rng, 12);
    std::vector<int> heads(n);
    if (trial % 2 == 0) {
      heads = testsupport::random_tree(rng, n, trial % 4 == 0);
    } else {
      for (auto& h : heads) h = static_cast<int>(testsupport::pick(rng, n + 1));
    }
    const auto c = check_tree(heads);
    CHECK((c.is_tree && c.roots == 1) == reaches_root_once(heads));
  }
}

TEST_CASE("round trip over generated treebanks") {
  philokit::nn::Rng rng(2024);
  std::size_t sentences = 0;
  for (int file = 0; file < 100; ++file) {
    const std::string text = testsupport::random_conllu(rng, 12);
    const auto tb = parse(text);
    sentences += tb.sentences.size();
    REQUIRE(serialize(tb) == text);
    std::istringstream in(text);
    CHECK(serialize(parse(in)) == text);
  }
  CHECK(sentences >= 1000);
}

TEST_CASE("tagset summary") {
  const auto tb = parse(std::string_view(kTwoTokens));
  const auto s = tb.summary();
  CHECK(s.sentences == 1);
  CHECK(s.tokens == 2);
  CHECK(s.upos == 2);
  CHECK(s.xpos == 2);
  CHECK(s.deprels == 2);
  CHECK(s.lemmata == 2);
  CHECK(s.forms == 2);
}

TEST_CASE("Perseus positional tags") {
  const auto empty = split_xpos_perseus("---------");
  for (std::size_t i = 0; i < kMorphSlots; ++i) CHECK(empty.empty(static_cast<MorphSlot>(i)));
  const auto verb = split_xpos_perseus("v3saia---");
  CHECK(verb[MorphSlot::word_class] == 'v');
  CHECK(verb[MorphSlot::person] == '3');
  CHECK(verb[MorphSlot::number] == 's');
  CHECK(verb[MorphSlot::tense] == 'a');
  CHECK(verb[MorphSlot::mood] == 'i');
  CHECK(verb[MorphSlot::voice] == 'a');
  CHECK(verb.empty(MorphSlot::gender));
  CHECK(verb.empty(MorphSlot::grammatical_case));
  CHECK(verb.empty(MorphSlot::degree));
  CHECK(verb.join() == "v3saia---");
  CHECK_THROWS(split_xpos_perseus("v3sai"));
  CHECK_THROWS(split_xpos_perseus("v3saia----"));
}
