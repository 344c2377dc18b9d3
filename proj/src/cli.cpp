#include "philokit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "philokit/config.hpp"
#include "philokit/conllu.hpp"
#include "philokit/encoder.hpp"
#include "philokit/error.hpp"
#include "philokit/forge.hpp"
#include "philokit/io.hpp"
#include "philokit/lemma.hpp"
#include "philokit/metrics.hpp"
#include "philokit/parser.hpp"
#include "philokit/probing.hpp"
#include "philokit/subword.hpp"
#include "philokit/tagging.hpp"

namespace philokit::cli {
namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct ScheduleOpts {
  int epochs = 50;
  double lr = 1e-4;
  int batch = 32;
  int patience = 5;
  std::string optimizer = "adam";
  double weight_decay = 1e-5;
};

void add_schedule(CLI::App* s, ScheduleOpts& o) {
  s->add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  s->add_option("--lr", o.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  s->add_option("--batch-size", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  s->add_option("--patience", o.patience, "Early-stopping patience in epochs")
      ->check(CLI::PositiveNumber);
  s->add_option("--optimizer", o.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  s->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay")
      ->check(CLI::NonNegativeNumber);
}

nn::Schedule make_schedule(const ScheduleOpts& o, std::uint64_t seed) {
  nn::Schedule s;
  s.epochs = o.epochs;
  s.learning_rate = o.lr;
  s.batch_size = o.batch;
  s.patience = o.patience;
  s.optimizer = o.optimizer == "sgd" ? nn::OptimizerKind::sgd : nn::OptimizerKind::adam;
  s.weight_decay = o.weight_decay;
  s.seed = seed;
  return s;
}

struct SeedOpts {
  std::uint64_t seed = 42;
  std::string seeds;

  std::vector<std::uint64_t> list() const {
    if (seeds.empty()) return {seed};
    std::vector<std::uint64_t> out;
    for (std::size_t v : config::parse_size_list(seeds)) out.push_back(v);
    return out;
  }
};

void add_seeds(CLI::App* s, SeedOpts& o) {
  s->add_option("--seed", o.seed, "Seed for all randomness");
  s->add_option("--seeds", o.seeds, "Comma-separated seeds; trains once per seed and reports mean and std");
}

std::string strip_slashes(std::string p) {
  while (p.size() > 1 && p.back() == '/') p.pop_back();
  return p;
}

/// path with ".seed<N>" before its extension.
std::string with_seed(const std::string& path, std::uint64_t seed) {
  const fs::path p(path);
  fs::path out = p.parent_path() / (p.stem().string() + ".seed" + std::to_string(seed) + p.extension().string());
  return out.string();
}

/// Every option of the subcommand with its effective value.
config::KeyValues resolved_options(const CLI::App* sub) {
  config::KeyValues kv;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        value = res.empty() || res.back() == "true" || res.back() == "1" || res.back().empty()
                    ? "true" : res.back();
      } else if (opt->get_items_expected_max() > 1) {
        for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      } else {
        value = res.empty() ? "" : res.back();
      }
    } else {
      value = opt->get_default_str();
      if (opt->get_type_size() == 0 && value.empty()) value = "false";
    }
    kv.emplace_back(name, value);
  }
  return kv;
}

void write_resolved(const CLI::App* sub, const std::string& primary_output) {
  config::KeyValues kv{{"command", sub->get_parent() && sub->get_parent()->get_parent()
                                       ? sub->get_parent()->get_name() + " " + sub->get_name()
                                       : sub->get_name()}};
  for (auto& e : resolved_options(sub)) kv.push_back(std::move(e));
  io::write_text(strip_slashes(primary_output) + ".config", config::format_key_values(kv));
}

void print_history(std::ostream& out, const nn::TrainHistory& h, std::uint64_t seed) {
  out << "seed\tepoch\tloss\tdev\tdev2\n";
  for (const auto& e : h.epochs)
    out << seed << '\t' << e.epoch << '\t' << fixed(e.loss, 6) << '\t' << fixed(e.metric) << '\t'
        << fixed(e.metric2) << '\n';
  out << "best\t" << seed << '\t' << h.best_epoch << '\t' << fixed(h.best_metric) << '\n';
}

void print_seed_summary(std::ostream& out, const std::vector<double>& metrics) {
  if (metrics.size() < 2) return;
  double mean = 0.0;
  for (double m : metrics) mean += m;
  mean /= static_cast<double>(metrics.size());
  double var = 0.0;
  for (double m : metrics) var += (m - mean) * (m - mean);
  out << "mean\t" << fixed(mean) << "\tstd\t" << fixed(std::sqrt(var / static_cast<double>(metrics.size())))
      << '\n';
}

std::vector<conllu::Sentence> read_sentences(const std::string& path) {
  return conllu::read_file(path).sentences;
}

std::unique_ptr<encoder::PrecomputedEmbeddings> maybe_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<encoder::PrecomputedEmbeddings>(encoder::PrecomputedEmbeddings::load_file(path));
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("not a model file: ") + e.what());
  }
}

void save_json(const std::string& path, const nlohmann::json& j) { io::write_text(path, j.dump() + "\n"); }

struct EncoderOpts {
  std::size_t bpe_vocab = 1000;
  std::size_t embed_dim = 16;
  std::size_t radius = 1;
  double position_norm = 32.0;
  double init_scale = 0.1;
};

void add_encoder(CLI::App* s, EncoderOpts& o) {
  s->add_option("--bpe-vocab", o.bpe_vocab, "BPE inventory size learned on training forms");
  s->add_option("--embed-dim", o.embed_dim, "Embedding width")->check(CLI::PositiveNumber);
  s->add_option("--context-radius", o.radius, "Subword window radius of the encoder");
  s->add_option("--position-norm", o.position_norm, "Position channel divisor")->check(CLI::PositiveNumber);
  s->add_option("--init-scale", o.init_scale, "Uniform initialization range");
}

encoder::EncoderConfig encoder_config(const EncoderOpts& o, const encoder::PrecomputedEmbeddings* pre,
                                      const std::vector<conllu::Sentence>& train) {
  encoder::EncoderConfig c;
  c.embed_dim = o.embed_dim;
  c.context_radius = o.radius;
  c.position_norm = o.position_norm;
  c.init_scale = o.init_scale;
  if (pre && pre->size() > 0 && !train.empty()) c.embed_dim = pre->embed(0, train[0]).dim();
  return c;
}

std::vector<std::string> parse_ks(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Moves "--config FILE" out of the arguments and splices its entries in right after the
/// subcommand names, so explicit flags still win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::size_t pos = 0;
  while (pos < args.size() && args[pos].rfind("-", 0) == 0) ++pos;
  if (pos < args.size()) {
    const bool nested = args[pos] == "probe";
    ++pos;
    if (nested && pos < args.size() && args[pos].rfind("-", 0) != 0) ++pos;
  }
  const auto extra = config::to_arguments(config::load_key_values(path));
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), extra.begin(), extra.end());
  return args;
}

void add_config_option(CLI::App* s) {
  s->add_option("--config", "Plain-text key=value file with defaults for these options");
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"philokit: Ancient Greek NLP toolkit"};
  app.name("philokit");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  const auto all = CLI::MultiOptionPolicy::TakeAll;

  // curate
  struct {
    std::string in, out, vocab, stats, drop_log;
    double coverage = 0.90;
    std::size_t dup_chars = 300;
    int stopword_min = 10;
    bool detect = false, exclude_punct = false;
  } cu;
  auto* curate = app.add_subcommand("curate", "Filter and deduplicate a directory of OCR text");
  add_config_option(curate);
  curate->add_option("--in", cu.in, "Input directory of UTF-8 text files")->required();
  curate->add_option("--out", cu.out, "Output directory mirroring the input layout")->required();
  curate->add_option("--vocab", cu.vocab, "Born-digital vocabulary, one token per line")->required();
  curate->add_option("--coverage", cu.coverage, "Keep lines whose in-vocab share exceeds this");
  curate->add_option("--dup-chars", cu.dup_chars, "Remove repeats longer than this many characters");
  curate->add_option("--stopword-min", cu.stopword_min, "Each stopword must occur more often than this");
  curate->add_option("--stats", cu.stats, "Per-source statistics TSV (stdout when absent)");
  curate->add_option("--drop-log", cu.drop_log, "TSV of dropped lines");
  curate->add_flag("--detect-greek", cu.detect, "Drop documents that fail the stopword test");
  curate->add_flag("--exclude-punct", cu.exclude_punct, "Leave punctuation-only tokens out of coverage");

  // stats
  struct {
    std::vector<std::string> treebanks, texts;
  } st;
  auto* stats = app.add_subcommand("stats", "Treebank tag inventories or wc-compatible token counts");
  add_config_option(stats);
  stats->add_option("--treebank", st.treebanks, "CoNLL-U files")->multi_option_policy(all);
  stats->add_option("--text", st.texts, "Text files")->multi_option_policy(all);

  // bpe-learn
  struct {
    std::vector<std::string> in;
    std::string out;
    std::size_t vocab_size = 1000;
  } bl;
  auto* bpe = app.add_subcommand("bpe-learn", "Learn BPE merges from CoNLL-U forms or text");
  add_config_option(bpe);
  bpe->add_option("--in", bl.in, "Training files (.conllu uses forms)")->required()->multi_option_policy(all);
  bpe->add_option("--out", bl.out, "Model file")->required();
  bpe->add_option("--vocab-size", bl.vocab_size, "Inventory size, reserved symbols excluded");

  // train-tagger
  struct {
    std::string train, dev, out, task = "upos", train_emb, dev_emb;
    std::size_t hidden = 0;
  } tt;
  EncoderOpts tt_enc;
  ScheduleOpts tt_sched;
  SeedOpts tt_seed;
  auto* train_tagger = app.add_subcommand("train-tagger", "Train a UPoS or XPoS tagger");
  add_config_option(train_tagger);
  train_tagger->add_option("--train", tt.train, "Training CoNLL-U")->required();
  train_tagger->add_option("--dev", tt.dev, "Dev CoNLL-U")->required();
  train_tagger->add_option("--out", tt.out, "Model file")->required();
  train_tagger->add_option("--task", tt.task, "upos, xpos-perseus or xpos-proiel")
      ->check(CLI::IsMember({"upos", "xpos-perseus", "xpos-proiel"}));
  train_tagger->add_option("--hidden", tt.hidden, "Hidden width of each head (0: linear)");
  train_tagger->add_option("--train-emb", tt.train_emb, "Precomputed training embeddings");
  train_tagger->add_option("--dev-emb", tt.dev_emb, "Precomputed dev embeddings");
  add_encoder(train_tagger, tt_enc);
  add_schedule(train_tagger, tt_sched);
  add_seeds(train_tagger, tt_seed);

  // tag
  struct {
    std::string model, in, out, emb;
  } tg;
  auto* tag = app.add_subcommand("tag", "Tag a CoNLL-U file");
  add_config_option(tag);
  tag->add_option("--model", tg.model, "Tagger model")->required();
  tag->add_option("--in", tg.in, "Input CoNLL-U")->required();
  tag->add_option("--out", tg.out, "Output CoNLL-U")->required();
  tag->add_option("--emb", tg.emb, "Precomputed embeddings for the input");

  // train-parser
  struct {
    std::string train, dev, out, train_emb, dev_emb;
    std::size_t attention = 16, label_hidden = 0;
    bool single_root = false;
  } tp;
  EncoderOpts tp_enc;
  ScheduleOpts tp_sched;
  SeedOpts tp_seed;
  auto* train_parser = app.add_subcommand("train-parser", "Train a dependency parser");
  add_config_option(train_parser);
  train_parser->add_option("--train", tp.train, "Training CoNLL-U")->required();
  train_parser->add_option("--dev", tp.dev, "Dev CoNLL-U")->required();
  train_parser->add_option("--out", tp.out, "Model file")->required();
  train_parser->add_option("--attention", tp.attention, "Attention width of the edge scorer")
      ->check(CLI::PositiveNumber);
  train_parser->add_option("--label-hidden", tp.label_hidden, "Hidden width of the label network (0: embedding width)");
  train_parser->add_flag("--single-root", tp.single_root, "Decode trees with exactly one ROOT dependent");
  train_parser->add_option("--train-emb", tp.train_emb, "Precomputed training embeddings");
  train_parser->add_option("--dev-emb", tp.dev_emb, "Precomputed dev embeddings");
  add_encoder(train_parser, tp_enc);
  add_schedule(train_parser, tp_sched);
  add_seeds(train_parser, tp_seed);

  // parse
  struct {
    std::string model, in, out, emb;
    bool single_root = false;
  } pa;
  auto* parse = app.add_subcommand("parse", "Parse a CoNLL-U file");
  add_config_option(parse);
  parse->add_option("--model", pa.model, "Parser model")->required();
  parse->add_option("--in", pa.in, "Input CoNLL-U")->required();
  parse->add_option("--out", pa.out, "Output CoNLL-U")->required();
  parse->add_option("--emb", pa.emb, "Precomputed embeddings for the input");
  parse->add_flag("--single-root", pa.single_root, "Force exactly one ROOT dependent");

  // lemma-format
  struct {
    std::string in, out;
    bool chars = false;
  } lf;
  auto* lemma_format = app.add_subcommand("lemma-format", "Build lemmatization examples from CoNLL-U");
  add_config_option(lemma_format);
  lemma_format->add_option("--in", lf.in, "Input CoNLL-U")->required();
  lemma_format->add_option("--out", lf.out, "Output JSON lines")->required();
  lemma_format->add_flag("--chars", lf.chars, "Append the target's characters after <t_tok_sep>");

  // lemma-train
  struct {
    std::string train, dev, out;
    std::size_t embed_dim = 16, hidden = 64, dev_beam = 1, max_len = 50;
    double init_scale = 0.1;
  } lt;
  ScheduleOpts lt_sched;
  SeedOpts lt_seed;
  auto* lemma_train = app.add_subcommand("lemma-train", "Train the character-level lemma scorer");
  add_config_option(lemma_train);
  lemma_train->add_option("--train", lt.train, "Training examples (JSON lines)")->required();
  lemma_train->add_option("--dev", lt.dev, "Dev examples (JSON lines)")->required();
  lemma_train->add_option("--out", lt.out, "Model file")->required();
  lemma_train->add_option("--embed-dim", lt.embed_dim, "Embedding width")->check(CLI::PositiveNumber);
  lemma_train->add_option("--hidden", lt.hidden, "Hidden width")->check(CLI::PositiveNumber);
  lemma_train->add_option("--init-scale", lt.init_scale, "Uniform initialization range");
  lemma_train->add_option("--dev-beam", lt.dev_beam, "Beam width for dev decoding")->check(CLI::PositiveNumber);
  lemma_train->add_option("--max-len", lt.max_len, "Maximum output length");
  add_schedule(lemma_train, lt_sched);
  add_seeds(lemma_train, lt_seed);

  // lemma-decode
  struct {
    std::string model, in, out;
    std::size_t beam = 20, max_len = 50;
  } ld;
  auto* lemma_decode = app.add_subcommand("lemma-decode", "Decode lemmata by beam search");
  add_config_option(lemma_decode);
  lemma_decode->add_option("--model", ld.model, "Lemma model")->required();
  lemma_decode->add_option("--in", ld.in, "Examples (JSON lines)")->required();
  lemma_decode->add_option("--out", ld.out, "Ranked predictions (JSON lines)")->required();
  lemma_decode->add_option("--beam", ld.beam, "Beam width")->check(CLI::PositiveNumber);
  lemma_decode->add_option("--max-len", ld.max_len, "Maximum output length");

  // eval
  struct {
    std::string gold, pred, out;
  } ev;
  auto* eval = app.add_subcommand("eval", "Score predicted CoNLL-U against gold");
  add_config_option(eval);
  eval->add_option("--gold", ev.gold, "Gold CoNLL-U")->required();
  eval->add_option("--pred", ev.pred, "Predicted CoNLL-U")->required();
  eval->add_option("--out", ev.out, "Also write the report here");

  // probe
  auto* probe = app.add_subcommand("probe", "Knowledge probes");
  probe->require_subcommand(1);
  struct {
    std::string in, out, shots = "10,20,30,40,50";
    std::size_t k = 10;
    std::uint64_t seed = 42;
  } pp;
  auto* pairs = probe->add_subcommand("pairs", "Few-shot synonym/antonym probe with k-fold CV");
  add_config_option(pairs);
  pairs->add_option("--in", pp.in, "Pair probes (JSON lines)")->required();
  pairs->add_option("--shots", pp.shots, "Shots per class, comma-separated");
  pairs->add_option("--k", pp.k, "Number of folds");
  pairs->add_option("--seed", pp.seed, "Seed for folds and shot sampling");
  pairs->add_option("--out", pp.out, "Also write the curve here");
  struct {
    std::string in, predictions, out, ks = "1,5,10,inf";
  } pr;
  auto* relations = probe->add_subcommand("relations", "recall@k over ranked entity predictions");
  add_config_option(relations);
  relations->add_option("--in", pr.in, "Relation probes (JSON lines)")->required();
  relations->add_option("--predictions", pr.predictions, "Ranked predictions (JSON lines)")->required();
  relations->add_option("--ks", pr.ks, "Cutoffs, comma-separated; inf means the whole list");
  relations->add_option("--out", pr.out, "Also write the table here");

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const std::exception& e) {
    err << "philokit: " << e.what() << '\n';
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*curate) {
      const fs::path root(cu.in);
      if (!fs::is_directory(root)) throw IoError(cu.in, "not a directory");
      std::vector<forge::Document> docs;
      for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        docs.push_back({fs::relative(entry.path(), root).generic_string(), io::read_text(entry.path().string())});
      }
      forge::CurateOptions co;
      co.filter.coverage_threshold = cu.coverage;
      co.filter.dup_min_chars = cu.dup_chars;
      co.filter.stopword_min_count = cu.stopword_min;
      co.filter.exclude_punctuation = cu.exclude_punct;
      co.require_greek = cu.detect;
      const auto vocab = forge::load_vocabulary(cu.vocab);
      const auto result = forge::curate(std::move(docs), vocab, co);
      for (const auto& d : result.outputs) {
        const fs::path target = fs::path(cu.out) / d.source_id;
        fs::create_directories(target.parent_path());
        io::write_text(target.string(), d.text);
      }
      const std::string table = forge::format_stats(result.stats);
      if (cu.stats.empty()) out << table;
      else io::write_text(cu.stats, table);
      if (!cu.drop_log.empty()) io::write_text(cu.drop_log, forge::format_drop_log(result.lines));
      write_resolved(curate, cu.out);
    } else if (*stats) {
      if (st.treebanks.empty() && st.texts.empty()) throw CLI::RequiredError("--treebank or --text");
      if (!st.treebanks.empty()) {
        out << "file\tsentences\ttokens\tupos\txpos\tdeprels\tlemmata\tforms\n";
        for (const auto& f : st.treebanks) {
          const auto s = conllu::read_file(f).summary();
          out << f << '\t' << s.sentences << '\t' << s.tokens << '\t' << s.upos << '\t' << s.xpos
              << '\t' << s.deprels << '\t' << s.lemmata << '\t' << s.forms << '\n';
        }
      }
      if (!st.texts.empty()) {
        std::vector<forge::SourceStats> rows;
        for (const auto& f : st.texts) {
          const std::string text = io::read_text(f);
          const std::size_t lines = forge::split_lines(text).size();
          rows.push_back({f, lines, lines, forge::count_tokens(text)});
        }
        out << forge::format_stats(rows);
      }
    } else if (*bpe) {
      std::vector<std::string> corpus;
      for (const auto& f : bl.in) {
        if (fs::path(f).extension() == ".conllu") {
          for (const auto& s : read_sentences(f))
            for (const auto& t : s.tokens) corpus.push_back(t.form);
        } else {
          for (auto& line : forge::split_lines(io::read_text(f))) corpus.push_back(std::move(line));
        }
      }
      subword::learn_bpe(corpus, bl.vocab_size).save_file(bl.out);
      write_resolved(bpe, bl.out);
    } else if (*train_tagger) {
      const auto train = read_sentences(tt.train);
      const auto dev = read_sentences(tt.dev);
      const auto train_emb = maybe_embeddings(tt.train_emb);
      const auto dev_emb = maybe_embeddings(tt.dev_emb);
      if (static_cast<bool>(train_emb) != static_cast<bool>(dev_emb))
        throw CLI::ValidationError("--train-emb and --dev-emb go together");
      const auto seeds = tt_seed.list();
      std::vector<double> metrics;
      for (std::uint64_t seed : seeds) {
        tagging::HeadsConfig hc;
        hc.hidden = tt.hidden;
        hc.init_scale = tt_enc.init_scale;
        auto model = tagging::make_tagger(tagging::parse_task(tt.task), train, tt_enc.bpe_vocab,
                                          encoder_config(tt_enc, train_emb.get(), train), hc, seed);
        tagging::TaggerTrainOptions to{make_schedule(tt_sched, seed), train_emb.get(), dev_emb.get()};
        const auto h = tagging::train_tagger(model, train, dev, to);
        print_history(out, h, seed);
        metrics.push_back(h.best_metric);
        const std::string path = seeds.size() > 1 ? with_seed(tt.out, seed) : tt.out;
        save_json(path, model.to_json());
        write_resolved(train_tagger, path);
      }
      print_seed_summary(out, metrics);
    } else if (*tag) {
      const auto model = tagging::Tagger::from_json(read_json(tg.model));
      auto tb = conllu::read_file(tg.in);
      const auto emb = maybe_embeddings(tg.emb);
      for (std::size_t k = 0; k < tb.sentences.size(); ++k) {
        auto& s = tb.sentences[k];
        if (s.tokens.empty()) continue;
        const auto tags = emb ? model.predict(emb->embed(k, s)) : model.predict(s);
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
          (model.task == tagging::Task::upos ? s.tokens[i].upos : s.tokens[i].xpos) = tags[i];
      }
      conllu::write_file(tb, tg.out);
      write_resolved(tag, tg.out);
    } else if (*train_parser) {
      const auto train = read_sentences(tp.train);
      const auto dev = read_sentences(tp.dev);
      const auto train_emb = maybe_embeddings(tp.train_emb);
      const auto dev_emb = maybe_embeddings(tp.dev_emb);
      if (static_cast<bool>(train_emb) != static_cast<bool>(dev_emb))
        throw CLI::ValidationError("--train-emb and --dev-emb go together");
      const auto seeds = tp_seed.list();
      std::vector<double> metrics;
      for (std::uint64_t seed : seeds) {
        parser::ScorerConfig sc;
        sc.attention = tp.attention;
        sc.label_hidden = tp.label_hidden;
        sc.init_scale = tp_enc.init_scale;
        auto model = parser::make_parser(train, tp_enc.bpe_vocab,
                                         encoder_config(tp_enc, train_emb.get(), train), sc, seed);
        model.decode.single_root = tp.single_root;
        parser::ParserTrainOptions po{make_schedule(tp_sched, seed), train_emb.get(), dev_emb.get()};
        const auto h = parser::train_parser(model, train, dev, po);
        print_history(out, h, seed);
        metrics.push_back(h.best_metric);
        const std::string path = seeds.size() > 1 ? with_seed(tp.out, seed) : tp.out;
        save_json(path, model.to_json());
        write_resolved(train_parser, path);
      }
      print_seed_summary(out, metrics);
    } else if (*parse) {
      auto model = parser::Parser::from_json(read_json(pa.model));
      if (pa.single_root) model.decode.single_root = true;
      auto tb = conllu::read_file(pa.in);
      const auto emb = maybe_embeddings(pa.emb);
      for (std::size_t k = 0; k < tb.sentences.size(); ++k) {
        auto& s = tb.sentences[k];
        if (s.tokens.empty()) continue;
        const auto a = emb ? model.parse(emb->embed(k, s)) : model.parse(s);
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
          s.tokens[i].head = a.head[i + 1];
          s.tokens[i].deprel = a.labels[i + 1];
        }
      }
      conllu::write_file(tb, pa.out);
      write_resolved(parse, pa.out);
    } else if (*lemma_format) {
      std::vector<lemma::LemmaExample> xs;
      for (const auto& s : read_sentences(lf.in))
        for (auto& x : lemma::make_lemma_examples(s, lf.chars)) xs.push_back(std::move(x));
      lemma::write_examples(xs, lf.out);
      write_resolved(lemma_format, lf.out);
    } else if (*lemma_train) {
      const auto train = lemma::read_examples(lt.train);
      const auto dev = lemma::read_examples(lt.dev);
      const auto seeds = lt_seed.list();
      std::vector<double> metrics;
      for (std::uint64_t seed : seeds) {
        nn::Rng rng(seed);
        lemma::ScorerConfig sc;
        sc.embed_dim = lt.embed_dim;
        sc.hidden = lt.hidden;
        sc.init_scale = lt.init_scale;
        lemma::CharLemmaScorer model(train, sc, rng);
        lemma::LemmaTrainOptions lo{make_schedule(lt_sched, seed), lt.dev_beam, lt.max_len};
        const auto h = lemma::train_lemma_scorer(model, train, dev, lo);
        print_history(out, h, seed);
        metrics.push_back(h.best_metric);
        const std::string path = seeds.size() > 1 ? with_seed(lt.out, seed) : lt.out;
        save_json(path, model.to_json());
        write_resolved(lemma_train, path);
      }
      print_seed_summary(out, metrics);
    } else if (*lemma_decode) {
      const auto model = lemma::CharLemmaScorer::from_json(read_json(ld.model));
      const auto xs = lemma::read_examples(ld.in);
      std::string text;
      std::vector<std::string> pred, gold;
      bool have_gold = !xs.empty();
      for (const auto& x : xs) {
        const auto ranked = model.decode(x.source, ld.beam, ld.max_len);
        nlohmann::json preds = nlohmann::json::array(), scores = nlohmann::json::array();
        for (const auto& [s, lp] : ranked) {
          preds.push_back(s);
          scores.push_back(lp);
        }
        text += nlohmann::json{{"sent_id", x.sent_id},     {"token_id", x.token_id},
                               {"source", x.source},       {"target", x.target},
                               {"predictions", preds},     {"scores", scores}}
                    .dump();
        text += '\n';
        pred.push_back(ranked.empty() ? "" : ranked.front().first);
        gold.push_back(x.target);
        have_gold = have_gold && !x.target.empty();
      }
      io::write_text(ld.out, text);
      if (have_gold) out << "lemma_acc\t" << fixed(lemma::lemma_accuracy(pred, gold)) << '\n';
      write_resolved(lemma_decode, ld.out);
    } else if (*eval) {
      const auto report = metrics::evaluate(conllu::read_file(ev.gold), conllu::read_file(ev.pred));
      const std::string text = metrics::format_report(report);
      out << text;
      if (!ev.out.empty()) {
        io::write_text(ev.out, text);
        write_resolved(eval, ev.out);
      }
    } else if (*pairs) {
      const auto probes = probing::parse_pair_probes(io::read_text(pp.in));
      for (const auto& p : probes)
        if (auto w = probing::lint_pair(p)) err << "warning: " << *w << '\n';
      std::vector<int> classes;
      for (const auto& p : probes) classes.push_back(p.relation == probing::Relation::synonym ? 0 : 1);
      const auto folds = probing::kfold_split(classes, pp.k, pp.seed);
      const auto curve = probing::fewshot_eval(probes, folds, config::parse_size_list(pp.shots),
                                               probing::hashed_filler_factory(), pp.seed);
      std::string text = "shots\tmean\tstd\n";
      for (const auto& c : curve)
        text += std::to_string(c.shots) + '\t' + fixed(c.mean) + '\t' + fixed(c.std) + '\n';
      out << text;
      if (!pp.out.empty()) {
        io::write_text(pp.out, text);
        write_resolved(pairs, pp.out);
      }
    } else if (*relations) {
      const auto probes = probing::parse_relation_probes(io::read_text(pr.in));
      const auto ranked = probing::parse_predictions(io::read_text(pr.predictions));
      std::vector<std::string> gold;
      for (const auto& p : probes) gold.push_back(p.gold_entity);
      std::vector<std::size_t> ks;
      const auto names = parse_ks(pr.ks);
      for (const auto& n : names)
        ks.push_back(n == "inf" ? 0 : config::parse_size_list(n).at(0));
      const auto rec = probing::recall_at_k(ranked, gold, ks);
      std::string text = "k\trecall\n";
      for (std::size_t i = 0; i < ks.size(); ++i)
        text += (ks[i] == 0 ? std::string("inf") : std::to_string(ks[i])) + '\t' + fixed(100.0 * rec[i]) + '\n';
      out << text;
      if (!pr.out.empty()) {
        io::write_text(pr.out, text);
        write_resolved(relations, pr.out);
      }
    }
  } catch (const CLI::ParseError& e) {
    err << "philokit: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "philokit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace philokit::cli
