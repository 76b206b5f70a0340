#include "xbrltag/cli.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xbrltag/ablation.h"
#include "xbrltag/corpus.h"
#include "xbrltag/error.h"
#include "xbrltag/eval.h"
#include "xbrltag/service.h"
#include "xbrltag/synthetic.h"
#include "xbrltag/tagger.h"
#include "xbrltag/tokenize.h"

namespace xbrltag {

namespace {

// Writes to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::vector<AnnotatedSentence> read_corpus(const std::string& path, const LabelSet& labels, bool strict,
                                           std::ostream& err) {
  auto result = load_dataset(path, labels, strict ? LoadMode::kStrict : LoadMode::kLenient);
  for (const auto& d : result.diagnostics) err << path << ':' << d.line << ": " << d.message << '\n';
  return std::move(result.sentences);
}

// Token-only reader for `predict`: labels are optional on input.
std::vector<AnnotatedSentence> read_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AnnotatedSentence s;
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("doc_id") && j["doc_id"].is_string()) s.doc_id = j["doc_id"].get<std::string>();
      if (j.contains("period_index") && j["period_index"].is_number_integer()) {
        s.period_index = j["period_index"].get<std::int64_t>();
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ':' + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& csv, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  if (out.empty()) throw ConfigError("empty list '" + csv + "'");
  return out;
}

std::optional<SubwordVocab> optional_vocab(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return SubwordVocab::load(path);
}

std::optional<ShapeVocab> optional_shapes(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return ShapeVocab::load(path);
}

struct ModelOptions {
  std::string model;
  std::string vocab;
  std::string shapes;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model, "Model file")->required();
    cmd->add_option("--vocab", vocab, "Subword vocab (subword models)");
    cmd->add_option("--shapes", shapes, "Shape vocab (shape-policy models)");
  }
  Tagger load() const { return Tagger(load_model(model), optional_vocab(vocab), optional_shapes(shapes)); }
};

struct TrainOptions {
  int epochs = 10;
  double lr = 0.1;
  double l2 = 1e-6;
  int batch = 16;
  std::uint64_t seed = 1;
  int patience = 3;
  int hash_bits = 20;
  int window = 2;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs)->capture_default_str();
    cmd->add_option("--lr", lr)->capture_default_str();
    cmd->add_option("--l2", l2)->capture_default_str();
    cmd->add_option("--batch", batch)->capture_default_str();
    cmd->add_option("--seed", seed, "Shuffle-schedule seed")->capture_default_str();
    cmd->add_option("--patience", patience)->capture_default_str();
    cmd->add_option("--hash-bits", hash_bits, "log2 of the hash dimension")->check(CLI::Range(10, 30))
        ->capture_default_str();
    cmd->add_option("--window", window, "Context window")->check(CLI::NonNegativeNumber)->capture_default_str();
  }
  TrainConfig train_config() const { return {epochs, lr, l2, batch, seed, patience}; }
  FeatureConfig feature_config() const {
    FeatureConfig f;
    f.hash_dimension = 1u << hash_bits;
    f.context_window = window;
    return f;
  }
};

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"xbrltag: XBRL tagging toolkit"};
  app.name("xbrltag");
  app.require_subcommand(1);
  std::function<void()> run;

  // stats
  std::string input, tags_path, output;
  bool strict = false;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--input", input)->required();
  stats->add_option("--tags", tags_path, "Tag list file")->required();
  stats->add_option("--output", output);
  stats->add_flag("--strict", strict, "Abort on the first bad record");
  stats->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const auto corpus = read_corpus(input, labels, strict, err);
      emit(output, format_stats_report(compute_stats(corpus)), out);
    };
  });

  // filter
  std::string report_path, filter_mode = "training";
  std::vector<std::string> patterns;
  auto* filter = app.add_subcommand("filter", "Heuristic sentence filter");
  filter->add_option("--input", input)->required();
  filter->add_option("--tags", tags_path)->required();
  filter->add_option("--output", output)->required();
  filter->add_option("--report", report_path);
  filter->add_option("--pattern", patterns, "Regex rule (repeatable; default: amount rules)");
  filter->add_option("--mode", filter_mode)->check(CLI::IsMember({"training", "inference"}));
  filter->add_flag("--strict", strict);
  filter->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const FilterRules rules = patterns.empty() ? FilterRules::defaults() : FilterRules(patterns);
      const auto corpus = read_corpus(input, labels, strict, err);
      const auto result = filter_sentences(
          corpus, rules, filter_mode == "training" ? FilterMode::kTraining : FilterMode::kInference);
      write_dataset(output, result.kept);
      emit(report_path, format_filter_report(result.report), out);
    };
  });

  // split
  std::string train_out, dev_out, test_out, ratios = "0.8,0.1,0.1";
  auto* split = app.add_subcommand("split", "Chronological train/dev/test split");
  split->add_option("--input", input)->required();
  split->add_option("--tags", tags_path)->required();
  split->add_option("--train-out", train_out)->required();
  split->add_option("--dev-out", dev_out)->required();
  split->add_option("--test-out", test_out)->required();
  split->add_option("--ratios", ratios, "train,dev,test")->capture_default_str();
  split->add_flag("--strict", strict);
  split->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const auto r = parse_list<double>(ratios, [](const std::string& s) { return std::stod(s); });
      if (r.size() != 3) throw ConfigError("--ratios needs three values");
      const auto corpus = read_corpus(input, labels, strict, err);
      const auto parts = chronological_split(corpus, {r[0], r[1], r[2]});
      write_dataset(train_out, parts.train);
      write_dataset(dev_out, parts.dev);
      write_dataset(test_out, parts.test);
      out << "train=" << parts.train.size() << "\ndev=" << parts.dev.size() << "\ntest=" << parts.test.size()
          << '\n';
    };
  });

  // synth
  SyntheticConfig synth_config;
  std::string tags_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--n", synth_config.n_sentences, "Sentences")->capture_default_str();
  synth->add_option("--n-tags", synth_config.n_tags, "Tags")->capture_default_str();
  synth->add_option("--seed", synth_config.seed)->capture_default_str();
  synth->add_option("--hidden-cue-rate", synth_config.hidden_cue_rate)->capture_default_str();
  synth->add_option("--output", output)->required();
  synth->add_option("--tags-out", tags_out, "Write the tag list here");
  synth->callback([&] {
    run = [&] {
      const LabelSet labels = synthetic_labelset(synth_config.n_tags);
      write_dataset(output, generate_synthetic(synth_config, labels));
      if (!tags_out.empty()) labels.save(tags_out);
    };
  });

  // build-shapes / build-vocab
  int min_count = 3;
  auto* build_shapes = app.add_subcommand("build-shapes", "Shape vocab from a training split");
  build_shapes->add_option("--input", input)->required();
  build_shapes->add_option("--tags", tags_path)->required();
  build_shapes->add_option("--output", output)->required();
  build_shapes->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const ShapeVocab shapes = ShapeVocab::from_sentences(read_corpus(input, labels, true, err));
      shapes.save(output);
      out << "shapes=" << shapes.size() << '\n';
    };
  });
  auto* build_vocab = app.add_subcommand("build-vocab", "Subword vocab from a training split");
  build_vocab->add_option("--input", input)->required();
  build_vocab->add_option("--tags", tags_path)->required();
  build_vocab->add_option("--output", output)->required();
  build_vocab->add_option("--min-count", min_count)->capture_default_str();
  build_vocab->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const auto vocab = SubwordVocab::build(read_corpus(input, labels, true, err), min_count);
      vocab.save(output);
      out << "pieces=" << vocab.pieces().size() << '\n';
    };
  });

  // tokenize
  std::string policy_name = "none", vocab_path, shapes_path, text;
  auto* tokenize = app.add_subcommand("tokenize", "Show tokenization of raw text (stdin lines or --text)");
  tokenize->add_option("--policy", policy_name)->check(CLI::IsMember({"none", "num", "shape"}));
  tokenize->add_option("--vocab", vocab_path, "Subword vocab (omit for word level)");
  tokenize->add_option("--shapes", shapes_path);
  tokenize->add_option("--text", text);
  tokenize->callback([&] {
    run = [&] {
      const NumericPolicy policy = parse_numeric_policy(policy_name);
      const auto vocab = optional_vocab(vocab_path);
      const auto shapes = optional_shapes(shapes_path);
      auto show = [&](const std::string& line) {
        const auto words = split_words(line);
        if (words.empty()) {
          out << '\n';
          return;
        }
        const auto normalized = normalize_numeric(words, policy, shapes ? &*shapes : nullptr);
        const auto units = vocab ? wordpiece_tokenize_sentence(normalized, *vocab).pieces : normalized;
        for (std::size_t i = 0; i < units.size(); ++i) out << (i ? " " : "") << units[i];
        out << '\n';
      };
      if (!text.empty()) {
        show(text);
      } else {
        std::string line;
        while (std::getline(std::cin, line)) show(line);
      }
    };
  });

  // train
  std::string train_path, dev_path, head_name = "crf", granularity_name = "subword";
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a tagger");
  train_cmd->add_option("--train", train_path)->required();
  train_cmd->add_option("--dev", dev_path, "Dev split for early stopping");
  train_cmd->add_option("--tags", tags_path)->required();
  train_cmd->add_option("--vocab", vocab_path);
  train_cmd->add_option("--shapes", shapes_path);
  train_cmd->add_option("--head", head_name)->check(CLI::IsMember({"softmax", "crf"}))->capture_default_str();
  train_cmd->add_option("--granularity", granularity_name)->check(CLI::IsMember({"word", "subword"}))
      ->capture_default_str();
  train_cmd->add_option("--policy", policy_name)->check(CLI::IsMember({"none", "num", "shape"}))
      ->capture_default_str();
  train_cmd->add_option("--output", output)->required();
  train_opts.add(train_cmd);
  train_cmd->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const auto train_set = read_corpus(train_path, labels, true, err);
      const auto dev_set = dev_path.empty() ? std::vector<AnnotatedSentence>{} : read_corpus(dev_path, labels, true, err);
      const auto vocab = optional_vocab(vocab_path);
      const auto shapes = optional_shapes(shapes_path);
      TrainSpec spec{labels,
                     train_opts.feature_config(),
                     train_opts.train_config(),
                     parse_head(head_name),
                     parse_granularity(granularity_name),
                     parse_numeric_policy(policy_name)};
      const auto result = train(train_set, dev_set, spec, vocab ? &*vocab : nullptr, shapes ? &*shapes : nullptr);
      for (const auto& e : result.history) {
        err << "epoch " << e.epoch << " loss/unit=" << e.train_loss_per_unit;
        if (e.dev_micro_f1 >= 0) err << " dev_micro_f1=" << e.dev_micro_f1;
        err << '\n';
      }
      save_model(result.model, output);
      out << "best_epoch=" << result.best_epoch << '\n';
    };
  });

  // predict
  ModelOptions model_opts;
  auto* predict_cmd = app.add_subcommand("predict", "Tag every sentence of a corpus file");
  model_opts.add(predict_cmd);
  predict_cmd->add_option("--input", input)->required();
  predict_cmd->add_option("--output", output);
  predict_cmd->callback([&] {
    run = [&] {
      const Tagger tagger = model_opts.load();
      auto sentences = read_inputs(input);
      for (auto& s : sentences) s.labels = predict(tagger, s.tokens);
      std::ostringstream buf;
      write_dataset(buf, sentences);
      emit(output, buf.str(), out);
    };
  });

  // eval
  std::string gold_path, pred_path, macro = "all";
  auto* eval_cmd = app.add_subcommand("eval", "Entity-level scores and invalid-sequence report");
  eval_cmd->add_option("--gold", gold_path)->required();
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--tags", tags_path)->required();
  eval_cmd->add_option("--macro", macro, "Macro-F1 denominator")->check(CLI::IsMember({"all", "gold"}))
      ->capture_default_str();
  eval_cmd->add_option("--output", output);
  eval_cmd->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      const auto gold = read_corpus(gold_path, labels, true, err);
      const auto pred_records = load_predictions(pred_path);
      std::vector<std::vector<std::string>> pred;
      for (const auto& p : pred_records) pred.push_back(p.labels);
      const auto score =
          entity_prf(gold, pred, labels, macro == "all" ? MacroMode::kAllTags : MacroMode::kGoldTags);
      const auto invalid = invalid_sequence_report(std::span<const std::vector<std::string>>(pred), labels);
      emit(output, format_eval_report(score, &invalid), out);
    };
  });

  // hits
  std::size_t k_max = 0;
  auto* hits = app.add_subcommand("hits", "Hits@k curve for k = 1..K over gold-span words");
  model_opts.add(hits);
  hits->add_option("--input", input, "Gold corpus")->required();
  hits->add_option("--k-max", k_max, "K (default: tag count)");
  hits->add_option("--output", output);
  hits->callback([&] {
    run = [&] {
      const Tagger tagger = model_opts.load();
      const LabelSet& labels = tagger.labelset();
      std::size_t k = k_max == 0 ? labels.tag_count() : k_max;
      if (k > labels.tag_count()) {
        err << "warning: --k-max " << k << " exceeds tag count " << labels.tag_count() << ", clamping\n";
        k = labels.tag_count();
      }
      std::vector<std::size_t> ranks;
      for (const auto& s : read_corpus(input, labels, true, err)) {
        const auto spans = spans_from_labels(s.labels);
        if (spans.empty()) continue;
        const auto ranked = rank_tags(tagger, s.tokens);
        for (const auto& span : spans) {
          for (int w = span.start; w < span.end; ++w) {
            const auto& list = ranked[static_cast<std::size_t>(w)];
            const auto it = std::find_if(list.begin(), list.end(),
                                         [&](const TagCandidate& c) { return c.tag == span.tag; });
            ranks.push_back(it == list.end() ? 0 : static_cast<std::size_t>(it - list.begin()) + 1);
          }
        }
      }
      const auto curve = hits_curve(ranks, k);
      emit(output, format_hits_report(curve, ranks.size(), labels.tag_count()), out);
    };
  });

  // ablate
  std::string test_path, table_path, policies = "none,num,shape", heads = "softmax", grans = "subword",
                                     seeds = "1,2,3";
  auto* ablate = app.add_subcommand("ablate", "Tokenization-policy ablation");
  ablate->add_option("--train", train_path)->required();
  ablate->add_option("--dev", dev_path)->required();
  ablate->add_option("--test", test_path)->required();
  ablate->add_option("--tags", tags_path)->required();
  ablate->add_option("--policies", policies)->capture_default_str();
  ablate->add_option("--heads", heads)->capture_default_str();
  ablate->add_option("--granularities", grans)->capture_default_str();
  ablate->add_option("--seeds", seeds)->capture_default_str();
  ablate->add_option("--min-count", min_count, "Subword vocab min count")->capture_default_str();
  ablate->add_option("--table", table_path, "JSONL table output")->required();
  ablate->add_option("--report", report_path, "Text report (default stdout)");
  train_opts.add(ablate);
  ablate->callback([&] {
    run = [&] {
      const LabelSet labels = LabelSet::load(tags_path);
      AblationConfig config;
      config.policies = parse_list<NumericPolicy>(policies, [](const std::string& s) { return parse_numeric_policy(s); });
      config.heads = parse_list<Head>(heads, [](const std::string& s) { return parse_head(s); });
      config.granularities =
          parse_list<Granularity>(grans, [](const std::string& s) { return parse_granularity(s); });
      config.seeds = parse_list<std::uint64_t>(seeds, [](const std::string& s) { return std::stoull(s); });
      config.features = train_opts.feature_config();
      config.train = train_opts.train_config();
      config.vocab_min_count = min_count;
      const auto result = run_ablation(read_corpus(train_path, labels, true, err), read_corpus(dev_path, labels, true, err),
                                       read_corpus(test_path, labels, true, err), labels, config);
      emit(table_path, format_ablation_table(result), out);
      emit(report_path, format_ablation_report(result), out);
    };
  });

  // serve
  std::string config_path, bind;
  int port = -1, default_k = 0;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP tagging and recommendation service");
  serve_cmd->add_option("--config", config_path, "key = value config file");
  serve_cmd->add_option("--model", model_opts.model);
  serve_cmd->add_option("--vocab", model_opts.vocab);
  serve_cmd->add_option("--shapes", model_opts.shapes);
  serve_cmd->add_option("--bind", bind);
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--default-k", default_k)->check(CLI::PositiveNumber);
  serve_cmd->callback([&] {
    run = [&] {
      ServiceConfig config = config_path.empty() ? ServiceConfig{} : load_service_config(config_path);
      apply_env_overrides(config);
      if (!model_opts.model.empty()) config.model_path = model_opts.model;
      if (!model_opts.vocab.empty()) config.vocab_path = model_opts.vocab;
      if (!model_opts.shapes.empty()) config.shapes_path = model_opts.shapes;
      if (!bind.empty()) config.bind = bind;
      if (port >= 0) config.port = port;
      if (default_k > 0) config.default_k = default_k;
      const auto service = TaggingService::from_config(config);
      if (serve(service) != 0) throw Error("service stopped with an error");
    };
  });

  std::vector<std::string> argv_storage{"xbrltag"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    run();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace xbrltag
