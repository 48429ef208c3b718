#include "oid/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "oid/config.hpp"
#include "oid/corpus.hpp"
#include "oid/error.hpp"
#include "oid/experiments.hpp"
#include "oid/log.hpp"
#include "oid/pipeline.hpp"
#include "oid/synthetic.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level;
};

RunConfig load_config(const Common& c) {
  auto cfg = resolve_run_config(c.config_path.empty()
                                    ? std::nullopt
                                    : std::optional<std::filesystem::path>(c.config_path));
  if (c.seed) cfg.apply_seed(*c.seed);
  return cfg;
}

void apply_log_level(const std::string& level) {
  if (level.empty()) return;
  if (level == "debug") set_log_level(LogLevel::Debug);
  else if (level == "info") set_log_level(LogLevel::Info);
  else if (level == "warn") set_log_level(LogLevel::Warn);
  else if (level == "quiet") set_log_level(LogLevel::Quiet);
  else throw ArgumentError("unknown log level '" + level + "'");
}

CorpusFormat format_of(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".jsonl" || ext == ".json" ? CorpusFormat::Jsonl : CorpusFormat::Column;
}

std::vector<TaggedUtterance> read_corpus(const std::string& path) {
  return read_tagged_corpus(path, format_of(path));
}

// Output sink: a file, or the command's stdout for "" and "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      out_ = &fallback;
      return;
    }
    file_.open(path);
    if (!file_) throw IoError("cannot write " + path);
    out_ = &file_;
  }
  std::ostream& get() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_ = nullptr;
};

// Keeps the encoders in step with a word-vector file of another dimension.
std::shared_ptr<const EmbeddingTable> load_table(RunConfig& cfg) {
  auto table = load_embedding_source(cfg.embeddings);
  if (table->dimension() != cfg.tagger.encoder.word_dim) {
    log_info("using word_dim " + std::to_string(table->dimension()) + " from the embeddings");
    cfg.tagger.encoder.word_dim = table->dimension();
    cfg.existence.encoder.word_dim = table->dimension();
  }
  return table;
}

// Word vectors a bundle was trained with; falls back to the run config.
std::shared_ptr<const EmbeddingTable> bundle_table(const nn::ModelBundle& b, const RunConfig& cfg) {
  const auto it = b.config.find("embeddings");
  if (it == b.config.end() || it->is_null()) return load_embedding_source(cfg.embeddings);
  return load_embedding_source(embedding_source_from_json(*it));
}

nn::ModelBundle load_model(const std::string& path, const std::string& what) {
  if (path.empty()) throw ModelError(what + " bundle path is required");
  if (!std::filesystem::exists(path)) throw ModelError(what + " bundle not found: " + path);
  return nn::load_bundle(path);
}

struct LoadedModels {
  std::shared_ptr<const EmbeddingTable> table;
  std::shared_ptr<const ExistenceModel> existence;
  std::shared_ptr<const TaggerModel> tagger;
  std::shared_ptr<const MatcherModel> matcher;
};

LoadedModels load_models(const RunConfig& cfg, const std::string& existence_path,
                         const std::string& tagger_path, const std::string& matcher_path,
                         bool gated) {
  LoadedModels m;
  const auto tb = load_model(tagger_path, "tagger");
  m.table = bundle_table(tb, cfg);
  m.tagger = std::make_shared<TaggerModel>(TaggerModel::from_bundle(tb, m.table));
  if (gated) {
    const auto eb = load_model(existence_path, "existence");
    m.existence = std::make_shared<ExistenceModel>(ExistenceModel::from_bundle(eb, m.table));
  }
  if (!matcher_path.empty())
    m.matcher = std::make_shared<MatcherModel>(MatcherModel::from_bundle(load_model(matcher_path, "matcher")));
  return m;
}

Decoder decoder_or(const std::string& name, Decoder fallback) {
  if (name.empty()) return fallback;
  if (auto d = parse_decoder(name)) return *d;
  throw ArgumentError("unknown decoder '" + name + "' (expected viterbi, beam or ilp)");
}

Pairing pairing_or(const std::string& name, Pairing fallback) {
  if (name.empty()) return fallback;
  if (name == "w-dist") return Pairing::WordDistance;
  if (name == "mlp") return Pairing::Mlp;
  throw ArgumentError("unknown pairing '" + name + "' (expected w-dist or mlp)");
}

IntentMatch match_or(const std::string& name, IntentMatch fallback) {
  if (name.empty()) return fallback;
  if (name == "surface") return IntentMatch::Surface;
  if (name == "exact_span") return IntentMatch::ExactSpan;
  throw ArgumentError("unknown match mode '" + name + "' (expected surface or exact_span)");
}

std::vector<Utterance> read_inputs(const std::string& path, std::istream& in) {
  if (path.empty() || path == "-") return read_utterances(in);
  std::ifstream file(path);
  if (!file) throw IoError("cannot read " + path);
  return read_utterances(file);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Open intent discovery: existence classification, action/object tagging and "
               "intent assembly"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Run config JSON (default: $OID_CONFIG)");
  app.add_option("--seed", common.seed, "Override the run seed");
  app.add_option("--log-level", common.log_level, "debug, info, warn or quiet");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-domain corpus");
  std::string synth_out, synth_test_out, synth_existence_out;
  std::optional<std::size_t> synth_count, synth_test_count;
  std::optional<double> synth_ratio;
  synth->add_option("--out", synth_out, "Tagged corpus (.jsonl or column)")->required();
  synth->add_option("--test-out", synth_test_out, "Also write an independent test corpus");
  synth->add_option("--existence-out", synth_existence_out, "Existence view of --out (JSONL)");
  synth->add_option("--count", synth_count, "Utterances in --out");
  synth->add_option("--test-count", synth_test_count, "Utterances in --test-out");
  synth->add_option("--positive-ratio", synth_ratio, "Share of utterances with intents");

  // train-existence
  auto* train_ex = app.add_subcommand("train-existence", "Train the Stage I classifier");
  std::string ex_data, ex_tagged, ex_out;
  auto* ex_data_opt = train_ex->add_option("--data", ex_data, "Existence corpus (JSONL)");
  train_ex->add_option("--tagged", ex_tagged, "Tagged corpus; positives are utterances with intents")
      ->excludes(ex_data_opt);
  train_ex->add_option("--out", ex_out, "Model bundle to write")->required();

  // train-tagger
  auto* train_tag = app.add_subcommand("train-tagger", "Train the Stage II tagger");
  std::string tag_labeled, tag_proxy, tag_out, tag_matcher_out, tag_decoder, tag_pairing;
  std::optional<double> adv_eps, adv_alpha;
  bool no_adv = false;
  train_tag->add_option("--labeled", tag_labeled, "Gold-tagged corpus")->required();
  train_tag->add_option("--proxy", tag_proxy, "Proxy-tag corpus for pre-training (column format)");
  train_tag->add_option("--adv-eps", adv_eps, "Adversarial perturbation norm");
  train_tag->add_option("--adv-alpha", adv_alpha, "Weight of the clean loss");
  train_tag->add_flag("--no-adv", no_adv, "Disable adversarial training");
  train_tag->add_option("--decoder", tag_decoder, "Default decoder stored in the bundle");
  train_tag->add_option("--pairing", tag_pairing, "w-dist or mlp");
  train_tag->add_option("--out", tag_out, "Tagger bundle to write")->required();
  train_tag->add_option("--matcher-out", tag_matcher_out, "Also train and write the MLP matcher");

  // shared model options
  struct ModelOpts {
    std::string existence, tagger, matcher, decoder, pairing;
    bool ungated = false;
  };
  auto add_model_opts = [](CLI::App* cmd, ModelOpts& m, bool gate) {
    cmd->add_option("--tagger", m.tagger, "Tagger bundle")->required();
    cmd->add_option("--matcher", m.matcher, "Matcher bundle (needed for --pairing mlp)");
    cmd->add_option("--decoder", m.decoder, "viterbi, beam or ilp");
    cmd->add_option("--pairing", m.pairing, "w-dist or mlp");
    if (gate) {
      cmd->add_option("--existence", m.existence, "Existence bundle");
      cmd->add_flag("--ungated", m.ungated, "Skip Stage I and tag every utterance");
    }
  };

  // predict
  auto* predict = app.add_subcommand("predict", "Run the pipeline on raw text or JSONL");
  ModelOpts pred_models;
  std::string pred_input, pred_output;
  unsigned pred_threads = 0;
  add_model_opts(predict, pred_models, true);
  predict->add_option("--input", pred_input, "Utterances, one per line or JSONL (default stdin)");
  predict->add_option("--output", pred_output, "Predictions JSONL (default stdout)");
  predict->add_option("--threads", pred_threads, "Worker threads (0 = all cores)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score the pipeline on a gold corpus");
  ModelOpts eval_models;
  std::string eval_test, eval_report, eval_csv, eval_match;
  add_model_opts(evaluate_cmd, eval_models, true);
  evaluate_cmd->add_option("--test", eval_test, "Gold-tagged corpus")->required();
  evaluate_cmd->add_option("--report", eval_report, "JSON report (default stdout)");
  evaluate_cmd->add_option("--csv", eval_csv, "Per-domain intent scores as CSV");
  evaluate_cmd->add_option("--match-mode", eval_match, "surface or exact_span");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Stage II F1 against training-set size");
  std::string sweep_train, sweep_test, sweep_csv;
  std::vector<std::size_t> sweep_sizes;
  sweep->add_option("--train", sweep_train, "Gold-tagged training corpus")->required();
  sweep->add_option("--test", sweep_test, "Gold-tagged test corpus")->required();
  sweep->add_option("--sizes", sweep_sizes, "Training sizes (default from config)")->delimiter(',');
  sweep->add_option("--csv", sweep_csv, "CSV output (default stdout)");

  // domain-eval
  auto* domain = app.add_subcommand("domain-eval", "Leave-one-domain-out evaluation");
  std::string domain_data, domain_csv;
  std::vector<std::string> domain_names;
  domain->add_option("--data", domain_data, "Gold-tagged corpus with domains")->required();
  domain->add_option("--domains", domain_names, "Domains to hold out (default all)")->delimiter(',');
  domain->add_option("--csv", domain_csv, "CSV output (default stdout)");

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Intent frequency table from predictions");
  std::string agg_input, agg_csv;
  int agg_width = 40;
  aggregate->add_option("--predictions", agg_input, "Predictions JSONL (default stdin)");
  aggregate->add_option("--csv", agg_csv, "CSV table (the bar chart goes to stdout)");
  aggregate->add_option("--width", agg_width, "Longest bar in characters")->check(CLI::PositiveNumber);

  // inspect-attention
  auto* inspect = app.add_subcommand("inspect-attention", "Dump attention weights as CSV");
  std::string insp_tagger, insp_text, insp_out;
  inspect->add_option("--tagger", insp_tagger, "Tagger bundle")->required();
  inspect->add_option("--utterance", insp_text, "Utterance text")->required();
  inspect->add_option("--out", insp_out, "CSV output (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    apply_log_level(common.log_level);
    RunConfig cfg = load_config(common);

    if (*synth) {
      SyntheticConfig sc;
      sc.count = synth_count.value_or(cfg.synth.train_count);
      sc.positive_ratio = synth_ratio.value_or(cfg.synth.positive_ratio);
      sc.seed = common.seed ? *common.seed : cfg.synth.seed;
      const auto train = generate_synthetic_corpus(sc);
      write_tagged_corpus(train.tagged, synth_out, format_of(synth_out));
      if (!synth_existence_out.empty()) write_existence_corpus(train.existence, synth_existence_out);
      if (!synth_test_out.empty()) {
        sc.count = synth_test_count.value_or(cfg.synth.test_count);
        sc.seed = Rng::mix(sc.seed, 1);
        sc.id_prefix = "syn-test";
        write_tagged_corpus(generate_synthetic_corpus(sc).tagged, synth_test_out,
                            format_of(synth_test_out));
      }
      return kExitOk;
    }

    if (*train_ex) {
      if (ex_data.empty() && ex_tagged.empty()) throw ArgumentError("--data or --tagged is required");
      const auto corpus = ex_data.empty() ? to_existence(read_corpus(ex_tagged))
                                          : read_existence_corpus(ex_data);
      auto table = load_table(cfg);
      std::vector<EpochRecord> history;
      const auto model =
          train_existence(corpus, table, cfg.existence, cfg.existence_train, &history);
      nn::save_bundle(model.to_bundle(to_json(cfg.embeddings)), ex_out);
      if (!history.empty()) log_info("final loss " + std::to_string(history.back().loss));
      return kExitOk;
    }

    if (*train_tag) {
      if (adv_eps) cfg.adversarial.epsilon = *adv_eps;
      if (adv_alpha) cfg.adversarial.alpha = *adv_alpha;
      if (no_adv) cfg.adversarial.enabled = false;
      cfg.adversarial.validate();
      cfg.tagger.decoder = decoder_or(tag_decoder, cfg.tagger.decoder);
      cfg.pairing = pairing_or(tag_pairing, cfg.pairing);
      if (!tag_matcher_out.empty()) cfg.pairing = Pairing::Mlp;
      if (cfg.pairing == Pairing::Mlp && tag_matcher_out.empty())
        throw ArgumentError("--pairing mlp needs --matcher-out");
      const auto labeled = read_corpus(tag_labeled);
      std::vector<TaggedUtterance> proxy;
      if (!tag_proxy.empty()) {
        proxy = read_proxy_tag_corpus(tag_proxy);
        cfg.proxy_pretraining = true;
      }
      auto table = load_table(cfg);
      const auto models = train_stage_two(cfg, labeled, table, proxy.empty() ? nullptr : &proxy);
      nn::save_bundle(models.tagger->to_bundle(to_json(cfg.embeddings)), tag_out);
      if (models.matcher)
        nn::save_bundle(models.matcher->to_bundle(to_json(cfg.embeddings)), tag_matcher_out);
      return kExitOk;
    }

    auto make_pipeline = [&](const ModelOpts& m) {
      const auto loaded = load_models(cfg, m.existence, m.tagger, m.matcher, !m.ungated);
      const auto pairing = pairing_or(m.pairing, loaded.matcher ? Pairing::Mlp : Pairing::WordDistance);
      return Pipeline(loaded.table, loaded.existence, loaded.tagger, loaded.matcher, pairing,
                      decoder_or(m.decoder, loaded.tagger->config().decoder));
    };

    if (*predict) {
      const auto pipeline = make_pipeline(pred_models);
      const auto utterances = read_inputs(pred_input, in);
      Sink sink(pred_output, out);
      write_predictions(sink.get(), pipeline.predict_all(utterances, pred_threads));
      return kExitOk;
    }

    if (*evaluate_cmd) {
      const auto pipeline = make_pipeline(eval_models);
      const auto test = read_corpus(eval_test);
      const auto rows = evaluate_by_domain(pipeline, test, match_or(eval_match, cfg.experiments.match_mode));
      nlohmann::json report = to_json(rows.back().report);
      for (const auto& r : rows)
        if (r.domain != "all") report["domains"][r.domain] = to_json(r.report);
      Sink sink(eval_report, out);
      sink.get() << report.dump(2) << '\n';
      if (!eval_csv.empty()) {
        Sink csv(eval_csv, out);
        write_evaluation_csv(csv.get(), rows);
      }
      return kExitOk;
    }

    if (*sweep) {
      auto table = load_table(cfg);
      const auto rows = training_size_sweep(cfg, read_corpus(sweep_train), read_corpus(sweep_test),
                                            sweep_sizes.empty() ? cfg.experiments.sweep_sizes : sweep_sizes,
                                            table);
      Sink sink(sweep_csv, out);
      write_sweep_csv(sink.get(), rows);
      return kExitOk;
    }

    if (*domain) {
      auto table = load_table(cfg);
      const auto corpus = read_corpus(domain_data);
      if (domain_names.empty()) {
        std::set<std::string> names;
        for (const auto& t : corpus)
          if (!t.domain.empty()) names.insert(t.domain);
        domain_names.assign(names.begin(), names.end());
      }
      std::vector<DomainResult> rows;
      for (const auto& d : domain_names) rows.push_back(leave_one_domain_out(cfg, corpus, d, table));
      Sink sink(domain_csv, out);
      write_domain_csv(sink.get(), rows);
      return kExitOk;
    }

    if (*aggregate) {
      std::vector<std::string> phrases;
      if (agg_input.empty() || agg_input == "-") {
        phrases = read_prediction_phrases(in);
      } else {
        std::ifstream file(agg_input);
        if (!file) throw IoError("cannot read " + agg_input);
        phrases = read_prediction_phrases(file);
      }
      const auto rows = aggregate_intents(phrases);
      if (!agg_csv.empty()) {
        Sink csv(agg_csv, out);
        write_frequency_csv(csv.get(), rows);
      }
      write_frequency_bars(out, rows, agg_width);
      return kExitOk;
    }

    if (*inspect) {
      const auto b = load_model(insp_tagger, "tagger");
      const auto model = TaggerModel::from_bundle(b, bundle_table(b, cfg));
      const auto u = tokenize(insp_text, "1");
      const auto output = model.attention_output(u);
      std::vector<AttentionRow> rows;
      for (int h = 0; h < model.attention().num_heads(); ++h) {
        auto block = export_attention(output, u, h);
        rows.insert(rows.end(), block.begin(), block.end());
      }
      Sink sink(insp_out, out);
      write_attention_csv(sink.get(), rows);
      return kExitOk;
    }
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace oid
