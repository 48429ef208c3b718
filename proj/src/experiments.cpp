#include "oid/experiments.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "oid/error.hpp"
#include "oid/log.hpp"

namespace oid {
namespace {

bool is_positive(const TaggedUtterance& t) {
  if (t.gold_intents) return !t.gold_intents->empty();
  return std::find(t.tags.begin(), t.tags.end(), TagLabel::Action) != t.tags.end();
}

std::vector<Intent> gold_of(const TaggedUtterance& t) {
  if (t.gold_intents) return *t.gold_intents;
  auto spans = extract_spans(t.tags, t.utterance);
  return pair_by_distance(std::move(spans.actions), std::move(spans.objects));
}

std::vector<TaggedUtterance> shuffled(std::vector<TaggedUtterance> v, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(v);
  return v;
}

}  // namespace

nlohmann::json to_json(const PrfResult& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"true_positives", r.true_positives}, {"predicted", r.predicted}, {"gold", r.gold}};
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"utterances", r.utterances},
          {"existence", to_json(r.existence)},
          {"action_tags", to_json(r.action_tags)},
          {"object_tags", to_json(r.object_tags)},
          {"intents", to_json(r.intents)},
          {"semantic_similarity",
           {{"mean_cosine", r.similarity.mean_cosine},
            {"skipped_words", r.similarity.skipped_words},
            {"skipped_intents", r.similarity.skipped_intents},
            {"gold_intents", r.similarity.gold_count}}}};
}

namespace {

EvalReport score(const std::vector<Prediction>& preds, const std::vector<TaggedUtterance>& test,
                 const std::vector<std::size_t>& rows, const EmbeddingTable& table, IntentMatch mode) {
  EvalReport r;
  r.utterances = rows.size();
  std::size_t tp = 0, np = 0, ng = 0;
  std::vector<std::vector<TagLabel>> pred_tags, gold_tags;
  std::vector<std::vector<Intent>> pred_intents, gold_intents;
  for (const std::size_t i : rows) {
    const bool gold = is_positive(test[i]);
    tp += gold && preds[i].has_intent;
    np += preds[i].has_intent;
    ng += gold;
    pred_tags.push_back(preds[i].tagged.tags);
    gold_tags.push_back(test[i].tags);
    pred_intents.push_back(preds[i].intents);
    gold_intents.push_back(gold_of(test[i]));
  }
  r.existence = make_prf(tp, np, ng);
  r.action_tags = tag_prf(pred_tags, gold_tags, TagLabel::Action);
  r.object_tags = tag_prf(pred_tags, gold_tags, TagLabel::Object);
  r.intents = intent_prf(pred_intents, gold_intents, mode);
  r.similarity = semantic_similarity(pred_intents, gold_intents, table);
  return r;
}

std::vector<Prediction> predict_corpus(const Pipeline& pipeline, const std::vector<TaggedUtterance>& test) {
  std::vector<Utterance> utts;
  for (const auto& t : test) utts.push_back(t.utterance);
  return pipeline.predict_all(utts);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

EvalReport evaluate(const Pipeline& pipeline, const std::vector<TaggedUtterance>& test,
                    IntentMatch mode) {
  return score(predict_corpus(pipeline, test), test, all_rows(test.size()), pipeline.table(), mode);
}

std::vector<DomainReport> evaluate_by_domain(const Pipeline& pipeline,
                                             const std::vector<TaggedUtterance>& test, IntentMatch mode) {
  const auto preds = predict_corpus(pipeline, test);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < test.size(); ++i) groups[test[i].domain].push_back(i);
  std::vector<DomainReport> out;
  for (const auto& [domain, rows] : groups)
    if (!domain.empty()) out.push_back({domain, score(preds, test, rows, pipeline.table(), mode)});
  out.push_back({"all", score(preds, test, all_rows(test.size()), pipeline.table(), mode)});
  return out;
}

void write_evaluation_csv(std::ostream& out, const std::vector<DomainReport>& rows) {
  out << "domain,utterances,precision,recall,f1,similarity\n";
  for (const auto& r : rows)
    out << r.domain << ',' << r.report.utterances << ',' << r.report.intents.precision << ','
        << r.report.intents.recall << ',' << r.report.intents.f1 << ',' << r.report.similarity.mean_cosine
        << '\n';
}

std::vector<TaggedUtterance> positives(const std::vector<TaggedUtterance>& corpus) {
  std::vector<TaggedUtterance> out;
  std::copy_if(corpus.begin(), corpus.end(), std::back_inserter(out), is_positive);
  return out;
}

std::vector<TaggedUtterance> proxy_corpus(const std::vector<Utterance>& utterances,
                                          const Lexicon& verbs, const Lexicon& nouns) {
  std::vector<TaggedUtterance> out;
  for (const auto& u : utterances) out.push_back(rule_based_proxy_tagger(u, verbs, nouns));
  return out;
}

Pipeline TrainedModels::pipeline(const RunConfig& config,
                                 std::shared_ptr<const EmbeddingTable> table) const {
  return Pipeline(std::move(table), existence, tagger, matcher, config.pairing,
                  config.tagger.decoder);
}

TrainedModels train_stage_two(const RunConfig& config, const std::vector<TaggedUtterance>& labeled,
                              std::shared_ptr<const EmbeddingTable> table,
                              const std::vector<TaggedUtterance>* proxy) {
  const auto pos = positives(labeled);
  if (pos.empty()) throw TrainingError("Stage II training needs utterances with intents");
  const bool use_proxy = proxy && !proxy->empty() && config.proxy_pretraining;
  std::vector<const std::vector<TaggedUtterance>*> corpora{&pos};
  if (use_proxy) corpora.push_back(proxy);
  auto tagger = std::make_shared<TaggerModel>(
      make_tagger(config.tagger, corpora, table, config.tagger_train.seed));
  if (use_proxy) pretrain(*tagger, *proxy, config.pretrain_train, config.adversarial);
  fine_tune(*tagger, pos, config.tagger_train, config.adversarial);
  TrainedModels m;
  m.tagger = tagger;
  if (config.pairing == Pairing::Mlp)
    m.matcher = std::make_shared<MatcherModel>(train_matcher(matcher_pairs(pos), *table, config.matcher));
  return m;
}

TrainedModels train_pipeline(const RunConfig& config, const std::vector<TaggedUtterance>& labeled,
                             std::shared_ptr<const EmbeddingTable> table,
                             const std::vector<TaggedUtterance>* proxy) {
  auto m = train_stage_two(config, labeled, table, proxy);
  m.existence = std::make_shared<ExistenceModel>(
      train_existence(to_existence(labeled), table, config.existence, config.existence_train));
  return m;
}

std::vector<SweepRow> training_size_sweep(const RunConfig& config,
                                          const std::vector<TaggedUtterance>& train,
                                          const std::vector<TaggedUtterance>& test,
                                          const std::vector<std::size_t>& sizes,
                                          std::shared_ptr<const EmbeddingTable> table) {
  if (sizes.empty()) throw ArgumentError("sweep needs at least one size");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw ArgumentError("sweep sizes must be ascending");
  const auto pool = shuffled(positives(train), Rng::mix(config.seed, 0x5ee9));
  if (sizes.back() > pool.size())
    throw ArgumentError("sweep size " + std::to_string(sizes.back()) + " exceeds the " +
                        std::to_string(pool.size()) + " labelled utterances available");
  if (sizes.front() == 0) throw ArgumentError("sweep sizes must be positive");
  const auto test_pos = positives(test);
  std::vector<SweepRow> rows;
  for (auto size : sizes) {
    std::vector<TaggedUtterance> subset(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    auto models = train_stage_two(config, subset, table);
    auto report = evaluate(models.pipeline(config, table), test_pos, config.experiments.match_mode);
    rows.push_back({size, report.intents, report.similarity, report.action_tags});
    log_info("sweep size " + std::to_string(size) + " intent F1 " + std::to_string(report.intents.f1));
  }
  return rows;
}

DomainResult leave_one_domain_out(const RunConfig& config,
                                  const std::vector<TaggedUtterance>& corpus,
                                  const std::string& domain,
                                  std::shared_ptr<const EmbeddingTable> table) {
  std::set<std::string> domains;
  for (const auto& t : corpus)
    if (!t.domain.empty()) domains.insert(t.domain);
  if (domains.size() < 2) throw ArgumentError("leave-one-domain-out needs at least two domains");
  if (!domains.count(domain)) throw ArgumentError("unknown domain '" + domain + "'");
  std::vector<TaggedUtterance> others, own;
  for (const auto& t : positives(corpus)) (t.domain == domain ? own : others).push_back(t);
  own = shuffled(std::move(own), Rng::mix(config.seed, fnv1a(domain)));
  const auto test_n = static_cast<std::size_t>(
      static_cast<double>(own.size()) * config.experiments.domain_test_fraction + 0.5);
  if (test_n == 0) throw ArgumentError("domain '" + domain + "' has no test examples");
  if (others.empty()) throw ArgumentError("no training data outside domain '" + domain + "'");
  std::vector<TaggedUtterance> test(own.begin(), own.begin() + static_cast<std::ptrdiff_t>(test_n));
  std::vector<TaggedUtterance> plus = others;
  plus.insert(plus.end(), own.begin() + static_cast<std::ptrdiff_t>(test_n), own.end());

  DomainResult r;
  r.domain = domain;
  r.test_size = test.size();
  auto held = train_stage_two(config, others, table);
  r.held_out = evaluate(held.pipeline(config, table), test, config.experiments.match_mode);
  auto with = train_stage_two(config, plus, table);
  r.plus = evaluate(with.pipeline(config, table), test, config.experiments.match_mode);
  return r;
}

void write_domain_csv(std::ostream& out, const std::vector<DomainResult>& rows) {
  out << "domain,intent_f1,intent_f1_plus,similarity,similarity_plus\n";
  for (const auto& r : rows)
    out << r.domain << ',' << r.held_out.intents.f1 << ',' << r.plus.intents.f1 << ','
        << r.held_out.similarity.mean_cosine << ',' << r.plus.similarity.mean_cosine << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "size,precision,recall,f1,similarity,action_f1\n";
  for (const auto& r : rows)
    out << r.size << ',' << r.intents.precision << ',' << r.intents.recall << ',' << r.intents.f1
        << ',' << r.similarity.mean_cosine << ',' << r.action_tags.f1 << '\n';
}

}  // namespace oid
