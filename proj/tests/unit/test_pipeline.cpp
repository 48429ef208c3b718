#include <sstream>

#include "doctest.h"
#include "oid/error.hpp"
#include "oid/pipeline.hpp"
#include "test_support.hpp"

using namespace oid;

namespace {

std::vector<std::string> phrases(const Prediction& p) {
  std::vector<std::string> out;
  for (const auto& i : p.intents) out.push_back(i.phrase());
  return out;
}

const Pipeline& fixture_pipeline() {
  static const Pipeline p = [] {
    const auto& f = testing::trained_synthetic();
    return f.models.pipeline(f.config, f.table);
  }();
  return p;
}

}  // namespace

TEST_CASE("negatives are gated out") {
  const auto& f = testing::trained_synthetic();
  const auto& pipe = fixture_pipeline();
  std::size_t negatives = 0, rejected = 0;
  for (std::size_t i = 0; i < f.test.existence.size(); ++i) {
    if (f.test.existence[i].has_intent) continue;
    ++negatives;
    auto p = pipe.predict(f.test.existence[i].utterance);
    if (!p.has_intent) {
      ++rejected;
      CHECK(p.intents.empty());
      CHECK(p.p_intent < f.config.existence.threshold);
    }
  }
  REQUIRE(negatives > 0);
  CHECK(static_cast<double>(rejected) / static_cast<double>(negatives) > 0.9);
  CHECK(pipe.predict_all({}).empty());
  auto empty = pipe.predict(tokenize(""));
  CHECK(empty.intents.empty());
  CHECK(empty.tagged.tags.empty());
}

TEST_CASE("worked examples") {
  const auto& pipe = fixture_pipeline();
  auto seat = pipe.predict(tokenize("I would like to reserve a seat and request a special meal on my flight"));
  CHECK(seat.has_intent);
  CHECK(phrases(seat) == std::vector<std::string>{"reserve seat", "request special meal"});
  auto appt = pipe.predict(tokenize("I want to make an appointment"));
  CHECK(phrases(appt) == std::vector<std::string>{"make appointment"});
}

TEST_CASE("pipeline scores well on held-out synthetic data") {
  const auto& f = testing::trained_synthetic();
  auto report = evaluate(fixture_pipeline(), f.test.tagged);
  CHECK(report.utterances == f.test.tagged.size());
  CHECK(report.existence.f1 >= 0.95);
  CHECK(report.intents.f1 >= 0.85);
  auto j = to_json(report);
  CHECK(j.contains("intents"));
}

TEST_CASE("parallel prediction preserves order") {
  const auto& f = testing::trained_synthetic();
  std::vector<Utterance> utts;
  for (std::size_t i = 0; i < 40; ++i) utts.push_back(f.test.tagged[i].utterance);
  auto serial = fixture_pipeline().predict_all(utts, 1);
  auto parallel = fixture_pipeline().predict_all(utts, 3);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(to_json(serial[i]).dump() == to_json(parallel[i]).dump());
    CHECK(serial[i].tagged.utterance.text == utts[i].text);
  }
}

TEST_CASE("predictions round trip through the aggregate reader") {
  const auto& f = testing::trained_synthetic();
  std::vector<Utterance> utts;
  for (std::size_t i = 0; i < 30; ++i) utts.push_back(f.test.tagged[i].utterance);
  auto preds = fixture_pipeline().predict_all(utts, 1);
  std::stringstream jsonl;
  write_predictions(jsonl, preds);
  auto read = read_prediction_phrases(jsonl);
  std::size_t expected = 0;
  for (const auto& p : preds) expected += p.intents.size();
  CHECK(read.size() == expected);
}

TEST_CASE("aggregate intents") {
  auto rows = aggregate_intents({"book table", "cancel flight", "book table", "book table"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].intent == "book table");
  CHECK(rows[0].count == 3);
  CHECK(rows[1].count == 1);
  CHECK(rows[0].relative + rows[1].relative == doctest::Approx(1.0));
  CHECK(aggregate_intents({}).empty());
  auto ties = aggregate_intents({"b x", "a x"});
  CHECK(ties[0].intent == "a x");

  std::ostringstream csv;
  write_frequency_csv(csv, rows);
  CHECK(csv.str().find("book table,3") != std::string::npos);
  std::ostringstream bars;
  write_frequency_bars(bars, rows, 10);
  CHECK(bars.str().find("##########") != std::string::npos);
}

TEST_CASE("malformed prediction lines name the line") {
  std::stringstream in(
      "{\"id\":\"a\",\"intents\":[{\"action\":\"Book\",\"object\":\"Table\"}]}\n{broken\n");
  try {
    read_prediction_phrases(in);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream ok("{\"id\":\"a\",\"intents\":[{\"action\":\"Book\",\"object\":\"Table\"}]}\n\n");
  CHECK(read_prediction_phrases(ok) == std::vector<std::string>{"book table"});
}

TEST_CASE("experiment harness argument errors") {
  const auto& f = testing::trained_synthetic();
  auto cfg = f.config;
  std::vector<TaggedUtterance> one_domain;
  for (const auto& t : f.train.tagged)
    if (t.domain == f.train.tagged[0].domain) one_domain.push_back(t);
  CHECK_THROWS_AS(leave_one_domain_out(cfg, one_domain, one_domain[0].domain, f.table), ArgumentError);
  CHECK_THROWS_AS(leave_one_domain_out(cfg, f.train.tagged, "no-such-domain", f.table), ArgumentError);
  cfg.experiments.domain_test_fraction = 0.0;
  CHECK_THROWS_AS(leave_one_domain_out(cfg, f.train.tagged, f.train.tagged[0].domain, f.table), ArgumentError);
  CHECK_THROWS_AS(training_size_sweep(f.config, f.train.tagged, f.test.tagged, {100000}, f.table),
                  ArgumentError);
  CHECK_THROWS_AS(training_size_sweep(f.config, f.train.tagged, f.test.tagged, {50, 20}, f.table),
                  ArgumentError);
  CHECK_THROWS_AS(training_size_sweep(f.config, f.train.tagged, f.test.tagged, {}, f.table), ArgumentError);
}

TEST_CASE("per-domain evaluation") {
  const auto& f = testing::trained_synthetic();
  auto rows = evaluate_by_domain(fixture_pipeline(), f.test.tagged);
  REQUIRE(rows.size() >= 4);
  CHECK(rows.back().domain == "all");
  std::size_t total = 0;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) total += rows[k].report.utterances;
  CHECK(total == f.test.tagged.size());
  CHECK(rows.back().report.intents.f1 == evaluate(fixture_pipeline(), f.test.tagged).intents.f1);
  std::ostringstream csv;
  write_evaluation_csv(csv, rows);
  CHECK(csv.str().rfind("domain,utterances,precision,recall,f1,similarity\n", 0) == 0);
}

TEST_CASE("csv writers") {
  SweepRow row;
  row.size = 100;
  row.intents = make_prf(1, 2, 2);
  std::ostringstream sweep;
  write_sweep_csv(sweep, {row});
  CHECK(sweep.str().rfind("size,precision,recall,f1,similarity,action_f1\n100,", 0) == 0);
  DomainResult d;
  d.domain = "travel";
  std::ostringstream dom;
  write_domain_csv(dom, {d});
  const auto text = dom.str();
  CHECK(text == "domain,intent_f1,intent_f1_plus,similarity,similarity_plus\ntravel,0,0,0,0\n");
}
