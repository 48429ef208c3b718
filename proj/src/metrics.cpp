#include "oid/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "oid/error.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

bool same_intent(const Intent& a, const Intent& b, IntentMatch mode) {
  if (mode == IntentMatch::ExactSpan)
    return a.action.start == b.action.start && a.action.end == b.action.end &&
           a.object.start == b.object.start && a.object.end == b.object.end;
  return lowercase(a.action.surface) == lowercase(b.action.surface) &&
         lowercase(a.object.surface) == lowercase(b.object.surface);
}

std::size_t count_matches(const std::vector<Intent>& pred, const std::vector<Intent>& gold,
                          IntentMatch mode) {
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pred[a].score > pred[b].score; });
  std::vector<bool> used(gold.size(), false);
  std::size_t tp = 0;
  for (auto i : order) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (!used[j] && same_intent(pred[i], gold[j], mode)) {
        used[j] = true;
        ++tp;
        break;
      }
    }
  }
  return tp;
}

// Sum of matched cosines for one utterance.
double utterance_similarity(const std::vector<Intent>& pred, const std::vector<Intent>& gold,
                            const EmbeddingTable& table, SimilarityResult& acc) {
  std::vector<Eigen::VectorXd> gv(gold.size()), pv(pred.size());
  std::vector<bool> g_ok(gold.size()), p_ok(pred.size());
  for (std::size_t j = 0; j < gold.size(); ++j) {
    g_ok[j] = phrase_vector(gold[j].phrase(), table, gv[j], &acc.skipped_words);
    if (!g_ok[j]) ++acc.skipped_intents;
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p_ok[i] = phrase_vector(pred[i].phrase(), table, pv[i], &acc.skipped_words);
    if (!p_ok[i]) ++acc.skipped_intents;
  }
  struct Cand {
    double cosine;
    std::size_t g, p;
  };
  std::vector<Cand> cands;
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (!g_ok[j]) continue;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (!p_ok[i]) continue;
      const double denom = gv[j].norm() * pv[i].norm();
      cands.push_back({denom > 0 ? gv[j].dot(pv[i]) / denom : 0.0, j, i});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.cosine > b.cosine; });
  std::vector<bool> g_used(gold.size()), p_used(pred.size());
  double total = 0.0;
  for (const auto& c : cands) {
    if (g_used[c.g] || p_used[c.p]) continue;
    g_used[c.g] = p_used[c.p] = true;
    total += c.cosine;
  }
  return total;
}

}  // namespace

PrfResult make_prf(std::size_t tp, std::size_t predicted, std::size_t gold) {
  if (tp > predicted || tp > gold) throw ArgumentError("true positives exceed a denominator");
  PrfResult r;
  r.true_positives = tp;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  r.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  const double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

PrfResult tag_prf(const std::vector<TagLabel>& pred, const std::vector<TagLabel>& gold,
                  TagLabel label) {
  return tag_prf(std::vector<std::vector<TagLabel>>{pred}, std::vector<std::vector<TagLabel>>{gold},
                 label);
}

PrfResult tag_prf(const std::vector<std::vector<TagLabel>>& pred,
                  const std::vector<std::vector<TagLabel>>& gold, TagLabel label) {
  if (pred.size() != gold.size()) throw ArgumentError("tag_prf: corpus sizes differ");
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t u = 0; u < pred.size(); ++u) {
    if (pred[u].size() != gold[u].size())
      throw ArgumentError("tag_prf: sequence " + std::to_string(u) + " has " +
                          std::to_string(pred[u].size()) + " predicted and " +
                          std::to_string(gold[u].size()) + " gold tags");
    for (std::size_t t = 0; t < pred[u].size(); ++t) {
      const bool p = pred[u][t] == label, g = gold[u][t] == label;
      tp += p && g;
      np += p;
      ng += g;
    }
  }
  return make_prf(tp, np, ng);
}

PrfResult intent_prf(const std::vector<Intent>& pred, const std::vector<Intent>& gold,
                     IntentMatch mode) {
  return make_prf(count_matches(pred, gold, mode), pred.size(), gold.size());
}

PrfResult intent_prf(const std::vector<std::vector<Intent>>& pred,
                     const std::vector<std::vector<Intent>>& gold, IntentMatch mode) {
  if (pred.size() != gold.size()) throw ArgumentError("intent_prf: corpus sizes differ");
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t u = 0; u < pred.size(); ++u) {
    tp += count_matches(pred[u], gold[u], mode);
    np += pred[u].size();
    ng += gold[u].size();
  }
  return make_prf(tp, np, ng);
}

bool phrase_vector(const std::string& phrase, const EmbeddingTable& table, Eigen::VectorXd& out,
                   std::size_t* skipped) {
  std::istringstream words(phrase);
  std::string w;
  int count = 0;
  out = Eigen::VectorXd::Zero(table.dimension());
  while (words >> w) {
    if (!table.contains(w)) {
      if (skipped) ++*skipped;
      continue;
    }
    out += table.lookup(w);
    ++count;
  }
  if (count == 0) return false;
  out /= count;
  return true;
}

SimilarityResult semantic_similarity(const std::vector<Intent>& pred,
                                     const std::vector<Intent>& gold, const EmbeddingTable& table) {
  return semantic_similarity(std::vector<std::vector<Intent>>{pred},
                             std::vector<std::vector<Intent>>{gold}, table);
}

SimilarityResult semantic_similarity(const std::vector<std::vector<Intent>>& pred,
                                     const std::vector<std::vector<Intent>>& gold,
                                     const EmbeddingTable& table) {
  if (pred.size() != gold.size()) throw ArgumentError("semantic_similarity: corpus sizes differ");
  SimilarityResult r;
  double total = 0.0;
  std::size_t predicted = 0;
  for (std::size_t u = 0; u < pred.size(); ++u) {
    total += utterance_similarity(pred[u], gold[u], table, r);
    r.gold_count += gold[u].size();
    predicted += pred[u].size();
  }
  if (r.gold_count == 0) r.mean_cosine = predicted == 0 ? 1.0 : 0.0;
  else r.mean_cosine = total / static_cast<double>(r.gold_count);
  return r;
}

}  // namespace oid
