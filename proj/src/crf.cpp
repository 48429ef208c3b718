#include "oid/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "oid/error.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPenalty = -1e4;
constexpr int kMaxExactLength = 512;

double log_sum_exp(const nn::Vector& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

void check_scores(const CrfScores& s) {
  const auto m = s.emissions.rows();
  if (s.emissions.cols() < 1) throw ArgumentError("CRF input must have at least one position");
  if (m < 1 || s.transitions.rows() != m || s.transitions.cols() != m || s.start.size() != m ||
      s.stop.size() != m)
    throw ArgumentError("inconsistent CRF score shapes");
}

void check_labels(const CrfScores& s, const LabelSeq& y) {
  if (static_cast<int>(y.size()) != s.length())
    throw ArgumentError("label sequence length " + std::to_string(y.size()) +
                        " does not match input length " + std::to_string(s.length()));
  for (int label : y)
    if (label < 0 || label >= s.num_labels())
      throw ArgumentError("label id " + std::to_string(label) + " out of range");
}

// Forward (alpha) and backward (beta) tables in log space, m x n.
struct ForwardBackward {
  nn::Matrix alpha;
  nn::Matrix beta;
  double log_z = 0.0;
};

ForwardBackward forward_backward(const CrfScores& s) {
  const int m = s.num_labels();
  const int n = s.length();
  ForwardBackward fb{nn::Matrix(m, n), nn::Matrix(m, n), 0.0};
  fb.alpha.col(0) = s.start + s.emissions.col(0);
  for (int t = 1; t < n; ++t)
    for (int y = 0; y < m; ++y)
      fb.alpha(y, t) = log_sum_exp(fb.alpha.col(t - 1) + s.transitions.col(y)) + s.emissions(y, t);
  fb.beta.col(n - 1) = s.stop;
  for (int t = n - 2; t >= 0; --t)
    for (int y = 0; y < m; ++y)
      fb.beta(y, t) = log_sum_exp(s.transitions.row(y).transpose() + s.emissions.col(t + 1) +
                                  fb.beta.col(t + 1));
  fb.log_z = log_sum_exp(fb.alpha.col(n - 1) + s.stop);
  return fb;
}

// Constraint bookkeeping shared by both decoders. While a partial labelling
// stays completable, a window is satisfied iff the last ACTION so far falls at
// or after its start, so (has_action, has_object, last_action) is a
// sufficient state.
struct Window {
  int start;
  int end;
};

struct PathState {
  bool has_action = false;
  bool has_object = false;
  int last_action = -1;
  bool dead = false;
};

class ConstraintTracker {
 public:
  ConstraintTracker(int n, bool pair, std::vector<Window> windows)
      : n_(n), pair_(pair), windows_(std::move(windows)) {
    std::sort(windows_.begin(), windows_.end(),
              [](const Window& a, const Window& b) { return a.end < b.end; });
  }

  bool trivial() const { return !pair_ && windows_.empty(); }

  PathState step(PathState st, int pos, TagLabel label) const {
    if (label == TagLabel::Action) {
      st.has_action = true;
      st.last_action = pos;
    } else if (label == TagLabel::Object) {
      st.has_object = true;
    }
    for (const auto& w : windows_)
      if (w.end == pos + 1 && st.last_action < w.start) st.dead = true;
    return st;
  }

  // Can positions [t, n) still be labelled so every constraint holds?
  bool completable(const PathState& st, int t) const {
    if (st.dead) return false;
    int stabs = 0;
    int point = -1;
    for (const auto& w : windows_) {
      if (w.end <= t || st.last_action >= w.start) continue;
      const int lo = std::max(w.start, t);
      if (lo >= w.end) return false;
      if (point < lo) {
        point = w.end - 1;
        ++stabs;
      }
    }
    const int remaining = n_ - t;
    if (!pair_) return true;
    if (stabs == 0) return st.has_action == st.has_object || remaining >= 1;
    return st.has_object || remaining - stabs >= 1;
  }

 private:
  int n_;
  bool pair_;
  std::vector<Window> windows_;
};

std::vector<Window> clip_windows(const std::vector<IndicatorWindow>& in, int n) {
  std::vector<Window> out;
  for (const auto& w : in) {
    const int lo = std::clamp(w.position, 0, n);
    const int hi = std::clamp(w.position + std::max(w.length, 0), 0, n);
    if (lo < hi) out.push_back({lo, hi});
  }
  return out;
}

// Builds the tracker, dropping windows when they cannot be met at all.
ConstraintTracker make_tracker(int n, const ConstraintSet& c, bool& dropped) {
  ConstraintTracker full(n, c.pair_existence, clip_windows(c.indicator_windows, n));
  dropped = false;
  if (full.completable(PathState{}, 0)) return full;
  dropped = true;
  return ConstraintTracker(n, c.pair_existence, {});
}

struct Hypothesis {
  LabelSeq labels;
  double score = 0.0;
  double penalty = 0.0;
  PathState state;
};

class BranchAndBound {
 public:
  BranchAndBound(const CrfScores& s, const ConstraintTracker& tracker, TagScheme scheme)
      : s_(s), tracker_(tracker), scheme_(scheme), m_(s.num_labels()), n_(s.length()) {
    suffix_ = nn::Matrix(m_, n_);
    suffix_.col(n_ - 1) = s.emissions.col(n_ - 1) + s.stop;
    for (int t = n_ - 2; t >= 0; --t)
      for (int y = 0; y < m_; ++y)
        suffix_(y, t) = s.emissions(y, t) +
                        (s.transitions.row(y).transpose() + suffix_.col(t + 1)).maxCoeff();
  }

  bool solve(LabelSeq& best, double& best_score) {
    current_.assign(static_cast<std::size_t>(n_), 0);
    best_score_ = kNegInf;
    search(0, -1, 0.0, PathState{});
    if (!found_) return false;
    best = best_;
    best_score = best_score_;
    return true;
  }

 private:
  void search(int t, int prev, double prefix, const PathState& st) {
    struct Child {
      int label;
      double bound;
    };
    std::vector<Child> children;
    for (int y = 0; y < m_; ++y) {
      const double link = t == 0 ? s_.start(y) : s_.transitions(prev, y);
      children.push_back({y, prefix + link + suffix_(y, t)});
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const Child& a, const Child& b) { return a.bound > b.bound; });
    for (const auto& ch : children) {
      if (found_ && ch.bound <= best_score_) break;
      auto next = tracker_.step(st, t, base_label(scheme_, ch.label));
      if (!tracker_.completable(next, t + 1)) continue;
      const double link = t == 0 ? s_.start(ch.label) : s_.transitions(prev, ch.label);
      const double score = prefix + link + s_.emissions(ch.label, t);
      current_[static_cast<std::size_t>(t)] = ch.label;
      if (t + 1 == n_) {
        const double total = score + s_.stop(ch.label);
        if (!found_ || total > best_score_) {
          found_ = true;
          best_score_ = total;
          best_ = current_;
        }
      } else {
        search(t + 1, ch.label, score, next);
      }
    }
  }

  const CrfScores& s_;
  const ConstraintTracker& tracker_;
  TagScheme scheme_;
  int m_;
  int n_;
  nn::Matrix suffix_;
  LabelSeq current_;
  LabelSeq best_;
  double best_score_ = kNegInf;
  bool found_ = false;
};

}  // namespace

CrfParams make_crf_params(int input_dim, int num_labels, Rng& rng, const std::string& prefix) {
  CrfParams p{nn::make_parameter(prefix + "weight", num_labels, input_dim),
              nn::make_parameter(prefix + "bias", num_labels, 1),
              nn::make_parameter(prefix + "transitions", num_labels, num_labels),
              nn::make_parameter(prefix + "start", num_labels, 1),
              nn::make_parameter(prefix + "stop", num_labels, 1)};
  nn::init_glorot(p.weight, rng);
  return p;
}

CrfScores crf_scores(const nn::Matrix& z, const CrfParams& p) {
  if (z.rows() != p.input_dim())
    throw ArgumentError("CRF input dimension " + std::to_string(z.rows()) + ", expected " +
                        std::to_string(p.input_dim()));
  CrfScores s;
  s.emissions = (p.weight.value * z).colwise() + p.bias.value.col(0);
  s.transitions = p.transitions.value;
  s.start = p.start.value.col(0);
  s.stop = p.stop.value.col(0);
  return s;
}

double sequence_score(const CrfScores& s, const LabelSeq& y) {
  check_scores(s);
  check_labels(s, y);
  double total = s.start(y.front()) + s.stop(y.back());
  for (std::size_t t = 0; t < y.size(); ++t) {
    total += s.emissions(y[t], static_cast<nn::Index>(t));
    if (t > 0) total += s.transitions(y[t - 1], y[t]);
  }
  return total;
}

double log_partition(const CrfScores& s) {
  check_scores(s);
  return forward_backward(s).log_z;
}

double log_likelihood(const CrfScores& s, const LabelSeq& y) {
  check_scores(s);
  check_labels(s, y);
  return sequence_score(s, y) - log_partition(s);
}

double log_likelihood(const nn::Matrix& z, const LabelSeq& y, const CrfParams& params) {
  if (z.cols() != static_cast<nn::Index>(y.size()))
    throw ArgumentError("label sequence length " + std::to_string(y.size()) +
                        " does not match input length " + std::to_string(z.cols()));
  return log_likelihood(crf_scores(z, params), y);
}

nn::Var crf_nll(nn::Var emissions, nn::Var transitions, nn::Var start, nn::Var stop,
                const LabelSeq& y) {
  CrfScores s{emissions.value(), transitions.value(), start.value().col(0), stop.value().col(0)};
  check_scores(s);
  check_labels(s, y);
  auto fb = forward_backward(s);
  const double nll = fb.log_z - sequence_score(s, y);
  const int ie = emissions.id, it = transitions.id, is = start.id, ip = stop.id;
  return emissions.graph->record(
      nn::Matrix::Constant(1, 1, nll), {emissions, transitions, start, stop},
      [ie, it, is, ip, y, s = std::move(s), fb = std::move(fb)](nn::Graph& g, int self) {
        const double up = g.grad_ref(self)(0, 0);
        const int m = s.num_labels();
        const int n = s.length();
        nn::Matrix unary = ((fb.alpha + fb.beta).array() - fb.log_z).exp().matrix();
        nn::Matrix d_emit = unary;
        nn::Matrix d_trans = nn::Matrix::Zero(m, m);
        for (int t = 0; t < n; ++t) {
          d_emit(y[static_cast<std::size_t>(t)], t) -= 1.0;
          if (t == 0) continue;
          for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
              d_trans(a, b) += std::exp(fb.alpha(a, t - 1) + s.transitions(a, b) +
                                        s.emissions(b, t) + fb.beta(b, t) - fb.log_z);
          d_trans(y[static_cast<std::size_t>(t) - 1], y[static_cast<std::size_t>(t)]) -= 1.0;
        }
        nn::Matrix d_start = unary.col(0);
        d_start(y.front(), 0) -= 1.0;
        nn::Matrix d_stop = unary.col(n - 1);
        d_stop(y.back(), 0) -= 1.0;
        g.accumulate(ie, up * d_emit);
        g.accumulate(it, up * d_trans);
        g.accumulate(is, up * d_start);
        g.accumulate(ip, up * d_stop);
      });
}

nn::Var crf_nll(nn::Graph& graph, nn::Var z, const CrfParams& p, const LabelSeq& y) {
  auto emissions = nn::affine(graph.param(p.weight), z, graph.param(p.bias));
  return crf_nll(emissions, graph.param(p.transitions), graph.param(p.start), graph.param(p.stop),
                 y);
}

LabelSeq viterbi(const CrfScores& s) {
  check_scores(s);
  const int m = s.num_labels();
  const int n = s.length();
  nn::Matrix delta(m, n);
  Eigen::MatrixXi back(m, n);
  delta.col(0) = s.start + s.emissions.col(0);
  for (int t = 1; t < n; ++t) {
    for (int y = 0; y < m; ++y) {
      int arg = 0;
      double best = kNegInf;
      for (int p = 0; p < m; ++p) {
        const double v = delta(p, t - 1) + s.transitions(p, y);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
      delta(y, t) = best + s.emissions(y, t);
      back(y, t) = arg;
    }
  }
  LabelSeq out(static_cast<std::size_t>(n));
  int arg = 0;
  double best = kNegInf;
  for (int y = 0; y < m; ++y) {
    const double v = delta(y, n - 1) + s.stop(y);
    if (v > best) {
      best = v;
      arg = y;
    }
  }
  for (int t = n - 1; t >= 0; --t) {
    out[static_cast<std::size_t>(t)] = arg;
    if (t > 0) arg = back(arg, t);
  }
  return out;
}

LabelSeq viterbi(const nn::Matrix& z, const CrfParams& params) {
  return viterbi(crf_scores(z, params));
}

std::vector<IndicatorWindow> find_indicator_windows(const Utterance& u,
                                                    const std::vector<std::string>& phrases,
                                                    int window_len) {
  std::vector<std::string> lowered;
  for (const auto& t : u.tokens) lowered.push_back(lowercase(t));
  std::vector<IndicatorWindow> out;
  for (const auto& phrase : phrases) {
    const auto words = tokenize(lowercase(phrase)).tokens;
    if (words.empty() || words.size() > lowered.size()) continue;
    for (std::size_t i = 0; i + words.size() <= lowered.size(); ++i) {
      if (std::equal(words.begin(), words.end(), lowered.begin() + static_cast<std::ptrdiff_t>(i)))
        out.push_back({static_cast<int>(i + words.size()), window_len});
    }
  }
  std::sort(out.begin(), out.end(), [](const IndicatorWindow& a, const IndicatorWindow& b) {
    return a.position != b.position ? a.position < b.position : a.length < b.length;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const IndicatorWindow& a, const IndicatorWindow& b) {
                          return a.position == b.position && a.length == b.length;
                        }),
            out.end());
  // Phrases that end at the last token open an empty window.
  std::erase_if(out, [&](const IndicatorWindow& w) {
    return w.position >= static_cast<int>(u.size());
  });
  return out;
}

bool satisfies(const LabelSeq& y, const ConstraintSet& c, TagScheme scheme) {
  const int n = static_cast<int>(y.size());
  ConstraintTracker tracker(n, c.pair_existence, clip_windows(c.indicator_windows, n));
  PathState st;
  for (int t = 0; t < n; ++t) st = tracker.step(st, t, base_label(scheme, y[static_cast<std::size_t>(t)]));
  return tracker.completable(st, n);
}

DecodeResult beam_decode_constrained(const CrfScores& s, const ConstraintSet& c, int beam_width,
                                     TagScheme scheme) {
  check_scores(s);
  if (beam_width < 1) throw ArgumentError("beam_width must be at least 1");
  const int m = s.num_labels();
  const int n = s.length();
  DecodeResult result;
  const auto tracker = make_tracker(n, c, result.windows_dropped);

  std::vector<Hypothesis> beam{Hypothesis{}};
  for (int t = 0; t < n; ++t) {
    std::vector<Hypothesis> next;
    next.reserve(beam.size() * static_cast<std::size_t>(m));
    for (const auto& h : beam) {
      for (int y = 0; y < m; ++y) {
        Hypothesis e;
        e.labels = h.labels;
        e.labels.push_back(y);
        e.score = h.score + s.emissions(y, t) +
                  (t == 0 ? s.start(y) : s.transitions(h.labels.back(), y));
        if (t + 1 == n) e.score += s.stop(y);
        e.state = tracker.step(h.state, t, base_label(scheme, y));
        e.penalty = h.penalty;
        if (h.penalty == 0.0 && !tracker.completable(e.state, t + 1)) e.penalty = kPenalty;
        next.push_back(std::move(e));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return a.score + a.penalty > b.score + b.penalty;
    });
    if (static_cast<int>(next.size()) > beam_width) next.resize(static_cast<std::size_t>(beam_width));
    beam = std::move(next);
  }
  for (const auto& h : beam) {
    if (h.penalty == 0.0) {
      result.labels = h.labels;
      result.score = h.score;
      return result;
    }
  }
  result.fallback = true;
  result.labels.assign(static_cast<std::size_t>(n), label_id(scheme, TagLabel::None, true));
  if (scheme == TagScheme::Bio)
    for (int t = 1; t < n; ++t)
      result.labels[static_cast<std::size_t>(t)] = label_id(scheme, TagLabel::None, false);
  result.score = sequence_score(s, result.labels);
  return result;
}

DecodeResult ilp_decode_constrained(const CrfScores& s, const ConstraintSet& c, TagScheme scheme) {
  check_scores(s);
  if (s.length() > kMaxExactLength)
    throw ArgumentError("exact constrained decoding supports at most " +
                        std::to_string(kMaxExactLength) + " tokens");
  DecodeResult result;
  const auto tracker = make_tracker(s.length(), c, result.windows_dropped);
  if (tracker.trivial()) {
    result.labels = viterbi(s);
    result.score = sequence_score(s, result.labels);
    return result;
  }
  BranchAndBound bb(s, tracker, scheme);
  if (!bb.solve(result.labels, result.score))
    throw ArgumentError("constraint set has no satisfying labelling");
  return result;
}

LatticeGraph build_lattice(const CrfScores& s) {
  check_scores(s);
  LatticeGraph g;
  g.n = s.length();
  g.m = s.num_labels();
  g.edges.reserve(static_cast<std::size_t>((g.n - 1) * g.m * g.m + 2 * g.m));
  for (int y = 0; y < g.m; ++y)
    g.edges.push_back({g.source(), g.node(0, y), s.start(y) + s.emissions(y, 0)});
  for (int i = 1; i < g.n; ++i)
    for (int p = 0; p < g.m; ++p)
      for (int y = 0; y < g.m; ++y)
        g.edges.push_back({g.node(i - 1, p), g.node(i, y), s.transitions(p, y) + s.emissions(y, i)});
  for (int y = 0; y < g.m; ++y) g.edges.push_back({g.node(g.n - 1, y), g.sink(), s.stop(y)});
  return g;
}

LatticeGraph build_lattice(int n, int m, const nn::Matrix& z, const CrfParams& params) {
  if (n < 1 || m < 1) throw ArgumentError("lattice needs n, m >= 1");
  auto s = crf_scores(z, params);
  if (s.length() != n || s.num_labels() != m)
    throw ArgumentError("lattice dimensions do not match the CRF inputs");
  return build_lattice(s);
}

LabelSeq longest_path(const LatticeGraph& g) {
  // Node ids are already a topological order.
  const int nodes = g.node_count();
  std::vector<double> dist(static_cast<std::size_t>(nodes), kNegInf);
  std::vector<int> pred(static_cast<std::size_t>(nodes), -1);
  dist[0] = 0.0;
  std::vector<std::vector<const LatticeEdge*>> incoming(static_cast<std::size_t>(nodes));
  for (const auto& e : g.edges) incoming[static_cast<std::size_t>(e.to)].push_back(&e);
  for (int v = 1; v < nodes; ++v) {
    for (const auto* e : incoming[static_cast<std::size_t>(v)]) {
      const double d = dist[static_cast<std::size_t>(e->from)] + e->weight;
      if (d > dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = d;
        pred[static_cast<std::size_t>(v)] = e->from;
      }
    }
  }
  LabelSeq out(static_cast<std::size_t>(g.n));
  for (int v = pred[static_cast<std::size_t>(g.sink())]; v > 0; v = pred[static_cast<std::size_t>(v)]) {
    const int i = (v - 1) / g.m;
    out[static_cast<std::size_t>(i)] = (v - 1) % g.m;
  }
  return out;
}

void write_lp(std::ostream& out, const LatticeGraph& g, const ConstraintSet& c, TagScheme scheme) {
  auto var = [](int k) { return "x" + std::to_string(k); };
  auto label_of = [&](int node) { return base_label(scheme, (node - 1) % g.m); };
  auto position_of = [&](int node) { return (node - 1) / g.m; };
  auto into = [&](auto pred) {
    std::string terms;
    for (int k = 0; k < g.edge_count(); ++k) {
      const auto& e = g.edges[static_cast<std::size_t>(k)];
      if (e.to != g.sink() && pred(e.to)) terms += (terms.empty() ? "" : " + ") + var(k);
    }
    return terms;
  };

  out.precision(17);
  out << "\\ max-score source-sink path over the tag lattice\nMaximize\n obj:";
  for (int k = 0; k < g.edge_count(); ++k) {
    const double w = g.edges[static_cast<std::size_t>(k)].weight;
    out << (w < 0 ? " - " : " + ") << std::abs(w) << " " << var(k);
  }
  out << "\nSubject To\n";
  std::string src;
  for (int k = 0; k < g.edge_count(); ++k)
    if (g.edges[static_cast<std::size_t>(k)].from == g.source()) src += (src.empty() ? "" : " + ") + var(k);
  out << " source: " << src << " = 1\n";
  for (int v = 1; v < g.sink(); ++v) {
    out << " flow" << v << ":";
    for (int k = 0; k < g.edge_count(); ++k) {
      const auto& e = g.edges[static_cast<std::size_t>(k)];
      if (e.to == v) out << " + " << var(k);
      if (e.from == v) out << " - " << var(k);
    }
    out << " = 0\n";
  }
  if (c.pair_existence) {
    const auto actions = into([&](int v) { return label_of(v) == TagLabel::Action; });
    const auto objects = into([&](int v) { return label_of(v) == TagLabel::Object; });
    out << " pair_a_hi: " << actions << " - " << g.n << " u <= 0\n";
    out << " pair_a_lo: " << actions << " - u >= 0\n";
    out << " pair_o_hi: " << objects << " - " << g.n << " u <= 0\n";
    out << " pair_o_lo: " << objects << " - u >= 0\n";
  }
  int w_index = 0;
  for (const auto& w : clip_windows(c.indicator_windows, g.n)) {
    const auto terms = into([&](int v) {
      const int i = position_of(v);
      return label_of(v) == TagLabel::Action && i >= w.start && i < w.end;
    });
    out << " window" << w_index++ << ": " << terms << " >= 1\n";
  }
  out << "Binary\n";
  for (int k = 0; k < g.edge_count(); ++k) out << " " << var(k) << "\n";
  if (c.pair_existence) out << " u\n";
  out << "End\n";
}

}  // namespace oid
