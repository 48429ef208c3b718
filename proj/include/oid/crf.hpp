#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oid/nn/graph.hpp"
#include "oid/types.hpp"

namespace oid {

/// Label id sequence. Ids follow the active TagScheme.
using LabelSeq = std::vector<int>;

/// Emission map plus pairwise transition scores with virtual START/STOP.
struct CrfParams {
  nn::Parameter weight;       // m x D
  nn::Parameter bias;         // m x 1
  nn::Parameter transitions;  // m x m, row = previous label, col = current
  nn::Parameter start;        // m x 1
  nn::Parameter stop;         // m x 1

  int num_labels() const { return static_cast<int>(weight.value.rows()); }
  int input_dim() const { return static_cast<int>(weight.value.cols()); }
  nn::ParameterRefs refs() { return {&weight, &bias, &transitions, &start, &stop}; }
};

CrfParams make_crf_params(int input_dim, int num_labels, Rng& rng, const std::string& prefix = "crf.");

/// Log-potentials of one sequence. Decoders work on these so they can be
/// driven by arbitrary scores, not only a trained layer.
struct CrfScores {
  nn::Matrix emissions;    // m x n
  nn::Matrix transitions;  // m x m
  nn::Vector start;
  nn::Vector stop;

  int num_labels() const { return static_cast<int>(emissions.rows()); }
  int length() const { return static_cast<int>(emissions.cols()); }
};

CrfScores crf_scores(const nn::Matrix& z, const CrfParams& params);

/// Unnormalised score of a label path.
double sequence_score(const CrfScores& s, const LabelSeq& y);
/// log Z by the forward recursion in log space.
double log_partition(const CrfScores& s);
/// log P(y | z); throws ArgumentError on length mismatch or empty input.
double log_likelihood(const CrfScores& s, const LabelSeq& y);
double log_likelihood(const nn::Matrix& z, const LabelSeq& y, const CrfParams& params);

/// Negative log-likelihood node on the tape. `emissions` is m x n.
nn::Var crf_nll(nn::Var emissions, nn::Var transitions, nn::Var start, nn::Var stop,
                const LabelSeq& y);
/// Emission projection plus NLL in one call.
nn::Var crf_nll(nn::Graph& graph, nn::Var z, const CrfParams& params, const LabelSeq& y);

/// Exact argmax. Ties go to the smaller label id.
LabelSeq viterbi(const CrfScores& s);
LabelSeq viterbi(const nn::Matrix& z, const CrfParams& params);

struct IndicatorWindow {
  int position = 0;
  int length = 5;
};

struct ConstraintSet {
  /// An ACTION occurs iff an OBJECT occurs.
  bool pair_existence = false;
  /// Each window must contain at least one ACTION. Overlapping windows are
  /// all enforced.
  std::vector<IndicatorWindow> indicator_windows;

  bool empty() const { return !pair_existence && indicator_windows.empty(); }
};

/// Windows opened right after each indicator phrase occurrence. Phrases are
/// matched case-insensitively on whole tokens.
std::vector<IndicatorWindow> find_indicator_windows(const Utterance& u,
                                                    const std::vector<std::string>& phrases,
                                                    int window_len = 5);

bool satisfies(const LabelSeq& y, const ConstraintSet& c, TagScheme scheme);

struct DecodeResult {
  LabelSeq labels;
  double score = 0.0;
  /// Beam found no satisfying survivor and fell back to all-NONE.
  bool fallback = false;
  /// Indicator windows were dropped because no sequence could satisfy them.
  bool windows_dropped = false;
};

DecodeResult beam_decode_constrained(const CrfScores& s, const ConstraintSet& c, int beam_width = 8,
                                     TagScheme scheme = TagScheme::Raw);
DecodeResult ilp_decode_constrained(const CrfScores& s, const ConstraintSet& c,
                                    TagScheme scheme = TagScheme::Raw);

struct LatticeEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

/// Source 0, node (i, y) = 1 + i*m + y, sink n*m + 1.
struct LatticeGraph {
  int n = 0;
  int m = 0;
  std::vector<LatticeEdge> edges;

  int node_count() const { return n * m + 2; }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int source() const { return 0; }
  int sink() const { return n * m + 1; }
  int node(int i, int y) const { return 1 + i * m + y; }
};

LatticeGraph build_lattice(const CrfScores& s);
LatticeGraph build_lattice(int n, int m, const nn::Matrix& z, const CrfParams& params);
/// Max-weight source-to-sink path, returned as labels. Ties go to the
/// smaller label id.
LabelSeq longest_path(const LatticeGraph& g);
/// The constrained decoding problem as a 0-1 program in LP file format, for
/// use with an external solver.
void write_lp(std::ostream& out, const LatticeGraph& g, const ConstraintSet& c,
              TagScheme scheme = TagScheme::Raw);

}  // namespace oid
