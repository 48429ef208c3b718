#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oid/nn/graph.hpp"
#include "oid/types.hpp"

namespace oid {

struct AttentionHead {
  nn::Parameter query_weight, query_bias;
  nn::Parameter key_weight, key_bias;
  nn::Parameter value_weight, value_bias;
};

/// Multi-head self-attention. q, k and v are ReLU affine maps of the input.
struct AttentionParams {
  std::vector<AttentionHead> heads;
  int head_dim = 0;
  /// Adds the input back onto the attended output (needs P * d_h == input).
  bool residual = false;

  int num_heads() const { return static_cast<int>(heads.size()); }
  int output_dim() const { return num_heads() * head_dim; }
  int input_dim() const {
    return heads.empty() ? 0 : static_cast<int>(heads.front().query_weight.value.cols());
  }
  nn::ParameterRefs refs();
};

/// Default d_h is ceil(input_dim / heads), so the output may be padded a
/// little wider than the input.
AttentionParams make_attention_params(int input_dim, int heads, Rng& rng, int head_dim = 0,
                                      bool residual = false,
                                      const std::string& prefix = "attention.");

struct AttentionOutput {
  nn::Matrix z;                    // (P * d_h) x n
  std::vector<nn::Matrix> weights;  // per head, n x n; row i attends over j
};

/// Differentiable version; `weights` receives the per-head matrices when set.
nn::Var attend(nn::Graph& graph, nn::Var h, const AttentionParams& params,
               std::vector<nn::Matrix>* weights = nullptr);
AttentionOutput attend(const nn::Matrix& h, const AttentionParams& params);

struct AttentionRow {
  int head = 0;
  int i = 0;
  int j = 0;
  std::string token_i;
  std::string token_j;
  double weight = 0.0;
};

/// All (i, j) weights of one head, heaviest first; ties keep (i, j) order.
std::vector<AttentionRow> export_attention(const AttentionOutput& output, const Utterance& u,
                                           int head);

void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows);
std::vector<AttentionRow> read_attention_csv(std::istream& in);
void write_attention_csv(const std::filesystem::path& path, const std::vector<AttentionRow>& rows);
std::vector<AttentionRow> read_attention_csv(const std::filesystem::path& path);

}  // namespace oid
