#include "oid/attention.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "oid/error.hpp"

namespace oid {
namespace {

nn::Var projection(nn::Graph& g, nn::Var h, const nn::Parameter& w, const nn::Parameter& b) {
  return nn::relu(nn::affine(g.param(w), h, g.param(b)));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote in attention CSV", line_no);
  return fields;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw FormatError("bad number '" + s + "' in attention CSV", line_no);
  return v;
}

}  // namespace

nn::ParameterRefs AttentionParams::refs() {
  nn::ParameterRefs out;
  for (auto& h : heads)
    for (auto* p : {&h.query_weight, &h.query_bias, &h.key_weight, &h.key_bias, &h.value_weight,
                    &h.value_bias})
      out.push_back(p);
  return out;
}

AttentionParams make_attention_params(int input_dim, int heads, Rng& rng, int head_dim,
                                      bool residual, const std::string& prefix) {
  if (input_dim < 1) throw ArgumentError("attention input dimension must be positive");
  if (heads < 1) throw ArgumentError("attention needs at least one head");
  if (head_dim <= 0) head_dim = (input_dim + heads - 1) / heads;
  if (residual && head_dim * heads != input_dim)
    throw ArgumentError("residual attention needs heads * head_dim == input dimension");
  AttentionParams p;
  p.head_dim = head_dim;
  p.residual = residual;
  for (int k = 0; k < heads; ++k) {
    const std::string name = prefix + "head" + std::to_string(k) + ".";
    AttentionHead h;
    auto make = [&](const std::string& what) {
      auto w = nn::make_parameter(name + what + "_weight", head_dim, input_dim);
      nn::init_glorot(w, rng);
      return w;
    };
    h.query_weight = make("query");
    h.key_weight = make("key");
    h.value_weight = make("value");
    h.query_bias = nn::make_parameter(name + "query_bias", head_dim, 1);
    h.key_bias = nn::make_parameter(name + "key_bias", head_dim, 1);
    h.value_bias = nn::make_parameter(name + "value_bias", head_dim, 1);
    p.heads.push_back(std::move(h));
  }
  return p;
}

nn::Var attend(nn::Graph& g, nn::Var h, const AttentionParams& params,
               std::vector<nn::Matrix>* weights) {
  if (h.cols() < 1) throw ArgumentError("attention needs at least one token");
  if (params.heads.empty()) throw ArgumentError("attention has no heads");
  if (h.rows() != params.input_dim())
    throw ArgumentError("attention input dimension " + std::to_string(h.rows()) + ", expected " +
                        std::to_string(params.input_dim()));
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  std::vector<nn::Var> outputs;
  if (weights) weights->clear();
  for (const auto& head : params.heads) {
    auto q = projection(g, h, head.query_weight, head.query_bias);
    auto k = projection(g, h, head.key_weight, head.key_bias);
    auto v = projection(g, h, head.value_weight, head.value_bias);
    auto a = nn::softmax_rows(nn::scale(nn::matmul(nn::transpose(q), k), inv_scale));
    if (weights) weights->push_back(a.value());
    outputs.push_back(nn::matmul(v, nn::transpose(a)));
  }
  auto z = outputs.size() == 1 ? outputs.front() : nn::concat_rows(outputs);
  return params.residual ? nn::add(z, h) : z;
}

AttentionOutput attend(const nn::Matrix& h, const AttentionParams& params) {
  nn::Graph g;
  AttentionOutput out;
  out.z = attend(g, g.constant(h), params, &out.weights).value();
  return out;
}

std::vector<AttentionRow> export_attention(const AttentionOutput& output, const Utterance& u,
                                           int head) {
  if (head < 0 || head >= static_cast<int>(output.weights.size()))
    throw ArgumentError("attention head " + std::to_string(head) + " out of range (have " +
                        std::to_string(output.weights.size()) + ")");
  const auto& a = output.weights[static_cast<std::size_t>(head)];
  if (a.rows() != static_cast<nn::Index>(u.size()))
    throw ArgumentError("attention weights do not match the utterance length");
  std::vector<AttentionRow> rows;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      rows.push_back({head, i, j, u.tokens[static_cast<std::size_t>(i)],
                      u.tokens[static_cast<std::size_t>(j)], a(i, j)});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const AttentionRow& x, const AttentionRow& y) { return x.weight > y.weight; });
  return rows;
}

void write_attention_csv(std::ostream& out, const std::vector<AttentionRow>& rows) {
  out << "head,i,j,token_i,token_j,weight\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.weight);
    out << r.head << ',' << r.i << ',' << r.j << ',' << csv_field(r.token_i) << ','
        << csv_field(r.token_j) << ',' << buf << '\n';
  }
}

std::vector<AttentionRow> read_attention_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<AttentionRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("head,i,j,token_i,token_j,weight", 0) != 0)
        throw FormatError("missing attention CSV header", line_no);
      continue;
    }
    if (line.empty()) continue;
    auto f = split_csv_line(line, line_no);
    if (f.size() != 6) throw FormatError("expected 6 fields", line_no);
    rows.push_back({parse_number<int>(f[0], line_no), parse_number<int>(f[1], line_no),
                    parse_number<int>(f[2], line_no), f[3], f[4],
                    parse_number<double>(f[5], line_no)});
  }
  return rows;
}

void write_attention_csv(const std::filesystem::path& path, const std::vector<AttentionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_attention_csv(out, rows);
}

std::vector<AttentionRow> read_attention_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_attention_csv(in);
}

}  // namespace oid
