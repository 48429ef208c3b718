#include "oid/embeddings.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oid/error.hpp"
#include "oid/rng.hpp"
#include "oid/tokenizer.hpp"

namespace oid {

EmbeddingTable::EmbeddingTable(int dimension, UnkPolicy policy)
    : dimension_(dimension), policy_(policy) {
  if (dimension <= 0) throw ArgumentError("embedding dimension must be positive");
}

const Eigen::VectorXd* EmbeddingTable::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) it = index_.find(lowercase(word));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

bool EmbeddingTable::contains(std::string_view word) const { return find(word) != nullptr; }

Eigen::VectorXd EmbeddingTable::lookup(std::string_view word) const {
  if (const auto* v = find(word)) return *v;
  if (policy_ == UnkPolicy::Zero) return Eigen::VectorXd::Zero(dimension_);
  return hashed_vector(word, dimension_);
}

bool EmbeddingTable::insert(std::string word, const Eigen::VectorXd& vector) {
  if (vector.size() != dimension_)
    throw ArgumentError("vector for '" + word + "' has dimension " +
                        std::to_string(vector.size()) + ", table has " +
                        std::to_string(dimension_));
  if (index_.count(word)) return false;
  index_.emplace(word, vectors_.size());
  words_.push_back(std::move(word));
  vectors_.push_back(normalized_ ? oid::normalized(vector) : vector);
  return true;
}

void EmbeddingTable::normalize() {
  for (auto& v : vectors_) v = oid::normalized(v);
  normalized_ = true;
}

Eigen::VectorXd hashed_vector(std::string_view word, int dimension) {
  Rng rng(fnv1a(lowercase(word)));
  Eigen::VectorXd v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = rng.normal();
  return normalized(v);
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm == 0.0) return v;
  return v / norm;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, UnkPolicy policy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read embeddings file " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    values.clear();
    std::string field;
    while (fields >> field) {
      double x = 0.0;
      const auto* first = field.data();
      const auto* last = field.data() + field.size();
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || ptr != last)
        throw FormatError("bad number '" + field + "' in " + path.string(), line_no);
      values.push_back(x);
    }
    if (values.empty()) throw FormatError("line has no vector in " + path.string(), line_no);
    if (table.dimension() == 0) {
      table = EmbeddingTable(static_cast<int>(values.size()), policy);
    } else if (static_cast<int>(values.size()) != table.dimension()) {
      throw FormatError("expected " + std::to_string(table.dimension()) + " values, got " +
                            std::to_string(values.size()) + " in " + path.string(),
                        line_no);
    }
    table.insert(word, Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                          static_cast<Eigen::Index>(values.size())));
  }
  if (table.dimension() == 0) throw FormatError("embeddings file is empty: " + path.string());
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings file " + path.string());
  char buf[32];
  for (const auto& w : table.words()) {
    out << w;
    const auto v = table.lookup(w);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", v[i]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace oid
