#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace oid {

enum class UnkPolicy { Zero, HashedRandom };

/// Word -> dense vector map. Lookup is total: words missing from the table
/// resolve through the unknown-word policy. HashedRandom seeds a unit-norm
/// Gaussian vector from a stable hash of the lowercased word, so distinct
/// unknown words stay distinct and every lookup is reproducible.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, UnkPolicy policy);

  int dimension() const { return dimension_; }
  UnkPolicy unk_policy() const { return policy_; }
  void set_unk_policy(UnkPolicy policy) { policy_ = policy; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  /// True when the word (or its lowercased form) has a stored vector.
  bool contains(std::string_view word) const;
  Eigen::VectorXd lookup(std::string_view word) const;

  /// Keeps the first vector when the word is already present. Returns
  /// whether it was inserted.
  bool insert(std::string word, const Eigen::VectorXd& vector);

  /// Scales every stored vector to unit L2 norm (zero vectors stay zero).
  void normalize();
  bool normalized() const { return normalized_; }

 private:
  const Eigen::VectorXd* find(std::string_view word) const;

  int dimension_ = 0;
  UnkPolicy policy_ = UnkPolicy::HashedRandom;
  bool normalized_ = false;
  std::vector<std::string> words_;
  std::vector<Eigen::VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads "word v1 ... vd" lines. The first line fixes d; later lines with a
/// different count raise FormatError carrying the line number. Duplicate
/// words keep their first vector.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               UnkPolicy policy = UnkPolicy::HashedRandom);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Deterministic unit-norm vector for an unknown word.
Eigen::VectorXd hashed_vector(std::string_view word, int dimension);

/// Unit L2 scaling; a zero vector is returned unchanged.
Eigen::VectorXd normalized(const Eigen::VectorXd& v);

}  // namespace oid
