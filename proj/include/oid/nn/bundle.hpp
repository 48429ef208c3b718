#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "json.hpp"
#include "oid/nn/graph.hpp"

namespace oid::nn {

/// Versioned container for a trained model: a kind tag, the configuration
/// that produced it and named parameter tensors.
///
/// Layout (little-endian):
///   "OIDBUNDL"  u32 version  u32 len + kind  u64 len + config JSON
///   u32 tensor count, then per tensor: u32 len + name, u64 rows, u64 cols,
///   rows*cols f64 values in column-major order.
struct ModelBundle {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  nlohmann::json config;
  std::map<std::string, Matrix> tensors;

  void put(const ParameterRefs& params);
  /// Copies stored tensors into `params`; throws ModelError when a tensor is
  /// missing or has the wrong shape.
  void get(const ParameterRefs& params) const;
  const Matrix& tensor(const std::string& name) const;
};

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
void write_bundle(const ModelBundle& bundle, std::ostream& out);
ModelBundle load_bundle(const std::filesystem::path& path);
ModelBundle read_bundle(std::istream& in);

}  // namespace oid::nn
