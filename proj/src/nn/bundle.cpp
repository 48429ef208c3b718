#include "oid/nn/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "oid/error.hpp"

namespace oid::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "bundle I/O assumes a little-endian host");

constexpr char kMagic[8] = {'O', 'I', 'D', 'B', 'U', 'N', 'D', 'L'};

template <typename T>
void put_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get_raw(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value))
    throw ModelError("truncated model bundle");
  return value;
}

void put_string(std::ostream& out, const std::string& s, bool wide) {
  if (wide) put_raw<std::uint64_t>(out, s.size());
  else put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, bool wide) {
  const std::uint64_t n = wide ? get_raw<std::uint64_t>(in) : get_raw<std::uint32_t>(in);
  if (n > (1ULL << 32)) throw ModelError("corrupt model bundle (string length)");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw ModelError("truncated model bundle");
  return s;
}

}  // namespace

void ModelBundle::put(const ParameterRefs& params) {
  for (const auto* p : params) tensors[p->name] = p->value;
}

void ModelBundle::get(const ParameterRefs& params) const {
  for (auto* p : params) {
    const Matrix& t = tensor(p->name);
    if (t.rows() != p->value.rows() || t.cols() != p->value.cols())
      throw ModelError("tensor '" + p->name + "' has shape " + std::to_string(t.rows()) + "x" +
                       std::to_string(t.cols()) + ", expected " +
                       std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    p->value = t;
  }
}

const Matrix& ModelBundle::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ModelError("bundle has no tensor '" + name + "'");
  return it->second;
}

void write_bundle(const ModelBundle& b, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_raw<std::uint32_t>(out, ModelBundle::kVersion);
  put_string(out, b.kind, false);
  put_string(out, b.config.dump(), true);
  put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(b.tensors.size()));
  for (const auto& [name, m] : b.tensors) {
    put_string(out, name, false);
    put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_raw<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  }
  if (!out) throw IoError("failed writing model bundle");
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_bundle(bundle, out);
}

ModelBundle read_bundle(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ModelError("not a model bundle");
  const auto version = get_raw<std::uint32_t>(in);
  if (version != ModelBundle::kVersion)
    throw ModelError("unsupported bundle version " + std::to_string(version));
  ModelBundle b;
  b.kind = get_string(in, false);
  try {
    b.config = nlohmann::json::parse(get_string(in, true));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt bundle config: ") + e.what());
  }
  const auto count = get_raw<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto name = get_string(in, false);
    const auto rows = get_raw<std::uint64_t>(in);
    const auto cols = get_raw<std::uint64_t>(in);
    if (rows > (1ULL << 28) || cols > (1ULL << 28)) throw ModelError("corrupt tensor shape");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size()))))
      throw ModelError("truncated tensor '" + name + "'");
    b.tensors.emplace(std::move(name), std::move(m));
  }
  return b;
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model bundle " + path.string());
  return read_bundle(in);
}

}  // namespace oid::nn
