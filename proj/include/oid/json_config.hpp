#pragma once

#include <set>
#include <string>

#include "json.hpp"
#include "oid/error.hpp"

namespace oid {

/// Reads optional fields from a JSON object and rejects keys nobody asked
/// for. Call `finish()` once every field has been read.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string context)
      : json_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ArgumentError(context_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = json_.find(key);
    if (it == json_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError(context_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = json_.find(key);
    return it == json_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it)
      if (!seen_.count(it.key())) throw ArgumentError(context_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const nlohmann::json& json_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace oid
