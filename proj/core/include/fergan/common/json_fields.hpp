#pragma once

#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/common/error.hpp"

namespace fergan {

/// Reads optional fields of a JSON object over existing defaults. Keys that
/// were never asked for are rejected by finish(). Every failure is a
/// ConfigError naming `where` and the key.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename V>
  FieldReader& read(const char* key, V& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return *this;
    const auto& value = doc_.at(key);
    check(value, static_cast<V*>(nullptr), key);
    try {
      out = value.template get<V>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + ": field '" + key + "' has the wrong type");
    }
    return *this;
  }

  /// Optional fields accept null as "absent".
  template <typename V>
  FieldReader& read(const char* key, std::optional<V>& out) {
    seen_.insert(key);
    if (!doc_.contains(key)) return *this;
    if (doc_.at(key).is_null()) {
      out.reset();
      return *this;
    }
    V v{};
    read(key, v);
    out = v;
    return *this;
  }

  /// Nested object, or nullptr when the key is absent.
  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
    }
  }

  const std::string& where() const noexcept { return where_; }

 private:
  // nlohmann converts -1 or 2.5 to an unsigned integer without complaint.
  template <typename V>
  void check(const nlohmann::json& value, V*, const char* key) const {
    if constexpr (std::is_integral_v<V> && !std::is_same_v<V, bool>) {
      if (!value.is_number_integer()) throw ConfigError(where_ + ": field '" + key + "' must be an integer");
      if constexpr (std::is_unsigned_v<V>) {
        if (!value.is_number_unsigned() && value.template get<long long>() < 0) {
          throw ConfigError(where_ + ": field '" + key + "' must be nonnegative");
        }
      }
    }
  }
  template <typename V>
  void check(const nlohmann::json& value, std::vector<V>*, const char* key) const {
    if (!value.is_array()) throw ConfigError(where_ + ": field '" + key + "' must be an array");
    for (const auto& item : value) check(item, static_cast<V*>(nullptr), key);
  }

  const nlohmann::json& doc_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace fergan
