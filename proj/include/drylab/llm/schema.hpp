#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace drylab::llm {

/// Lightweight JSON-schema-like descriptor used to validate structured
/// agent output: required keys, enumerations, numeric ranges, array shapes.
/// Unknown object keys are tolerated.
class JsonSchema {
 public:
  enum class Type { Object, Array, String, Integer, Number, Boolean };

  static JsonSchema object(std::vector<std::pair<std::string, JsonSchema>> properties,
                           std::vector<std::string> required);
  static JsonSchema array(JsonSchema items, std::size_t min_items = 0);
  static JsonSchema string(bool allow_empty = false);
  static JsonSchema string_enum(std::vector<std::string> values);
  static JsonSchema integer(std::optional<double> minimum = std::nullopt,
                            std::optional<double> maximum = std::nullopt);
  static JsonSchema number(std::optional<double> minimum = std::nullopt,
                           std::optional<double> maximum = std::nullopt);
  static JsonSchema boolean();

  /// Validate a value; returns a list of human-readable violations with
  /// JSON-path-style locations. Empty list means valid.
  std::vector<std::string> validate(const nlohmann::json& value,
                                    const std::string& path = "$") const;

  /// Compact shape description suitable for inclusion in a prompt.
  std::string describe() const;

  Type type() const { return type_; }

 private:
  explicit JsonSchema(Type type) : type_(type) {}

  Type type_;
  std::vector<std::pair<std::string, JsonSchema>> properties_;
  std::vector<std::string> required_;
  std::shared_ptr<JsonSchema> items_;
  std::size_t min_items_ = 0;
  std::vector<std::string> enum_values_;
  std::optional<double> minimum_;
  std::optional<double> maximum_;
  bool allow_empty_ = false;
};

/// Find the first JSON value embedded in free-form completion text
/// (handles code fences and surrounding prose). Returns nullopt when no
/// parseable value is present.
std::optional<nlohmann::json> extract_json(const std::string& text);

}  // namespace drylab::llm
