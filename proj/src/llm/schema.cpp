#include "drylab/llm/schema.hpp"

#include <cmath>

namespace drylab::llm {

using nlohmann::json;

JsonSchema JsonSchema::object(std::vector<std::pair<std::string, JsonSchema>> properties,
                              std::vector<std::string> required) {
  JsonSchema s(Type::Object);
  s.properties_ = std::move(properties);
  s.required_ = std::move(required);
  return s;
}

JsonSchema JsonSchema::array(JsonSchema items, std::size_t min_items) {
  JsonSchema s(Type::Array);
  s.items_ = std::make_shared<JsonSchema>(std::move(items));
  s.min_items_ = min_items;
  return s;
}

JsonSchema JsonSchema::string(bool allow_empty) {
  JsonSchema s(Type::String);
  s.allow_empty_ = allow_empty;
  return s;
}

JsonSchema JsonSchema::string_enum(std::vector<std::string> values) {
  JsonSchema s(Type::String);
  s.enum_values_ = std::move(values);
  return s;
}

JsonSchema JsonSchema::integer(std::optional<double> minimum, std::optional<double> maximum) {
  JsonSchema s(Type::Integer);
  s.minimum_ = minimum;
  s.maximum_ = maximum;
  return s;
}

JsonSchema JsonSchema::number(std::optional<double> minimum, std::optional<double> maximum) {
  JsonSchema s(Type::Number);
  s.minimum_ = minimum;
  s.maximum_ = maximum;
  return s;
}

JsonSchema JsonSchema::boolean() { return JsonSchema(Type::Boolean); }

std::vector<std::string> JsonSchema::validate(const json& value, const std::string& path) const {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& why) { errors.push_back(path + ": " + why); };

  switch (type_) {
    case Type::Object: {
      if (!value.is_object()) {
        fail("expected an object");
        return errors;
      }
      for (const auto& key : required_)
        if (!value.contains(key)) fail("missing required key '" + key + "'");
      for (const auto& [key, schema] : properties_) {
        if (!value.contains(key)) continue;
        auto sub = schema.validate(value.at(key), path + "." + key);
        errors.insert(errors.end(), sub.begin(), sub.end());
      }
      break;
    }
    case Type::Array: {
      if (!value.is_array()) {
        fail("expected an array");
        return errors;
      }
      if (value.size() < min_items_)
        fail("expected at least " + std::to_string(min_items_) + " item(s), got " +
             std::to_string(value.size()));
      for (std::size_t i = 0; i < value.size(); ++i) {
        auto sub = items_->validate(value.at(i), path + "[" + std::to_string(i) + "]");
        errors.insert(errors.end(), sub.begin(), sub.end());
      }
      break;
    }
    case Type::String: {
      if (!value.is_string()) {
        fail("expected a string");
        return errors;
      }
      const auto& s = value.get_ref<const std::string&>();
      if (!enum_values_.empty()) {
        bool hit = false;
        for (const auto& v : enum_values_)
          if (v == s) hit = true;
        if (!hit) {
          std::string allowed;
          for (const auto& v : enum_values_) {
            if (!allowed.empty()) allowed += ", ";
            allowed += "'" + v + "'";
          }
          fail("'" + s + "' is not one of " + allowed);
        }
      } else if (!allow_empty_ && s.find_first_not_of(" \t\r\n") == std::string::npos) {
        fail("string must not be empty");
      }
      break;
    }
    case Type::Integer: {
      if (!value.is_number_integer()) {
        fail("expected an integer");
        return errors;
      }
      double x = value.get<double>();
      if (minimum_ && x < *minimum_) fail("must be >= " + std::to_string(*minimum_));
      if (maximum_ && x > *maximum_) fail("must be <= " + std::to_string(*maximum_));
      break;
    }
    case Type::Number: {
      if (!value.is_number()) {
        fail("expected a number");
        return errors;
      }
      double x = value.get<double>();
      if (std::isnan(x)) fail("must not be NaN");
      if (minimum_ && x < *minimum_) fail("must be >= " + std::to_string(*minimum_));
      if (maximum_ && x > *maximum_) fail("must be <= " + std::to_string(*maximum_));
      break;
    }
    case Type::Boolean: {
      if (!value.is_boolean()) fail("expected a boolean");
      break;
    }
  }
  return errors;
}

std::string JsonSchema::describe() const {
  switch (type_) {
    case Type::Object: {
      std::string out = "{";
      bool first = true;
      for (const auto& [key, schema] : properties_) {
        if (!first) out += ", ";
        first = false;
        out += "\"" + key + "\": " + schema.describe();
      }
      out += "}";
      return out;
    }
    case Type::Array:
      return "[" + items_->describe() + ", ...]";
    case Type::String: {
      if (!enum_values_.empty()) {
        std::string out;
        for (const auto& v : enum_values_) {
          if (!out.empty()) out += " | ";
          out += "\"" + v + "\"";
        }
        return out;
      }
      return "string";
    }
    case Type::Integer: {
      std::string out = "integer";
      if (minimum_ && maximum_)
        out += " " + std::to_string(static_cast<long long>(*minimum_)) + ".." +
               std::to_string(static_cast<long long>(*maximum_));
      return out;
    }
    case Type::Number: {
      std::string out = "number";
      if (minimum_ && maximum_) out += " in [" + std::to_string(*minimum_) + ", " +
                                       std::to_string(*maximum_) + "]";
      return out;
    }
    case Type::Boolean:
      return "true | false";
  }
  return "";
}

std::optional<json> extract_json(const std::string& text) {
  // Direct parse first: covers the well-behaved case.
  {
    json value = json::parse(text, nullptr, false);
    if (!value.is_discarded()) return value;
  }
  // Otherwise scan for the first balanced object or array, skipping
  // string contents. Handles fenced blocks and prose around the value.
  for (size_t start = 0; start < text.size(); ++start) {
    char open = text[start];
    if (open != '{' && open != '[') continue;
    char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == open) {
        ++depth;
      } else if (c == close) {
        --depth;
        if (depth == 0) {
          json value = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!value.is_discarded()) return value;
          break;  // balanced but unparseable; try the next start
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace drylab::llm
