#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace drylab {

/// Structured full text of one paper: ordered, titled blocks.
struct StructuredDocument {
  struct Block {
    std::string title;
    std::string text;
  };

  std::string paper_id;
  std::vector<Block> blocks;

  /// Throws ValidationError when empty or a block title is empty.
  void validate() const;

  std::string full_text() const;

  nlohmann::json to_json() const;
  static StructuredDocument from_json(const nlohmann::json& j);
};

}  // namespace drylab
