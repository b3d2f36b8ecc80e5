#pragma once

#include <string>

#include <json.hpp>

namespace drylab {

/// Root input of a pipeline run: what to research, under which conditions,
/// with which extra requirements. Conditions and requirements may be empty.
struct ResearchRequest {
  std::string objective;
  std::string conditions;
  std::string requirements;

  /// Throws ValidationError when the objective is empty after trimming.
  void validate() const;

  nlohmann::json to_json() const;
  static ResearchRequest from_json(const nlohmann::json& j);

  /// One prose block handed to agents that need the full user input.
  std::string describe() const;
};

}  // namespace drylab
