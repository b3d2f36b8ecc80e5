#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace drylab {

/// System prompts and rubric texts, loaded by identifier. Built-in texts
/// can be overridden by dropping "<id>.txt" files into a prompt directory.
class PromptLibrary {
 public:
  PromptLibrary();

  /// Throws ValidationError for an unknown identifier.
  const std::string& get(const std::string& id) const;

  bool contains(const std::string& id) const;

  /// Returns a copy with every "<id>.txt" under `dir` replacing (or adding
  /// to) the built-in set.
  PromptLibrary with_overrides(const std::filesystem::path& dir) const;

 private:
  std::map<std::string, std::string> texts_;
};

}  // namespace drylab
