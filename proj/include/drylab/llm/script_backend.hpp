#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "drylab/llm/backend.hpp"

namespace drylab::llm {

/// Deterministic mock backend driven by a script: a map from
/// "<role>:<step-key>" to an ordered response list. Each call pops the
/// next response for its key; running past the end (or hitting an
/// unscripted key) raises ScriptUnderflowError naming the key.
class ScriptedBackend : public ChatBackend {
 public:
  /// Script document: {"reviewer:design.headings.review": ["...", ...], ...}
  explicit ScriptedBackend(const nlohmann::json& script);

  Completion complete(const AgentProfile& profile, const std::string& step_key,
                      const std::vector<ChatMessage>& messages) override;

  std::string id() const override { return "scripted"; }

  /// Responses left for a key; for test assertions.
  std::size_t remaining(const std::string& role, const std::string& step_key) const;

  static std::string script_key(const std::string& role, const std::string& step_key) {
    return role + ":" + step_key;
  }

 private:
  struct Entry {
    std::vector<std::string> responses;
    std::size_t next = 0;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

}  // namespace drylab::llm
