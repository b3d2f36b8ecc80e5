#include "drylab/llm/script_backend.hpp"

#include "drylab/errors.hpp"

namespace drylab::llm {

namespace {
// Deterministic stand-in for tokenizer counts: ~4 characters per token.
long approx_tokens(std::size_t chars) { return static_cast<long>(chars / 4 + 1); }
}  // namespace

ScriptedBackend::ScriptedBackend(const nlohmann::json& script) {
  if (!script.is_object())
    throw ValidationError("mock script must be a JSON object keyed by 'role:step-key'");
  for (auto it = script.begin(); it != script.end(); ++it) {
    if (entries_.count(it.key()))
      throw ValidationError("duplicate mock script key '" + it.key() + "'");
    Entry entry;
    if (it.value().is_array()) {
      for (const auto& item : it.value()) {
        if (item.is_string())
          entry.responses.push_back(item.get<std::string>());
        else
          entry.responses.push_back(item.dump());
      }
    } else if (it.value().is_string()) {
      entry.responses.push_back(it.value().get<std::string>());
    } else {
      throw ValidationError("mock script entry '" + it.key() +
                            "' must be a string or an array");
    }
    entries_.emplace(it.key(), std::move(entry));
  }
}

Completion ScriptedBackend::complete(const AgentProfile& profile,
                                     const std::string& step_key,
                                     const std::vector<ChatMessage>& messages) {
  const std::string key = script_key(profile.role, step_key);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.next >= it->second.responses.size())
    throw ScriptUnderflowError(key);

  Completion out;
  out.text = it->second.responses[it->second.next++];
  std::size_t prompt_chars = 0;
  for (const auto& m : messages) prompt_chars += m.content.size();
  out.prompt_tokens = approx_tokens(prompt_chars);
  out.completion_tokens = approx_tokens(out.text.size());
  out.backend_id = id();
  return out;
}

std::size_t ScriptedBackend::remaining(const std::string& role,
                                       const std::string& step_key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(script_key(role, step_key));
  if (it == entries_.end()) return 0;
  return it->second.responses.size() - it->second.next;
}

}  // namespace drylab::llm
