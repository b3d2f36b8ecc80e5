#pragma once

#include <string>
#include <vector>

#include "drylab/config.hpp"

namespace drylab::llm {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct Completion {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::string backend_id;
  int attempt = 1;  // which gateway attempt produced this
};

/// A chat-completion backend. step_key identifies the pipeline position of
/// the call ("search.query_gen", "design.headings", ...) so scripted
/// backends can target it and telemetry can attribute it to a stage.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const AgentProfile& profile, const std::string& step_key,
                              const std::vector<ChatMessage>& messages) = 0;
  virtual std::string id() const = 0;
};

}  // namespace drylab::llm
