#pragma once

#include <memory>
#include <string>

#include "drylab/llm/backend.hpp"

namespace drylab::llm {

/// OpenAI-compatible chat-completions client. The base URL may carry a path
/// prefix ("https://host/v1"); without one, "/v1" is assumed. The API key is
/// read from the configured environment variable at construction.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(const LlmSettings& settings);
  ~HttpChatBackend() override;

  Completion complete(const AgentProfile& profile, const std::string& step_key,
                      const std::vector<ChatMessage>& messages) override;

  std::string id() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drylab::llm
