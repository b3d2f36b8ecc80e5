#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "drylab/llm/backend.hpp"
#include "drylab/llm/schema.hpp"
#include "drylab/llm/telemetry.hpp"

namespace drylab::llm {

/// Every backend call, kept for audit and for transcript assertions in
/// tests. Deterministic under the scripted backend.
class TranscriptLog {
 public:
  struct Call {
    std::string step_key;
    std::string role;
    int attempt = 1;
    std::vector<ChatMessage> messages;
    std::string response;
  };

  void append(Call call);
  std::vector<Call> calls_for(const std::string& step_key) const;
  std::vector<Call> all() const;
  nlohmann::json to_json() const;

  /// Prepend a persisted snapshot (used when resuming a run).
  void merge_snapshot(const nlohmann::json& snapshot);

 private:
  mutable std::mutex mutex_;
  std::vector<Call> calls_;
};

/// Extra validation applied on top of a JsonSchema; returns violations.
using ExtraValidator = std::function<std::vector<std::string>(const nlohmann::json&)>;

struct RetryPolicy {
  int max_attempts = 5;
  int backoff_base_ms = 1000;  // 1s, 2s, 4s, ... between attempts
};

/// Uniform access to a chat backend: transient-failure retries with
/// exponential backoff, telemetry accumulation, full-call transcripts and
/// schema-checked structured output with bounded repair re-prompts.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry = {});

  Completion complete(const AgentProfile& profile, const std::string& step_key,
                      const std::vector<ChatMessage>& messages);

  /// Ask for a single JSON value matching `schema`; on parse/validation
  /// failure re-prompt with the error appended, up to `kMaxRepairs` times.
  /// Issues at most 1 + kMaxRepairs backend completions.
  nlohmann::json complete_structured(const AgentProfile& profile,
                                     const std::string& step_key,
                                     std::vector<ChatMessage> messages,
                                     const JsonSchema& schema,
                                     const ExtraValidator& extra = nullptr);

  static constexpr int kMaxRepairs = 3;

  Telemetry& telemetry() { return telemetry_; }
  const Telemetry& telemetry() const { return telemetry_; }
  TranscriptLog& transcript() { return transcript_; }
  const TranscriptLog& transcript() const { return transcript_; }
  ChatBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  RetryPolicy retry_;
  Telemetry telemetry_;
  TranscriptLog transcript_;
};

}  // namespace drylab::llm
