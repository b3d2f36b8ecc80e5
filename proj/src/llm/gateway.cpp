#include "drylab/llm/gateway.hpp"

#include <chrono>
#include <thread>

#include "drylab/errors.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::llm {

using nlohmann::json;

void TranscriptLog::append(Call call) {
  std::lock_guard<std::mutex> lock(mutex_);
  calls_.push_back(std::move(call));
}

std::vector<TranscriptLog::Call> TranscriptLog::calls_for(const std::string& step_key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<Call> out;
  for (const auto& c : calls_)
    if (c.step_key == step_key) out.push_back(c);
  return out;
}

std::vector<TranscriptLog::Call> TranscriptLog::all() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

json TranscriptLog::to_json() const {
  std::lock_guard<std::mutex> lock(mutex_);
  json out = json::array();
  for (const auto& c : calls_) {
    json msgs = json::array();
    for (const auto& m : c.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    out.push_back({{"step_key", c.step_key},
                   {"role", c.role},
                   {"attempt", c.attempt},
                   {"messages", std::move(msgs)},
                   {"response", c.response}});
  }
  return out;
}

void TranscriptLog::merge_snapshot(const json& snapshot) {
  if (!snapshot.is_array()) return;
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<Call> restored;
  for (const auto& cj : snapshot) {
    Call call;
    call.step_key = cj.value("step_key", "");
    call.role = cj.value("role", "");
    call.attempt = cj.value("attempt", 1);
    for (const auto& mj : cj.value("messages", json::array()))
      call.messages.push_back({mj.value("role", ""), mj.value("content", "")});
    call.response = cj.value("response", "");
    restored.push_back(std::move(call));
  }
  restored.insert(restored.end(), calls_.begin(), calls_.end());
  calls_ = std::move(restored);
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(retry) {}

Completion Gateway::complete(const AgentProfile& profile, const std::string& step_key,
                             const std::vector<ChatMessage>& messages) {
  profile.validate();
  if (messages.empty())
    throw ValidationError("complete() requires at least one message (" + step_key + ")");

  for (int attempt = 1;; ++attempt) {
    try {
      Completion c = backend_->complete(profile, step_key, messages);
      c.attempt = attempt;
      telemetry_.record(step_key, c.prompt_tokens, c.completion_tokens);
      transcript_.append({step_key, profile.role, attempt, messages, c.text});
      return c;
    } catch (const TransientBackendError& e) {
      if (attempt >= retry_.max_attempts)
        throw BackendUnavailableError("backend unavailable after " +
                                      std::to_string(attempt) + " attempts: " + e.what());
      auto delay = std::chrono::milliseconds(
          static_cast<long long>(retry_.backoff_base_ms) << (attempt - 1));
      log::warn("transient backend failure (attempt " + std::to_string(attempt) +
                ", retrying): " + e.what());
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

json Gateway::complete_structured(const AgentProfile& profile, const std::string& step_key,
                                  std::vector<ChatMessage> messages, const JsonSchema& schema,
                                  const ExtraValidator& extra) {
  std::string last_raw;
  std::string last_errors;
  for (int round = 0; round <= kMaxRepairs; ++round) {
    Completion c;
    try {
      c = complete(profile, step_key, messages);
    } catch (const ScriptUnderflowError&) {
      // A scripted key that runs dry mid-repair stands for persistently
      // malformed output; underflow on the first call stays an underflow.
      if (round == 0) throw;
      throw MalformedOutputError(step_key, last_raw,
                                 last_errors + " (script exhausted during repair)");
    }
    last_raw = c.text;

    std::vector<std::string> errors;
    auto value = extract_json(c.text);
    if (!value) {
      errors.push_back("reply does not contain a parseable JSON value");
    } else {
      errors = schema.validate(*value);
      if (errors.empty() && extra) errors = extra(*value);
      if (errors.empty()) return *value;
    }
    last_errors = util::join(errors, "; ");
    if (round == kMaxRepairs) break;

    messages.push_back({"assistant", c.text});
    messages.push_back({"user",
                        "Your previous reply could not be used: " + last_errors +
                            ". Respond again with exactly one JSON value of the form " +
                            schema.describe() + " and nothing else."});
  }
  throw MalformedOutputError(step_key, last_raw, last_errors);
}

}  // namespace drylab::llm
