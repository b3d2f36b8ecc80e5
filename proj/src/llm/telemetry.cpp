#include "drylab/llm/telemetry.hpp"

namespace drylab::llm {

std::string Telemetry::stage_of(const std::string& step_key) {
  auto dot = step_key.find('.');
  return dot == std::string::npos ? step_key : step_key.substr(0, dot);
}

void Telemetry::record(const std::string& step_key, long prompt_tokens,
                       long completion_tokens) {
  std::lock_guard<std::mutex> lock(mutex_);
  Counters& c = stages_[stage_of(step_key)];
  c.prompt_tokens += prompt_tokens;
  c.completion_tokens += completion_tokens;
  c.calls += 1;
}

void Telemetry::set_note(const std::string& key, const std::string& value) {
  std::lock_guard<std::mutex> lock(mutex_);
  notes_[key] = value;
}

Telemetry::Counters Telemetry::stage(const std::string& stage_name) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = stages_.find(stage_name);
  return it == stages_.end() ? Counters{} : it->second;
}

Telemetry::Counters Telemetry::total() const {
  std::lock_guard<std::mutex> lock(mutex_);
  Counters t;
  for (const auto& [_, c] : stages_) {
    t.prompt_tokens += c.prompt_tokens;
    t.completion_tokens += c.completion_tokens;
    t.calls += c.calls;
  }
  return t;
}

void Telemetry::merge_snapshot(const nlohmann::json& snapshot) {
  std::lock_guard<std::mutex> lock(mutex_);
  const nlohmann::json stages = snapshot.value("stages", nlohmann::json::object());
  for (auto it = stages.begin(); it != stages.end(); ++it) {
    Counters& c = stages_[it.key()];
    c.prompt_tokens += it.value().value("prompt_tokens", 0L);
    c.completion_tokens += it.value().value("completion_tokens", 0L);
    c.calls += it.value().value("calls", 0L);
  }
  const nlohmann::json notes = snapshot.value("notes", nlohmann::json::object());
  for (auto it = notes.begin(); it != notes.end(); ++it)
    notes_[it.key()] = it.value().get<std::string>();
}

nlohmann::json Telemetry::to_json() const {
  std::lock_guard<std::mutex> lock(mutex_);
  nlohmann::json stages = nlohmann::json::object();
  long p = 0, c = 0, n = 0;
  for (const auto& [name, counters] : stages_) {
    stages[name] = {{"prompt_tokens", counters.prompt_tokens},
                    {"completion_tokens", counters.completion_tokens},
                    {"calls", counters.calls}};
    p += counters.prompt_tokens;
    c += counters.completion_tokens;
    n += counters.calls;
  }
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  return {{"stages", stages},
          {"total", {{"prompt_tokens", p}, {"completion_tokens", c}, {"calls", n}}},
          {"notes", notes}};
}

}  // namespace drylab::llm
