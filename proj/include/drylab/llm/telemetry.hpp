#pragma once

#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

namespace drylab::llm {

/// Token usage accumulated per pipeline stage. Stage attribution derives
/// from the step-key prefix ("search.query_gen" -> "search").
class Telemetry {
 public:
  struct Counters {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long calls = 0;
  };

  void record(const std::string& step_key, long prompt_tokens, long completion_tokens);

  /// Free-form notes (sandbox image digest, backend id, ...).
  void set_note(const std::string& key, const std::string& value);

  Counters stage(const std::string& stage_name) const;
  Counters total() const;

  nlohmann::json to_json() const;

  /// Fold a persisted snapshot back in (used when resuming a run).
  void merge_snapshot(const nlohmann::json& snapshot);

  static std::string stage_of(const std::string& step_key);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Counters> stages_;
  std::map<std::string, std::string> notes_;
};

}  // namespace drylab::llm
