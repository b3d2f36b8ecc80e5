#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace drylab::prog {

/// Typed input/output slot of a dry-lab task.
struct TaskIo {
  std::string type;
  std::string description;
};

/// One automated experiment unit extracted from the protocol.
/// Task IDs are dense and ordered (1..n).
struct DryLabTask {
  int id = 0;
  std::string description;
  std::vector<TaskIo> inputs;
  std::vector<TaskIo> outputs;

  nlohmann::json to_json() const;
  static DryLabTask from_json(const nlohmann::json& j);
};

/// Generated analysis code for a task, one revision per repair iteration.
struct CodeArtifact {
  int task_id = 0;
  std::string language = "r";
  std::string source;
  int revision = 1;

  nlohmann::json to_json() const;
  static CodeArtifact from_json(const nlohmann::json& j);
};

/// Outcome of one sandbox execution. success() iff the exit status is zero
/// (a timeout is reported with exit status 124 and the timed_out marker).
struct ExecutionResult {
  int task_id = 0;
  int revision = 1;
  int exit_status = 0;
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
  std::vector<std::string> produced_files;
  double duration_seconds = 0.0;

  bool success() const { return exit_status == 0; }

  nlohmann::json to_json() const;
  static ExecutionResult from_json(const nlohmann::json& j);
};

/// Terminal state of a task's generate-execute-refine loop. Failed tasks
/// carry the 1..4 severity level assigned by the error-grading judge.
struct TaskOutcome {
  enum class Status { Success, Failed };

  int task_id = 0;
  Status status = Status::Failed;
  int iterations = 0;
  ExecutionResult final_result;
  std::optional<int> error_level;  // present iff failed

  bool success() const { return status == Status::Success; }

  nlohmann::json to_json() const;
  static TaskOutcome from_json(const nlohmann::json& j);
};

}  // namespace drylab::prog
