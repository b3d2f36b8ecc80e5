#include "drylab/prog/task.hpp"

namespace drylab::prog {

using nlohmann::json;

namespace {
json io_to_json(const std::vector<TaskIo>& io) {
  json out = json::array();
  for (const auto& item : io)
    out.push_back({{"type", item.type}, {"description", item.description}});
  return out;
}

std::vector<TaskIo> io_from_json(const json& j) {
  std::vector<TaskIo> out;
  for (const auto& item : j)
    out.push_back({item.value("type", ""), item.value("description", "")});
  return out;
}
}  // namespace

json DryLabTask::to_json() const {
  return {{"id", id},
          {"description", description},
          {"inputs", io_to_json(inputs)},
          {"outputs", io_to_json(outputs)}};
}

DryLabTask DryLabTask::from_json(const json& j) {
  DryLabTask t;
  t.id = j.value("id", 0);
  t.description = j.value("description", "");
  t.inputs = io_from_json(j.value("inputs", json::array()));
  t.outputs = io_from_json(j.value("outputs", json::array()));
  return t;
}

json CodeArtifact::to_json() const {
  return {{"task_id", task_id},
          {"language", language},
          {"source", source},
          {"revision", revision}};
}

CodeArtifact CodeArtifact::from_json(const json& j) {
  CodeArtifact a;
  a.task_id = j.value("task_id", 0);
  a.language = j.value("language", "r");
  a.source = j.value("source", "");
  a.revision = j.value("revision", 1);
  return a;
}

json ExecutionResult::to_json() const {
  return {{"task_id", task_id},
          {"revision", revision},
          {"exit_status", exit_status},
          {"timed_out", timed_out},
          {"stdout", stdout_text},
          {"stderr", stderr_text},
          {"produced_files", produced_files},
          {"duration_seconds", duration_seconds}};
}

ExecutionResult ExecutionResult::from_json(const json& j) {
  ExecutionResult r;
  r.task_id = j.value("task_id", 0);
  r.revision = j.value("revision", 1);
  r.exit_status = j.value("exit_status", 0);
  r.timed_out = j.value("timed_out", false);
  r.stdout_text = j.value("stdout", "");
  r.stderr_text = j.value("stderr", "");
  for (const auto& f : j.value("produced_files", json::array()))
    r.produced_files.push_back(f.get<std::string>());
  r.duration_seconds = j.value("duration_seconds", 0.0);
  return r;
}

json TaskOutcome::to_json() const {
  json j = {{"task_id", task_id},
            {"status", status == Status::Success ? "success" : "failed"},
            {"iterations", iterations},
            {"final_result", final_result.to_json()}};
  if (error_level) j["error_level"] = *error_level;
  return j;
}

TaskOutcome TaskOutcome::from_json(const json& j) {
  TaskOutcome o;
  o.task_id = j.value("task_id", 0);
  o.status = j.value("status", "failed") == "success" ? Status::Success : Status::Failed;
  o.iterations = j.value("iterations", 0);
  o.final_result = ExecutionResult::from_json(j.value("final_result", json::object()));
  if (j.contains("error_level")) o.error_level = j.at("error_level").get<int>();
  return o;
}

}  // namespace drylab::prog
