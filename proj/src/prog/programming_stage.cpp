#include "drylab/prog/programming_stage.hpp"

#include <algorithm>
#include <set>

#include "drylab/errors.hpp"
#include "drylab/eval/judge.hpp"
#include "drylab/util/json_io.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::prog {

using llm::JsonSchema;
using nlohmann::json;

LoopDecision refine_or_terminate(
    const std::vector<std::pair<CodeArtifact, ExecutionResult>>& history,
    int max_iterations, bool generator_requested_stop) {
  if (history.empty()) throw ValidationError("refine_or_terminate requires history");
  if (history.back().second.success()) return LoopDecision::Success;
  if (generator_requested_stop) return LoopDecision::GiveUp;
  if (static_cast<int>(history.size()) >= max_iterations) return LoopDecision::GiveUp;
  return LoopDecision::Retry;
}

ProgrammingStage::ProgrammingStage(llm::Gateway& gateway, const PromptLibrary& prompts,
                                   const PipelineConfig& config, SandboxRuntime& runtime)
    : gateway_(gateway), prompts_(prompts), config_(config), runtime_(runtime) {}

// ---------------------------------------------------------------------------
// Task extraction
// ---------------------------------------------------------------------------

std::vector<DryLabTask> ProgrammingStage::extract_tasks(const design::Protocol& protocol) {
  protocol.validate();
  const auto& profile = config_.agent(roles::kExtractor);

  auto io_schema = JsonSchema::array(
      JsonSchema::object({{"type", JsonSchema::string()},
                          {"description", JsonSchema::string()}},
                         {"type", "description"}));
  auto schema = JsonSchema::object(
      {{"tasks", JsonSchema::array(
                     JsonSchema::object({{"id", JsonSchema::integer(1)},
                                         {"description", JsonSchema::string()},
                                         {"inputs", io_schema},
                                         {"outputs", io_schema}},
                                        {"id", "description", "inputs", "outputs"}),
                     1)}},
      {"tasks"});
  auto extra = [](const json& v) -> std::vector<std::string> {
    std::vector<std::string> errors;
    const auto& tasks = v.at("tasks");
    for (size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].value("id", 0) != static_cast<int>(i) + 1)
        errors.push_back("$.tasks[" + std::to_string(i) + "].id: ids must be dense and " +
                         "ordered (expected " + std::to_string(i + 1) + ")");
      if (tasks[i].at("outputs").empty())
        errors.push_back("$.tasks[" + std::to_string(i) +
                         "].outputs: every task needs at least one output");
    }
    return errors;
  };

  std::string user =
      protocol.render_markdown() +
      "\nDerive the ordered dry-lab experiment tasks from this protocol. Number them "
      "1..n; give each a description and typed inputs and outputs. Reply with one JSON "
      "object: {\"tasks\": [{\"id\": 1, \"description\": \"...\", \"inputs\": "
      "[{\"type\": \"...\", \"description\": \"...\"}], \"outputs\": [...]}]}.";

  json value = gateway_.complete_structured(
      profile, "programming.extract_tasks",
      {{"system", prompts_.get(profile.prompt_id)}, {"user", user}}, schema, extra);

  std::vector<DryLabTask> tasks;
  for (const auto& tj : value.at("tasks")) tasks.push_back(DryLabTask::from_json(tj));
  return tasks;
}

// ---------------------------------------------------------------------------
// Code generation
// ---------------------------------------------------------------------------

GenerationStep ProgrammingStage::generate_code(const DryLabTask& task,
                                               const CodeContext& ctx) {
  const auto& profile = config_.agent(roles::kCodeGenerator);
  const std::string key = "programming.code.t" + std::to_string(task.id);

  auto schema = JsonSchema::object(
      {{"action", JsonSchema::string_enum({"code", "terminate"})},
       {"source", JsonSchema::string(/*allow_empty=*/true)},
       {"reason", JsonSchema::string(/*allow_empty=*/true)}},
      {"action"});
  auto extra = [](const json& v) -> std::vector<std::string> {
    if (v.value("action", "") == "code" && util::trim(v.value("source", "")).empty())
      return {"$.source: action \"code\" requires non-empty source"};
    return {};
  };

  std::string io_digest = "Inputs:\n";
  for (const auto& in : task.inputs)
    io_digest += "- (" + in.type + ") " + in.description + "\n";
  if (task.inputs.empty()) io_digest += "- (none)\n";
  io_digest += "Outputs:\n";
  for (const auto& out : task.outputs)
    io_digest += "- (" + out.type + ") " + out.description + "\n";

  std::string user = "Task " + std::to_string(task.id) + ": " + task.description + "\n" +
                     io_digest + "\nLanguage: " + config_.sandbox.language + "\n";
  if (!ctx.dataset_accessions.empty())
    user += "Available dataset accessions: " + util::join(ctx.dataset_accessions, ", ") + "\n";
  if (!ctx.predecessor_outputs.empty()) {
    user += "Outputs of completed predecessor tasks (paths relative to the tasks "
            "directory; your working directory is <tasks>/" +
            std::to_string(task.id) + "/rev" + std::to_string(ctx.next_revision) +
            "/outputs):\n";
    for (const auto& [tid, files] : ctx.predecessor_outputs) {
      user += "- task " + std::to_string(tid) + ":";
      for (const auto& f : files) user += " " + f;
      user += "\n";
    }
  }
  if (ctx.last_stderr) {
    user += "\nThe previous revision failed. Its standard error output:\n" +
            *ctx.last_stderr +
            "\nFix the code, or reply {\"action\": \"terminate\", \"reason\": \"...\"} "
            "when the task cannot be completed.\n";
  }
  user += "\nWrite all outputs into the working directory. Reply with one JSON object: "
          "{\"action\": \"code\", \"source\": \"...\"} or {\"action\": \"terminate\", "
          "\"reason\": \"...\"}.";

  try {
    json value = gateway_.complete_structured(
        profile, key, {{"system", prompts_.get(profile.prompt_id)}, {"user", user}}, schema,
        extra);

    GenerationStep step;
    if (value.at("action").get<std::string>() == "terminate") {
      step.terminate = true;
      step.reason = value.value("reason", "");
      return step;
    }
    step.artifact.task_id = task.id;
    step.artifact.language = config_.sandbox.language;
    step.artifact.source = value.at("source").get<std::string>();
    step.artifact.revision = ctx.next_revision;
    return step;
  } catch (const MalformedOutputError& e) {
    throw CodeGenerationError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Sandbox execution
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> list_outputs(const std::filesystem::path& outputs_dir) {
  std::vector<std::string> files;
  if (!std::filesystem::exists(outputs_dir)) return files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(outputs_dir))
    if (entry.is_regular_file())
      files.push_back(std::filesystem::relative(entry.path(), outputs_dir).string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

ExecutionResult ProgrammingStage::execute_in_sandbox(
    const CodeArtifact& code, const std::filesystem::path& tasks_root) {
  if (util::trim(code.source).empty())
    throw ValidationError("cannot execute an empty code artifact");

  const auto rev_dir =
      tasks_root / std::to_string(code.task_id) / ("rev" + std::to_string(code.revision));
  const auto outputs_dir = rev_dir / "outputs";
  std::filesystem::create_directories(outputs_dir);
  util::write_text_file(rev_dir / "code", code.source);

  SandboxSpec spec;
  spec.argv = config_.sandbox.interpreter;
  spec.argv.push_back("../code");
  spec.workdir = std::filesystem::absolute(outputs_dir);
  spec.mount_root = std::filesystem::absolute(tasks_root);
  spec.stdout_file = std::filesystem::absolute(rev_dir / "stdout");
  spec.stderr_file = std::filesystem::absolute(rev_dir / "stderr");
  spec.timeout = std::chrono::seconds(config_.sandbox.timeout_seconds);
  spec.memory_mb = config_.sandbox.memory_mb;
  spec.network = config_.sandbox.network;
  spec.run_as_uid = config_.sandbox.run_as_uid;

  std::string stdout_text, stderr_text;
  SandboxWait waited = runtime_.run(spec, &stdout_text, &stderr_text);

  ExecutionResult result;
  result.task_id = code.task_id;
  result.revision = code.revision;
  result.exit_status = waited.exit_status;
  result.timed_out = waited.timed_out;
  result.duration_seconds = waited.duration_seconds;
  result.stdout_text = stdout_text;
  result.stderr_text = stderr_text;
  if (result.timed_out && result.stderr_text.empty())
    result.stderr_text = "execution timed out";
  result.produced_files = list_outputs(outputs_dir);

  util::write_json_file(rev_dir / "result.json", result.to_json());
  return result;
}

// ---------------------------------------------------------------------------
// Task loop
// ---------------------------------------------------------------------------

TaskOutcome ProgrammingStage::run_task_loop(const DryLabTask& task,
                                            const CodeContext& base_ctx,
                                            const std::filesystem::path& tasks_root) {
  std::vector<std::pair<CodeArtifact, ExecutionResult>> history;
  const int cap = config_.max_code_repair_iterations;

  TaskOutcome outcome;
  outcome.task_id = task.id;

  for (int iteration = 1; iteration <= cap; ++iteration) {
    CodeContext ctx = base_ctx;
    ctx.next_revision = iteration;
    if (!history.empty()) ctx.last_stderr = history.back().second.stderr_text;

    GenerationStep step;
    try {
      step = generate_code(task, ctx);
    } catch (const CodeGenerationError& e) {
      // Unusable generator output: the task failed with a severe
      // structural failure; nothing executable to grade.
      log::warn("code generation failed for task " + std::to_string(task.id) + ": " +
                e.what());
      outcome.status = TaskOutcome::Status::Failed;
      outcome.iterations = iteration;
      outcome.error_level = 4;
      if (!history.empty()) outcome.final_result = history.back().second;
      else {
        outcome.final_result.task_id = task.id;
        outcome.final_result.revision = iteration;
        outcome.final_result.exit_status = -1;
        outcome.final_result.stderr_text = "code generation produced no usable code";
      }
      return outcome;
    }

    if (step.terminate) {
      log::warn("generator terminated task " + std::to_string(task.id) + ": " + step.reason);
      outcome.status = TaskOutcome::Status::Failed;
      outcome.iterations = iteration;
      if (!history.empty()) {
        outcome.final_result = history.back().second;
        auto grade = eval::grade_error(gateway_, prompts_, config_, history.back().first,
                                       history.back().second);
        outcome.error_level = grade.level;
      } else {
        outcome.final_result.task_id = task.id;
        outcome.final_result.revision = iteration;
        outcome.final_result.exit_status = -1;
        outcome.final_result.stderr_text = "generator terminated before producing code";
        outcome.error_level = 4;
      }
      return outcome;
    }

    ExecutionResult result = execute_in_sandbox(step.artifact, tasks_root);
    history.emplace_back(step.artifact, result);

    switch (refine_or_terminate(history, cap)) {
      case LoopDecision::Success:
        outcome.status = TaskOutcome::Status::Success;
        outcome.iterations = iteration;
        outcome.final_result = result;
        return outcome;
      case LoopDecision::GiveUp: {
        outcome.status = TaskOutcome::Status::Failed;
        outcome.iterations = iteration;
        outcome.final_result = result;
        auto grade =
            eval::grade_error(gateway_, prompts_, config_, history.back().first, result);
        outcome.error_level = grade.level;
        return outcome;
      }
      case LoopDecision::Retry:
        break;
    }
  }
  throw Error("task loop left without a decision");  // unreachable
}

std::vector<TaskOutcome> ProgrammingStage::run_all(
    const std::vector<DryLabTask>& tasks, const std::vector<std::string>& dataset_accessions,
    const std::filesystem::path& tasks_root) {
  std::vector<TaskOutcome> outcomes;
  CodeContext ctx;
  ctx.dataset_accessions = dataset_accessions;

  for (const auto& task : tasks) {
    TaskOutcome outcome = run_task_loop(task, ctx, tasks_root);
    if (outcome.success()) {
      std::vector<std::string> files;
      const std::string prefix = std::to_string(task.id) + "/rev" +
                                 std::to_string(outcome.final_result.revision) + "/outputs/";
      for (const auto& f : outcome.final_result.produced_files) files.push_back(prefix + f);
      ctx.predecessor_outputs.emplace_back(task.id, std::move(files));
    }
    util::write_json_file(tasks_root / std::to_string(task.id) / "outcome.json",
                          outcome.to_json());
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace drylab::prog
