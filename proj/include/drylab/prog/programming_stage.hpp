#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drylab/config.hpp"
#include "drylab/design/protocol.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/prog/sandbox.hpp"
#include "drylab/prog/task.hpp"
#include "drylab/prompts.hpp"

namespace drylab::prog {

/// Inputs available to one code-generation call.
struct CodeContext {
  std::vector<std::string> dataset_accessions;
  /// Completed predecessors: task id -> produced files, paths relative to
  /// the tasks root.
  std::vector<std::pair<int, std::vector<std::string>>> predecessor_outputs;
  std::optional<std::string> last_stderr;  // set from revision 2 on
  int next_revision = 1;
};

/// Result of one generation call: either code or an explicit, structured
/// termination signal.
struct GenerationStep {
  bool terminate = false;
  std::string reason;
  CodeArtifact artifact;  // valid when !terminate
};

enum class LoopDecision { Retry, Success, GiveUp };

/// Success when the last execution succeeded; give-up at the iteration cap
/// (or when the generator signalled termination); otherwise retry.
LoopDecision refine_or_terminate(
    const std::vector<std::pair<CodeArtifact, ExecutionResult>>& history,
    int max_iterations, bool generator_requested_stop = false);

/// Extracts dry-lab tasks from the protocol, generates code per task,
/// executes it in the sandbox and iterates on failures. Tasks run
/// sequentially in id order; later tasks see their predecessors' outputs.
class ProgrammingStage {
 public:
  ProgrammingStage(llm::Gateway& gateway, const PromptLibrary& prompts,
                   const PipelineConfig& config, SandboxRuntime& runtime);

  /// Ordered task list with dense ids (1..n). Stage-fatal after repairs.
  std::vector<DryLabTask> extract_tasks(const design::Protocol& protocol);

  /// Revision `ctx.next_revision` of the task's code, or a termination
  /// signal. Throws CodeGenerationError after repairs.
  GenerationStep generate_code(const DryLabTask& task, const CodeContext& ctx);

  /// Executes one revision in the sandbox under
  /// tasks_root/<id>/rev<k>/{code,stdout,stderr,outputs/}.
  ExecutionResult execute_in_sandbox(const CodeArtifact& code,
                                     const std::filesystem::path& tasks_root);

  /// Full generate-execute-refine loop for one task.
  TaskOutcome run_task_loop(const DryLabTask& task, const CodeContext& base_ctx,
                            const std::filesystem::path& tasks_root);

  /// All tasks in order; the context threads predecessor outputs forward.
  std::vector<TaskOutcome> run_all(const std::vector<DryLabTask>& tasks,
                                   const std::vector<std::string>& dataset_accessions,
                                   const std::filesystem::path& tasks_root);

 private:
  llm::Gateway& gateway_;
  const PromptLibrary& prompts_;
  const PipelineConfig& config_;
  SandboxRuntime& runtime_;
};

}  // namespace drylab::prog
