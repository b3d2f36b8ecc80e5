#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "drylab/config.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/pipeline/manifest.hpp"
#include "drylab/prog/sandbox.hpp"
#include "drylab/prompts.hpp"
#include "drylab/request.hpp"
#include "drylab/search/eutils.hpp"

namespace drylab::pipeline {

struct RunArtifacts {
  std::filesystem::path run_dir;
  RunManifest manifest;
  nlohmann::json telemetry;
};

/// Orchestrates the four stages in order over a resumable run directory:
///   <run>/search/ literature/ design/ programming/ evaluation/
///   + manifest.json, telemetry.json, transcripts.json, config.json,
///     request.json
/// Every stage persists its artifacts before the next stage starts; a
/// completed stage is never re-executed or mutated.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<llm::ChatBackend> backend,
           std::unique_ptr<prog::SandboxRuntime> sandbox = nullptr,
           PromptLibrary prompts = PromptLibrary());

  /// Runs (or completes) a pipeline in `run_dir`. A directory with a
  /// finished manifest is reloaded without re-execution. `until` stops
  /// after the named stage (inclusive).
  RunArtifacts run(const ResearchRequest& request, const std::filesystem::path& run_dir,
                   std::optional<Stage> until = std::nullopt);

  /// Continues from the first incomplete stage. The request is read from
  /// the run directory; `request_fallback` covers a fresh/empty directory,
  /// which then behaves like run().
  RunArtifacts resume(const std::filesystem::path& run_dir,
                      std::optional<ResearchRequest> request_fallback = std::nullopt,
                      std::optional<Stage> until = std::nullopt);

  llm::Gateway& gateway() { return gateway_; }
  const PipelineConfig& config() const { return config_; }
  const PromptLibrary& prompts() const { return prompts_; }

 private:
  RunArtifacts execute(const ResearchRequest& request, const std::filesystem::path& run_dir,
                       RunManifest manifest, std::optional<Stage> until);

  nlohmann::json run_search(const ResearchRequest& request,
                            const std::filesystem::path& run_dir);
  nlohmann::json run_literature(const ResearchRequest& request,
                                const std::filesystem::path& run_dir,
                                const RunManifest& manifest);
  nlohmann::json run_design(const ResearchRequest& request,
                            const std::filesystem::path& run_dir,
                            const RunManifest& manifest);
  nlohmann::json run_programming(const ResearchRequest& request,
                                 const std::filesystem::path& run_dir,
                                 const RunManifest& manifest);

  void flush_run_state(const std::filesystem::path& run_dir, const RunManifest& manifest);

  PipelineConfig config_;
  PromptLibrary prompts_;
  llm::Gateway gateway_;
  search::EutilsClient eutils_;
  std::unique_ptr<prog::SandboxRuntime> sandbox_;
};

}  // namespace drylab::pipeline
