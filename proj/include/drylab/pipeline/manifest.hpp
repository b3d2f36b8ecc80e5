#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace drylab::pipeline {

/// The four pipeline stages, in execution order.
enum class Stage { Search, Literature, Design, Programming };

const char* stage_name(Stage stage);
Stage stage_from_name(const std::string& name);  // throws UnrecoverableRunError
const std::vector<Stage>& all_stages();

/// Completion record of one stage: a map from artifact name to a path (or
/// list of paths) relative to the run directory.
struct StageEntry {
  Stage stage = Stage::Search;
  nlohmann::json artifacts;  // object: name -> path | [paths]
};

/// The run manifest: which stages completed, with which artifacts. Stages
/// appear in execution order; every referenced file must exist.
struct RunManifest {
  std::string run_id;
  nlohmann::json request;
  std::vector<StageEntry> stages;

  bool has(Stage stage) const;
  const StageEntry* entry(Stage stage) const;
  void add(Stage stage, nlohmann::json artifacts);

  /// Path of a single-valued artifact of a stage.
  std::string artifact_path(Stage stage, const std::string& name) const;
  /// Paths of a list-valued artifact.
  std::vector<std::string> artifact_paths(Stage stage, const std::string& name) const;

  nlohmann::json to_json() const;

  /// Throws UnrecoverableRunError on unknown stage names or an order that
  /// is not a prefix of Search -> Literature -> Design -> Programming.
  static RunManifest from_json(const nlohmann::json& j);

  /// Throws UnrecoverableRunError when a referenced file is missing.
  void check_files(const std::filesystem::path& run_dir) const;
};

}  // namespace drylab::pipeline
