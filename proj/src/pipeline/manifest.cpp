#include "drylab/pipeline/manifest.hpp"

#include "drylab/errors.hpp"

namespace drylab::pipeline {

using nlohmann::json;

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Search: return "search";
    case Stage::Literature: return "literature";
    case Stage::Design: return "design";
    case Stage::Programming: return "programming";
  }
  return "";
}

Stage stage_from_name(const std::string& name) {
  for (Stage s : all_stages())
    if (name == stage_name(s)) return s;
  throw UnrecoverableRunError("manifest names unknown stage '" + name + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> kStages = {Stage::Search, Stage::Literature, Stage::Design,
                                             Stage::Programming};
  return kStages;
}

bool RunManifest::has(Stage stage) const { return entry(stage) != nullptr; }

const StageEntry* RunManifest::entry(Stage stage) const {
  for (const auto& e : stages)
    if (e.stage == stage) return &e;
  return nullptr;
}

void RunManifest::add(Stage stage, json artifacts) {
  if (has(stage))
    throw UnrecoverableRunError(std::string("stage '") + stage_name(stage) +
                                "' recorded twice");
  stages.push_back({stage, std::move(artifacts)});
}

std::string RunManifest::artifact_path(Stage stage, const std::string& name) const {
  const StageEntry* e = entry(stage);
  if (!e || !e->artifacts.contains(name) || !e->artifacts.at(name).is_string())
    throw UnrecoverableRunError(std::string("manifest lacks artifact '") + name +
                                "' for stage " + stage_name(stage));
  return e->artifacts.at(name).get<std::string>();
}

std::vector<std::string> RunManifest::artifact_paths(Stage stage,
                                                     const std::string& name) const {
  const StageEntry* e = entry(stage);
  if (!e || !e->artifacts.contains(name) || !e->artifacts.at(name).is_array())
    throw UnrecoverableRunError(std::string("manifest lacks artifact list '") + name +
                                "' for stage " + stage_name(stage));
  std::vector<std::string> out;
  for (const auto& p : e->artifacts.at(name)) out.push_back(p.get<std::string>());
  return out;
}

json RunManifest::to_json() const {
  json stages_json = json::array();
  for (const auto& e : stages)
    stages_json.push_back(
        {{"name", stage_name(e.stage)}, {"status", "complete"}, {"artifacts", e.artifacts}});
  return {{"schema_version", 1},
          {"run_id", run_id},
          {"request", request},
          {"stages", stages_json}};
}

RunManifest RunManifest::from_json(const json& j) {
  if (!j.is_object() || !j.contains("stages") || !j.at("stages").is_array())
    throw UnrecoverableRunError("manifest is not a valid manifest document");

  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.request = j.value("request", json::object());

  size_t expected_index = 0;
  for (const auto& sj : j.at("stages")) {
    if (!sj.is_object() || !sj.contains("name"))
      throw UnrecoverableRunError("manifest stage entry lacks a name");
    Stage stage = stage_from_name(sj.at("name").get<std::string>());
    // Completed stages must form a prefix of the fixed stage order.
    if (expected_index >= all_stages().size() || all_stages()[expected_index] != stage)
      throw UnrecoverableRunError(std::string("manifest stage order is invalid at '") +
                                  stage_name(stage) + "'");
    ++expected_index;
    StageEntry entry;
    entry.stage = stage;
    entry.artifacts = sj.value("artifacts", json::object());
    m.stages.push_back(std::move(entry));
  }
  return m;
}

namespace {

void collect_paths(const json& value, std::vector<std::string>& out) {
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (value.is_array() || value.is_object()) {
    for (const auto& v : value) collect_paths(v, out);
  }
}

}  // namespace

void RunManifest::check_files(const std::filesystem::path& run_dir) const {
  for (const auto& e : stages) {
    std::vector<std::string> paths;
    collect_paths(e.artifacts, paths);
    for (const auto& p : paths)
      if (!std::filesystem::exists(run_dir / p))
        throw UnrecoverableRunError(std::string("manifest references missing file '") + p +
                                    "' in stage " + stage_name(e.stage));
  }
}

}  // namespace drylab::pipeline
