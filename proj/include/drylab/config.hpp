#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace drylab {

/// Closed set of agent roles the pipeline employs.
namespace roles {
inline constexpr const char* kQueryGenerator = "query-generator";
inline constexpr const char* kFilter = "filter";
inline constexpr const char* kReportGenerator = "report-generator";
inline constexpr const char* kAnalyst = "analyst";
inline constexpr const char* kDesigner = "designer";
inline constexpr const char* kExtractor = "extractor";
inline constexpr const char* kCodeGenerator = "code-generator";
inline constexpr const char* kReviewer = "reviewer";
inline constexpr const char* kJudge = "judge";

const std::vector<std::string>& all();
bool is_valid(const std::string& role);

/// Query generator runs hot (0.7), reviewer and judge cold (0.1),
/// everything else at 0.5.
double default_temperature(const std::string& role);
}  // namespace roles

/// Per-agent request profile: which role speaks, with which system prompt,
/// at which temperature, against which model.
struct AgentProfile {
  std::string role;
  std::string prompt_id;
  double temperature = 0.5;
  std::string model;  // empty means the backend default

  void validate() const;  // throws ValidationError
};

struct LlmSettings {
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4o";
  std::string api_key_env = "DRYLAB_LLM_API_KEY";
  int max_attempts = 5;        // transient-retry cap, first try included
  int backoff_base_ms = 1000;  // delay doubles per retry
  int timeout_seconds = 120;
};

struct EutilsSettings {
  std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  std::string api_key_env = "NCBI_API_KEY";
  int retries = 3;
};

struct SandboxSettings {
  std::string backend = "docker";  // "docker" or "process"
  std::string image = "r-base:4.3.2";
  std::string docker_endpoint = "unix:///var/run/docker.sock";
  std::vector<std::string> interpreter = {"Rscript"};
  std::string language = "r";
  int timeout_seconds = 1800;
  long memory_mb = 4096;
  bool network = true;
  std::optional<int> run_as_uid;  // process backend: drop to this uid when root
};

/// Validated run configuration. Unset fields take the documented defaults.
struct PipelineConfig {
  int queries_per_request = 5;
  int max_results_per_query_per_db = 10;
  int max_review_rounds = 6;
  int paper_keep_threshold = 4;
  int max_code_repair_iterations = 10;

  LlmSettings llm;
  EutilsSettings eutils;
  SandboxSettings sandbox;

  /// Profiles keyed by role; validate_config fills every role.
  std::map<std::string, AgentProfile> agents;

  const AgentProfile& agent(const std::string& role) const;

  nlohmann::json to_json() const;
};

/// Build a PipelineConfig from a raw JSON document. Missing fields take
/// defaults; every violation is collected (with its field path) and thrown
/// as one ConfigError.
PipelineConfig validate_config(const nlohmann::json& raw);

}  // namespace drylab
