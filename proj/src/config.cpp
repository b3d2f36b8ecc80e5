#include "drylab/config.hpp"

#include <cmath>

#include "drylab/errors.hpp"

namespace drylab {

namespace roles {

const std::vector<std::string>& all() {
  static const std::vector<std::string> kRoles = {
      kQueryGenerator, kFilter, kReportGenerator, kAnalyst, kDesigner,
      kExtractor,      kCodeGenerator, kReviewer, kJudge};
  return kRoles;
}

bool is_valid(const std::string& role) {
  for (const auto& r : all())
    if (r == role) return true;
  return false;
}

double default_temperature(const std::string& role) {
  if (role == kQueryGenerator) return 0.7;
  if (role == kReviewer || role == kJudge) return 0.1;
  return 0.5;
}

}  // namespace roles

void AgentProfile::validate() const {
  if (!roles::is_valid(role)) throw ValidationError("unknown agent role '" + role + "'");
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw ValidationError("agent temperature out of range [0,2]");
}

const AgentProfile& PipelineConfig::agent(const std::string& role) const {
  auto it = agents.find(role);
  if (it == agents.end()) throw ValidationError("no profile for role '" + role + "'");
  return it->second;
}

namespace {

using nlohmann::json;

std::string default_prompt_id(const std::string& role) { return role + ".system"; }

class Checker {
 public:
  explicit Checker(std::vector<std::string>& violations) : violations_(violations) {}

  void flag(const std::string& path, const std::string& why) {
    violations_.push_back(path + ": " + why);
  }

  int count_at_least(const json& doc, const std::string& path, const std::string& key,
                     int fallback, int minimum) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number_integer()) {
      flag(path + key, "must be an integer");
      return fallback;
    }
    int n = v.get<int>();
    if (n < minimum) {
      flag(path + key, "must be >= " + std::to_string(minimum));
      return fallback;
    }
    return n;
  }

  double number_in(const json& doc, const std::string& path, const std::string& key,
                   double fallback, double lo, double hi) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number()) {
      flag(path + key, "must be a number");
      return fallback;
    }
    double x = v.get<double>();
    if (!(x >= lo && x <= hi) || std::isnan(x)) {
      flag(path + key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return fallback;
    }
    return x;
  }

  std::string text(const json& doc, const std::string& path, const std::string& key,
                   std::string fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_string()) {
      flag(path + key, "must be a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  bool flag_unknown_keys(const json& doc, const std::string& path,
                         std::initializer_list<const char*> known) {
    bool ok = true;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      bool found = false;
      for (const char* k : known)
        if (it.key() == k) found = true;
      if (!found) {
        flag(path + it.key(), "unknown field");
        ok = false;
      }
    }
    return ok;
  }

 private:
  std::vector<std::string>& violations_;
};

}  // namespace

PipelineConfig validate_config(const nlohmann::json& raw) {
  std::vector<std::string> violations;
  Checker check(violations);
  PipelineConfig cfg;

  if (!raw.is_object() && !raw.is_null())
    throw ConfigError({"$: configuration document must be a JSON object"});

  const json doc = raw.is_null() ? json::object() : raw;

  check.flag_unknown_keys(doc, "",
                          {"queries_per_request", "max_results_per_query_per_db",
                           "max_review_rounds", "paper_keep_threshold",
                           "max_code_repair_iterations", "llm", "eutils", "sandbox",
                           "agents"});

  cfg.queries_per_request =
      check.count_at_least(doc, "", "queries_per_request", cfg.queries_per_request, 1);
  cfg.max_results_per_query_per_db = check.count_at_least(
      doc, "", "max_results_per_query_per_db", cfg.max_results_per_query_per_db, 1);
  cfg.max_review_rounds =
      check.count_at_least(doc, "", "max_review_rounds", cfg.max_review_rounds, 1);
  cfg.max_code_repair_iterations = check.count_at_least(
      doc, "", "max_code_repair_iterations", cfg.max_code_repair_iterations, 1);
  cfg.paper_keep_threshold = static_cast<int>(check.number_in(
      doc, "", "paper_keep_threshold", cfg.paper_keep_threshold, 1, 5));
  if (doc.contains("paper_keep_threshold") && doc.at("paper_keep_threshold").is_number() &&
      !doc.at("paper_keep_threshold").is_number_integer())
    check.flag("paper_keep_threshold", "must be an integer");

  if (doc.contains("llm")) {
    const json& llm = doc.at("llm");
    if (!llm.is_object()) {
      check.flag("llm", "must be an object");
    } else {
      check.flag_unknown_keys(llm, "llm.",
                              {"base_url", "model", "api_key_env", "max_attempts",
                               "backoff_base_ms", "timeout_seconds"});
      cfg.llm.base_url = check.text(llm, "llm.", "base_url", cfg.llm.base_url);
      cfg.llm.model = check.text(llm, "llm.", "model", cfg.llm.model);
      cfg.llm.api_key_env = check.text(llm, "llm.", "api_key_env", cfg.llm.api_key_env);
      cfg.llm.max_attempts =
          check.count_at_least(llm, "llm.", "max_attempts", cfg.llm.max_attempts, 1);
      cfg.llm.backoff_base_ms =
          check.count_at_least(llm, "llm.", "backoff_base_ms", cfg.llm.backoff_base_ms, 0);
      cfg.llm.timeout_seconds =
          check.count_at_least(llm, "llm.", "timeout_seconds", cfg.llm.timeout_seconds, 1);
    }
  }

  if (doc.contains("eutils")) {
    const json& eu = doc.at("eutils");
    if (!eu.is_object()) {
      check.flag("eutils", "must be an object");
    } else {
      check.flag_unknown_keys(eu, "eutils.", {"base_url", "api_key_env", "retries"});
      cfg.eutils.base_url = check.text(eu, "eutils.", "base_url", cfg.eutils.base_url);
      cfg.eutils.api_key_env =
          check.text(eu, "eutils.", "api_key_env", cfg.eutils.api_key_env);
      cfg.eutils.retries = check.count_at_least(eu, "eutils.", "retries", cfg.eutils.retries, 0);
    }
  }

  if (doc.contains("sandbox")) {
    const json& sb = doc.at("sandbox");
    if (!sb.is_object()) {
      check.flag("sandbox", "must be an object");
    } else {
      check.flag_unknown_keys(sb, "sandbox.",
                              {"backend", "image", "docker_endpoint", "interpreter",
                               "language", "timeout_seconds", "memory_mb", "network",
                               "run_as_uid"});
      cfg.sandbox.backend = check.text(sb, "sandbox.", "backend", cfg.sandbox.backend);
      if (cfg.sandbox.backend != "docker" && cfg.sandbox.backend != "process")
        check.flag("sandbox.backend", "must be 'docker' or 'process'");
      cfg.sandbox.image = check.text(sb, "sandbox.", "image", cfg.sandbox.image);
      cfg.sandbox.docker_endpoint =
          check.text(sb, "sandbox.", "docker_endpoint", cfg.sandbox.docker_endpoint);
      cfg.sandbox.language = check.text(sb, "sandbox.", "language", cfg.sandbox.language);
      cfg.sandbox.timeout_seconds =
          check.count_at_least(sb, "sandbox.", "timeout_seconds", cfg.sandbox.timeout_seconds, 1);
      cfg.sandbox.memory_mb = check.count_at_least(
          sb, "sandbox.", "memory_mb", static_cast<int>(cfg.sandbox.memory_mb), 1);
      if (sb.contains("network")) {
        if (!sb.at("network").is_boolean())
          check.flag("sandbox.network", "must be a boolean");
        else
          cfg.sandbox.network = sb.at("network").get<bool>();
      }
      if (sb.contains("interpreter")) {
        const json& interp = sb.at("interpreter");
        if (!interp.is_array() || interp.empty()) {
          check.flag("sandbox.interpreter", "must be a non-empty array of strings");
        } else {
          cfg.sandbox.interpreter.clear();
          for (const auto& item : interp) {
            if (!item.is_string()) {
              check.flag("sandbox.interpreter", "must contain only strings");
              break;
            }
            cfg.sandbox.interpreter.push_back(item.get<std::string>());
          }
        }
      }
      if (sb.contains("run_as_uid")) {
        if (!sb.at("run_as_uid").is_number_integer() || sb.at("run_as_uid").get<int>() < 0)
          check.flag("sandbox.run_as_uid", "must be a non-negative integer");
        else
          cfg.sandbox.run_as_uid = sb.at("run_as_uid").get<int>();
      }
    }
  }

  // Fill every role with defaults, then apply overrides.
  for (const auto& role : roles::all()) {
    AgentProfile p;
    p.role = role;
    p.prompt_id = default_prompt_id(role);
    p.temperature = roles::default_temperature(role);
    cfg.agents[role] = p;
  }
  if (doc.contains("agents")) {
    const json& agents = doc.at("agents");
    if (!agents.is_object()) {
      check.flag("agents", "must be an object keyed by role");
    } else {
      for (auto it = agents.begin(); it != agents.end(); ++it) {
        const std::string path = "agents." + it.key() + ".";
        if (!roles::is_valid(it.key())) {
          check.flag("agents." + it.key(), "unknown agent role");
          continue;
        }
        if (!it.value().is_object()) {
          check.flag("agents." + it.key(), "must be an object");
          continue;
        }
        check.flag_unknown_keys(it.value(), path, {"temperature", "prompt_id", "model"});
        AgentProfile& p = cfg.agents[it.key()];
        p.temperature = check.number_in(it.value(), path, "temperature", p.temperature, 0.0, 2.0);
        p.prompt_id = check.text(it.value(), path, "prompt_id", p.prompt_id);
        p.model = check.text(it.value(), path, "model", p.model);
      }
    }
  }

  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json agents_json = nlohmann::json::object();
  for (const auto& [role, p] : agents) {
    agents_json[role] = {{"temperature", p.temperature},
                         {"prompt_id", p.prompt_id},
                         {"model", p.model}};
  }
  nlohmann::json j = {
      {"queries_per_request", queries_per_request},
      {"max_results_per_query_per_db", max_results_per_query_per_db},
      {"max_review_rounds", max_review_rounds},
      {"paper_keep_threshold", paper_keep_threshold},
      {"max_code_repair_iterations", max_code_repair_iterations},
      {"llm",
       {{"base_url", llm.base_url},
        {"model", llm.model},
        {"api_key_env", llm.api_key_env},
        {"max_attempts", llm.max_attempts},
        {"backoff_base_ms", llm.backoff_base_ms},
        {"timeout_seconds", llm.timeout_seconds}}},
      {"eutils",
       {{"base_url", eutils.base_url},
        {"api_key_env", eutils.api_key_env},
        {"retries", eutils.retries}}},
      {"sandbox",
       {{"backend", sandbox.backend},
        {"image", sandbox.image},
        {"docker_endpoint", sandbox.docker_endpoint},
        {"interpreter", sandbox.interpreter},
        {"language", sandbox.language},
        {"timeout_seconds", sandbox.timeout_seconds},
        {"memory_mb", sandbox.memory_mb},
        {"network", sandbox.network}}},
      {"agents", agents_json}};
  if (sandbox.run_as_uid) j["sandbox"]["run_as_uid"] = *sandbox.run_as_uid;
  return j;
}

}  // namespace drylab
