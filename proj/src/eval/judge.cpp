#include "drylab/eval/judge.hpp"

#include <map>
#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::eval {

using llm::JsonSchema;
using nlohmann::json;

nlohmann::json ProtocolJudgement::to_json() const {
  json sections_json = json::array();
  for (const auto& s : sections)
    sections_json.push_back(
        {{"section_index", s.section_index}, {"added_steps", s.added_steps}});
  json steps_json = json::array();
  for (const auto& s : steps)
    steps_json.push_back({{"section_index", s.section_index},
                          {"step_index", s.step_index},
                          {"correct", s.correct},
                          {"reasonable", s.reasonable},
                          {"rationale", s.rationale}});
  return {{"sections", sections_json},
          {"steps", steps_json},
          {"stats",
           {{"sections", stats.sections},
            {"total_steps", stats.total_steps},
            {"added_steps", stats.added_steps},
            {"correct_steps", stats.correct_steps},
            {"reasonable_steps", stats.reasonable_steps},
            {"mean_step_length", stats.mean_step_length}}},
          {"scores",
           {{"completeness", scores.completeness},
            {"detail", scores.detail},
            {"correctness", scores.correctness},
            {"logical_soundness", scores.logical_soundness},
            {"structural_soundness", scores.structural_soundness},
            {"overall", scores.overall()}}}};
}

namespace {

/// Numbered rendering with stable (section, step) indices the judges must
/// reference. Judges consume the protocol's structure, not its Markdown.
std::string protocol_digest(const design::Protocol& protocol) {
  std::string out = "Research objective: " + protocol.request.objective + "\n\n";
  for (size_t si = 0; si < protocol.sections.size(); ++si) {
    const auto& section = protocol.sections[si];
    out += "Section " + std::to_string(si + 1) + ": " + section.heading +
           "\nPurpose: " + section.purpose + "\n";
    for (size_t ki = 0; ki < section.steps.size(); ++ki)
      out += "  Step " + std::to_string(si + 1) + "." + std::to_string(ki + 1) + ": " +
             section.steps[ki].text + "\n";
    out += "\n";
  }
  return out;
}

/// Validator requiring exactly one record per (section, step) pair.
llm::ExtraValidator step_coverage_validator(const design::Protocol& protocol,
                                            const std::string& list_key) {
  std::map<int, int> steps_per_section;
  for (size_t si = 0; si < protocol.sections.size(); ++si)
    steps_per_section[static_cast<int>(si) + 1] =
        static_cast<int>(protocol.sections[si].steps.size());

  return [steps_per_section, list_key](const json& v) -> std::vector<std::string> {
    std::vector<std::string> errors;
    std::set<std::pair<int, int>> seen;
    for (const auto& item : v.at(list_key)) {
      int si = item.value("section_index", 0);
      int ki = item.value("step_index", 0);
      auto it = steps_per_section.find(si);
      if (it == steps_per_section.end() || ki < 1 || ki > it->second) {
        errors.push_back("$." + list_key + ": no step " + std::to_string(si) + "." +
                         std::to_string(ki) + " in the protocol");
        continue;
      }
      if (!seen.insert({si, ki}).second)
        errors.push_back("$." + list_key + ": duplicate verdict for step " +
                         std::to_string(si) + "." + std::to_string(ki));
    }
    int expected = 0;
    for (const auto& [_, n] : steps_per_section) expected += n;
    if (static_cast<int>(seen.size()) != expected && errors.empty())
      errors.push_back("$." + list_key + ": expected one verdict per step (" +
                       std::to_string(expected) + " steps)");
    return errors;
  };
}

double mean_step_length(const design::Protocol& protocol) {
  int steps = 0;
  long qualifying = 0;
  for (const auto& section : protocol.sections)
    for (const auto& step : section.steps) {
      ++steps;
      qualifying += count_step_length(step.text);
    }
  return steps == 0 ? 0.0 : static_cast<double>(qualifying) / steps;
}

}  // namespace

ProtocolJudge::ProtocolJudge(llm::Gateway& gateway, const PromptLibrary& prompts,
                             const PipelineConfig& config)
    : gateway_(gateway), prompts_(prompts), config_(config) {}

ProtocolJudgement ProtocolJudge::judge(const design::Protocol& protocol) {
  protocol.validate();
  const auto& profile = config_.agent(roles::kJudge);
  const std::string digest = protocol_digest(protocol);

  ProtocolJudgement out;
  out.stats.sections = static_cast<int>(protocol.sections.size());
  out.stats.total_steps = protocol.total_steps();
  out.stats.mean_step_length = mean_step_length(protocol);

  // The five dimensions run as independent judge calls; a failure in one
  // leaves the others intact and is reported per dimension.
  std::vector<std::string> failed;
  std::string failure_detail;
  auto guard = [&](const char* dimension, auto&& fn) {
    try {
      fn();
    } catch (const MalformedOutputError& e) {
      failed.push_back(dimension);
      failure_detail = e.what();
    } catch (const ScriptUnderflowError& e) {
      failed.push_back(dimension);
      failure_detail = e.what();
    }
  };

  // Completeness: per-section added steps.
  guard("completeness", [&] {
    auto schema = JsonSchema::object(
        {{"sections",
          JsonSchema::array(
              JsonSchema::object({{"section_index", JsonSchema::integer(1)},
                                  {"added_steps",
                                   JsonSchema::array(JsonSchema::string())}},
                                 {"section_index", "added_steps"}),
              1)}},
        {"sections"});
    int n_sections = static_cast<int>(protocol.sections.size());
    auto extra = [n_sections](const json& v) -> std::vector<std::string> {
      std::set<int> seen;
      std::vector<std::string> errors;
      for (const auto& s : v.at("sections")) {
        int idx = s.value("section_index", 0);
        if (idx < 1 || idx > n_sections)
          errors.push_back("$.sections: unknown section_index " + std::to_string(idx));
        else if (!seen.insert(idx).second)
          errors.push_back("$.sections: duplicate section_index " + std::to_string(idx));
      }
      if (static_cast<int>(seen.size()) != n_sections && errors.empty())
        errors.push_back("$.sections: expected one record per section");
      return errors;
    };
    json v = gateway_.complete_structured(
        profile, "evaluation.judge.completeness",
        {{"system", prompts_.get("judge.completeness.system")},
         {"user", digest +
                      "For every section, list the steps that must be added to achieve "
                      "its purpose (empty list when none). Reply with one JSON object: "
                      "{\"sections\": [{\"section_index\": 1, \"added_steps\": "
                      "[\"...\"]}]}."}},
        schema, extra);
    for (const auto& s : v.at("sections")) {
      SectionJudgement sj;
      sj.section_index = s.at("section_index").get<int>();
      for (const auto& a : s.at("added_steps"))
        sj.added_steps.push_back(a.get<std::string>());
      out.sections.push_back(std::move(sj));
    }
    for (const auto& s : out.sections)
      out.stats.added_steps += static_cast<int>(s.added_steps.size());
  });

  // Correctness and ordering: per-step booleans.
  std::map<std::pair<int, int>, StepJudgement> step_map;
  auto run_step_dimension = [&](const char* key, const char* field, const char* system_id,
                                const char* instruction, auto assign) {
    auto schema = JsonSchema::object(
        {{"steps", JsonSchema::array(
                       JsonSchema::object(
                           {{"section_index", JsonSchema::integer(1)},
                            {"step_index", JsonSchema::integer(1)},
                            {field, JsonSchema::boolean()},
                            {"rationale", JsonSchema::string(/*allow_empty=*/true)}},
                           {"section_index", "step_index", field}),
                       1)}},
        {"steps"});
    json v = gateway_.complete_structured(
        profile, key,
        {{"system", prompts_.get(system_id)}, {"user", digest + instruction}}, schema,
        step_coverage_validator(protocol, "steps"));
    for (const auto& s : v.at("steps")) {
      auto idx = std::make_pair(s.at("section_index").get<int>(),
                                s.at("step_index").get<int>());
      StepJudgement& sj = step_map[idx];
      sj.section_index = idx.first;
      sj.step_index = idx.second;
      assign(sj, s.at(field).get<bool>());
      std::string rationale = s.value("rationale", "");
      if (!rationale.empty()) {
        if (!sj.rationale.empty()) sj.rationale += "; ";
        sj.rationale += rationale;
      }
    }
  };

  guard("correctness", [&] {
    run_step_dimension(
        "evaluation.judge.correctness", "correct", "judge.correctness.system",
        "Judge every step for factual correctness. Reply with one JSON object: "
        "{\"steps\": [{\"section_index\": 1, \"step_index\": 1, \"correct\": true, "
        "\"rationale\": \"...\"}]}.",
        [](StepJudgement& sj, bool v) { sj.correct = v; });
  });

  guard("logical_soundness", [&] {
    run_step_dimension(
        "evaluation.judge.logical", "reasonable", "judge.logical.system",
        "Judge every step for reasonable ordering and position. Reply with one JSON "
        "object: {\"steps\": [{\"section_index\": 1, \"step_index\": 1, \"reasonable\": "
        "true, \"rationale\": \"...\"}]}.",
        [](StepJudgement& sj, bool v) { sj.reasonable = v; });
  });

  // Detail and structure: direct scores in [0,1].
  auto run_direct = [&](const char* key, const char* system_id, const char* what,
                        double& slot) {
    auto schema = JsonSchema::object(
        {{"score", JsonSchema::number(0.0, 1.0)},
         {"rationale", JsonSchema::string(/*allow_empty=*/true)}},
        {"score"});
    json v = gateway_.complete_structured(
        profile, key,
        {{"system", prompts_.get(system_id)},
         {"user", digest + "Score the protocol's " + what +
                      " from 0 to 1. Reply with one JSON object: {\"score\": 0.0-1.0, "
                      "\"rationale\": \"...\"}."}},
        schema);
    slot = v.at("score").get<double>();
  };

  guard("detail", [&] {
    run_direct("evaluation.judge.detail", "judge.detail.system", "level of detail",
               out.detail_score);
  });
  guard("structural_soundness", [&] {
    run_direct("evaluation.judge.structure", "judge.structure.system",
               "structural soundness", out.structure_score);
  });

  if (!failed.empty()) throw EvaluationError(failed, failure_detail);

  for (const auto& [_, sj] : step_map) {
    out.steps.push_back(sj);
    if (sj.correct) ++out.stats.correct_steps;
    if (sj.reasonable) ++out.stats.reasonable_steps;
  }

  out.scores.completeness = completeness(out.stats);
  out.scores.correctness = correctness(out.stats);
  out.scores.logical_soundness = logical_soundness(out.stats);
  out.scores.detail = out.detail_score;
  out.scores.structural_soundness = out.structure_score;
  return out;
}

ErrorGrade grade_error(llm::Gateway& gateway, const PromptLibrary& prompts,
                       const PipelineConfig& config, const prog::CodeArtifact& code,
                       const prog::ExecutionResult& result) {
  if (result.success())
    throw ValidationError("grade_error applies only to failed executions");

  const auto& profile = config.agent(roles::kJudge);
  auto schema = JsonSchema::object(
      {{"level", JsonSchema::integer(1, 4)},
       {"rationale", JsonSchema::string(/*allow_empty=*/true)}},
      {"level"});

  std::string user = "Failed task " + std::to_string(code.task_id) + " (revision " +
                     std::to_string(code.revision) + ").\n\nCode:\n" + code.source +
                     "\n\nStandard error:\n" + result.stderr_text +
                     (result.timed_out ? "\n(the execution timed out)" : "") +
                     "\n\nAssign the severity level. Reply with one JSON object: "
                     "{\"level\": 1-4, \"rationale\": \"...\"}.";

  json v = gateway.complete_structured(
      profile, "evaluation.grade_error.t" + std::to_string(code.task_id),
      {{"system", prompts.get("judge.error_level.system")}, {"user", user}}, schema);
  return {v.at("level").get<int>(), v.value("rationale", "")};
}

ReportQualityScores judge_report_quality(llm::Gateway& gateway, const PromptLibrary& prompts,
                                         const PipelineConfig& config,
                                         const lit::ExperimentalReport& report,
                                         const StructuredDocument& source) {
  report.validate();
  const auto& profile = config.agent(roles::kJudge);

  auto dim = JsonSchema::integer(1, 5);
  auto schema = JsonSchema::object({{"logical_soundness", dim},
                                    {"detail", dim},
                                    {"consistency", dim},
                                    {"readability", dim}},
                                   {"logical_soundness", "detail", "consistency",
                                    "readability"});

  std::string report_text;
  for (const auto& section : report.sections) report_text += section.render();

  std::string user =
      "Original paper:\n" + source.full_text() + "\nGenerated experimental report:\n" +
      report_text +
      "\nScore the report per the rubric. Reply with one JSON object: "
      "{\"logical_soundness\": 1-5, \"detail\": 1-5, \"consistency\": 1-5, "
      "\"readability\": 1-5}.";

  json v = gateway.complete_structured(
      profile, "evaluation.report_quality." + report.paper_id,
      {{"system", prompts.get("judge.report_quality.system")}, {"user", user}}, schema);

  ReportQualityScores out;
  out.logical_soundness = v.at("logical_soundness").get<int>();
  out.detail = v.at("detail").get<int>();
  out.consistency = v.at("consistency").get<int>();
  out.readability = v.at("readability").get<int>();
  out.mean = (out.logical_soundness + out.detail + out.consistency + out.readability) / 4.0;
  return out;
}

}  // namespace drylab::eval
