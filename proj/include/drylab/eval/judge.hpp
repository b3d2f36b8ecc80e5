#pragma once

#include <string>
#include <vector>

#include "drylab/config.hpp"
#include "drylab/design/protocol.hpp"
#include "drylab/document.hpp"
#include "drylab/eval/metrics.hpp"
#include "drylab/lit/report.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/prog/task.hpp"
#include "drylab/prompts.hpp"

namespace drylab::eval {

/// Per-step verdict from the correctness and ordering judges.
struct StepJudgement {
  int section_index = 0;  // 1-based
  int step_index = 0;     // 1-based within the section
  bool correct = false;
  bool reasonable = false;
  std::string rationale;
};

/// Per-section list of steps the judge says are missing.
struct SectionJudgement {
  int section_index = 0;  // 1-based
  std::vector<std::string> added_steps;
};

/// Full judgement of one protocol: raw verdicts, derived stats, scores.
struct ProtocolJudgement {
  std::vector<SectionJudgement> sections;
  std::vector<StepJudgement> steps;
  double detail_score = 0.0;
  double structure_score = 0.0;
  ProtocolStats stats;
  MetricScores scores;

  nlohmann::json to_json() const;
};

/// Scores a protocol on the five dimensions with independent judge calls
/// (completeness, correctness, logical soundness judged per step/section;
/// detail and structure scored directly), then applies the formulas.
/// Throws EvaluationError naming every dimension that failed.
class ProtocolJudge {
 public:
  ProtocolJudge(llm::Gateway& gateway, const PromptLibrary& prompts,
                const PipelineConfig& config);

  ProtocolJudgement judge(const design::Protocol& protocol);

 private:
  llm::Gateway& gateway_;
  const PromptLibrary& prompts_;
  const PipelineConfig& config_;
};

/// Assigns a 1..4 severity level to a failed execution per the error
/// rubric; judge rationale retained.
struct ErrorGrade {
  int level = 0;
  std::string rationale;
};
ErrorGrade grade_error(llm::Gateway& gateway, const PromptLibrary& prompts,
                       const PipelineConfig& config, const prog::CodeArtifact& code,
                       const prog::ExecutionResult& result);

/// Four 1..5 rubric scores for a generated report against its source
/// document, plus their mean.
struct ReportQualityScores {
  int logical_soundness = 0;
  int detail = 0;
  int consistency = 0;
  int readability = 0;
  double mean = 0.0;
};
ReportQualityScores judge_report_quality(llm::Gateway& gateway, const PromptLibrary& prompts,
                                         const PipelineConfig& config,
                                         const lit::ExperimentalReport& report,
                                         const StructuredDocument& source);

}  // namespace drylab::eval
