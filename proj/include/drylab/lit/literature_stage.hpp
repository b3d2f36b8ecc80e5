#pragma once

#include <string>
#include <vector>

#include "drylab/config.hpp"
#include "drylab/document.hpp"
#include "drylab/lit/report.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/prompts.hpp"
#include "drylab/request.hpp"
#include "drylab/review/review.hpp"

namespace drylab::lit {

/// Standardizes papers into experimental reports through five hierarchical
/// extraction steps (headings, outline, steps, details, results), each
/// pass reviewed; then grades every report section for referability.
/// Steps 2-5 fan out per heading.
class LiteratureStage {
 public:
  struct HeadingOutline {
    std::string heading;
    std::vector<std::string> entries;
  };

  LiteratureStage(llm::Gateway& gateway, const PromptLibrary& prompts,
                  const PipelineConfig& config, const ResearchRequest& request,
                  const review::TranscriptStore* transcripts = nullptr);

  /// Step 1: non-empty, deduplicated first-level headings.
  std::vector<std::string> generate_headings(const StructuredDocument& doc);

  /// Step 2: outline entries grouped under every heading (>=1 each).
  std::vector<HeadingOutline> develop_outline(const StructuredDocument& doc,
                                              const std::vector<std::string>& headings);

  /// Step 3: ordered steps per outline entry. Entries may be flagged
  /// non-experimental instead of carrying steps.
  std::vector<ReportSection> extract_steps(const StructuredDocument& doc,
                                           const std::vector<HeadingOutline>& outline);

  /// Step 4: detail text attached to every step.
  void extract_details(const StructuredDocument& doc, std::vector<ReportSection>& sections);

  /// Step 5: results text attached to every step (may be empty).
  void extract_results(const StructuredDocument& doc, std::vector<ReportSection>& sections);

  /// Composes the five steps; headings fan out concurrently for steps 2-5;
  /// every sub-step passes the reviewer loop. Throws ReportGenerationError
  /// when any sub-step fails after repairs.
  ExperimentalReport generate_report(const StructuredDocument& doc);

  /// One graded entry (+ suggestions) per section, reviewed.
  ReportAnalysis analyze_report(const ExperimentalReport& report);

 private:
  struct SectionJob;  // one heading's pass through steps 2-5

  ReportSection build_section(const StructuredDocument& doc, const std::string& heading,
                              int heading_index);

  review::ReviewEnv review_env() const;

  llm::Gateway& gateway_;
  const PromptLibrary& prompts_;
  const PipelineConfig& config_;
  const ResearchRequest& request_;
  const review::TranscriptStore* transcripts_;
};

}  // namespace drylab::lit
