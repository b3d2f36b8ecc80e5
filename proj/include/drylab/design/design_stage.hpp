#pragma once

#include <string>
#include <vector>

#include "drylab/config.hpp"
#include "drylab/design/protocol.hpp"
#include "drylab/lit/report.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/prompts.hpp"
#include "drylab/request.hpp"
#include "drylab/review/review.hpp"
#include "drylab/search/records.hpp"

namespace drylab::design {

/// Produces the experimental protocol in three reviewed passes: section
/// plans (heading + rationale), outline, then full implementation details
/// section by section, threading running summaries forward.
class DesignStage {
 public:
  DesignStage(llm::Gateway& gateway, const PromptLibrary& prompts,
              const PipelineConfig& config, const ResearchRequest& request,
              const review::TranscriptStore* transcripts = nullptr);

  /// Pass 1. Every reference source must resolve in the corpus or be
  /// "novel". Stage-fatal (DesignError) after repairs.
  std::vector<SectionPlan> design_headings(const lit::ReferenceCorpus& corpus);

  /// Pass 2: grouped outline with per-entry reference tags.
  ProtocolOutline design_outline(const std::vector<SectionPlan>& plans,
                                 const lit::ReferenceCorpus& corpus);

  /// Resolve tags in order; "novel" contributes nothing. Throws
  /// CorpusLookupError on an unresolvable tag.
  static std::vector<lit::ReferenceCorpus::Entry> retrieve_references(
      const std::vector<std::string>& tags, const lit::ReferenceCorpus& corpus);

  /// Pass 3: sections generated strictly in order; each section's prompt
  /// carries its retrieved references, the useful datasets, the outline
  /// and the summaries of previously approved sections.
  Protocol design_details(const ProtocolOutline& outline,
                          const lit::ReferenceCorpus& corpus,
                          const std::vector<search::DatasetRecord>& useful_datasets);

 private:
  review::ReviewEnv review_env() const;

  llm::Gateway& gateway_;
  const PromptLibrary& prompts_;
  const PipelineConfig& config_;
  const ResearchRequest& request_;
  const review::TranscriptStore* transcripts_;
};

}  // namespace drylab::design
