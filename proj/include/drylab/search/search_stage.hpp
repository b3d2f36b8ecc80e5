#pragma once

#include <string>
#include <vector>

#include "drylab/config.hpp"
#include "drylab/document.hpp"
#include "drylab/llm/gateway.hpp"
#include "drylab/prompts.hpp"
#include "drylab/request.hpp"
#include "drylab/search/boolean_query.hpp"
#include "drylab/search/eutils.hpp"
#include "drylab/search/records.hpp"

namespace drylab::search {

/// Query generation, retrieval from PubMed/PMC/GEO, LLM-scored filtration
/// and full-text download.
class SearchStage {
 public:
  SearchStage(llm::Gateway& gateway, EutilsClient& eutils, const PromptLibrary& prompts,
              const PipelineConfig& config);

  /// Exactly n syntactically valid Boolean queries for the request.
  std::vector<BooleanQuery> generate_queries(const ResearchRequest& request, int n);

  /// At most `cap` records for one query against "pubmed" or "pmc".
  /// Zero hits is an empty list, not an error.
  std::vector<PaperRecord> search_literature(const BooleanQuery& query,
                                             const std::string& db, int cap);

  /// GEO (db=gds) dataset search; provenance = from-search.
  std::vector<DatasetRecord> search_datasets(const BooleanQuery& query, int cap);

  /// Helpfulness 1..5 from title+abstract only (five-point rubric).
  int score_paper(const PaperRecord& paper, const ResearchRequest& request);

  /// Binary usability from the dataset description.
  bool score_dataset(const DatasetRecord& dataset, const ResearchRequest& request);

  /// Structured full text for a PMC record. Throws AvailabilityError when
  /// the record has no full text, DocumentError on XML failures.
  StructuredDocument fetch_fulltext(const PaperRecord& paper);

  /// Direct GEO lookup by accession (bypasses query generation);
  /// provenance = from-report.
  DatasetRecord fetch_dataset_by_id(const std::string& accession);

 private:
  llm::Gateway& gateway_;
  EutilsClient& eutils_;
  const PromptLibrary& prompts_;
  const PipelineConfig& config_;
};

/// Keep every paper scoring at or above the threshold, ordered by
/// descending score then identifier. All inputs must be scored.
std::vector<PaperRecord> filter_papers(const std::vector<PaperRecord>& papers, int threshold);

/// Merge new records into `collected`, deduplicating by identifier /
/// accession (first occurrence wins). Returns how many were added.
int merge_papers(std::vector<PaperRecord>& collected, const std::vector<PaperRecord>& found);
int merge_datasets(std::vector<DatasetRecord>& collected,
                   const std::vector<DatasetRecord>& found);

/// Parse a PMC efetch payload (JATS) into one record per article.
std::vector<PaperRecord> parse_pmc_articles(const std::string& xml);

/// Parse a PubMed efetch payload (PubmedArticleSet).
std::vector<PaperRecord> parse_pubmed_articles(const std::string& xml);

/// Parse the JATS body of one PMC article into a StructuredDocument.
StructuredDocument parse_pmc_fulltext(const std::string& xml, const std::string& paper_id);

}  // namespace drylab::search
