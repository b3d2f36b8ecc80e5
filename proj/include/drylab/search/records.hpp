#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace drylab::search {

/// One retrieved literature record. The identifier is "PMC<uid>" for PMC
/// and the bare PMID for PubMed, unique within a run.
struct PaperRecord {
  std::string source_db;  // "pubmed" | "pmc"
  std::string id;
  std::string title;
  std::string abstract;
  std::optional<int> helpfulness;  // 1..5 once scored
  bool fulltext_available = false;

  nlohmann::json to_json() const;
  static PaperRecord from_json(const nlohmann::json& j);
};

enum class DatasetProvenance { FromSearch, FromReport };

/// One retrieved dataset record (GEO family).
struct DatasetRecord {
  std::string accession;
  std::string title;
  std::string description;
  std::optional<bool> useful;  // binary usability once scored
  DatasetProvenance provenance = DatasetProvenance::FromSearch;

  nlohmann::json to_json() const;
  static DatasetRecord from_json(const nlohmann::json& j);
};

/// GEO accession grammar: (GSE|GDS|GSM|GPL) followed by digits.
bool is_valid_accession(const std::string& accession);

}  // namespace drylab::search
