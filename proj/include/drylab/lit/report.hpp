#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace drylab::lit {

inline constexpr int kReportSchemaVersion = 1;

/// One experimental step with its granular detail and reported results
/// (results may be empty when the paper reports none).
struct ReportStep {
  std::string text;
  std::string detail;
  std::string results;
};

/// One outline entry under a heading. Entries explicitly flagged
/// non-experimental may carry zero steps.
struct OutlineEntry {
  std::string text;
  bool non_experimental = false;
  std::vector<ReportStep> steps;
};

struct ReportSection {
  std::string heading;
  std::vector<OutlineEntry> entries;

  /// Flat render used for analysis and corpus content.
  std::string render() const;
};

/// Standardized per-paper experimental report:
/// headings -> outline -> steps -> details -> results.
struct ExperimentalReport {
  std::string paper_id;
  std::vector<ReportSection> sections;

  /// Structural closure: >=1 section, unique headings, every step under
  /// exactly one entry, entries non-empty unless flagged.
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentalReport from_json(const nlohmann::json& j);
};

enum class Referability { High, Medium, Low };

std::string to_string(Referability r);
std::optional<Referability> referability_from_string(const std::string& s);

/// Per-section referability grades and suggestions for one report.
struct ReportAnalysis {
  struct Entry {
    std::string heading;
    Referability grade = Referability::Low;
    std::string suggestions;
  };

  std::string paper_id;
  std::vector<Entry> entries;  // exactly one per report section

  nlohmann::json to_json() const;
  static ReportAnalysis from_json(const nlohmann::json& j);
};

/// High-referability sections from all reports, indexed by
/// "<paper_id>/<heading>" for design-stage retrieval.
struct ReferenceCorpus {
  struct Entry {
    std::string paper_id;
    std::string heading;
    std::string content;
    std::string analysis;

    std::string tag() const { return paper_id + "/" + heading; }
  };

  std::vector<Entry> entries;

  bool contains(const std::string& tag) const;
  const Entry& lookup(const std::string& tag) const;  // throws CorpusLookupError

  nlohmann::json to_json() const;
  static ReferenceCorpus from_json(const nlohmann::json& j);

 private:
  mutable std::map<std::string, std::size_t> index_;
  void build_index() const;
};

/// All GEO accessions in the text, first-occurrence order, deduplicated.
/// A match requires a non-alphanumeric left boundary.
std::vector<std::string> extract_dataset_ids(const std::string& text);

/// Exactly the high-referability sections with their analysis text.
/// Analyses must cover every report section.
ReferenceCorpus build_reference_corpus(const std::vector<ExperimentalReport>& reports,
                                       const std::vector<ReportAnalysis>& analyses);

/// On-disk form: one JSON index (tags, analyses, entry paths) plus one file
/// per entry under `<index>.d/`. Returns every written path, index first,
/// relative to `base_dir`.
std::vector<std::string> save_corpus(const ReferenceCorpus& corpus,
                                     const std::filesystem::path& base_dir,
                                     const std::string& index_rel_path);
ReferenceCorpus load_corpus(const std::filesystem::path& index_path);

}  // namespace drylab::lit
