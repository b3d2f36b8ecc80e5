#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "drylab/request.hpp"

namespace drylab::design {

inline constexpr int kProtocolSchemaVersion = 1;

/// Reference tag meaning "designed beyond the corpus, no source section".
inline constexpr const char* kNovelTag = "novel";

/// Pass-1 product: a protocol section heading with its rationale triple
/// (purpose, design reason, reference sources into the corpus).
struct SectionPlan {
  std::string heading;
  std::string purpose;
  std::string design_reason;
  std::vector<std::string> reference_sources;  // corpus tags or "novel"
};

/// Pass-2 product: ordered outline entries grouped under the section plans.
struct ProtocolOutline {
  struct Entry {
    std::string heading;  // owning section plan
    std::string text;
    std::vector<std::string> reference_sources;
  };

  std::vector<SectionPlan> plans;
  std::vector<Entry> entries;

  std::vector<Entry> entries_for(const std::string& heading) const;

  nlohmann::json to_json() const;
  static ProtocolOutline from_json(const nlohmann::json& j);
};

/// Pass-3 product: the full experimental protocol.
struct Protocol {
  struct Step {
    std::string entry;  // outline entry this step realizes
    std::string text;   // full implementation detail
  };

  struct Section {
    std::string heading;
    std::string purpose;
    std::string design_reason;
    std::vector<std::string> reference_sources;
    std::vector<Step> steps;
  };

  ResearchRequest request;
  std::vector<Section> sections;
  std::vector<std::string> dataset_accessions;  // the useful set

  /// Hierarchical consistency against the outline: same sections in the
  /// same order, every outline entry realized by >=1 non-empty step.
  void validate(const ProtocolOutline& outline) const;

  /// Structural checks that need no outline (non-empty sections/steps).
  void validate() const;

  int total_steps() const;

  nlohmann::json to_json() const;
  static Protocol from_json(const nlohmann::json& j);

  /// Deterministic human-readable rendering with stable numbering.
  std::string render_markdown() const;
};

}  // namespace drylab::design
