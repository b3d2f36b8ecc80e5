#include "drylab/lit/report.hpp"

#include <cctype>
#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/json_io.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::lit {

using nlohmann::json;

std::string ReportSection::render() const {
  std::string out = "# " + heading + "\n";
  int step_no = 0;
  for (const auto& entry : entries) {
    out += "- " + entry.text;
    if (entry.non_experimental) out += " (non-experimental)";
    out += "\n";
    for (const auto& step : entry.steps) {
      ++step_no;
      out += "  " + std::to_string(step_no) + ". " + step.text + "\n";
      if (!step.detail.empty()) out += "     Detail: " + step.detail + "\n";
      if (!step.results.empty()) out += "     Results: " + step.results + "\n";
    }
  }
  return out;
}

void ExperimentalReport::validate() const {
  if (sections.empty())
    throw ValidationError("report " + paper_id + " has no sections");
  std::set<std::string> headings;
  for (const auto& section : sections) {
    if (util::trim(section.heading).empty())
      throw ValidationError("report " + paper_id + " has an empty heading");
    if (!headings.insert(section.heading).second)
      throw ValidationError("report " + paper_id + " repeats heading '" + section.heading +
                            "'");
    if (section.entries.empty())
      throw ValidationError("report " + paper_id + " section '" + section.heading +
                            "' has no outline entries");
    for (const auto& entry : section.entries) {
      if (util::trim(entry.text).empty())
        throw ValidationError("report " + paper_id + " has an empty outline entry under '" +
                              section.heading + "'");
      if (entry.steps.empty() && !entry.non_experimental)
        throw ValidationError("report " + paper_id + " entry '" + entry.text +
                              "' has no steps and is not flagged non-experimental");
      for (const auto& step : entry.steps)
        if (util::trim(step.text).empty())
          throw ValidationError("report " + paper_id + " has an empty step under '" +
                                entry.text + "'");
    }
  }
}

json ExperimentalReport::to_json() const {
  json sections_json = json::array();
  for (const auto& section : sections) {
    json entries_json = json::array();
    for (const auto& entry : section.entries) {
      json steps_json = json::array();
      for (const auto& step : entry.steps)
        steps_json.push_back(
            {{"text", step.text}, {"detail", step.detail}, {"results", step.results}});
      entries_json.push_back({{"text", entry.text},
                              {"non_experimental", entry.non_experimental},
                              {"steps", steps_json}});
    }
    sections_json.push_back({{"heading", section.heading}, {"entries", entries_json}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"paper_id", paper_id},
          {"sections", sections_json}};
}

ExperimentalReport ExperimentalReport::from_json(const json& j) {
  ExperimentalReport report;
  report.paper_id = j.value("paper_id", "");
  for (const auto& sj : j.value("sections", json::array())) {
    ReportSection section;
    section.heading = sj.value("heading", "");
    for (const auto& ej : sj.value("entries", json::array())) {
      OutlineEntry entry;
      entry.text = ej.value("text", "");
      entry.non_experimental = ej.value("non_experimental", false);
      for (const auto& stj : ej.value("steps", json::array()))
        entry.steps.push_back({stj.value("text", ""), stj.value("detail", ""),
                               stj.value("results", "")});
      section.entries.push_back(std::move(entry));
    }
    report.sections.push_back(std::move(section));
  }
  return report;
}

std::string to_string(Referability r) {
  switch (r) {
    case Referability::High: return "high";
    case Referability::Medium: return "medium";
    case Referability::Low: return "low";
  }
  return "low";
}

std::optional<Referability> referability_from_string(const std::string& s) {
  if (s == "high") return Referability::High;
  if (s == "medium") return Referability::Medium;
  if (s == "low") return Referability::Low;
  return std::nullopt;
}

json ReportAnalysis::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries)
    entries_json.push_back({{"heading", e.heading},
                            {"grade", lit::to_string(e.grade)},
                            {"suggestions", e.suggestions}});
  return {{"paper_id", paper_id}, {"entries", entries_json}};
}

ReportAnalysis ReportAnalysis::from_json(const json& j) {
  ReportAnalysis a;
  a.paper_id = j.value("paper_id", "");
  for (const auto& ej : j.value("entries", json::array())) {
    Entry e;
    e.heading = ej.value("heading", "");
    e.grade = referability_from_string(ej.value("grade", "low")).value_or(Referability::Low);
    e.suggestions = ej.value("suggestions", "");
    a.entries.push_back(std::move(e));
  }
  return a;
}

void ReferenceCorpus::build_index() const {
  if (index_.size() == entries.size()) return;
  index_.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) index_[entries[i].tag()] = i;
}

bool ReferenceCorpus::contains(const std::string& tag) const {
  build_index();
  return index_.count(tag) > 0;
}

const ReferenceCorpus::Entry& ReferenceCorpus::lookup(const std::string& tag) const {
  build_index();
  auto it = index_.find(tag);
  if (it == index_.end())
    throw CorpusLookupError("reference tag '" + tag + "' does not resolve in the corpus");
  return entries[it->second];
}

json ReferenceCorpus::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries)
    entries_json.push_back({{"paper_id", e.paper_id},
                            {"heading", e.heading},
                            {"content", e.content},
                            {"analysis", e.analysis}});
  return {{"entries", entries_json}};
}

ReferenceCorpus ReferenceCorpus::from_json(const json& j) {
  ReferenceCorpus corpus;
  for (const auto& ej : j.value("entries", json::array()))
    corpus.entries.push_back({ej.value("paper_id", ""), ej.value("heading", ""),
                              ej.value("content", ""), ej.value("analysis", "")});
  return corpus;
}

std::vector<std::string> extract_dataset_ids(const std::string& text) {
  static const std::string kPrefixes[] = {"GSE", "GDS", "GSM", "GPL"};
  std::vector<std::string> out;
  std::set<std::string> seen;

  for (size_t i = 0; i < text.size(); ++i) {
    // Left boundary: start of text or a non-alphanumeric character.
    if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) continue;
    for (const auto& prefix : kPrefixes) {
      if (text.compare(i, prefix.size(), prefix) != 0) continue;
      size_t digits_start = i + prefix.size();
      size_t end = digits_start;
      while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
      if (end == digits_start) continue;  // prefix without digits
      std::string accession = text.substr(i, end - i);
      if (seen.insert(accession).second) out.push_back(accession);
      break;
    }
  }
  return out;
}

std::vector<std::string> save_corpus(const ReferenceCorpus& corpus,
                                     const std::filesystem::path& base_dir,
                                     const std::string& index_rel_path) {
  const std::filesystem::path index_rel(index_rel_path);
  const std::string entries_dirname = index_rel.filename().string() + ".d";

  json index_entries = json::array();
  std::vector<std::string> written;
  written.push_back(index_rel_path);

  for (size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& entry = corpus.entries[i];
    // Paths inside the index are relative to the index file itself.
    std::string local = entries_dirname + "/entry" + std::to_string(i) + ".json";
    std::filesystem::path rel = index_rel.parent_path() / local;
    util::write_json_file(base_dir / rel, json{{"paper_id", entry.paper_id},
                                               {"heading", entry.heading},
                                               {"content", entry.content},
                                               {"analysis", entry.analysis}});
    index_entries.push_back(
        {{"tag", entry.tag()}, {"analysis", entry.analysis}, {"path", local}});
    written.push_back(rel.generic_string());
  }
  util::write_json_file(base_dir / index_rel, json{{"entries", index_entries}});
  return written;
}

ReferenceCorpus load_corpus(const std::filesystem::path& index_path) {
  json index = util::read_json_file(index_path);
  ReferenceCorpus corpus;
  for (const auto& ij : index.value("entries", json::array())) {
    json entry = util::read_json_file(index_path.parent_path() / ij.value("path", ""));
    corpus.entries.push_back({entry.value("paper_id", ""), entry.value("heading", ""),
                              entry.value("content", ""), entry.value("analysis", "")});
  }
  return corpus;
}

ReferenceCorpus build_reference_corpus(const std::vector<ExperimentalReport>& reports,
                                       const std::vector<ReportAnalysis>& analyses) {
  ReferenceCorpus corpus;
  for (const auto& report : reports) {
    const ReportAnalysis* analysis = nullptr;
    for (const auto& a : analyses)
      if (a.paper_id == report.paper_id) analysis = &a;
    if (!analysis)
      throw ValidationError("no analysis for report " + report.paper_id);
    if (analysis->entries.size() != report.sections.size())
      throw ValidationError("analysis for " + report.paper_id +
                            " does not cover every section");

    for (size_t i = 0; i < report.sections.size(); ++i) {
      const auto& section = report.sections[i];
      const auto& entry = analysis->entries[i];
      if (entry.heading != section.heading)
        throw ValidationError("analysis for " + report.paper_id +
                              " is misaligned at section '" + section.heading + "'");
      if (entry.grade != Referability::High) continue;
      corpus.entries.push_back(
          {report.paper_id, section.heading, section.render(), entry.suggestions});
    }
  }
  return corpus;
}

}  // namespace drylab::lit
