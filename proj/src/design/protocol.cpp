#include "drylab/design/protocol.hpp"

#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::design {

using nlohmann::json;

std::vector<ProtocolOutline::Entry> ProtocolOutline::entries_for(
    const std::string& heading) const {
  std::vector<Entry> out;
  for (const auto& e : entries)
    if (e.heading == heading) out.push_back(e);
  return out;
}

json ProtocolOutline::to_json() const {
  json plans_json = json::array();
  for (const auto& p : plans)
    plans_json.push_back({{"heading", p.heading},
                          {"purpose", p.purpose},
                          {"design_reason", p.design_reason},
                          {"reference_sources", p.reference_sources}});
  json entries_json = json::array();
  for (const auto& e : entries)
    entries_json.push_back({{"heading", e.heading},
                            {"text", e.text},
                            {"reference_sources", e.reference_sources}});
  return {{"plans", plans_json}, {"entries", entries_json}};
}

ProtocolOutline ProtocolOutline::from_json(const json& j) {
  ProtocolOutline outline;
  for (const auto& pj : j.value("plans", json::array())) {
    SectionPlan p;
    p.heading = pj.value("heading", "");
    p.purpose = pj.value("purpose", "");
    p.design_reason = pj.value("design_reason", "");
    for (const auto& t : pj.value("reference_sources", json::array()))
      p.reference_sources.push_back(t.get<std::string>());
    outline.plans.push_back(std::move(p));
  }
  for (const auto& ej : j.value("entries", json::array())) {
    ProtocolOutline::Entry e;
    e.heading = ej.value("heading", "");
    e.text = ej.value("text", "");
    for (const auto& t : ej.value("reference_sources", json::array()))
      e.reference_sources.push_back(t.get<std::string>());
    outline.entries.push_back(std::move(e));
  }
  return outline;
}

void Protocol::validate() const {
  if (sections.empty()) throw ValidationError("protocol has no sections");
  for (const auto& section : sections) {
    if (util::trim(section.heading).empty())
      throw ValidationError("protocol has a section without a heading");
    if (section.steps.empty())
      throw ValidationError("protocol section '" + section.heading + "' has no steps");
    for (const auto& step : section.steps)
      if (util::trim(step.text).empty())
        throw ValidationError("protocol section '" + section.heading +
                              "' has an empty step");
  }
}

void Protocol::validate(const ProtocolOutline& outline) const {
  validate();
  if (sections.size() != outline.plans.size())
    throw ValidationError("protocol sections do not match the planned headings");
  for (size_t i = 0; i < sections.size(); ++i) {
    if (sections[i].heading != outline.plans[i].heading)
      throw ValidationError("protocol section order diverges from the plan at '" +
                            sections[i].heading + "'");
    std::set<std::string> covered;
    for (const auto& step : sections[i].steps) covered.insert(step.entry);
    for (const auto& entry : outline.entries_for(sections[i].heading))
      if (!covered.count(entry.text))
        throw ValidationError("outline entry '" + entry.text +
                              "' is not realized by any step");
  }
}

int Protocol::total_steps() const {
  int n = 0;
  for (const auto& s : sections) n += static_cast<int>(s.steps.size());
  return n;
}

json Protocol::to_json() const {
  json sections_json = json::array();
  for (const auto& section : sections) {
    json steps_json = json::array();
    for (const auto& step : section.steps)
      steps_json.push_back({{"entry", step.entry}, {"text", step.text}});
    sections_json.push_back({{"heading", section.heading},
                             {"purpose", section.purpose},
                             {"design_reason", section.design_reason},
                             {"reference_sources", section.reference_sources},
                             {"steps", steps_json}});
  }
  return {{"schema_version", kProtocolSchemaVersion},
          {"request", request.to_json()},
          {"sections", sections_json},
          {"dataset_accessions", dataset_accessions}};
}

Protocol Protocol::from_json(const json& j) {
  Protocol p;
  p.request = ResearchRequest::from_json(j.value("request", json::object()));
  for (const auto& sj : j.value("sections", json::array())) {
    Section section;
    section.heading = sj.value("heading", "");
    section.purpose = sj.value("purpose", "");
    section.design_reason = sj.value("design_reason", "");
    for (const auto& t : sj.value("reference_sources", json::array()))
      section.reference_sources.push_back(t.get<std::string>());
    for (const auto& stj : sj.value("steps", json::array()))
      section.steps.push_back({stj.value("entry", ""), stj.value("text", "")});
    p.sections.push_back(std::move(section));
  }
  for (const auto& a : j.value("dataset_accessions", json::array()))
    p.dataset_accessions.push_back(a.get<std::string>());
  return p;
}

std::string Protocol::render_markdown() const {
  std::string out = "# Experimental Protocol\n\n";
  out += "Objective: " + request.objective + "\n";
  if (!util::trim(request.conditions).empty())
    out += "Conditions: " + request.conditions + "\n";
  if (!util::trim(request.requirements).empty())
    out += "Requirements: " + request.requirements + "\n";
  if (!dataset_accessions.empty())
    out += "Datasets: " + util::join(dataset_accessions, ", ") + "\n";
  out += "\n";

  for (size_t i = 0; i < sections.size(); ++i) {
    const auto& section = sections[i];
    out += "## " + std::to_string(i + 1) + ". " + section.heading + "\n\n";
    if (!section.purpose.empty()) out += "Purpose: " + section.purpose + "\n";
    if (!section.design_reason.empty())
      out += "Design reason: " + section.design_reason + "\n";
    if (!section.reference_sources.empty())
      out += "References: " + util::join(section.reference_sources, ", ") + "\n";
    out += "\n";
    for (size_t k = 0; k < section.steps.size(); ++k) {
      out += "### " + std::to_string(i + 1) + "." + std::to_string(k + 1) + " " +
             section.steps[k].entry + "\n\n";
      out += section.steps[k].text + "\n\n";
    }
  }
  return out;
}

}  // namespace drylab::design
