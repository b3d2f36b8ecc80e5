#include "drylab/lit/literature_stage.hpp"

#include <future>
#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::lit {

using llm::JsonSchema;
using nlohmann::json;

LiteratureStage::LiteratureStage(llm::Gateway& gateway, const PromptLibrary& prompts,
                                 const PipelineConfig& config, const ResearchRequest& request,
                                 const review::TranscriptStore* transcripts)
    : gateway_(gateway),
      prompts_(prompts),
      config_(config),
      request_(request),
      transcripts_(transcripts) {}

review::ReviewEnv LiteratureStage::review_env() const {
  return review::ReviewEnv{gateway_, config_.agent(roles::kReviewer), prompts_, transcripts_,
                           config_.max_review_rounds};
}

namespace {

std::vector<llm::ChatMessage> with_feedback(std::vector<llm::ChatMessage> messages,
                                            const std::optional<std::string>& feedback) {
  if (feedback) messages.push_back({"user", review::feedback_message(*feedback)});
  return messages;
}

std::string dump_artifact(const json& v) { return v.dump(2); }

}  // namespace

// ---------------------------------------------------------------------------
// Step 1: first-level headings
// ---------------------------------------------------------------------------

std::vector<std::string> LiteratureStage::generate_headings(const StructuredDocument& doc) {
  doc.validate();
  const auto& profile = config_.agent(roles::kReportGenerator);
  const std::string key = "literature.report." + doc.paper_id + ".headings";

  auto schema =
      JsonSchema::object({{"headings", JsonSchema::array(JsonSchema::string(), 1)}}, {"headings"});
  auto extra = [](const json& v) -> std::vector<std::string> {
    std::set<std::string> seen;
    std::vector<std::string> errors;
    for (const auto& h : v.at("headings"))
      if (!seen.insert(util::to_lower(util::trim(h.get<std::string>()))).second)
        errors.push_back("$.headings: duplicate heading '" + h.get<std::string>() + "'");
    return errors;
  };

  std::string user =
      "Paper " + doc.paper_id + ":\n" + doc.full_text() +
      "\nGenerate the first-level headings for this paper's experimental report, "
      "grounded in its content. Reply with one JSON object: {\"headings\": [\"...\"]}.";

  auto env = review_env();
  review::ReviewContext ctx{&request_,
                            "first-level headings of the experimental report for paper " +
                                doc.paper_id};
  try {
    auto reviewed = review::review_loop(
        env, ctx, key,
        [&](const std::optional<std::string>& feedback) -> json {
          return gateway_.complete_structured(
              profile, key,
              with_feedback({{"system", prompts_.get(profile.prompt_id)}, {"user", user}},
                            feedback),
              schema, extra);
        },
        dump_artifact);
    if (!reviewed.approved)
      log::warn("reviewer cap reached for " + key + "; accepting the last revision");

    std::vector<std::string> headings;
    for (const auto& h : reviewed.value.at("headings"))
      headings.push_back(util::trim(h.get<std::string>()));
    return headings;
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Steps 2-5: one heading at a time
// ---------------------------------------------------------------------------

struct LiteratureStage::SectionJob {
  LiteratureStage& stage;
  const StructuredDocument& doc;
  std::string heading;
  int heading_index;

  std::string key_base() const {
    return "literature.report." + doc.paper_id + ".h" + std::to_string(heading_index);
  }

  const AgentProfile& profile() const {
    return stage.config_.agent(roles::kReportGenerator);
  }

  json produce(const std::string& key, const std::string& user, const JsonSchema& schema,
               const llm::ExtraValidator& extra, const std::optional<std::string>& feedback) {
    return stage.gateway_.complete_structured(
        profile(), key,
        with_feedback({{"system", stage.prompts_.get(profile().prompt_id)}, {"user", user}},
                      feedback),
        schema, extra);
  }

  json reviewed(const std::string& key, const std::string& what, const std::string& user,
                const JsonSchema& schema, const llm::ExtraValidator& extra) {
    auto env = stage.review_env();
    review::ReviewContext ctx{&stage.request_, what};
    auto result = review::review_loop(
        env, ctx, key,
        [&](const std::optional<std::string>& feedback) {
          return produce(key, user, schema, extra, feedback);
        },
        dump_artifact);
    if (!result.approved)
      log::warn("reviewer cap reached for " + key + "; accepting the last revision");
    return result.value;
  }

  // Step 2: outline entries for this heading.
  std::vector<std::string> outline() {
    auto schema = JsonSchema::object(
        {{"heading", JsonSchema::string()},
         {"entries", JsonSchema::array(JsonSchema::string(), 1)}},
        {"heading", "entries"});
    std::string expected = heading;
    auto extra = [expected](const json& v) -> std::vector<std::string> {
      if (v.at("heading").get<std::string>() != expected)
        return {"$.heading: entries grouped under unknown heading '" +
                v.at("heading").get<std::string>() + "', expected '" + expected + "'"};
      return {};
    };
    std::string user =
        "Paper " + doc.paper_id + ":\n" + doc.full_text() + "\nReport section heading: '" +
        heading +
        "'.\nDevelop the outline entries for this section of the experimental report. "
        "Reply with one JSON object: {\"heading\": \"" +
        heading + "\", \"entries\": [\"...\"]}.";

    json value = reviewed(key_base() + ".outline",
                          "outline of report section '" + heading + "' for paper " +
                              doc.paper_id,
                          user, schema, extra);
    std::vector<std::string> entries;
    for (const auto& e : value.at("entries"))
      entries.push_back(util::trim(e.get<std::string>()));
    return entries;
  }

  // Step 3: ordered steps per outline entry.
  ReportSection steps(const std::vector<std::string>& entries) {
    auto schema = JsonSchema::object(
        {{"entries",
          JsonSchema::array(
              JsonSchema::object(
                  {{"entry", JsonSchema::string()},
                   {"non_experimental", JsonSchema::boolean()},
                   {"steps", JsonSchema::array(JsonSchema::string())}},
                  {"entry", "steps"}),
              1)}},
        {"entries"});
    auto extra = [&entries](const json& v) -> std::vector<std::string> {
      std::vector<std::string> errors;
      const auto& got = v.at("entries");
      if (got.size() != entries.size()) {
        errors.push_back("$.entries: expected one object per outline entry (" +
                         std::to_string(entries.size()) + "), got " +
                         std::to_string(got.size()));
        return errors;
      }
      for (size_t i = 0; i < got.size(); ++i) {
        std::string entry = got[i].value("entry", "");
        if (entry != entries[i])
          errors.push_back("$.entries[" + std::to_string(i) +
                           "].entry: steps mapped to unknown entry '" + entry +
                           "', expected '" + entries[i] + "'");
        if (!got[i].value("non_experimental", false) && got[i].at("steps").empty())
          errors.push_back("$.entries[" + std::to_string(i) +
                           "].steps: empty step list requires non_experimental=true");
      }
      return errors;
    };

    std::string entries_list;
    for (const auto& e : entries) entries_list += "- " + e + "\n";
    std::string user =
        "Paper " + doc.paper_id + ":\n" + doc.full_text() + "\nSection '" + heading +
        "' outline entries:\n" + entries_list +
        "Extract the ordered experimental steps for each outline entry, in the order "
        "given. Flag an entry with \"non_experimental\": true only when it describes no "
        "experimental procedure. Reply with one JSON object: {\"entries\": [{\"entry\": "
        "\"...\", \"non_experimental\": false, \"steps\": [\"...\"]}]}.";

    json value =
        reviewed(key_base() + ".steps",
                 "experimental steps of section '" + heading + "' for paper " + doc.paper_id,
                 user, schema, extra);

    ReportSection section;
    section.heading = heading;
    for (const auto& ej : value.at("entries")) {
      OutlineEntry entry;
      entry.text = ej.at("entry").get<std::string>();
      entry.non_experimental = ej.value("non_experimental", false);
      for (const auto& s : ej.at("steps"))
        entry.steps.push_back({s.get<std::string>(), "", ""});
      section.entries.push_back(std::move(entry));
    }
    return section;
  }

  // Steps 4 and 5 share their shape: one record per section-wide step index.
  void annotate(ReportSection& section, const std::string& kind /* details | results */) {
    std::vector<ReportStep*> steps;
    std::string listing;
    for (auto& entry : section.entries)
      for (auto& step : entry.steps) {
        steps.push_back(&step);
        listing += std::to_string(steps.size()) + ". " + step.text + "\n";
      }
    if (steps.empty()) return;  // every entry non-experimental

    const bool details = kind == "details";
    const std::string field = details ? "detail" : "results";
    auto schema = JsonSchema::object(
        {{kind, JsonSchema::array(
                    JsonSchema::object(
                        {{"step_index", JsonSchema::integer(1)},
                         {field, JsonSchema::string(/*allow_empty=*/!details)}},
                        {"step_index", field}),
                    1)}},
        {kind});
    size_t expected = steps.size();
    auto extra = [expected, kind](const json& v) -> std::vector<std::string> {
      std::vector<std::string> errors;
      std::set<int> seen;
      for (const auto& item : v.at(kind)) {
        int idx = item.value("step_index", 0);
        if (idx < 1 || idx > static_cast<int>(expected))
          errors.push_back("$." + kind + ": unknown step_index " + std::to_string(idx));
        else if (!seen.insert(idx).second)
          errors.push_back("$." + kind + ": duplicate step_index " + std::to_string(idx));
      }
      if (seen.size() != expected && errors.empty())
        errors.push_back("$." + kind + ": expected one record per step (1.." +
                         std::to_string(expected) + ")");
      return errors;
    };

    std::string user =
        "Paper " + doc.paper_id + ":\n" + doc.full_text() + "\nSection '" + heading +
        "' steps:\n" + listing +
        (details
             ? "Extract the granular implementation detail for every step (note "
               "explicitly when the paper gives none). Reply with one JSON object: "
               "{\"details\": [{\"step_index\": 1, \"detail\": \"...\"}]}."
             : "Extract the reported results for every step; use an empty string when "
               "the paper reports none for a step. Reply with one JSON object: "
               "{\"results\": [{\"step_index\": 1, \"results\": \"...\"}]}.");

    json value = reviewed(key_base() + "." + kind,
                          kind + " of section '" + heading + "' for paper " + doc.paper_id,
                          user, schema, extra);
    for (const auto& item : value.at(kind)) {
      ReportStep* step = steps[item.at("step_index").get<int>() - 1];
      if (details)
        step->detail = item.at("detail").get<std::string>();
      else
        step->results = item.at("results").get<std::string>();
    }
  }
};

std::vector<LiteratureStage::HeadingOutline> LiteratureStage::develop_outline(
    const StructuredDocument& doc, const std::vector<std::string>& headings) {
  if (headings.empty()) throw ValidationError("develop_outline requires headings");
  try {
    std::vector<std::future<std::vector<std::string>>> jobs;
    for (size_t hi = 0; hi < headings.size(); ++hi)
      jobs.push_back(std::async(std::launch::async, [this, &doc, &headings, hi] {
        SectionJob job{*this, doc, headings[hi], static_cast<int>(hi)};
        return job.outline();
      }));
    std::vector<HeadingOutline> out;
    for (size_t hi = 0; hi < headings.size(); ++hi)
      out.push_back({headings[hi], jobs[hi].get()});
    return out;
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  }
}

std::vector<ReportSection> LiteratureStage::extract_steps(
    const StructuredDocument& doc, const std::vector<HeadingOutline>& outline) {
  try {
    std::vector<std::future<ReportSection>> jobs;
    for (size_t hi = 0; hi < outline.size(); ++hi)
      jobs.push_back(std::async(std::launch::async, [this, &doc, &outline, hi] {
        SectionJob job{*this, doc, outline[hi].heading, static_cast<int>(hi)};
        return job.steps(outline[hi].entries);
      }));
    std::vector<ReportSection> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  }
}

void LiteratureStage::extract_details(const StructuredDocument& doc,
                                      std::vector<ReportSection>& sections) {
  try {
    std::vector<std::future<void>> jobs;
    for (size_t hi = 0; hi < sections.size(); ++hi)
      jobs.push_back(std::async(std::launch::async, [this, &doc, &sections, hi] {
        SectionJob job{*this, doc, sections[hi].heading, static_cast<int>(hi)};
        job.annotate(sections[hi], "details");
      }));
    for (auto& j : jobs) j.get();
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  }
}

void LiteratureStage::extract_results(const StructuredDocument& doc,
                                      std::vector<ReportSection>& sections) {
  try {
    std::vector<std::future<void>> jobs;
    for (size_t hi = 0; hi < sections.size(); ++hi)
      jobs.push_back(std::async(std::launch::async, [this, &doc, &sections, hi] {
        SectionJob job{*this, doc, sections[hi].heading, static_cast<int>(hi)};
        job.annotate(sections[hi], "results");
      }));
    for (auto& j : jobs) j.get();
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  }
}

ReportSection LiteratureStage::build_section(const StructuredDocument& doc,
                                             const std::string& heading, int heading_index) {
  SectionJob job{*this, doc, heading, heading_index};
  ReportSection section = job.steps(job.outline());
  job.annotate(section, "details");
  job.annotate(section, "results");
  return section;
}

ExperimentalReport LiteratureStage::generate_report(const StructuredDocument& doc) {
  try {
    std::vector<std::string> headings = generate_headings(doc);

    // Headings fan out; each job runs outline -> steps -> details -> results.
    std::vector<std::future<ReportSection>> jobs;
    for (size_t hi = 0; hi < headings.size(); ++hi)
      jobs.push_back(std::async(std::launch::async, [this, &doc, &headings, hi] {
        return build_section(doc, headings[hi], static_cast<int>(hi));
      }));

    ExperimentalReport report;
    report.paper_id = doc.paper_id;
    for (auto& j : jobs) report.sections.push_back(j.get());
    report.validate();
    return report;
  } catch (const MalformedOutputError& e) {
    throw ReportGenerationError(e.what());
  } catch (const ValidationError& e) {
    throw ReportGenerationError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Report analysis
// ---------------------------------------------------------------------------

ReportAnalysis LiteratureStage::analyze_report(const ExperimentalReport& report) {
  report.validate();
  const auto& profile = config_.agent(roles::kAnalyst);

  std::string heading_list;
  for (const auto& s : report.sections) heading_list += "- " + s.heading + "\n";

  ReportAnalysis analysis;
  analysis.paper_id = report.paper_id;
  try {
    for (size_t si = 0; si < report.sections.size(); ++si) {
      const auto& section = report.sections[si];
      const std::string key =
          "literature.analysis." + report.paper_id + ".s" + std::to_string(si);

      auto schema = JsonSchema::object(
          {{"referability", JsonSchema::string_enum({"high", "medium", "low"})},
           {"suggestions", JsonSchema::string()}},
          {"referability", "suggestions"});

      std::string user =
          request_.describe() + "\n\nReport " + report.paper_id + " has sections:\n" +
          heading_list + "\nSection under analysis:\n" + section.render() +
          "\nGrade how referable this section is for designing the new experiments "
          "(high, medium or low) and give reference/modification suggestions. Reply "
          "with one JSON object: {\"referability\": \"high\" | \"medium\" | \"low\", "
          "\"suggestions\": \"...\"}.";

      auto env = review_env();
      review::ReviewContext ctx{&request_, "referability analysis of section '" +
                                               section.heading + "' in report " +
                                               report.paper_id};
      auto reviewed = review::review_loop(
          env, ctx, key,
          [&](const std::optional<std::string>& feedback) -> json {
            return gateway_.complete_structured(
                profile, key,
                with_feedback({{"system", prompts_.get(profile.prompt_id)}, {"user", user}},
                              feedback),
                schema);
          },
          dump_artifact);
      if (!reviewed.approved)
        log::warn("reviewer cap reached for " + key + "; accepting the last revision");

      ReportAnalysis::Entry entry;
      entry.heading = section.heading;
      entry.grade = *referability_from_string(
          reviewed.value.at("referability").get<std::string>());
      entry.suggestions = reviewed.value.at("suggestions").get<std::string>();
      analysis.entries.push_back(std::move(entry));
    }
  } catch (const MalformedOutputError& e) {
    throw AnalysisError(e.what());
  }
  return analysis;
}

}  // namespace drylab::lit
