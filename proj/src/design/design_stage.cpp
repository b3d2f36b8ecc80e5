#include "drylab/design/design_stage.hpp"

#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::design {

using llm::JsonSchema;
using nlohmann::json;

DesignStage::DesignStage(llm::Gateway& gateway, const PromptLibrary& prompts,
                         const PipelineConfig& config, const ResearchRequest& request,
                         const review::TranscriptStore* transcripts)
    : gateway_(gateway),
      prompts_(prompts),
      config_(config),
      request_(request),
      transcripts_(transcripts) {}

review::ReviewEnv DesignStage::review_env() const {
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

std::vector<std::string> check_tags(const json& tags, const lit::ReferenceCorpus& corpus,
                                    const std::string& path) {
  std::vector<std::string> errors;
  for (const auto& t : tags) {
    std::string tag = t.get<std::string>();
    if (tag != kNovelTag && !corpus.contains(tag))
      errors.push_back(path + ": reference source '" + tag +
                       "' does not resolve in the corpus and is not 'novel'");
  }
  return errors;
}

std::string corpus_digest(const lit::ReferenceCorpus& corpus) {
  std::string out;
  for (const auto& e : corpus.entries) {
    out += "[" + e.tag() + "]\n" + e.content;
    if (!e.analysis.empty()) out += "Analysis: " + e.analysis + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pass 1: section plans
// ---------------------------------------------------------------------------

std::vector<SectionPlan> DesignStage::design_headings(const lit::ReferenceCorpus& corpus) {
  if (corpus.entries.empty())
    throw ValidationError("design requires a non-empty reference corpus");

  const auto& profile = config_.agent(roles::kDesigner);
  const std::string key = "design.headings";

  auto schema = JsonSchema::object(
      {{"sections",
        JsonSchema::array(
            JsonSchema::object(
                {{"heading", JsonSchema::string()},
                 {"purpose", JsonSchema::string()},
                 {"design_reason", JsonSchema::string()},
                 {"reference_sources", JsonSchema::array(JsonSchema::string(), 1)}},
                {"heading", "purpose", "design_reason", "reference_sources"}),
            1)}},
      {"sections"});
  auto extra = [&corpus](const json& v) -> std::vector<std::string> {
    std::vector<std::string> errors;
    std::set<std::string> seen;
    const auto& sections = v.at("sections");
    for (size_t i = 0; i < sections.size(); ++i) {
      std::string path = "$.sections[" + std::to_string(i) + "]";
      if (!seen.insert(sections[i].value("heading", "")).second)
        errors.push_back(path + ".heading: duplicate heading");
      auto tag_errors =
          check_tags(sections[i].at("reference_sources"), corpus, path + ".reference_sources");
      errors.insert(errors.end(), tag_errors.begin(), tag_errors.end());
    }
    return errors;
  };

  std::string user =
      request_.describe() + "\n\nReference corpus (high-referability report sections):\n" +
      corpus_digest(corpus) +
      "\nDesign the first-level headings of the new experimental protocol. For each "
      "section give its purpose, the design reason, and the reference sources: corpus "
      "tags of the form \"<paper>/<heading>\" from above, or \"novel\" when the section "
      "goes beyond the references. Reply with one JSON object: {\"sections\": "
      "[{\"heading\": \"...\", \"purpose\": \"...\", \"design_reason\": \"...\", "
      "\"reference_sources\": [\"...\"]}]}.";

  auto env = review_env();
  review::ReviewContext ctx{&request_, "first-level headings and rationale of the protocol"};
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

    std::vector<SectionPlan> plans;
    for (const auto& sj : reviewed.value.at("sections")) {
      SectionPlan p;
      p.heading = sj.at("heading").get<std::string>();
      p.purpose = sj.at("purpose").get<std::string>();
      p.design_reason = sj.at("design_reason").get<std::string>();
      for (const auto& t : sj.at("reference_sources"))
        p.reference_sources.push_back(t.get<std::string>());
      plans.push_back(std::move(p));
    }
    return plans;
  } catch (const MalformedOutputError& e) {
    throw DesignError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Pass 2: outline
// ---------------------------------------------------------------------------

ProtocolOutline DesignStage::design_outline(const std::vector<SectionPlan>& plans,
                                            const lit::ReferenceCorpus& corpus) {
  if (plans.empty()) throw ValidationError("design_outline requires section plans");

  const auto& profile = config_.agent(roles::kDesigner);
  const std::string key = "design.outline";

  std::set<std::string> plan_headings;
  std::string plan_digest;
  for (const auto& p : plans) {
    plan_headings.insert(p.heading);
    plan_digest += "- " + p.heading + ": " + p.purpose + " (" + p.design_reason +
                   "; references: " + util::join(p.reference_sources, ", ") + ")\n";
  }

  auto schema = JsonSchema::object(
      {{"entries",
        JsonSchema::array(
            JsonSchema::object(
                {{"heading", JsonSchema::string()},
                 {"text", JsonSchema::string()},
                 {"reference_sources", JsonSchema::array(JsonSchema::string())}},
                {"heading", "text", "reference_sources"}),
            1)}},
      {"entries"});
  auto extra = [&plan_headings, &corpus](const json& v) -> std::vector<std::string> {
    std::vector<std::string> errors;
    std::set<std::string> covered;
    const auto& entries = v.at("entries");
    for (size_t i = 0; i < entries.size(); ++i) {
      std::string path = "$.entries[" + std::to_string(i) + "]";
      std::string heading = entries[i].value("heading", "");
      if (!plan_headings.count(heading))
        errors.push_back(path + ".heading: entry under unknown heading '" + heading + "'");
      else
        covered.insert(heading);
      auto tag_errors =
          check_tags(entries[i].at("reference_sources"), corpus, path + ".reference_sources");
      errors.insert(errors.end(), tag_errors.begin(), tag_errors.end());
    }
    for (const auto& h : plan_headings)
      if (!covered.count(h))
        errors.push_back("$.entries: planned heading '" + h + "' has no outline entries");
    return errors;
  };

  std::string user =
      request_.describe() + "\n\nPlanned protocol sections:\n" + plan_digest +
      "\nReference corpus:\n" + corpus_digest(corpus) +
      "\nConstruct a brief protocol outline: ordered entries grouped under the planned "
      "headings, each with its reference sources (corpus tags or \"novel\"). Reply with "
      "one JSON object: {\"entries\": [{\"heading\": \"...\", \"text\": \"...\", "
      "\"reference_sources\": [\"...\"]}]}.";

  auto env = review_env();
  review::ReviewContext ctx{&request_, "protocol outline"};
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

    ProtocolOutline outline;
    outline.plans = plans;
    for (const auto& ej : reviewed.value.at("entries")) {
      ProtocolOutline::Entry e;
      e.heading = ej.at("heading").get<std::string>();
      e.text = ej.at("text").get<std::string>();
      for (const auto& t : ej.at("reference_sources"))
        e.reference_sources.push_back(t.get<std::string>());
      outline.entries.push_back(std::move(e));
    }
    return outline;
  } catch (const MalformedOutputError& e) {
    throw DesignError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Reference retrieval
// ---------------------------------------------------------------------------

std::vector<lit::ReferenceCorpus::Entry> DesignStage::retrieve_references(
    const std::vector<std::string>& tags, const lit::ReferenceCorpus& corpus) {
  std::vector<lit::ReferenceCorpus::Entry> out;
  for (const auto& tag : tags) {
    if (tag == kNovelTag) continue;
    out.push_back(corpus.lookup(tag));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pass 3: implementation details, section by section
// ---------------------------------------------------------------------------

Protocol DesignStage::design_details(const ProtocolOutline& outline,
                                     const lit::ReferenceCorpus& corpus,
                                     const std::vector<search::DatasetRecord>& useful_datasets) {
  if (outline.plans.empty()) throw ValidationError("design_details requires an outline");

  const auto& profile = config_.agent(roles::kDesigner);

  std::string outline_digest;
  for (const auto& p : outline.plans) {
    outline_digest += "- " + p.heading + "\n";
    for (const auto& e : outline.entries_for(p.heading))
      outline_digest += "    * " + e.text + "\n";
  }

  std::string dataset_digest;
  for (const auto& d : useful_datasets)
    dataset_digest += "- " + d.accession + ": " + d.title + " - " + d.description + "\n";
  if (dataset_digest.empty()) dataset_digest = "(none)\n";

  Protocol protocol;
  protocol.request = request_;
  for (const auto& d : useful_datasets) protocol.dataset_accessions.push_back(d.accession);

  std::vector<std::string> summaries;
  try {
    for (size_t si = 0; si < outline.plans.size(); ++si) {
      const auto& plan = outline.plans[si];
      auto entries = outline.entries_for(plan.heading);
      const std::string key = "design.details.s" + std::to_string(si + 1);

      // Tag-based retrieval: the plan's sources plus its entries' sources.
      std::vector<std::string> tags = plan.reference_sources;
      for (const auto& e : entries)
        tags.insert(tags.end(), e.reference_sources.begin(), e.reference_sources.end());
      auto references = retrieve_references(tags, corpus);
      std::string reference_digest;
      std::set<std::string> seen_tags;
      for (const auto& r : references) {
        if (!seen_tags.insert(r.tag()).second) continue;
        reference_digest += "[" + r.tag() + "]\n" + r.content;
        if (!r.analysis.empty()) reference_digest += "Analysis: " + r.analysis + "\n";
        reference_digest += "\n";
      }
      if (reference_digest.empty()) reference_digest = "(none)\n";

      std::set<std::string> entry_texts;
      std::string entry_digest;
      for (const auto& e : entries) {
        entry_texts.insert(e.text);
        entry_digest += "- " + e.text + "\n";
      }

      auto schema = JsonSchema::object(
          {{"steps", JsonSchema::array(JsonSchema::object({{"entry", JsonSchema::string()},
                                                           {"text", JsonSchema::string()}},
                                                          {"entry", "text"}),
                                       1)}},
          {"steps"});
      auto extra = [&entry_texts](const json& v) -> std::vector<std::string> {
        std::vector<std::string> errors;
        std::set<std::string> covered;
        const auto& steps = v.at("steps");
        for (size_t i = 0; i < steps.size(); ++i) {
          std::string entry = steps[i].value("entry", "");
          if (!entry_texts.count(entry))
            errors.push_back("$.steps[" + std::to_string(i) +
                             "].entry: step attached to unknown outline entry '" + entry +
                             "'");
          else
            covered.insert(entry);
        }
        for (const auto& e : entry_texts)
          if (!covered.count(e))
            errors.push_back("$.steps: outline entry '" + e + "' is not realized by any step");
        return errors;
      };

      std::string summaries_digest;
      for (size_t k = 0; k < summaries.size(); ++k)
        summaries_digest += "Section " + std::to_string(k + 1) + " (" +
                            outline.plans[k].heading + "): " + summaries[k] + "\n";
      if (summaries_digest.empty()) summaries_digest = "(this is the first section)\n";

      std::string user =
          request_.describe() + "\n\nProtocol outline:\n" + outline_digest +
          "\nSection under design: '" + plan.heading + "'\nPurpose: " + plan.purpose +
          "\nDesign reason: " + plan.design_reason + "\nOutline entries to realize:\n" +
          entry_digest + "\nRetrieved references:\n" + reference_digest +
          "\nUseful datasets:\n" + dataset_digest + "\nSummaries of earlier sections:\n" +
          summaries_digest +
          "\nGenerate complete and specific implementation details: one or more steps "
          "per outline entry, concrete enough to reproduce. Reply with one JSON object: "
          "{\"steps\": [{\"entry\": \"...\", \"text\": \"...\"}]}.";

      auto env = review_env();
      review::ReviewContext ctx{&request_,
                                "implementation details of protocol section '" +
                                    plan.heading + "'"};
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

      Protocol::Section section;
      section.heading = plan.heading;
      section.purpose = plan.purpose;
      section.design_reason = plan.design_reason;
      section.reference_sources = plan.reference_sources;
      for (const auto& stj : reviewed.value.at("steps"))
        section.steps.push_back(
            {stj.at("entry").get<std::string>(), stj.at("text").get<std::string>()});
      protocol.sections.push_back(std::move(section));

      // Fixed-size running summary fed into the next section's prompt.
      auto summary_schema =
          JsonSchema::object({{"summary", JsonSchema::string()}}, {"summary"});
      auto summary_extra = [](const json& v) -> std::vector<std::string> {
        if (util::word_count(v.value("summary", "")) > 200)
          return {"$.summary: must be at most 200 words"};
        return {};
      };
      std::string section_text;
      for (const auto& step : protocol.sections.back().steps)
        section_text += "- " + step.entry + ": " + step.text + "\n";
      json summary = gateway_.complete_structured(
          profile, "design.summary.s" + std::to_string(si + 1),
          {{"system", prompts_.get(profile.prompt_id)},
           {"user", "Summarize the following protocol section in at most 200 words, "
                    "keeping dataset names, tools and thresholds:\n\nSection '" +
                        plan.heading + "':\n" + section_text +
                        "\nReply with one JSON object: {\"summary\": \"...\"}."}},
          summary_schema, summary_extra);
      summaries.push_back(summary.at("summary").get<std::string>());
    }
  } catch (const MalformedOutputError& e) {
    throw DesignError(e.what());
  }

  protocol.validate(outline);
  return protocol;
}

}  // namespace drylab::design
