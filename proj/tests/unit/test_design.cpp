#include <doctest.h>

#include "drylab/design/design_stage.hpp"
#include "drylab/errors.hpp"
#include "drylab/llm/script_backend.hpp"

using namespace drylab;
using namespace drylab::design;
using nlohmann::json;

namespace {

constexpr const char* kApprove = R"({"decision": "approve", "feedback": ""})";

lit::ReferenceCorpus sample_corpus() {
  lit::ReferenceCorpus corpus;
  corpus.entries = {{"P1", "Data Collection", "collect cohorts", "reuse the cohort"},
                    {"P2", "DEG Analysis", "run limma", "adapt the thresholds"}};
  return corpus;
}

struct DesignFixture {
  std::shared_ptr<llm::ScriptedBackend> backend;
  std::unique_ptr<llm::Gateway> gateway;
  PromptLibrary prompts;
  PipelineConfig config = validate_config(json::object());
  ResearchRequest request{"design a transcriptome study", "", ""};

  explicit DesignFixture(const json& script)
      : backend(std::make_shared<llm::ScriptedBackend>(script)),
        gateway(std::make_unique<llm::Gateway>(backend, llm::RetryPolicy{5, 0})) {}

  DesignStage stage() { return DesignStage(*gateway, prompts, config, request, nullptr); }
};

json plan_json(const std::string& heading, const std::vector<std::string>& refs) {
  return {{"heading", heading},
          {"purpose", "purpose of " + heading},
          {"design_reason", "reason for " + heading},
          {"reference_sources", refs}};
}

}  // namespace

TEST_CASE("design_headings accepts resolvable tags and novel") {
  json script = {
      {"designer:design.headings",
       json::array({json{{"sections",
                          {plan_json("Acquisition", {"P1/Data Collection"}),
                           plan_json("Analysis", {"P2/DEG Analysis", "novel"})}}}
                        .dump()})},
      {"reviewer:design.headings.review", json::array({kApprove})}};
  DesignFixture fix(script);
  auto plans = fix.stage().design_headings(sample_corpus());
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].heading == "Acquisition");
  CHECK(plans[1].reference_sources.back() == "novel");
}

TEST_CASE("unresolvable tags repair; persistent failure is a design error") {
  json bad = json{{"sections", {plan_json("A", {"P9/Nothing"})}}};
  SUBCASE("repairs") {
    json good = json{{"sections", {plan_json("A", {"novel"})}}};
    json script = {{"designer:design.headings", json::array({bad.dump(), good.dump()})},
                   {"reviewer:design.headings.review", json::array({kApprove})}};
    DesignFixture fix(script);
    CHECK(fix.stage().design_headings(sample_corpus()).size() == 1);
  }
  SUBCASE("exhaustion") {
    json script = {{"designer:design.headings",
                    json::array({bad.dump(), bad.dump(), bad.dump(), bad.dump()})}};
    DesignFixture fix(script);
    CHECK_THROWS_AS(fix.stage().design_headings(sample_corpus()), DesignError);
  }
}

TEST_CASE("empty plan list repairs via min-items") {
  json script = {{"designer:design.headings",
                  json::array({json{{"sections", json::array()}}.dump(),
                               json{{"sections", {plan_json("A", {"novel"})}}}.dump()})},
                 {"reviewer:design.headings.review", json::array({kApprove})}};
  DesignFixture fix(script);
  CHECK(fix.stage().design_headings(sample_corpus()).size() == 1);
}

TEST_CASE("design_headings requires a non-empty corpus") {
  DesignFixture fix(json::object());
  lit::ReferenceCorpus empty;
  CHECK_THROWS_AS(fix.stage().design_headings(empty), ValidationError);
}

namespace {

std::vector<SectionPlan> sample_plans() {
  return {{"Acquisition", "p", "r", {"P1/Data Collection"}},
          {"Analysis", "p", "r", {"P2/DEG Analysis"}}};
}

json outline_entry(const std::string& heading, const std::string& text,
                   const std::vector<std::string>& refs) {
  return {{"heading", heading}, {"text", text}, {"reference_sources", refs}};
}

}  // namespace

TEST_CASE("design_outline groups entries under known headings") {
  json script = {
      {"designer:design.outline",
       json::array({json{{"entries",
                          {outline_entry("Acquisition", "download data", {"novel"}),
                           outline_entry("Analysis", "compute DEGs",
                                         {"P2/DEG Analysis"})}}}
                        .dump()})},
      {"reviewer:design.outline.review", json::array({kApprove})}};
  DesignFixture fix(script);
  auto outline = fix.stage().design_outline(sample_plans(), sample_corpus());
  CHECK(outline.entries.size() == 2);
  CHECK(outline.entries_for("Acquisition").size() == 1);
  CHECK(outline.plans.size() == 2);
}

TEST_CASE("outline entries under unknown headings repair; uncovered headings repair") {
  json orphan = json{{"entries", {outline_entry("Mystery", "x", {"novel"})}}};
  json uncovered = json{{"entries", {outline_entry("Acquisition", "x", {"novel"})}}};
  json good = json{{"entries",
                    {outline_entry("Acquisition", "x", {"novel"}),
                     outline_entry("Analysis", "y", {"novel"})}}};
  json script = {{"designer:design.outline",
                  json::array({orphan.dump(), uncovered.dump(), good.dump()})},
                 {"reviewer:design.outline.review", json::array({kApprove})}};
  DesignFixture fix(script);
  auto outline = fix.stage().design_outline(sample_plans(), sample_corpus());
  CHECK(outline.entries.size() == 2);
}

TEST_CASE("retrieve_references resolves tags in order; novel contributes nothing") {
  auto corpus = sample_corpus();
  auto refs = DesignStage::retrieve_references(
      {"P2/DEG Analysis", "novel", "P1/Data Collection"}, corpus);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].heading == "DEG Analysis");
  CHECK(refs[1].heading == "Data Collection");

  CHECK(DesignStage::retrieve_references({"novel"}, corpus).empty());
  CHECK_THROWS_AS(DesignStage::retrieve_references({"P9/Zap"}, corpus), CorpusLookupError);
}

namespace {

json details_script_for_two_sections() {
  json script = json::object();
  auto add = [&](const std::string& role, const std::string& key, const json& value) {
    script[role + ":" + key].push_back(value.is_string() ? value.get<std::string>()
                                                         : value.dump());
  };
  add("designer", "design.details.s1",
      json{{"steps",
            {{{"entry", "download data"},
              {"text", "Download the series matrices and annotations from the "
                       "repository with checksums recorded for every file."}}}}});
  add("reviewer", "design.details.s1.review", kApprove);
  add("designer", "design.summary.s1",
      json{{"summary", "Data is downloaded with checksums and annotations."}});
  add("designer", "design.details.s2",
      json{{"steps",
            {{{"entry", "compute DEGs"},
              {"text", "Run limma with an adjusted p value below 0.05 and an absolute "
                       "log2 fold change above one for every contrast."}}}}});
  add("reviewer", "design.details.s2.review", kApprove);
  add("designer", "design.summary.s2",
      json{{"summary", "DEGs come from limma with fixed thresholds."}});
  return script;
}

ProtocolOutline sample_outline() {
  ProtocolOutline outline;
  outline.plans = sample_plans();
  outline.entries = {{"Acquisition", "download data", {"P1/Data Collection"}},
                     {"Analysis", "compute DEGs", {"P2/DEG Analysis"}}};
  return outline;
}

std::vector<search::DatasetRecord> useful_datasets() {
  return {{"GSE10001", "cohort", "expression data", true,
           search::DatasetProvenance::FromSearch}};
}

}  // namespace

TEST_CASE("design_details generates sections in order with dataset accessions attached") {
  DesignFixture fix(details_script_for_two_sections());
  auto protocol =
      fix.stage().design_details(sample_outline(), sample_corpus(), useful_datasets());
  REQUIRE(protocol.sections.size() == 2);
  CHECK(protocol.sections[0].heading == "Acquisition");
  CHECK(protocol.sections[0].steps.size() == 1);
  CHECK(protocol.dataset_accessions == std::vector<std::string>{"GSE10001"});
  CHECK_NOTHROW(protocol.validate(sample_outline()));
}

TEST_CASE("sequential-summary property: section 2's prompt carries section 1's summary") {
  DesignFixture fix(details_script_for_two_sections());
  fix.stage().design_details(sample_outline(), sample_corpus(), useful_datasets());
  auto calls = fix.gateway->transcript().calls_for("design.details.s2");
  REQUIRE(calls.size() == 1);
  CHECK(calls[0].messages[1].content.find(
            "Data is downloaded with checksums and annotations.") != std::string::npos);
  // Section 1's prompt has no earlier summaries.
  auto first = fix.gateway->transcript().calls_for("design.details.s1");
  CHECK(first[0].messages[1].content.find("this is the first section") !=
        std::string::npos);
}

TEST_CASE("a rejected section revision feeds the revised text into the next summary") {
  json script = details_script_for_two_sections();
  script["reviewer:design.details.s1.review"] = json::array(
      {json{{"decision", "revise"}, {"feedback", "name the repository explicitly"}}.dump(),
       kApprove});
  script["designer:design.details.s1"] = json::array(
      {script["designer:design.details.s1"][0],
       json{{"steps",
             {{{"entry", "download data"},
               {"text", "Download the series matrices from the GEO repository with "
                        "checksums recorded for every file in a manifest."}}}}}
           .dump()});
  DesignFixture fix(script);
  auto protocol =
      fix.stage().design_details(sample_outline(), sample_corpus(), useful_datasets());
  // Final text is revision 2.
  CHECK(protocol.sections[0].steps[0].text.find("GEO repository") != std::string::npos);
  // The feedback was threaded verbatim into the second producer call.
  auto calls = fix.gateway->transcript().calls_for("design.details.s1");
  REQUIRE(calls.size() == 2);
  CHECK(calls[1].messages.back().content.find("name the repository explicitly") !=
        std::string::npos);
  // The summary request was made over the revised section text.
  auto summary_calls = fix.gateway->transcript().calls_for("design.summary.s1");
  REQUIRE(summary_calls.size() == 1);
  CHECK(summary_calls[0].messages[1].content.find("GEO repository") != std::string::npos);
}

TEST_CASE("summaries longer than 200 words repair") {
  json script = details_script_for_two_sections();
  std::string long_summary;
  for (int i = 0; i < 201; ++i) long_summary += "word ";
  script["designer:design.summary.s1"] = json::array(
      {json{{"summary", long_summary}}.dump(),
       json{{"summary", "short version"}}.dump()});
  DesignFixture fix(script);
  CHECK_NOTHROW(
      fix.stage().design_details(sample_outline(), sample_corpus(), useful_datasets()));
}

TEST_CASE("uncovered outline entries repair; exhaustion is stage-fatal") {
  json missing = json{{"steps",
                       {{{"entry", "download data"}, {"text", "only covers one entry"}}}}};
  ProtocolOutline outline;
  outline.plans = {{"Acquisition", "p", "r", {"novel"}}};
  outline.entries = {{"Acquisition", "download data", {"novel"}},
                     {"Acquisition", "verify data", {"novel"}}};
  json script = {{"designer:design.details.s1",
                  json::array({missing.dump(), missing.dump(), missing.dump(),
                               missing.dump()})}};
  DesignFixture fix(script);
  CHECK_THROWS_AS(fix.stage().design_details(outline, sample_corpus(), {}), DesignError);
}

TEST_CASE("protocol invariants") {
  Protocol p;
  p.request = {"o", "", ""};
  CHECK_THROWS_AS(p.validate(), ValidationError);  // no sections

  p.sections = {{"A", "", "", {}, {}}};
  CHECK_THROWS_AS(p.validate(), ValidationError);  // no steps

  p.sections = {{"A", "", "", {}, {{"e", "  "}}}};
  CHECK_THROWS_AS(p.validate(), ValidationError);  // empty step text

  p.sections = {{"A", "", "", {}, {{"e", "do the thing"}}}};
  CHECK_NOTHROW(p.validate());

  ProtocolOutline outline;
  outline.plans = {{"B", "p", "r", {"novel"}}};
  outline.entries = {{"B", "e", {"novel"}}};
  CHECK_THROWS_AS(p.validate(outline), ValidationError);  // heading mismatch
}

TEST_CASE("markdown rendering is deterministic with stable numbering") {
  Protocol p;
  p.request = {"objective text", "cond", ""};
  p.dataset_accessions = {"GSE1", "GSE2"};
  p.sections = {{"First", "purpose", "reason", {"P1/A"}, {{"e1", "step text one"}}},
                {"Second", "", "", {"novel"}, {{"e2", "step text two"}, {"e3", "three"}}}};
  std::string md = p.render_markdown();
  CHECK(md == p.render_markdown());
  CHECK(md.find("## 1. First") != std::string::npos);
  CHECK(md.find("## 2. Second") != std::string::npos);
  CHECK(md.find("### 2.2 e3") != std::string::npos);
  CHECK(md.find("GSE1, GSE2") != std::string::npos);

  auto reloaded = Protocol::from_json(p.to_json());
  CHECK(reloaded.render_markdown() == md);
}
