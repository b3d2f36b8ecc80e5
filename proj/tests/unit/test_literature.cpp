#include <doctest.h>

#include <cctype>

#include "drylab/errors.hpp"
#include "drylab/lit/literature_stage.hpp"
#include "drylab/llm/script_backend.hpp"

using namespace drylab;
using namespace drylab::lit;
using nlohmann::json;

namespace {

constexpr const char* kApprove = R"({"decision": "approve", "feedback": ""})";

StructuredDocument sample_doc(const std::string& id = "P1") {
  StructuredDocument doc;
  doc.paper_id = id;
  doc.blocks = {{"Methods", "We collected data and analyzed it with standard tools."},
                {"Results", "The analysis found several differentially expressed genes."}};
  return doc;
}

struct LitFixture {
  std::shared_ptr<llm::ScriptedBackend> backend;
  std::unique_ptr<llm::Gateway> gateway;
  PromptLibrary prompts;
  PipelineConfig config = validate_config(json::object());
  ResearchRequest request{"test objective", "", ""};

  explicit LitFixture(const json& script)
      : backend(std::make_shared<llm::ScriptedBackend>(script)),
        gateway(std::make_unique<llm::Gateway>(backend, llm::RetryPolicy{5, 0})) {}

  LiteratureStage stage() {
    return LiteratureStage(*gateway, prompts, config, request, nullptr);
  }
};

json one_paper_script(const std::string& id = "P1") {
  json script = json::object();
  auto add = [&](const std::string& role, const std::string& key, const json& value) {
    script[role + ":" + key].push_back(value.is_string() ? value.get<std::string>()
                                                         : value.dump());
  };
  const std::string base = "literature.report." + id;
  add("report-generator", base + ".headings",
      json{{"headings", {"Data Collection", "DEG Analysis"}}});
  add("reviewer", base + ".headings.review", kApprove);
  for (int hi = 0; hi < 2; ++hi) {
    std::string h = base + ".h" + std::to_string(hi);
    std::string heading = hi == 0 ? "Data Collection" : "DEG Analysis";
    add("report-generator", h + ".outline",
        json{{"heading", heading}, {"entries", {"Entry " + std::to_string(hi)}}});
    add("reviewer", h + ".outline.review", kApprove);
    add("report-generator", h + ".steps",
        json{{"entries",
              {{{"entry", "Entry " + std::to_string(hi)},
                {"non_experimental", false},
                {"steps", {"step one", "step two"}}}}}});
    add("reviewer", h + ".steps.review", kApprove);
    add("report-generator", h + ".details",
        json{{"details",
              {{{"step_index", 1}, {"detail", "detail one"}},
               {{"step_index", 2}, {"detail", "detail two"}}}}});
    add("reviewer", h + ".details.review", kApprove);
    add("report-generator", h + ".results",
        json{{"results",
              {{{"step_index", 1}, {"results", "result one"}},
               {{"step_index", 2}, {"results", ""}}}}});
    add("reviewer", h + ".results.review", kApprove);
  }
  return script;
}

}  // namespace

TEST_CASE("generate_headings returns the scripted list") {
  json script = {
      {"report-generator:literature.report.P1.headings",
       json::array({json{{"headings", {"Data Collection", "DEG Analysis"}}}.dump()})},
      {"reviewer:literature.report.P1.headings.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  auto headings = stage.generate_headings(sample_doc());
  REQUIRE(headings.size() == 2);
  CHECK(headings[0] == "Data Collection");
}

TEST_CASE("duplicate headings trigger a repair; persistent duplicates fail the paper") {
  json dup = json{{"headings", {"Methods", "methods"}}};  // case-insensitive duplicate
  json good = json{{"headings", {"Methods", "Results"}}};

  SUBCASE("repairs once") {
    json script = {
        {"report-generator:literature.report.P1.headings",
         json::array({dup.dump(), good.dump()})},
        {"reviewer:literature.report.P1.headings.review", json::array({kApprove})}};
    LitFixture fix(script);
    auto stage = fix.stage();
    CHECK(stage.generate_headings(sample_doc()).size() == 2);
  }
  SUBCASE("persistent failure becomes a report-generation error") {
    json script = {{"report-generator:literature.report.P1.headings",
                    json::array({dup.dump(), dup.dump(), dup.dump(), dup.dump()})}};
    LitFixture fix(script);
    auto stage = fix.stage();
    CHECK_THROWS_AS(stage.generate_headings(sample_doc()), ReportGenerationError);
  }
}

TEST_CASE("empty heading list is repaired via the schema's min-items rule") {
  json script = {
      {"report-generator:literature.report.P1.headings",
       json::array({json{{"headings", json::array()}}.dump(),
                    json{{"headings", {"Methods"}}}.dump()})},
      {"reviewer:literature.report.P1.headings.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  CHECK(stage.generate_headings(sample_doc()).size() == 1);
}

TEST_CASE("develop_outline groups entries per heading and repairs wrong headings") {
  json wrong = json{{"heading", "Unknown"}, {"entries", {"e"}}};
  json right = json{{"heading", "Methods"}, {"entries", {"e1", "e2"}}};
  json script = {
      {"report-generator:literature.report.P1.h0.outline",
       json::array({wrong.dump(), right.dump()})},
      {"reviewer:literature.report.P1.h0.outline.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  auto outline = stage.develop_outline(sample_doc(), {"Methods"});
  REQUIRE(outline.size() == 1);
  CHECK(outline[0].heading == "Methods");
  REQUIRE(outline[0].entries.size() == 2);
}

TEST_CASE("extract_steps maps steps to entries; unknown entries repair") {
  json wrong = json{{"entries", {{{"entry", "no such entry"}, {"steps", {"s"}}}}}};
  json right = json{{"entries", {{{"entry", "e1"}, {"steps", {"s1", "s2", "s3"}}}}}};
  json script = {
      {"report-generator:literature.report.P1.h0.steps",
       json::array({wrong.dump(), right.dump()})},
      {"reviewer:literature.report.P1.h0.steps.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  auto sections = stage.extract_steps(sample_doc(), {{"Methods", {"e1"}}});
  REQUIRE(sections.size() == 1);
  REQUIRE(sections[0].entries.size() == 1);
  CHECK(sections[0].entries[0].steps.size() == 3);
  CHECK(sections[0].entries[0].steps[0].text == "s1");
}

TEST_CASE("empty steps are allowed only with an explicit non-experimental flag") {
  json missing_flag = json{{"entries", {{{"entry", "e1"}, {"steps", json::array()}}}}};
  json flagged = json{
      {"entries",
       {{{"entry", "e1"}, {"non_experimental", true}, {"steps", json::array()}}}}};
  json script = {
      {"report-generator:literature.report.P1.h0.steps",
       json::array({missing_flag.dump(), flagged.dump()})},
      {"reviewer:literature.report.P1.h0.steps.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  auto sections = stage.extract_steps(sample_doc(), {{"Methods", {"e1"}}});
  CHECK(sections[0].entries[0].non_experimental);
  CHECK(sections[0].entries[0].steps.empty());
}

TEST_CASE("extract_details attaches detail per step and repairs bad indices") {
  json bad = json{{"details", {{{"step_index", 7}, {"detail", "d"}}}}};
  json good = json{{"details",
                    {{{"step_index", 1}, {"detail", "d1"}},
                     {{"step_index", 2}, {"detail", "d2"}}}}};
  json script = {
      {"report-generator:literature.report.P1.h0.details",
       json::array({bad.dump(), good.dump()})},
      {"reviewer:literature.report.P1.h0.details.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  std::vector<ReportSection> sections(1);
  sections[0].heading = "Methods";
  sections[0].entries = {{"e1", false, {{"s1", "", ""}, {"s2", "", ""}}}};
  stage.extract_details(sample_doc(), sections);
  CHECK(sections[0].entries[0].steps[0].detail == "d1");
  CHECK(sections[0].entries[0].steps[1].detail == "d2");
}

TEST_CASE("extract_results allows empty strings and repairs missing indices") {
  json incomplete = json{{"results", {{{"step_index", 1}, {"results", "r1"}}}}};
  json complete = json{{"results",
                        {{{"step_index", 1}, {"results", "r1"}},
                         {{"step_index", 2}, {"results", ""}}}}};
  json script = {
      {"report-generator:literature.report.P1.h0.results",
       json::array({incomplete.dump(), complete.dump()})},
      {"reviewer:literature.report.P1.h0.results.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  std::vector<ReportSection> sections(1);
  sections[0].heading = "Methods";
  sections[0].entries = {{"e1", false, {{"s1", "", ""}, {"s2", "", ""}}}};
  stage.extract_results(sample_doc(), sections);
  CHECK(sections[0].entries[0].steps[0].results == "r1");
  CHECK(sections[0].entries[0].steps[1].results.empty());
}

TEST_CASE("generate_report composes the five steps deterministically") {
  auto run_once = [] {
    LitFixture fix(one_paper_script());
    auto stage = fix.stage();
    auto report = stage.generate_report(sample_doc());
    report.validate();
    return report.to_json().dump();
  };
  std::string first = run_once();
  CHECK(first == run_once());

  LitFixture fix(one_paper_script());
  auto report = fix.stage().generate_report(sample_doc());
  REQUIRE(report.sections.size() == 2);
  CHECK(report.sections[0].heading == "Data Collection");
  CHECK(report.sections[0].entries[0].steps[0].detail == "detail one");
  CHECK(report.sections[0].entries[0].steps[1].results.empty());
}

TEST_CASE("parallel per-heading processing equals the sequential composition") {
  // generate_report fans out per heading; composing the standalone ops
  // sequentially over the same script must produce the same report.
  LitFixture parallel_fix(one_paper_script());
  auto parallel_report = parallel_fix.stage().generate_report(sample_doc());

  LitFixture seq_fix(one_paper_script());
  auto stage = seq_fix.stage();
  auto doc = sample_doc();
  auto headings = stage.generate_headings(doc);
  auto outline = stage.develop_outline(doc, headings);
  auto sections = stage.extract_steps(doc, outline);
  stage.extract_details(doc, sections);
  stage.extract_results(doc, sections);
  ExperimentalReport sequential{doc.paper_id, sections};

  CHECK(parallel_report.to_json().dump() == sequential.to_json().dump());
}

TEST_CASE("a reviewer rejection threads feedback into the revision") {
  json script = one_paper_script();
  script["reviewer:literature.report.P1.headings.review"] = json::array(
      {json{{"decision", "revise"}, {"feedback", "merge the two headings"}}.dump(),
       kApprove});
  script["report-generator:literature.report.P1.headings"] = json::array(
      {json{{"headings", {"Data Collection", "DEG Analysis"}}}.dump(),
       json{{"headings", {"Data Collection", "DEG Analysis"}}}.dump()});

  LitFixture fix(script);
  auto stage = fix.stage();
  auto report = stage.generate_report(sample_doc());
  report.validate();

  auto calls = fix.gateway->transcript().calls_for("literature.report.P1.headings");
  REQUIRE(calls.size() == 2);
  CHECK(calls[1].messages.back().content.find("merge the two headings") !=
        std::string::npos);
}

TEST_CASE("a never-approving reviewer flags the step but the last revision is accepted") {
  json script = one_paper_script();
  // Six rejected headings revisions; the loop accepts the sixth.
  json producer_responses = json::array();
  json reviewer_responses = json::array();
  for (int i = 0; i < 6; ++i) {
    producer_responses.push_back(
        json{{"headings", {"Data Collection", "DEG Analysis"}}}.dump());
    reviewer_responses.push_back(
        json{{"decision", "revise"}, {"feedback", "still not right"}}.dump());
  }
  script["report-generator:literature.report.P1.headings"] = producer_responses;
  script["reviewer:literature.report.P1.headings.review"] = reviewer_responses;

  LitFixture fix(script);
  auto report = fix.stage().generate_report(sample_doc());
  CHECK_NOTHROW(report.validate());
  // Exactly six reviewer calls were made before accepting.
  CHECK(fix.gateway->transcript()
            .calls_for("literature.report.P1.headings.review")
            .size() == 6);
}

TEST_CASE("analyze_report grades every section") {
  json script = {
      {"analyst:literature.analysis.P1.s0",
       json::array(
           {json{{"referability", "high"}, {"suggestions", "reuse the cohort"}}.dump()})},
      {"reviewer:literature.analysis.P1.s0.review", json::array({kApprove})},
      {"analyst:literature.analysis.P1.s1",
       json::array(
           {json{{"referability", "low"}, {"suggestions", "skip this part"}}.dump()})},
      {"reviewer:literature.analysis.P1.s1.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();

  ExperimentalReport report;
  report.paper_id = "P1";
  report.sections = {{"Data Collection", {{"e", false, {{"s", "d", "r"}}}}},
                     {"DEG Analysis", {{"e", false, {{"s", "d", "r"}}}}}};
  auto analysis = stage.analyze_report(report);
  REQUIRE(analysis.entries.size() == 2);
  CHECK(analysis.entries[0].grade == Referability::High);
  CHECK(analysis.entries[1].grade == Referability::Low);
  CHECK(analysis.entries[0].heading == "Data Collection");
}

TEST_CASE("an analysis entry missing its suggestions repairs") {
  json incomplete = json{{"referability", "high"}};  // required key absent
  json complete = json{{"referability", "high"}, {"suggestions", "reuse"}};
  json script = {{"analyst:literature.analysis.P1.s0",
                  json::array({incomplete.dump(), complete.dump()})},
                 {"reviewer:literature.analysis.P1.s0.review", json::array({kApprove})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  ExperimentalReport report;
  report.paper_id = "P1";
  report.sections = {{"Data Collection", {{"e", false, {{"s", "d", "r"}}}}}};
  auto analysis = stage.analyze_report(report);
  CHECK(analysis.entries[0].suggestions == "reuse");
}

TEST_CASE("unknown grade tokens repair; persistent failure is an analysis error") {
  json bad = json{{"referability", "excellent"}, {"suggestions", "s"}};
  json script = {{"analyst:literature.analysis.P1.s0",
                  json::array({bad.dump(), bad.dump(), bad.dump(), bad.dump()})}};
  LitFixture fix(script);
  auto stage = fix.stage();
  ExperimentalReport report;
  report.paper_id = "P1";
  report.sections = {{"Data Collection", {{"e", false, {{"s", "d", "r"}}}}}};
  CHECK_THROWS_AS(stage.analyze_report(report), AnalysisError);
}

TEST_CASE("report invariants are enforced") {
  ExperimentalReport report;
  report.paper_id = "P1";
  CHECK_THROWS_AS(report.validate(), ValidationError);  // no sections

  report.sections = {{"A", {{"e", false, {{"s", "d", "r"}}}}},
                     {"A", {{"e2", false, {{"s2", "d", "r"}}}}}};
  CHECK_THROWS_AS(report.validate(), ValidationError);  // duplicate headings

  report.sections = {{"A", {{"e", false, {}}}}};
  CHECK_THROWS_AS(report.validate(), ValidationError);  // steps missing without flag

  report.sections = {{"A", {{"e", true, {}}}}};
  CHECK_NOTHROW(report.validate());  // flagged non-experimental

  auto round_trip = ExperimentalReport::from_json(report.to_json());
  CHECK_NOTHROW(round_trip.validate());
  CHECK(round_trip.sections[0].entries[0].non_experimental);
}

// Independent character-scanner oracle for the accession extraction.
namespace {
std::vector<std::string> accession_oracle(const std::string& text) {
  std::vector<std::string> out;
  for (size_t i = 0; i + 3 <= text.size(); ++i) {
    bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    if (!left_ok) continue;
    for (const std::string prefix : {"GSE", "GDS", "GSM", "GPL"}) {
      if (text.compare(i, 3, prefix) != 0) continue;
      size_t j = i + 3;
      std::string digits;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        digits += text[j];
        ++j;
      }
      if (digits.empty()) continue;
      std::string acc = prefix + digits;
      bool dup = false;
      for (const auto& a : out) dup = dup || a == acc;
      if (!dup) out.push_back(acc);
    }
  }
  return out;
}
}  // namespace

TEST_CASE("extract_dataset_ids dedupes in first-occurrence order") {
  auto ids = extract_dataset_ids("we used GSE12345 and GSE12345, plus GPL570");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == "GSE12345");
  CHECK(ids[1] == "GPL570");

  CHECK(extract_dataset_ids("no accessions here").empty());
  CHECK(extract_dataset_ids("").empty());
}

TEST_CASE("extract_dataset_ids requires a non-alphanumeric left boundary") {
  CHECK(extract_dataset_ids("XGSE1").empty());
  CHECK(extract_dataset_ids("9GSE1").empty());
  auto ids = extract_dataset_ids("(GSE1) and -GSE2 and _GSE3");
  REQUIRE(ids.size() == 3);  // '_' is not alphanumeric
  CHECK(ids[2] == "GSE3");
}

TEST_CASE("extract_dataset_ids matches the independent oracle on a gnarly fixture") {
  const std::string text =
      "Samples from GSE12345 and GSE12345 ran on GPL570; see GSM99999, XGSE1, "
      "GDS42(GDS42), GSE (no digits), underscore_GSE77, and trailing GSE88";
  auto got = extract_dataset_ids(text);
  auto expected = accession_oracle(text);
  CHECK(got == expected);
  REQUIRE(got.size() == 6);
  CHECK(got == std::vector<std::string>{"GSE12345", "GPL570", "GSM99999", "GDS42", "GSE77",
                                        "GSE88"});
}

TEST_CASE("idempotence: extracting from already-deduplicated text is stable") {
  auto once = extract_dataset_ids("GSE1 GSE2 GSE1 GPL3");
  std::string joined;
  for (const auto& a : once) joined += a + " ";
  CHECK(extract_dataset_ids(joined) == once);
}

TEST_CASE("build_reference_corpus keeps exactly the high sections") {
  ExperimentalReport r1;
  r1.paper_id = "P1";
  r1.sections = {{"A", {{"e", false, {{"s", "d", "r"}}}}},
                 {"B", {{"e", false, {{"s", "d", "r"}}}}}};
  ExperimentalReport r2;
  r2.paper_id = "P2";
  r2.sections = {{"C", {{"e", false, {{"s", "d", "r"}}}}},
                 {"D", {{"e", false, {{"s", "d", "r"}}}}}};

  ReportAnalysis a1{"P1",
                    {{"A", Referability::High, "use A"}, {"B", Referability::Low, "skip"}}};
  ReportAnalysis a2{"P2",
                    {{"C", Referability::High, "use C"},
                     {"D", Referability::High, "use D"}}};

  auto corpus = build_reference_corpus({r1, r2}, {a1, a2});
  REQUIRE(corpus.entries.size() == 3);
  for (const auto& e : corpus.entries) CHECK_FALSE(e.content.empty());

  CHECK(corpus.contains("P1/A"));
  CHECK_FALSE(corpus.contains("P1/B"));
  CHECK(corpus.lookup("P2/D").analysis == "use D");
  CHECK_THROWS_AS(corpus.lookup("P9/Z"), CorpusLookupError);

  auto reloaded = ReferenceCorpus::from_json(corpus.to_json());
  CHECK(reloaded.lookup("P1/A").analysis == "use A");

  ReportAnalysis all_low{"P1",
                         {{"A", Referability::Low, "x"}, {"B", Referability::Low, "x"}}};
  CHECK(build_reference_corpus({r1}, {all_low}).entries.empty());

  CHECK_THROWS_AS(build_reference_corpus({r1}, {a2}), ValidationError);  // wrong analysis
}

TEST_CASE("corpus persists as an index plus per-entry files") {
  ReferenceCorpus corpus;
  corpus.entries = {{"P1", "A", "content a", "use a"}, {"P2", "B", "content b", "use b"}};

  auto base = std::filesystem::temp_directory_path() / "drylab_corpus_store";
  std::filesystem::remove_all(base);
  auto written = save_corpus(corpus, base, "literature/corpus.json");
  REQUIRE(written.size() == 3);  // index + one file per entry
  CHECK(written[0] == "literature/corpus.json");
  for (const auto& rel : written) CHECK(std::filesystem::exists(base / rel));

  auto reloaded = load_corpus(base / "literature/corpus.json");
  REQUIRE(reloaded.entries.size() == 2);
  CHECK(reloaded.lookup("P1/A").content == "content a");
  CHECK(reloaded.lookup("P2/B").analysis == "use b");
}
