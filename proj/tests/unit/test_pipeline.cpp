#include <doctest.h>

#include <fstream>
#include <map>

#include "drylab/design/protocol.hpp"
#include "drylab/errors.hpp"
#include "drylab/lit/report.hpp"
#include "drylab/llm/script_backend.hpp"
#include "drylab/pipeline/pipeline.hpp"
#include "drylab/prog/task.hpp"
#include "drylab/util/json_io.hpp"
#include "support/eutils_stub.hpp"
#include "support/mock_run.hpp"

using namespace drylab;
using namespace drylab::pipeline;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("drylab_pipe_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

/// Byte content of every regular file under dir, keyed by relative path.
std::map<std::string, std::string> tree_snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      out[std::filesystem::relative(entry.path(), dir).string()] =
          util::read_text_file(entry.path());
  return out;
}

}  // namespace

TEST_CASE("an empty objective fails validation before any work") {
  test::EutilsStub stub;
  auto pipe = test::make_mock_pipeline(stub.base_url());
  ResearchRequest bad{"   ", "", ""};
  CHECK_THROWS_AS(pipe->run(bad, fresh_dir("empty_objective")), ValidationError);
}

TEST_CASE("end-to-end mock run produces the full artifact set") {
  test::EutilsStub stub;
  auto dir = fresh_dir("e2e");
  auto pipe = test::make_mock_pipeline(stub.base_url());
  auto artifacts = pipe->run(test::e2e_request(), dir);

  REQUIRE(artifacts.manifest.stages.size() == 4);

  // Three schema-valid reports.
  auto report_paths = artifacts.manifest.artifact_paths(Stage::Literature, "reports");
  REQUIRE(report_paths.size() == 3);
  for (const auto& rel : report_paths) {
    auto report = lit::ExperimentalReport::from_json(util::read_json_file(dir / rel));
    CHECK_NOTHROW(report.validate());
    REQUIRE(report.sections.size() == 2);
    for (const auto& section : report.sections)
      for (const auto& entry : section.entries)
        for (const auto& step : entry.steps) CHECK_FALSE(step.detail.empty());
  }

  // One protocol satisfying hierarchical consistency against its outline.
  auto protocol = design::Protocol::from_json(
      util::read_json_file(dir / artifacts.manifest.artifact_path(Stage::Design, "protocol")));
  auto outline = design::ProtocolOutline::from_json(
      util::read_json_file(dir / artifacts.manifest.artifact_path(Stage::Design, "outline")));
  CHECK_NOTHROW(protocol.validate(outline));
  REQUIRE(protocol.sections.size() == 2);

  // Useful datasets from search (GSE10001) plus the report mention (GSE12345).
  CHECK(protocol.dataset_accessions == std::vector<std::string>{"GSE10001", "GSE12345"});

  // Tasks: two of them, task 1 converged after a failed first revision.
  auto tasks_json =
      util::read_json_file(dir / artifacts.manifest.artifact_path(Stage::Programming, "tasks"));
  REQUIRE(tasks_json.size() == 2);
  auto outcomes_json = util::read_json_file(
      dir / artifacts.manifest.artifact_path(Stage::Programming, "outcomes"));
  auto first = prog::TaskOutcome::from_json(outcomes_json[0]);
  CHECK(first.success());
  CHECK(first.iterations == 2);

  auto summary = util::read_json_file(
      dir / artifacts.manifest.artifact_path(Stage::Programming, "execution_summary"));
  CHECK(summary.at("success_rate_percent").get<double>() == doctest::Approx(100.0));

  // Run-level state files exist.
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "telemetry.json"));
  CHECK(std::filesystem::exists(dir / "transcripts.json"));
  CHECK(std::filesystem::exists(dir / "config.json"));
  CHECK(std::filesystem::exists(dir / "request.json"));
  // Manifest invariant: every artifact resolves.
  CHECK_NOTHROW(artifacts.manifest.check_files(dir));
  // Telemetry covers all four stages.
  CHECK(artifacts.telemetry.at("stages").contains("search"));
  CHECK(artifacts.telemetry.at("stages").contains("programming"));
}

TEST_CASE("determinism: two identical mock runs produce byte-identical protocol and tasks") {
  test::EutilsStub stub;
  auto dir_a = fresh_dir("det_a");
  auto dir_b = fresh_dir("det_b");
  test::make_mock_pipeline(stub.base_url())->run(test::e2e_request(), dir_a);
  test::make_mock_pipeline(stub.base_url())->run(test::e2e_request(), dir_b);

  for (const char* rel : {"design/protocol.json", "design/protocol.md",
                          "programming/tasks.json", "literature/corpus.json"}) {
    CAPTURE(rel);
    CHECK(util::read_text_file(dir_a / rel) == util::read_text_file(dir_b / rel));
  }
}

TEST_CASE("re-invoking on a completed run directory reloads without re-execution") {
  test::EutilsStub stub;
  auto dir = fresh_dir("idempotent");
  test::make_mock_pipeline(stub.base_url())->run(test::e2e_request(), dir);
  auto before = tree_snapshot(dir);
  int requests_before = stub.request_count();

  // Fresh pipeline with an EMPTY script: any re-execution would underflow.
  auto config = test::e2e_config(stub.base_url());
  pipeline::Pipeline pipe(config, std::make_shared<llm::ScriptedBackend>(json::object()));
  auto artifacts = pipe.run(test::e2e_request(), dir);
  CHECK(artifacts.manifest.stages.size() == 4);

  CHECK(tree_snapshot(dir) == before);
  CHECK(stub.request_count() == requests_before);
}

TEST_CASE("resume after the literature stage equals an uninterrupted run") {
  test::EutilsStub stub;

  auto full_dir = fresh_dir("resume_full");
  test::make_mock_pipeline(stub.base_url())->run(test::e2e_request(), full_dir);

  auto part_dir = fresh_dir("resume_part");
  // "Kill" after literature: stop the first pipeline there, then resume
  // with a fresh process (fresh pipeline + fresh scripted backend).
  test::make_mock_pipeline(stub.base_url())
      ->run(test::e2e_request(), part_dir, Stage::Literature);

  auto partial_manifest = RunManifest::from_json(
      util::read_json_file(part_dir / "manifest.json"));
  CHECK(partial_manifest.stages.size() == 2);

  // Search/literature artifacts must be reused byte-identically.
  auto before = tree_snapshot(part_dir / "search");
  auto before_lit = tree_snapshot(part_dir / "literature");

  auto resumed = test::make_mock_pipeline(stub.base_url())->resume(part_dir);
  CHECK(resumed.manifest.stages.size() == 4);

  CHECK(tree_snapshot(part_dir / "search") == before);
  CHECK(tree_snapshot(part_dir / "literature") == before_lit);

  // Manifest equality with the uninterrupted run (byte comparison).
  CHECK(util::read_text_file(part_dir / "manifest.json") ==
        util::read_text_file(full_dir / "manifest.json"));
  // Deterministic artifacts equal as well.
  for (const char* rel : {"design/protocol.json", "programming/tasks.json",
                          "telemetry.json"}) {
    CAPTURE(rel);
    CHECK(util::read_text_file(part_dir / rel) == util::read_text_file(full_dir / rel));
  }
}

TEST_CASE("resume on a fresh empty directory behaves like run") {
  test::EutilsStub stub;
  auto dir = fresh_dir("resume_fresh");
  auto artifacts =
      test::make_mock_pipeline(stub.base_url())->resume(dir, test::e2e_request());
  CHECK(artifacts.manifest.stages.size() == 4);

  auto no_request = fresh_dir("resume_fresh_none");
  CHECK_THROWS_AS(test::make_mock_pipeline(stub.base_url())->resume(no_request),
                  ValidationError);
}

TEST_CASE("corrupt manifests are unrecoverable") {
  test::EutilsStub stub;
  auto dir = fresh_dir("corrupt");
  std::filesystem::create_directories(dir);
  util::write_text_file(dir / "manifest.json", "{ this is not json");
  util::write_json_file(dir / "request.json", test::e2e_request().to_json());
  CHECK_THROWS_AS(test::make_mock_pipeline(stub.base_url())->resume(dir), Error);
}

TEST_CASE("manifests with unknown stage names are unrecoverable") {
  json bad = {{"run_id", "x"},
              {"request", test::e2e_request().to_json()},
              {"stages", json::array({{{"name", "sear"}, {"artifacts", json::object()}}})}};
  CHECK_THROWS_AS(RunManifest::from_json(bad), UnrecoverableRunError);

  json out_of_order = {
      {"run_id", "x"},
      {"request", test::e2e_request().to_json()},
      {"stages", json::array({{{"name", "design"}, {"artifacts", json::object()}}})}};
  CHECK_THROWS_AS(RunManifest::from_json(out_of_order), UnrecoverableRunError);
}

TEST_CASE("manifest referencing missing files is unrecoverable") {
  test::EutilsStub stub;
  auto dir = fresh_dir("missing_files");
  std::filesystem::create_directories(dir);
  json manifest = {
      {"run_id", "x"},
      {"request", test::e2e_request().to_json()},
      {"stages",
       json::array({{{"name", "search"},
                     {"artifacts", {{"queries", "search/queries.json"}}}}})}};
  util::write_json_file(dir / "manifest.json", manifest);
  util::write_json_file(dir / "request.json", test::e2e_request().to_json());
  CHECK_THROWS_AS(test::make_mock_pipeline(stub.base_url())->resume(dir),
                  UnrecoverableRunError);
}

TEST_CASE("stage monotonicity: later stages never mutate earlier artifacts") {
  test::EutilsStub stub;
  auto dir = fresh_dir("monotone");
  auto pipe = test::make_mock_pipeline(stub.base_url());

  pipe->run(test::e2e_request(), dir, Stage::Search);
  auto search_before = tree_snapshot(dir / "search");
  auto resumed = test::make_mock_pipeline(stub.base_url());

  resumed->resume(dir, std::nullopt, Stage::Design);
  CHECK(tree_snapshot(dir / "search") == search_before);
  auto literature_before = tree_snapshot(dir / "literature");

  test::make_mock_pipeline(stub.base_url())->resume(dir);
  CHECK(tree_snapshot(dir / "search") == search_before);
  CHECK(tree_snapshot(dir / "literature") == literature_before);
}

TEST_CASE("a stage-fatal error preserves the partial run directory") {
  test::EutilsStub stub;
  auto dir = fresh_dir("stage_fatal");
  // Script the query generation only; literature keys are missing, so the
  // literature stage dies by script underflow -> StageError(literature).
  auto config = test::e2e_config(stub.base_url());
  json partial_script = test::e2e_script();
  json pruned = json::object();
  for (auto it = partial_script.begin(); it != partial_script.end(); ++it)
    if (it.key().find("literature.report.PMC70002") == std::string::npos)
      pruned[it.key()] = it.value();
  pipeline::Pipeline pipe(config, std::make_shared<llm::ScriptedBackend>(pruned));

  try {
    pipe.run(test::e2e_request(), dir);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "literature");
  }
  // Search results persisted; manifest has the completed search stage only.
  CHECK(std::filesystem::exists(dir / "search/papers.json"));
  auto manifest = RunManifest::from_json(util::read_json_file(dir / "manifest.json"));
  CHECK(manifest.stages.size() == 1);
  CHECK(manifest.stages[0].stage == Stage::Search);
}

TEST_CASE("zero surviving papers is stage-fatal for search") {
  test::EutilsStub stub;
  auto config = test::e2e_config(stub.base_url());
  // Score everything below the keep threshold.
  json script = test::e2e_script();
  for (const char* key :
       {"filter:search.paper_score.PMC70001", "filter:search.paper_score.PMC70002",
        "filter:search.paper_score.PMC70003"})
    script[key] = json::array({json{{"score", 2}}.dump()});
  pipeline::Pipeline pipe(config, std::make_shared<llm::ScriptedBackend>(script));

  try {
    pipe.run(test::e2e_request(), fresh_dir("zero_papers"));
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "search");
  }
}

TEST_CASE("telemetry conservation holds across the whole mock run") {
  test::EutilsStub stub;
  auto dir = fresh_dir("telemetry");
  auto pipe = test::make_mock_pipeline(stub.base_url());
  auto artifacts = pipe->run(test::e2e_request(), dir);

  // Stage counters must sum to the recorded totals.
  long prompt_sum = 0, completion_sum = 0;
  const auto& stages = artifacts.telemetry.at("stages");
  for (auto it = stages.begin(); it != stages.end(); ++it) {
    prompt_sum += it.value().at("prompt_tokens").get<long>();
    completion_sum += it.value().at("completion_tokens").get<long>();
  }
  CHECK(artifacts.telemetry.at("total").at("prompt_tokens").get<long>() == prompt_sum);
  CHECK(artifacts.telemetry.at("total").at("completion_tokens").get<long>() ==
        completion_sum);
  CHECK(artifacts.telemetry.at("notes").at("backend") == "scripted");
  CHECK(artifacts.telemetry.at("notes").at("sandbox") == "process");
}
