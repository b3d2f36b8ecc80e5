#include <doctest.h>

#include <fstream>

#include "drylab/cli.hpp"
#include "drylab/design/protocol.hpp"
#include "drylab/prog/task.hpp"
#include "drylab/util/json_io.hpp"
#include "support/eutils_stub.hpp"
#include "support/mock_run.hpp"

using namespace drylab;
using nlohmann::json;

namespace {

struct CliRunFixture {
  test::EutilsStub stub;
  std::filesystem::path dir;
  std::filesystem::path config_path;
  std::filesystem::path script_path;

  explicit CliRunFixture(const std::string& name) {
    dir = std::filesystem::temp_directory_path() / ("drylab_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    config_path = dir / "cfg.json";
    script_path = dir / "script.json";
    util::write_json_file(config_path, test::e2e_config_json(stub.base_url()));
    util::write_json_file(script_path, test::e2e_script());
  }

  std::filesystem::path out() const { return dir / "run"; }
};

}  // namespace

TEST_CASE("cli run executes the pipeline end to end") {
  CliRunFixture fix("run");
  auto request = test::e2e_request();
  int code = cli::run_cli({"run", "--objective", request.objective, "--conditions",
                           request.conditions, "--requirements", request.requirements,
                           "--config", fix.config_path.string(), "--out",
                           fix.out().string(), "--mock", fix.script_path.string()});
  CHECK(code == 0);
  CHECK(std::filesystem::exists(fix.out() / "design/protocol.json"));
  CHECK(std::filesystem::exists(fix.out() / "manifest.json"));
}

TEST_CASE("cli run --until stops early and resume completes") {
  CliRunFixture fix("until");
  auto request = test::e2e_request();
  int code = cli::run_cli({"run", "--objective", request.objective, "--config",
                           fix.config_path.string(), "--out", fix.out().string(), "--mock",
                           fix.script_path.string(), "--until", "literature"});
  CHECK(code == 0);
  CHECK(std::filesystem::exists(fix.out() / "literature/corpus.json"));
  CHECK_FALSE(std::filesystem::exists(fix.out() / "design/protocol.json"));

  // Fresh script file for the resumed process (pops are stateful).
  int code2 = cli::run_cli({"resume", "--run", fix.out().string(), "--mock",
                            fix.script_path.string()});
  CHECK(code2 == 0);
  CHECK(std::filesystem::exists(fix.out() / "design/protocol.json"));
  CHECK(std::filesystem::exists(fix.out() / "programming/outcomes.json"));
}

TEST_CASE("cli reports stage-fatal errors with a nonzero exit and the stage name") {
  CliRunFixture fix("fatal");
  // Empty mock script: the search stage dies immediately.
  util::write_json_file(fix.script_path, json::object());
  auto request = test::e2e_request();
  int code = cli::run_cli({"run", "--objective", request.objective, "--config",
                           fix.config_path.string(), "--out", fix.out().string(), "--mock",
                           fix.script_path.string()});
  CHECK(code == 3);
}

TEST_CASE("cli validates input before running") {
  CliRunFixture fix("badinput");
  int code = cli::run_cli({"run", "--objective", "   ", "--config",
                           fix.config_path.string(), "--out", fix.out().string(), "--mock",
                           fix.script_path.string()});
  CHECK(code == 2);

  util::write_json_file(fix.config_path, json{{"max_review_rounds", 0}});
  int code2 = cli::run_cli({"run", "--objective", "x", "--config",
                            fix.config_path.string(), "--out", fix.out().string(),
                            "--mock", fix.script_path.string()});
  CHECK(code2 == 2);

  // Unknown arguments are parse errors.
  CHECK(cli::run_cli({"run", "--objectivo", "x"}) == 2);
  CHECK(cli::run_cli({}) == 2);
}

TEST_CASE("cli evaluate scores a protocol file with a scripted judge") {
  CliRunFixture fix("evaluate");

  design::Protocol protocol;
  protocol.request = {"objective", "", ""};
  std::string text =
      "Download the matrices from the repository and verify every checksum carefully. "
      "Record the provenance of each file in a manifest for later auditing. "
      "Keep raw and processed data in separate directories with clear names. "
      "Finally, freeze the inputs before any statistical analysis begins. "
      "Document tool versions used during preprocessing in the methods file.";
  protocol.sections = {{"Only", "p", "r", {"novel"}, {{"e1", text}}}};
  auto protocol_path = fix.dir / "protocol.json";
  util::write_json_file(protocol_path, protocol.to_json());

  json script = json::object();
  auto add = [&](const std::string& key, const json& v) {
    script["judge:" + key].push_back(v.dump());
  };
  add("evaluation.judge.completeness",
      json{{"sections", {{{"section_index", 1}, {"added_steps", json::array()}}}}});
  add("evaluation.judge.correctness",
      json{{"steps",
            {{{"section_index", 1}, {"step_index", 1}, {"correct", true},
              {"rationale", "ok"}}}}});
  add("evaluation.judge.logical",
      json{{"steps",
            {{{"section_index", 1}, {"step_index", 1}, {"reasonable", true},
              {"rationale", "ok"}}}}});
  add("evaluation.judge.detail", json{{"score", 0.9}});
  add("evaluation.judge.structure", json{{"score", 0.8}});
  util::write_json_file(fix.script_path, script);

  auto scores_path = fix.dir / "scores.json";
  int code = cli::run_cli({"evaluate", "--protocol", protocol_path.string(), "--mock",
                           fix.script_path.string(), "--out", scores_path.string()});
  CHECK(code == 0);
  auto scores = util::read_json_file(scores_path);
  CHECK(scores.at("scores").at("completeness").get<double>() == doctest::Approx(1.0));
  CHECK(scores.at("scores").at("overall").get<double>() ==
        doctest::Approx(1.0 + 1.0 + 1.0 + 0.9 + 0.8));
}

TEST_CASE("cli grade-errors grades a run's failed tasks") {
  CliRunFixture fix("grade");
  // Minimal fake run directory with one failed task.
  auto run_dir = fix.dir / "brokenrun";
  std::filesystem::create_directories(run_dir / "programming/tasks/1/rev2");
  prog::TaskOutcome outcome;
  outcome.task_id = 1;
  outcome.status = prog::TaskOutcome::Status::Failed;
  outcome.iterations = 2;
  outcome.error_level = 2;
  outcome.final_result.task_id = 1;
  outcome.final_result.revision = 2;
  outcome.final_result.exit_status = 1;
  outcome.final_result.stderr_text = "unexpected symbol in \"plot(\"";
  util::write_json_file(run_dir / "programming/outcomes.json",
                        json::array({outcome.to_json()}));
  util::write_text_file(run_dir / "programming/tasks/1/rev2/code", "plot(\n");

  json script = {{"judge:evaluation.grade_error.t1",
                  json::array({json{{"level", 2}, {"rationale", "syntax"}}.dump()})}};
  util::write_json_file(fix.script_path, script);

  int code = cli::run_cli({"grade-errors", "--run", run_dir.string(), "--mock",
                           fix.script_path.string()});
  CHECK(code == 0);
  auto graded = util::read_json_file(run_dir / "evaluation/error_levels.json");
  REQUIRE(graded.size() == 1);
  CHECK(graded[0].at("level") == 2);
}
