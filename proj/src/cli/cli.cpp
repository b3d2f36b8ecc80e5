#include "drylab/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "drylab/config.hpp"
#include "drylab/errors.hpp"
#include "drylab/eval/judge.hpp"
#include "drylab/llm/http_backend.hpp"
#include "drylab/llm/script_backend.hpp"
#include "drylab/pipeline/pipeline.hpp"
#include "drylab/util/json_io.hpp"

namespace drylab::cli {

using nlohmann::json;

namespace {

PipelineConfig load_config(const std::string& config_path) {
  json raw;
  if (!config_path.empty()) raw = util::read_json_file(config_path);
  return validate_config(raw);
}

std::shared_ptr<llm::ChatBackend> make_backend(const PipelineConfig& config,
                                               const std::string& mock_script) {
  if (!mock_script.empty())
    return std::make_shared<llm::ScriptedBackend>(util::read_json_file(mock_script));
  return std::make_shared<llm::HttpChatBackend>(config.llm);
}

std::optional<pipeline::Stage> parse_until(const std::string& until) {
  if (until.empty()) return std::nullopt;
  return pipeline::stage_from_name(until);
}

int run_command(const std::string& objective, const std::string& conditions,
                const std::string& requirements, const std::string& config_path,
                const std::string& out_dir, const std::string& mock_script,
                const std::string& until) {
  auto config = load_config(config_path);
  ResearchRequest request{objective, conditions, requirements};
  pipeline::Pipeline pipe(config, make_backend(config, mock_script));
  auto artifacts = pipe.run(request, out_dir.empty() ? "run" : out_dir, parse_until(until));
  std::cout << "run complete: " << artifacts.run_dir.string() << " ("
            << artifacts.manifest.stages.size() << " stage(s) done)\n";
  return 0;
}

int resume_command(const std::string& run_dir, const std::string& config_path,
                   const std::string& mock_script, const std::string& until) {
  std::string effective_config = config_path;
  if (effective_config.empty() &&
      std::filesystem::exists(std::filesystem::path(run_dir) / "config.json"))
    effective_config = (std::filesystem::path(run_dir) / "config.json").string();
  auto config = load_config(effective_config);
  pipeline::Pipeline pipe(config, make_backend(config, mock_script));
  auto artifacts = pipe.resume(run_dir, std::nullopt, parse_until(until));
  std::cout << "run complete: " << artifacts.run_dir.string() << " ("
            << artifacts.manifest.stages.size() << " stage(s) done)\n";
  return 0;
}

int evaluate_command(const std::string& protocol_path, const std::string& config_path,
                     const std::string& mock_script, const std::string& out_path) {
  auto config = load_config(config_path);
  auto protocol = design::Protocol::from_json(util::read_json_file(protocol_path));

  llm::Gateway gateway(make_backend(config, mock_script),
                       llm::RetryPolicy{config.llm.max_attempts, config.llm.backoff_base_ms});
  PromptLibrary prompts;
  eval::ProtocolJudge judge(gateway, prompts, config);
  auto judgement = judge.judge(protocol);

  const auto& s = judgement.scores;
  auto line = [](const std::string& name, double value) {
    printf("  %-20s %.4f\n", name.c_str(), value);
  };
  std::cout << "protocol quality:\n";
  line("completeness", s.completeness);
  line("detail", s.detail);
  line("correctness", s.correctness);
  line("logical_soundness", s.logical_soundness);
  line("structural_soundness", s.structural_soundness);
  line("overall", s.overall());

  if (!out_path.empty()) util::write_json_file(out_path, judgement.to_json());
  return 0;
}

int grade_errors_command(const std::string& run_dir, const std::string& config_path,
                         const std::string& mock_script) {
  std::string effective_config = config_path;
  if (effective_config.empty() &&
      std::filesystem::exists(std::filesystem::path(run_dir) / "config.json"))
    effective_config = (std::filesystem::path(run_dir) / "config.json").string();
  auto config = load_config(effective_config);

  const std::filesystem::path dir(run_dir);
  json outcomes_json = util::read_json_file(dir / "programming/outcomes.json");

  llm::Gateway gateway(make_backend(config, mock_script),
                       llm::RetryPolicy{config.llm.max_attempts, config.llm.backoff_base_ms});
  PromptLibrary prompts;

  json graded = json::array();
  for (const auto& oj : outcomes_json) {
    auto outcome = prog::TaskOutcome::from_json(oj);
    if (outcome.success()) continue;
    auto code_path = dir / "programming/tasks" / std::to_string(outcome.task_id) /
                     ("rev" + std::to_string(outcome.final_result.revision)) / "code";
    prog::CodeArtifact code;
    code.task_id = outcome.task_id;
    code.language = config.sandbox.language;
    code.revision = outcome.final_result.revision;
    code.source = std::filesystem::exists(code_path) ? util::read_text_file(code_path) : "";
    auto grade = eval::grade_error(gateway, prompts, config, code, outcome.final_result);
    std::cout << "task " << outcome.task_id << ": level " << grade.level << "\n";
    graded.push_back({{"task_id", outcome.task_id},
                      {"level", grade.level},
                      {"rationale", grade.rationale}});
  }
  std::filesystem::create_directories(dir / "evaluation");
  util::write_json_file(dir / "evaluation/error_levels.json", graded);
  std::cout << graded.size() << " failed task(s) graded\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"automated dry-lab biomedical research pipeline"};
  app.require_subcommand(1);

  std::string objective, conditions, requirements, config_path, out_dir, mock_script, until;
  std::string run_dir, protocol_path, scores_out;

  auto* run = app.add_subcommand("run", "run the full pipeline for a research objective");
  run->add_option("--objective", objective, "research objective")->required();
  run->add_option("--conditions", conditions, "experimental conditions");
  run->add_option("--requirements", requirements, "extra requirements");
  run->add_option("--config", config_path, "configuration JSON file");
  run->add_option("--out", out_dir, "run directory (default: ./run)");
  run->add_option("--mock", mock_script, "scripted backend JSON file");
  run->add_option("--until", until, "stop after this stage");

  auto* resume = app.add_subcommand("resume", "continue an interrupted run");
  resume->add_option("--run", run_dir, "run directory")->required();
  resume->add_option("--config", config_path, "configuration JSON file");
  resume->add_option("--mock", mock_script, "scripted backend JSON file");
  resume->add_option("--until", until, "stop after this stage");

  auto* evaluate = app.add_subcommand("evaluate", "score a protocol JSON file");
  evaluate->add_option("--protocol", protocol_path, "protocol JSON file")->required();
  evaluate->add_option("--config", config_path, "configuration JSON file");
  evaluate->add_option("--mock", mock_script, "scripted backend JSON file");
  evaluate->add_option("--out", scores_out, "write the scores JSON here");

  auto* grade = app.add_subcommand("grade-errors", "grade a run's failed tasks");
  grade->add_option("--run", run_dir, "run directory")->required();
  grade->add_option("--config", config_path, "configuration JSON file");
  grade->add_option("--mock", mock_script, "scripted backend JSON file");

  std::vector<const char*> argv;
  argv.push_back("drylab");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return run_command(objective, conditions, requirements, config_path, out_dir,
                         mock_script, until);
    if (resume->parsed()) return resume_command(run_dir, config_path, mock_script, until);
    if (evaluate->parsed())
      return evaluate_command(protocol_path, config_path, mock_script, scores_out);
    if (grade->parsed()) return grade_errors_command(run_dir, config_path, mock_script);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnrecoverableRunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace drylab::cli
