#include "drylab/pipeline/pipeline.hpp"

#include <future>
#include <set>

#include "drylab/design/design_stage.hpp"
#include "drylab/errors.hpp"
#include "drylab/eval/metrics.hpp"
#include "drylab/lit/literature_stage.hpp"
#include "drylab/prog/programming_stage.hpp"
#include "drylab/search/search_stage.hpp"
#include "drylab/util/json_io.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::pipeline {

using nlohmann::json;

namespace {

std::string fnv1a_hex(const std::string& data) {
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<llm::ChatBackend> backend,
                   std::unique_ptr<prog::SandboxRuntime> sandbox, PromptLibrary prompts)
    : config_(std::move(config)),
      prompts_(std::move(prompts)),
      gateway_(std::move(backend),
               llm::RetryPolicy{config_.llm.max_attempts, config_.llm.backoff_base_ms}),
      eutils_(config_.eutils),
      sandbox_(sandbox ? std::move(sandbox) : prog::make_sandbox_runtime(config_.sandbox)) {}

RunArtifacts Pipeline::run(const ResearchRequest& request,
                           const std::filesystem::path& run_dir,
                           std::optional<Stage> until) {
  request.validate();

  RunManifest manifest;
  const auto manifest_path = run_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    // The directory already has state; continue it rather than redo it.
    manifest = RunManifest::from_json(util::read_json_file(manifest_path));
    manifest.check_files(run_dir);
  } else {
    std::filesystem::create_directories(run_dir);
    manifest.run_id = fnv1a_hex(request.to_json().dump() + config_.to_json().dump());
    manifest.request = request.to_json();
    util::write_json_file(run_dir / "request.json", request.to_json());
    util::write_json_file(run_dir / "config.json", config_.to_json());
  }
  return execute(request, run_dir, std::move(manifest), until);
}

RunArtifacts Pipeline::resume(const std::filesystem::path& run_dir,
                              std::optional<ResearchRequest> request_fallback,
                              std::optional<Stage> until) {
  const auto manifest_path = run_dir / "manifest.json";
  const auto request_path = run_dir / "request.json";

  if (!std::filesystem::exists(manifest_path) && !std::filesystem::exists(request_path)) {
    // Fresh or empty directory: behaves like run().
    if (!request_fallback)
      throw ValidationError("run directory " + run_dir.string() +
                            " is empty and no request was provided");
    return run(*request_fallback, run_dir, until);
  }

  ResearchRequest request =
      std::filesystem::exists(request_path)
          ? ResearchRequest::from_json(util::read_json_file(request_path))
          : *request_fallback;
  request.validate();

  RunManifest manifest;
  if (std::filesystem::exists(manifest_path)) {
    manifest = RunManifest::from_json(util::read_json_file(manifest_path));
    manifest.check_files(run_dir);
  } else {
    manifest.run_id = fnv1a_hex(request.to_json().dump() + config_.to_json().dump());
    manifest.request = request.to_json();
  }
  return execute(request, run_dir, std::move(manifest), until);
}

void Pipeline::flush_run_state(const std::filesystem::path& run_dir,
                               const RunManifest& manifest) {
  util::write_json_file(run_dir / "manifest.json", manifest.to_json());
  util::write_json_file(run_dir / "telemetry.json", gateway_.telemetry().to_json());
  util::write_json_file(run_dir / "transcripts.json", gateway_.transcript().to_json());
}

RunArtifacts Pipeline::execute(const ResearchRequest& request,
                               const std::filesystem::path& run_dir, RunManifest manifest,
                               std::optional<Stage> until) {
  // Continuing a partial run folds its persisted counters back in, so the
  // final telemetry and transcripts match an uninterrupted run.
  if (!manifest.stages.empty() && gateway_.telemetry().total().calls == 0) {
    if (std::filesystem::exists(run_dir / "telemetry.json"))
      gateway_.telemetry().merge_snapshot(util::read_json_file(run_dir / "telemetry.json"));
    if (std::filesystem::exists(run_dir / "transcripts.json"))
      gateway_.transcript().merge_snapshot(
          util::read_json_file(run_dir / "transcripts.json"));
  }
  gateway_.telemetry().set_note("backend", gateway_.backend().id());
  gateway_.telemetry().set_note("sandbox", sandbox_->describe());

  for (Stage stage : all_stages()) {
    if (!manifest.has(stage)) {
      log::info(std::string("running stage ") + stage_name(stage));
      json artifacts;
      try {
        switch (stage) {
          case Stage::Search: artifacts = run_search(request, run_dir); break;
          case Stage::Literature: artifacts = run_literature(request, run_dir, manifest); break;
          case Stage::Design: artifacts = run_design(request, run_dir, manifest); break;
          case Stage::Programming:
            artifacts = run_programming(request, run_dir, manifest);
            break;
        }
      } catch (const StageError&) {
        flush_run_state(run_dir, manifest);  // preserve the partial run
        throw;
      } catch (const Error& e) {
        flush_run_state(run_dir, manifest);
        throw StageError(stage_name(stage), e.what());
      }
      manifest.add(stage, std::move(artifacts));
      flush_run_state(run_dir, manifest);
    }
    if (until && *until == stage) break;
  }

  RunArtifacts out;
  out.run_dir = run_dir;
  out.manifest = std::move(manifest);
  out.telemetry = gateway_.telemetry().to_json();
  return out;
}

// ---------------------------------------------------------------------------
// Search stage
// ---------------------------------------------------------------------------

json Pipeline::run_search(const ResearchRequest& request,
                          const std::filesystem::path& run_dir) {
  const auto dir = run_dir / "search";
  std::filesystem::create_directories(dir / "fulltext");
  search::SearchStage stage(gateway_, eutils_, prompts_, config_);

  auto queries = stage.generate_queries(request, config_.queries_per_request);
  {
    json queries_json = json::array();
    for (const auto& q : queries) queries_json.push_back({{"expression", q.serialize()}});
    util::write_json_file(dir / "queries.json", queries_json);
  }

  // Queries fan out across databases; merge order is fixed by (query, db).
  const int cap = config_.max_results_per_query_per_db;
  std::vector<std::future<std::vector<search::PaperRecord>>> paper_jobs;
  std::vector<std::future<std::vector<search::DatasetRecord>>> dataset_jobs;
  for (const auto& query : queries) {
    for (const std::string db : {"pubmed", "pmc"})
      paper_jobs.push_back(std::async(std::launch::async, [&stage, query, db, cap] {
        return stage.search_literature(query, db, cap);
      }));
    dataset_jobs.push_back(std::async(std::launch::async, [&stage, query, cap] {
      return stage.search_datasets(query, cap);
    }));
  }

  std::vector<search::PaperRecord> papers;
  for (auto& job : paper_jobs) search::merge_papers(papers, job.get());
  std::vector<search::DatasetRecord> datasets;
  for (auto& job : dataset_jobs) search::merge_datasets(datasets, job.get());

  // Filtration: helpfulness for papers, usability for datasets. A paper or
  // dataset whose scoring fails is skipped with a warning.
  for (auto& paper : papers) {
    try {
      paper.helpfulness = stage.score_paper(paper, request);
    } catch (const ScoringError& e) {
      log::warn("scoring failed for paper " + paper.id + "; skipping: " + e.what());
    } catch (const ValidationError& e) {
      log::warn("paper " + paper.id + " not scorable: " + e.what());
    }
  }
  std::vector<search::PaperRecord> scored;
  for (const auto& p : papers)
    if (p.helpfulness) scored.push_back(p);
  auto kept = search::filter_papers(scored, config_.paper_keep_threshold);

  for (auto& dataset : datasets) {
    try {
      dataset.useful = stage.score_dataset(dataset, request);
    } catch (const ScoringError& e) {
      log::warn("scoring failed for dataset " + dataset.accession + "; skipping: " +
                e.what());
    } catch (const ValidationError& e) {
      log::warn("dataset " + dataset.accession + " not scorable: " + e.what());
    }
  }

  // Full text for every kept paper; papers without usable full text drop out.
  json fulltext_paths = json::array();
  std::set<std::string> kept_with_fulltext;
  for (const auto& paper : kept) {
    try {
      auto doc = stage.fetch_fulltext(paper);
      doc.validate();
      std::string rel = "search/fulltext/" + util::sanitize_filename(paper.id) + ".json";
      util::write_json_file(run_dir / rel, doc.to_json());
      fulltext_paths.push_back(rel);
      kept_with_fulltext.insert(paper.id);
    } catch (const AvailabilityError& e) {
      log::warn(std::string("dropping ") + paper.id + ": " + e.what());
    } catch (const DocumentError& e) {
      log::warn(std::string("dropping ") + paper.id + ": " + e.what());
    }
  }
  if (kept_with_fulltext.empty())
    throw StageError("search", "zero papers survived filtration and full-text download");

  {
    json papers_json = json::array();
    for (const auto& p : papers) {
      json pj = p.to_json();
      pj["kept"] = kept_with_fulltext.count(p.id) > 0;
      papers_json.push_back(std::move(pj));
    }
    util::write_json_file(dir / "papers.json", papers_json);

    json datasets_json = json::array();
    for (const auto& d : datasets) datasets_json.push_back(d.to_json());
    util::write_json_file(dir / "datasets.json", datasets_json);
  }

  return {{"queries", "search/queries.json"},
          {"papers", "search/papers.json"},
          {"datasets", "search/datasets.json"},
          {"fulltext", fulltext_paths}};
}

// ---------------------------------------------------------------------------
// Literature stage
// ---------------------------------------------------------------------------

json Pipeline::run_literature(const ResearchRequest& request,
                              const std::filesystem::path& run_dir,
                              const RunManifest& manifest) {
  const auto dir = run_dir / "literature";
  std::filesystem::create_directories(dir / "reports");
  std::filesystem::create_directories(dir / "analyses");
  review::TranscriptStore transcripts(dir / "transcripts");
  lit::LiteratureStage stage(gateway_, prompts_, config_, request, &transcripts);
  search::SearchStage searcher(gateway_, eutils_, prompts_, config_);

  std::vector<StructuredDocument> docs;
  for (const auto& rel : manifest.artifact_paths(Stage::Search, "fulltext"))
    docs.push_back(StructuredDocument::from_json(util::read_json_file(run_dir / rel)));
  if (docs.empty()) throw StageError("literature", "no full-text documents to process");

  // Papers fan out concurrently; merge preserves document order.
  struct PaperResult {
    std::optional<lit::ExperimentalReport> report;
    std::optional<lit::ReportAnalysis> analysis;
  };
  std::vector<std::future<PaperResult>> jobs;
  for (const auto& doc : docs)
    jobs.push_back(std::async(std::launch::async, [&stage, &doc] {
      PaperResult result;
      try {
        result.report = stage.generate_report(doc);
      } catch (const ReportGenerationError& e) {
        log::warn("skipping paper " + doc.paper_id + ": " + e.what());
        return result;
      }
      try {
        result.analysis = stage.analyze_report(*result.report);
      } catch (const AnalysisError& e) {
        log::warn("excluding paper " + doc.paper_id + " from the corpus: " + e.what());
      }
      return result;
    }));

  std::vector<lit::ExperimentalReport> reports;
  std::vector<lit::ReportAnalysis> analyses;
  json report_paths = json::array();
  json analysis_paths = json::array();
  for (size_t i = 0; i < jobs.size(); ++i) {
    PaperResult result = jobs[i].get();
    if (!result.report) continue;
    std::string rel =
        "literature/reports/" + util::sanitize_filename(result.report->paper_id) + ".json";
    util::write_json_file(run_dir / rel, result.report->to_json());
    report_paths.push_back(rel);
    reports.push_back(*result.report);
    if (result.analysis) {
      std::string arel = "literature/analyses/" +
                         util::sanitize_filename(result.analysis->paper_id) + ".json";
      util::write_json_file(run_dir / arel, result.analysis->to_json());
      analysis_paths.push_back(arel);
      analyses.push_back(*result.analysis);
    }
  }
  if (reports.empty()) throw StageError("literature", "no report survived generation");

  // Datasets mentioned in the reports join the collected set (direct ID
  // lookup, then the usual usability scoring).
  std::vector<search::DatasetRecord> datasets;
  for (const auto& pj :
       util::read_json_file(run_dir / manifest.artifact_path(Stage::Search, "datasets")))
    datasets.push_back(search::DatasetRecord::from_json(pj));

  std::set<std::string> known;
  for (const auto& d : datasets) known.insert(d.accession);
  for (const auto& report : reports) {
    std::string text;
    for (const auto& section : report.sections) text += section.render();
    for (const auto& accession : lit::extract_dataset_ids(text)) {
      if (known.count(accession)) continue;  // integrate, do not duplicate
      known.insert(accession);
      try {
        auto record = searcher.fetch_dataset_by_id(accession);
        record.useful = searcher.score_dataset(record, request);
        datasets.push_back(std::move(record));
      } catch (const NotFoundError& e) {
        log::warn(std::string("dataset lookup failed: ") + e.what());
      } catch (const ScoringError& e) {
        log::warn("scoring failed for dataset " + accession + ": " + e.what());
      } catch (const ValidationError& e) {
        log::warn("dataset " + accession + " not scorable: " + e.what());
      }
    }
  }
  {
    json datasets_json = json::array();
    for (const auto& d : datasets) datasets_json.push_back(d.to_json());
    util::write_json_file(dir / "datasets.json", datasets_json);
  }

  // Consolidate high-referability sections for the design stage.
  std::vector<lit::ExperimentalReport> analyzed_reports;
  for (const auto& report : reports)
    for (const auto& analysis : analyses)
      if (analysis.paper_id == report.paper_id) analyzed_reports.push_back(report);
  auto corpus = lit::build_reference_corpus(analyzed_reports, analyses);
  if (corpus.entries.empty())
    throw StageError("literature", "no high-referability sections; the corpus is empty");
  auto corpus_files = lit::save_corpus(corpus, run_dir, "literature/corpus.json");

  return {{"reports", report_paths},
          {"analyses", analysis_paths},
          {"corpus", "literature/corpus.json"},
          {"corpus_files", corpus_files},
          {"datasets", "literature/datasets.json"}};
}

// ---------------------------------------------------------------------------
// Design stage
// ---------------------------------------------------------------------------

json Pipeline::run_design(const ResearchRequest& request,
                          const std::filesystem::path& run_dir,
                          const RunManifest& manifest) {
  const auto dir = run_dir / "design";
  std::filesystem::create_directories(dir);
  review::TranscriptStore transcripts(dir / "transcripts");
  design::DesignStage stage(gateway_, prompts_, config_, request, &transcripts);

  auto corpus =
      lit::load_corpus(run_dir / manifest.artifact_path(Stage::Literature, "corpus"));

  std::vector<search::DatasetRecord> useful;
  for (const auto& dj : util::read_json_file(
           run_dir / manifest.artifact_path(Stage::Literature, "datasets"))) {
    auto record = search::DatasetRecord::from_json(dj);
    if (record.useful && *record.useful) useful.push_back(std::move(record));
  }

  auto plans = stage.design_headings(corpus);
  {
    json plans_json = json::array();
    for (const auto& p : plans)
      plans_json.push_back({{"heading", p.heading},
                            {"purpose", p.purpose},
                            {"design_reason", p.design_reason},
                            {"reference_sources", p.reference_sources}});
    util::write_json_file(dir / "plans.json", plans_json);
  }

  auto outline = stage.design_outline(plans, corpus);
  util::write_json_file(dir / "outline.json", outline.to_json());

  auto protocol = stage.design_details(outline, corpus, useful);
  util::write_json_file(dir / "protocol.json", protocol.to_json());
  util::write_text_file(dir / "protocol.md", protocol.render_markdown());

  return {{"plans", "design/plans.json"},
          {"outline", "design/outline.json"},
          {"protocol", "design/protocol.json"},
          {"protocol_markdown", "design/protocol.md"}};
}

// ---------------------------------------------------------------------------
// Programming stage
// ---------------------------------------------------------------------------

json Pipeline::run_programming(const ResearchRequest& /*request*/,
                               const std::filesystem::path& run_dir,
                               const RunManifest& manifest) {
  const auto dir = run_dir / "programming";
  const auto tasks_root = dir / "tasks";
  std::filesystem::create_directories(tasks_root);
  std::filesystem::create_directories(run_dir / "evaluation");
  prog::ProgrammingStage stage(gateway_, prompts_, config_, *sandbox_);

  auto protocol = design::Protocol::from_json(
      util::read_json_file(run_dir / manifest.artifact_path(Stage::Design, "protocol")));

  std::vector<prog::DryLabTask> tasks;
  try {
    tasks = stage.extract_tasks(protocol);
  } catch (const MalformedOutputError& e) {
    throw StageError("programming", std::string("task extraction failed: ") + e.what());
  }
  {
    json tasks_json = json::array();
    for (const auto& t : tasks) tasks_json.push_back(t.to_json());
    util::write_json_file(dir / "tasks.json", tasks_json);
  }

  auto outcomes = stage.run_all(tasks, protocol.dataset_accessions, tasks_root);
  {
    json outcomes_json = json::array();
    for (const auto& o : outcomes) outcomes_json.push_back(o.to_json());
    util::write_json_file(dir / "outcomes.json", outcomes_json);
  }

  // Execution summary mirrors the automation metrics: success rate plus
  // the error level of every failed task.
  json per_task = json::array();
  for (const auto& o : outcomes) {
    json t = {{"task_id", o.task_id},
              {"status", o.success() ? "success" : "failed"},
              {"iterations", o.iterations}};
    if (o.error_level) t["error_level"] = *o.error_level;
    per_task.push_back(std::move(t));
  }
  json summary = {{"tasks", per_task},
                  {"success_rate_percent", eval::execution_success_rate(outcomes)}};
  util::write_json_file(run_dir / "evaluation/execution_summary.json", summary);

  return {{"tasks", "programming/tasks.json"},
          {"outcomes", "programming/outcomes.json"},
          {"execution_summary", "evaluation/execution_summary.json"}};
}

}  // namespace drylab::pipeline
