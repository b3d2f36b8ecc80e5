#include "drylab/prompts.hpp"

#include "drylab/errors.hpp"
#include "drylab/util/json_io.hpp"

namespace drylab {

namespace {

const char* kPaperHelpfulnessRubric = R"(Rate how helpful the paper is for the stated research objective, judging only from its title and abstract. Use this 1-5 scale:
5 - Extremely Helpful: the title and abstract perfectly align with the research objective, conditions, and requirements; they provide critical information and insights that directly and significantly advance the research objective.
4 - Very Helpful: the title and abstract are highly relevant to the research objective, conditions, and requirements; they provide a substantial amount of useful information and insights that contribute significantly to the objective.
3 - Moderately Helpful: the title and abstract are somewhat relevant; they provide some useful information, but more material would be needed to fully use it.
2 - Slightly Helpful: only minor relevance; very limited information or insight toward the objective.
1 - Not Helpful at All: completely unrelated to the research objective, conditions, and requirements; no valuable information.)";

const char* kErrorLevelRubric = R"(Assign exactly one severity level to the failed execution, from the error message and the code:
1 - Minor Errors: Missing or incorrect file paths, missing necessary libraries or packages, network timeouts.
2 - Moderate Errors: Syntax errors, incorrect function or variable names, data type mismatches.
3 - Major Errors: Parameter mismatches, index out of bounds or invalid index, out of memory.
4 - Severe Errors: Incorrect algorithms or logic, disorganized code structure, key components missing or incorrect.)";

const char* kReportQualityRubric = R"(Score the experimental report on four dimensions, each an integer from 1 to 5:
- logical_soundness: 5 = completely logical arguments and conclusions, clear reasoning, no gaps; 4 = mostly logical with minor unclear points; 3 = generally logical with noticeable gaps; 2 = many logical flaws, disorganized; 1 = lacks coherence, severe flaws.
- detail: 5 = all necessary details with comprehensive descriptions; 4 = most necessary details, some areas brief; 3 = some necessary details but important information missing; 2 = lacks many details, unclear; 1 = almost no details.
- consistency: 5 = entirely faithful to the original paper, no misunderstandings; 4 = mostly faithful with minor misunderstandings; 3 = generally faithful with noticeable misunderstandings; 2 = many inconsistencies and significant deviations; 1 = severely inconsistent.
- readability: 5 = clear structure, logical organization, easy to read; 4 = mostly well structured; 3 = generally clear, some poorly arranged sections; 2 = quite disorganized; 1 = very disorganized, extremely difficult to read.)";

std::map<std::string, std::string> builtin_prompts() {
  std::map<std::string, std::string> p;

  p["query-generator.system"] =
      "You generate Boolean search queries for biomedical literature and dataset "
      "databases. Extract the key concepts from the research objective, expand them "
      "with common synonyms and abbreviations, quote multi-word phrases, and combine "
      "terms with AND/OR. Optional field tags in square brackets (for example "
      "[Title/Abstract]) are allowed. Keep parentheses balanced.";

  p["filter.system"] = std::string("You filter search results for a research project.\n") +
                       kPaperHelpfulnessRubric;

  p["filter.dataset.system"] =
      "You judge whether a public dataset is usable for the research objective, from "
      "its accession, title and description. Answer with a single binary decision.";

  p["report-generator.system"] =
      "You convert a research paper into a standardized experimental report. Work "
      "strictly from the provided document; do not invent content.";

  p["analyst.system"] =
      "You analyze sections of standardized experimental reports against a research "
      "objective. Grade how referable each section is for designing new experiments "
      "(high, medium or low) and give concrete suggestions for reference and "
      "modification.";

  p["designer.system"] =
      "You design experimental protocols for dry-lab biomedical studies, grounded in "
      "the provided reference material and datasets. Be specific and reproducible: "
      "name concrete datasets, tools, parameters and thresholds.";

  p["reviewer.system"] =
      "You are a strict scientific reviewer. Given a work product and its task "
      "description, either approve it or request a revision with concrete, actionable "
      "feedback.";

  p["extractor.system"] =
      "You extract an ordered list of dry-lab experiment tasks from an experimental "
      "protocol. Each task needs an id, a description, and typed inputs and outputs.";

  p["code-generator.system"] =
      "You write complete, runnable analysis code for one dry-lab task at a time. "
      "The code runs unattended in a container; read inputs from the documented "
      "locations and write all outputs into the working directory.";

  p["judge.completeness.system"] =
      "You judge the completeness of an experimental protocol. For every section, "
      "list the steps that are missing but necessary to achieve the section's "
      "purpose. Return an empty list for sections that need nothing.";

  p["judge.correctness.system"] =
      "You judge factual correctness. For every step of the protocol, decide whether "
      "it is free from factual errors, and justify the decision briefly.";

  p["judge.logical.system"] =
      "You judge ordering. For every step of the protocol, decide whether it is "
      "logically ordered and appropriately positioned within its section.";

  p["judge.detail.system"] =
      "You judge the level of detail of an experimental protocol: the degree to "
      "which it provides sufficient information for each step. Produce one score "
      "from 0 (no detail) to 1 (fully detailed).";

  p["judge.structure.system"] =
      "You judge structural soundness: the logical coherence and organizational "
      "integrity of the protocol's overall framework. Produce one score from 0 "
      "(completely unsound) to 1 (perfectly sound).";

  p["judge.error_level.system"] = kErrorLevelRubric;

  p["judge.report_quality.system"] = kReportQualityRubric;

  p["judge.system"] = "You are a careful evaluator. Follow the task instructions exactly.";

  return p;
}

}  // namespace

PromptLibrary::PromptLibrary() : texts_(builtin_prompts()) {}

const std::string& PromptLibrary::get(const std::string& id) const {
  auto it = texts_.find(id);
  if (it == texts_.end()) throw ValidationError("unknown prompt id '" + id + "'");
  return it->second;
}

bool PromptLibrary::contains(const std::string& id) const { return texts_.count(id) > 0; }

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) const {
  PromptLibrary out = *this;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    out.texts_[entry.path().stem().string()] = util::read_text_file(entry.path());
  }
  return out;
}

}  // namespace drylab
