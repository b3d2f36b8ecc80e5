#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "drylab/pipeline/pipeline.hpp"

namespace drylab::test {

/// Full backend script for an end-to-end mock run over the EutilsStub
/// corpus: 3 PMC papers survive filtration (scores 5,4,4), both PubMed
/// records are filtered out (3,1), datasets GSE10001 (useful), GSE10002
/// (not useful) come from search and GSE12345 (useful) from a report
/// mention; the design yields a 2-section protocol; task 1's code fails
/// once then passes, task 2 passes immediately.
nlohmann::json e2e_script();

ResearchRequest e2e_request();

/// Raw config document for the mock run (process sandbox, /bin/sh
/// interpreter, stub E-utilities endpoint, no retry backoff delay).
nlohmann::json e2e_config_json(const std::string& eutils_base_url);

PipelineConfig e2e_config(const std::string& eutils_base_url);

/// Fresh pipeline over a fresh scripted backend (scripts are stateful).
std::unique_ptr<pipeline::Pipeline> make_mock_pipeline(const std::string& eutils_base_url);

const std::vector<std::string>& e2e_paper_ids();

}  // namespace drylab::test
