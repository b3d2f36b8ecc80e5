#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "drylab/config.hpp"
#include "drylab/search/rate_limiter.hpp"

namespace drylab::search {

/// Thin client for the NCBI E-utilities HTTP contract (esearch/esummary/
/// efetch). Every request passes through the shared rate limiter: 3/s
/// without an API key, 10/s with one (the public service policy).
class EutilsClient {
 public:
  explicit EutilsClient(const EutilsSettings& settings);
  ~EutilsClient();

  /// esearch.fcgi: returns up to `retmax` UIDs for the term.
  std::vector<std::string> esearch(const std::string& db, const std::string& term,
                                   int retmax);

  /// esummary.fcgi with retmode=json: returns the parsed payload.
  nlohmann::json esummary(const std::string& db, const std::vector<std::string>& uids);

  /// efetch.fcgi: returns the raw (XML) body.
  std::string efetch(const std::string& db, const std::vector<std::string>& uids,
                     const std::map<std::string, std::string>& extra_params = {});

  RateLimiter& limiter();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drylab::search
