#include "drylab/search/records.hpp"

#include <cctype>

namespace drylab::search {

using nlohmann::json;

json PaperRecord::to_json() const {
  json j = {{"source_db", source_db},
            {"id", id},
            {"title", title},
            {"abstract", abstract},
            {"fulltext_available", fulltext_available}};
  if (helpfulness) j["helpfulness"] = *helpfulness;
  return j;
}

PaperRecord PaperRecord::from_json(const json& j) {
  PaperRecord r;
  r.source_db = j.value("source_db", "");
  r.id = j.value("id", "");
  r.title = j.value("title", "");
  r.abstract = j.value("abstract", "");
  r.fulltext_available = j.value("fulltext_available", false);
  if (j.contains("helpfulness")) r.helpfulness = j.at("helpfulness").get<int>();
  return r;
}

json DatasetRecord::to_json() const {
  json j = {{"accession", accession},
            {"title", title},
            {"description", description},
            {"provenance",
             provenance == DatasetProvenance::FromSearch ? "from-search" : "from-report"}};
  if (useful) j["useful"] = *useful;
  return j;
}

DatasetRecord DatasetRecord::from_json(const json& j) {
  DatasetRecord r;
  r.accession = j.value("accession", "");
  r.title = j.value("title", "");
  r.description = j.value("description", "");
  r.provenance = j.value("provenance", "from-search") == "from-report"
                     ? DatasetProvenance::FromReport
                     : DatasetProvenance::FromSearch;
  if (j.contains("useful")) r.useful = j.at("useful").get<bool>();
  return r;
}

bool is_valid_accession(const std::string& accession) {
  static const char* kPrefixes[] = {"GSE", "GDS", "GSM", "GPL"};
  for (const char* prefix : kPrefixes) {
    size_t n = 3;
    if (accession.compare(0, n, prefix) != 0) continue;
    if (accession.size() <= n) return false;
    for (size_t i = n; i < accession.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(accession[i]))) return false;
    return true;
  }
  return false;
}

}  // namespace drylab::search
