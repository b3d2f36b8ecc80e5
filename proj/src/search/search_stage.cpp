#include "drylab/search/search_stage.hpp"

#include <algorithm>
#include <set>

#include "drylab/errors.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"
#include "drylab/util/xml.hpp"

namespace drylab::search {

using nlohmann::json;
using util::XmlNode;

SearchStage::SearchStage(llm::Gateway& gateway, EutilsClient& eutils,
                         const PromptLibrary& prompts, const PipelineConfig& config)
    : gateway_(gateway), eutils_(eutils), prompts_(prompts), config_(config) {}

// ---------------------------------------------------------------------------
// Query generation
// ---------------------------------------------------------------------------

std::vector<BooleanQuery> SearchStage::generate_queries(const ResearchRequest& request,
                                                        int n) {
  if (n < 1) throw ValidationError("query count must be >= 1");
  request.validate();

  const auto& profile = config_.agent(roles::kQueryGenerator);
  auto schema = llm::JsonSchema::object(
      {{"queries", llm::JsonSchema::array(llm::JsonSchema::string(), 1)}}, {"queries"});
  auto extra = [n](const json& v) -> std::vector<std::string> {
    std::vector<std::string> errors;
    const auto& queries = v.at("queries");
    if (static_cast<int>(queries.size()) != n) {
      errors.push_back("$.queries: expected exactly " + std::to_string(n) +
                       " queries, got " + std::to_string(queries.size()));
      return errors;
    }
    for (size_t i = 0; i < queries.size(); ++i) {
      try {
        BooleanQuery::parse(queries[i].get<std::string>());
      } catch (const QueryGenerationError& e) {
        errors.push_back("$.queries[" + std::to_string(i) + "]: " + e.what());
      }
    }
    return errors;
  };

  std::string user =
      request.describe() + "\n\nGenerate exactly " + std::to_string(n) +
      " Boolean search queries covering the key concepts and their synonyms. Reply "
      "with one JSON object: {\"queries\": [\"...\", ...]}.";

  json value;
  try {
    value = gateway_.complete_structured(
        profile, "search.query_gen",
        {{"system", prompts_.get(profile.prompt_id)}, {"user", user}}, schema, extra);
  } catch (const MalformedOutputError& e) {
    throw QueryGenerationError(e.what());
  }

  std::vector<BooleanQuery> out;
  for (const auto& q : value.at("queries"))
    out.push_back(BooleanQuery::parse(q.get<std::string>()));
  return out;
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

namespace {

std::string collect_abstract(const XmlNode& node) {
  std::string text;
  for (const XmlNode* abs : node.find_all("AbstractText")) {
    if (!text.empty()) text += " ";
    text += util::trim(abs->inner_text());
  }
  return text;
}

}  // namespace

std::vector<PaperRecord> parse_pubmed_articles(const std::string& xml) {
  XmlNode root = util::parse_xml(xml);
  std::vector<PaperRecord> out;
  for (const XmlNode* article : root.find_all("PubmedArticle")) {
    PaperRecord r;
    r.source_db = "pubmed";
    if (const XmlNode* pmid = article->find("PMID")) r.id = util::trim(pmid->inner_text());
    if (const XmlNode* title = article->find("ArticleTitle"))
      r.title = util::trim(title->inner_text());
    r.abstract = collect_abstract(*article);
    for (const XmlNode* aid : article->find_all("ArticleId"))
      if (aid->attribute("IdType") == "pmc") r.fulltext_available = true;
    if (!r.id.empty()) out.push_back(std::move(r));
  }
  return out;
}

std::vector<PaperRecord> parse_pmc_articles(const std::string& xml) {
  XmlNode root = util::parse_xml(xml);
  std::vector<PaperRecord> out;
  std::vector<const XmlNode*> articles = root.find_all("article");
  for (const XmlNode* article : articles) {
    PaperRecord r;
    r.source_db = "pmc";
    r.fulltext_available = true;
    for (const XmlNode* aid : article->find_all("article-id")) {
      if (aid->attribute("pub-id-type") == "pmc")
        r.id = "PMC" + util::trim(aid->inner_text());
    }
    if (const XmlNode* title = article->find("article-title"))
      r.title = util::trim(title->inner_text());
    if (const XmlNode* abs = article->find("abstract"))
      r.abstract = util::trim(abs->inner_text());
    if (!r.id.empty()) out.push_back(std::move(r));
  }
  return out;
}

StructuredDocument parse_pmc_fulltext(const std::string& xml, const std::string& paper_id) {
  XmlNode root = util::parse_xml(xml);
  const XmlNode* body = root.find("body");
  if (!body) throw AvailabilityError("no structured body for " + paper_id);

  StructuredDocument doc;
  doc.paper_id = paper_id;
  for (const XmlNode* sec : body->children_named("sec")) {
    StructuredDocument::Block block;
    if (const XmlNode* title = sec->child("title")) block.title = util::trim(title->inner_text());
    if (block.title.empty()) block.title = "Section " + std::to_string(doc.blocks.size() + 1);
    std::string text;
    for (const auto& child : sec->children) {
      if (child.name == "title") continue;
      std::string part = util::trim(child.inner_text());
      if (part.empty()) continue;
      if (!text.empty()) text += "\n";
      text += part;
    }
    block.text = text;
    doc.blocks.push_back(std::move(block));
  }
  if (doc.blocks.empty()) throw AvailabilityError("empty structured body for " + paper_id);
  return doc;
}

std::vector<PaperRecord> SearchStage::search_literature(const BooleanQuery& query,
                                                        const std::string& db, int cap) {
  if (cap < 1) throw ValidationError("retrieval cap must be >= 1");
  if (db != "pubmed" && db != "pmc")
    throw ValidationError("literature database must be 'pubmed' or 'pmc'");

  auto ids = eutils_.esearch(db, query.serialize(), cap);
  if (ids.empty()) return {};
  if (static_cast<int>(ids.size()) > cap) ids.resize(cap);

  std::string xml = db == "pubmed"
                        ? eutils_.efetch(db, ids, {{"rettype", "abstract"}, {"retmode", "xml"}})
                        : eutils_.efetch(db, ids, {{"retmode", "xml"}});
  try {
    auto records = db == "pubmed" ? parse_pubmed_articles(xml) : parse_pmc_articles(xml);
    if (static_cast<int>(records.size()) > cap) records.resize(cap);
    return records;
  } catch (const DocumentError& e) {
    throw RetrievalError(db, std::string("unparseable efetch payload: ") + e.what());
  }
}

std::vector<DatasetRecord> SearchStage::search_datasets(const BooleanQuery& query, int cap) {
  if (cap < 1) throw ValidationError("retrieval cap must be >= 1");
  auto ids = eutils_.esearch("gds", query.serialize(), cap);
  if (ids.empty()) return {};
  if (static_cast<int>(ids.size()) > cap) ids.resize(cap);

  json payload = eutils_.esummary("gds", ids);
  const json result = payload.value("result", json::object());
  std::vector<DatasetRecord> out;
  for (const auto& uid : ids) {
    if (!result.contains(uid)) continue;
    const json& entry = result.at(uid);
    DatasetRecord r;
    r.accession = entry.value("accession", "");
    r.title = entry.value("title", "");
    r.description = entry.value("summary", "");
    r.provenance = DatasetProvenance::FromSearch;
    if (!r.accession.empty()) out.push_back(std::move(r));
    if (static_cast<int>(out.size()) == cap) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filtration
// ---------------------------------------------------------------------------

int SearchStage::score_paper(const PaperRecord& paper, const ResearchRequest& request) {
  if (util::trim(paper.title).empty() || util::trim(paper.abstract).empty())
    throw ValidationError("paper " + paper.id + " needs both title and abstract to be scored");

  const auto& profile = config_.agent(roles::kFilter);
  auto schema = llm::JsonSchema::object(
      {{"score", llm::JsonSchema::integer(1, 5)},
       {"rationale", llm::JsonSchema::string(/*allow_empty=*/true)}},
      {"score"});

  std::string user = request.describe() + "\n\nPaper title: " + paper.title +
                     "\nAbstract: " + paper.abstract +
                     "\n\nApply the 1-5 helpfulness scale and reply with one JSON "
                     "object: {\"score\": 1..5, \"rationale\": string}.";
  try {
    json value = gateway_.complete_structured(
        profile, "search.paper_score." + paper.id,
        {{"system", prompts_.get(profile.prompt_id)}, {"user", user}}, schema);
    return value.at("score").get<int>();
  } catch (const MalformedOutputError& e) {
    throw ScoringError(e.what());
  }
}

bool SearchStage::score_dataset(const DatasetRecord& dataset, const ResearchRequest& request) {
  if (util::trim(dataset.description).empty())
    throw ValidationError("dataset " + dataset.accession +
                          " needs a non-empty description to be scored");

  const auto& profile = config_.agent(roles::kFilter);
  auto schema = llm::JsonSchema::object(
      {{"useful", llm::JsonSchema::boolean()},
       {"rationale", llm::JsonSchema::string(/*allow_empty=*/true)}},
      {"useful"});

  std::string user = request.describe() + "\n\nDataset " + dataset.accession + ": " +
                     dataset.title + "\nDescription: " + dataset.description +
                     "\n\nIs this dataset usable for the objective? Reply with one JSON "
                     "object: {\"useful\": true | false, \"rationale\": string}.";
  try {
    json value = gateway_.complete_structured(
        profile, "search.dataset_score." + dataset.accession,
        {{"system", prompts_.get("filter.dataset.system")}, {"user", user}}, schema);
    return value.at("useful").get<bool>();
  } catch (const MalformedOutputError& e) {
    throw ScoringError(e.what());
  }
}

std::vector<PaperRecord> filter_papers(const std::vector<PaperRecord>& papers, int threshold) {
  if (threshold < 1 || threshold > 5)
    throw ValidationError("paper keep threshold must be in 1..5");
  std::vector<PaperRecord> kept;
  for (const auto& p : papers) {
    if (!p.helpfulness)
      throw ValidationError("paper " + p.id + " is unscored; score all papers first");
    if (*p.helpfulness >= threshold) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const PaperRecord& a, const PaperRecord& b) {
    if (*a.helpfulness != *b.helpfulness) return *a.helpfulness > *b.helpfulness;
    return a.id < b.id;
  });
  return kept;
}

int merge_papers(std::vector<PaperRecord>& collected, const std::vector<PaperRecord>& found) {
  std::set<std::string> seen;
  for (const auto& p : collected) seen.insert(p.id);
  int added = 0;
  for (const auto& p : found) {
    if (seen.count(p.id)) continue;
    seen.insert(p.id);
    collected.push_back(p);
    ++added;
  }
  return added;
}

int merge_datasets(std::vector<DatasetRecord>& collected,
                   const std::vector<DatasetRecord>& found) {
  std::set<std::string> seen;
  for (const auto& d : collected) seen.insert(d.accession);
  int added = 0;
  for (const auto& d : found) {
    if (seen.count(d.accession)) continue;
    seen.insert(d.accession);
    collected.push_back(d);
    ++added;
  }
  return added;
}

// ---------------------------------------------------------------------------
// Full text and direct dataset lookup
// ---------------------------------------------------------------------------

StructuredDocument SearchStage::fetch_fulltext(const PaperRecord& paper) {
  if (!paper.fulltext_available)
    throw AvailabilityError("no full text available for " + paper.id);
  std::string uid = paper.id;
  if (uid.rfind("PMC", 0) == 0) uid = uid.substr(3);
  std::string xml = eutils_.efetch("pmc", {uid}, {{"retmode", "xml"}});
  return parse_pmc_fulltext(xml, paper.id);
}

DatasetRecord SearchStage::fetch_dataset_by_id(const std::string& accession) {
  if (!is_valid_accession(accession))
    throw ValidationError("'" + accession + "' is not a valid GEO accession");

  auto ids = eutils_.esearch("gds", accession + "[ACCN]", 1);
  if (ids.empty()) throw NotFoundError("no GEO entry for accession " + accession);

  json payload = eutils_.esummary("gds", ids);
  const json result = payload.value("result", json::object());
  if (!result.contains(ids.front()))
    throw NotFoundError("no GEO summary for accession " + accession);

  const json& entry = result.at(ids.front());
  DatasetRecord r;
  r.accession = entry.value("accession", accession);
  r.title = entry.value("title", "");
  r.description = entry.value("summary", "");
  r.provenance = DatasetProvenance::FromReport;
  return r;
}

}  // namespace drylab::search
