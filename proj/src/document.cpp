#include "drylab/document.hpp"

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab {

void StructuredDocument::validate() const {
  if (blocks.empty())
    throw ValidationError("structured document " + paper_id + " has no blocks");
  for (const auto& b : blocks)
    if (util::trim(b.title).empty())
      throw ValidationError("structured document " + paper_id + " has an untitled block");
}

std::string StructuredDocument::full_text() const {
  std::string out;
  for (const auto& b : blocks) {
    out += "## " + b.title + "\n" + b.text + "\n\n";
  }
  return out;
}

nlohmann::json StructuredDocument::to_json() const {
  nlohmann::json blocks_json = nlohmann::json::array();
  for (const auto& b : blocks) blocks_json.push_back({{"title", b.title}, {"text", b.text}});
  return {{"paper_id", paper_id}, {"blocks", blocks_json}};
}

StructuredDocument StructuredDocument::from_json(const nlohmann::json& j) {
  StructuredDocument doc;
  doc.paper_id = j.value("paper_id", "");
  for (const auto& b : j.value("blocks", nlohmann::json::array()))
    doc.blocks.push_back({b.value("title", ""), b.value("text", "")});
  return doc;
}

}  // namespace drylab
