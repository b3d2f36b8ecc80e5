#include "drylab/request.hpp"

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab {

void ResearchRequest::validate() const {
  if (util::trim(objective).empty())
    throw ValidationError("research objective must not be empty");
}

nlohmann::json ResearchRequest::to_json() const {
  return {{"objective", objective},
          {"conditions", conditions},
          {"requirements", requirements}};
}

ResearchRequest ResearchRequest::from_json(const nlohmann::json& j) {
  ResearchRequest r;
  r.objective = j.value("objective", "");
  r.conditions = j.value("conditions", "");
  r.requirements = j.value("requirements", "");
  return r;
}

std::string ResearchRequest::describe() const {
  std::string out = "Research objective: " + objective;
  if (!util::trim(conditions).empty()) out += "\nConditions: " + conditions;
  if (!util::trim(requirements).empty()) out += "\nRequirements: " + requirements;
  return out;
}

}  // namespace drylab
