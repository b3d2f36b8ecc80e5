#include "drylab/review/review.hpp"

#include "drylab/errors.hpp"
#include "drylab/util/json_io.hpp"
#include "drylab/util/log.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::review {

using nlohmann::json;

void TranscriptStore::save(const std::string& loop_key, const json& transcript) const {
  util::write_json_file(dir_ / (util::sanitize_filename(loop_key) + ".json"), transcript);
}

ReviewVerdict review_artifact(const ReviewEnv& env, const ReviewContext& ctx,
                              const std::string& artifact_text,
                              const std::string& step_key) {
  if (util::trim(artifact_text).empty())
    throw ValidationError("cannot review an empty artifact (" + step_key + ")");

  auto schema = llm::JsonSchema::object(
      {{"decision", llm::JsonSchema::string_enum({"approve", "revise"})},
       {"feedback", llm::JsonSchema::string(/*allow_empty=*/true)}},
      {"decision"});
  auto extra = [](const json& v) -> std::vector<std::string> {
    if (v.value("decision", "") == "revise" &&
        util::trim(v.value("feedback", "")).empty())
      return {"$.feedback: a revise decision requires non-empty feedback"};
    return {};
  };

  std::string user = "Task under review: " + ctx.step_description + "\n";
  if (ctx.request) user += ctx.request->describe() + "\n";
  user +=
      "\nArtifact:\n" + artifact_text +
      "\n\nApprove it, or request a revision with concrete feedback. Reply with one "
      "JSON object: {\"decision\": \"approve\" | \"revise\", \"feedback\": string}.";

  try {
    json verdict = env.gateway.complete_structured(
        env.reviewer, step_key,
        {{"system", env.prompts.get(env.reviewer.prompt_id)}, {"user", user}}, schema, extra);
    ReviewVerdict out;
    out.approve = verdict.value("decision", "") == "approve";
    out.feedback = out.approve ? "" : verdict.value("feedback", "");
    return out;
  } catch (const MalformedOutputError& e) {
    // Fail safe: treat an unusable reviewer reply as a revision request.
    log::warn("reviewer output unusable at " + step_key + "; treating as revise");
    return {false,
            "The reviewer could not produce a usable verdict. Revise the artifact for "
            "clarity and correctness, and make sure it fully addresses the task."};
  }
}

std::string feedback_message(const std::string& feedback) {
  return "A reviewer rejected the previous version. Reviewer feedback:\n" + feedback +
         "\nRevise the work to address every point, then reply in the same format.";
}

}  // namespace drylab::review
