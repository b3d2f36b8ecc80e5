#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "drylab/llm/gateway.hpp"
#include "drylab/prompts.hpp"
#include "drylab/request.hpp"

namespace drylab::review {

struct ReviewVerdict {
  bool approve = false;
  std::string feedback;  // non-empty iff revise
};

/// What the reviewer is told about the artifact under review.
struct ReviewContext {
  const ResearchRequest* request = nullptr;
  std::string step_description;
};

/// Persists loop transcripts under the owning stage's directory.
class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void save(const std::string& loop_key, const nlohmann::json& transcript) const;

 private:
  std::filesystem::path dir_;
};

template <typename T>
struct Reviewed {
  T value;
  int rounds = 0;      // reviewer calls used
  bool approved = false;
};

/// Everything a loop needs besides the producer itself.
struct ReviewEnv {
  llm::Gateway& gateway;
  AgentProfile reviewer;
  const PromptLibrary& prompts;
  const TranscriptStore* transcripts = nullptr;  // optional
  int max_rounds = 6;
};

/// One reviewer call over rendered artifact text. Malformed reviewer output
/// (after repairs) degrades to a revise verdict with generic feedback.
ReviewVerdict review_artifact(const ReviewEnv& env, const ReviewContext& ctx,
                              const std::string& artifact_text,
                              const std::string& step_key);

/// Bounded produce-review-revise loop. `produce` receives the previous
/// verdict's feedback (empty on round 1) and returns the artifact;
/// `render` turns it into the text shown to the reviewer. Terminates on
/// approval or after max_rounds reviewer calls, returning the last revision
/// with approved=false in the latter case.
template <typename Produce, typename Render>
auto review_loop(const ReviewEnv& env, const ReviewContext& ctx, const std::string& key_base,
                 Produce&& produce, Render&& render)
    -> Reviewed<std::decay_t<decltype(produce(std::optional<std::string>{}))>> {
  using Artifact = std::decay_t<decltype(produce(std::optional<std::string>{}))>;
  Reviewed<Artifact> out;
  std::optional<std::string> feedback;
  nlohmann::json transcript = nlohmann::json::array();

  for (int round = 1; round <= env.max_rounds; ++round) {
    Artifact artifact = produce(feedback);
    std::string rendered = render(artifact);
    ReviewVerdict verdict = review_artifact(env, ctx, rendered, key_base + ".review");
    transcript.push_back({{"round", round},
                          {"artifact", rendered},
                          {"approved", verdict.approve},
                          {"feedback", verdict.feedback}});
    out.value = std::move(artifact);
    out.rounds = round;
    if (verdict.approve) {
      out.approved = true;
      break;
    }
    feedback = verdict.feedback;
  }
  if (env.transcripts) env.transcripts->save(key_base, transcript);
  return out;
}

/// Standard wording used to thread reviewer feedback into a producer's
/// next prompt; carries the feedback verbatim.
std::string feedback_message(const std::string& feedback);

}  // namespace drylab::review
