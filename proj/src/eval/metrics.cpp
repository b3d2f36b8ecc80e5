#include "drylab/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::eval {

void ProtocolStats::validate() const {
  if (sections < 1) throw ValidationError("stats: section count must be >= 1");
  if (total_steps < 0 || added_steps < 0)
    throw ValidationError("stats: step counts must be non-negative");
  if (correct_steps < 0 || correct_steps > total_steps)
    throw ValidationError("stats: correct steps must lie in [0, total steps]");
  if (reasonable_steps < 0 || reasonable_steps > total_steps)
    throw ValidationError("stats: reasonable steps must lie in [0, total steps]");
  if (mean_step_length < 0) throw ValidationError("stats: mean step length must be >= 0");
}

int count_step_length(std::string_view step_text) {
  int qualifying = 0;
  size_t start = 0;
  for (size_t i = 0; i <= step_text.size(); ++i) {
    bool boundary = i == step_text.size() || step_text[i] == '.' || step_text[i] == '!' ||
                    step_text[i] == '?';
    if (!boundary) continue;
    if (util::word_count(step_text.substr(start, i - start)) > 6) ++qualifying;
    start = i + 1;
  }
  return qualifying;
}

double brevity_penalty(double mean_step_length) {
  if (mean_step_length < 0)
    throw ValidationError("brevity penalty is undefined for negative step lengths");
  if (mean_step_length > kReferenceStepLength) return 1.0;
  if (mean_step_length == 0.0) return 0.5;
  return std::max(std::exp(1.0 - kReferenceStepLength / mean_step_length), 0.5);
}

double completeness(const ProtocolStats& stats) {
  stats.validate();
  long denom = static_cast<long>(stats.total_steps) + stats.added_steps;
  if (denom == 0)
    throw UndefinedMetricError("completeness undefined: no existing or added steps");
  return static_cast<double>(stats.total_steps) / static_cast<double>(denom);
}

double correctness(const ProtocolStats& stats) {
  stats.validate();
  if (stats.total_steps == 0)
    throw UndefinedMetricError("correctness undefined: protocol has no steps");
  return brevity_penalty(stats.mean_step_length) *
         (static_cast<double>(stats.correct_steps) / stats.total_steps);
}

double logical_soundness(const ProtocolStats& stats) {
  stats.validate();
  if (stats.total_steps == 0)
    throw UndefinedMetricError("logical soundness undefined: protocol has no steps");
  return static_cast<double>(stats.reasonable_steps) / stats.total_steps;
}

double execution_success_rate(const std::vector<prog::TaskOutcome>& outcomes) {
  if (outcomes.empty())
    throw ValidationError("execution success rate requires at least one task outcome");
  int successes = 0;
  for (const auto& o : outcomes)
    if (o.success()) ++successes;
  return 100.0 * successes / static_cast<double>(outcomes.size());
}

}  // namespace drylab::eval
