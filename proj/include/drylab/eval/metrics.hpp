#pragma once

#include <string_view>
#include <vector>

#include "drylab/prog/task.hpp"

namespace drylab::eval {

/// Reference mean of qualifying sentences per step used by the brevity
/// penalty, estimated over a large protocol corpus.
inline constexpr double kReferenceStepLength = 4.42;

/// Counts feeding the protocol quality formulas.
struct ProtocolStats {
  int sections = 0;          // m
  int total_steps = 0;       // n_ts
  int added_steps = 0;       // n_as: steps the judge says are missing
  int correct_steps = 0;     // n_cs
  int reasonable_steps = 0;  // n_rs
  double mean_step_length = 0.0;  // l_steps: mean qualifying sentences per step

  void validate() const;  // range checks; throws ValidationError
};

/// Number of sentences in the step text with strictly more than six
/// whitespace-delimited words (short fragments such as step titles do not
/// count). Sentence boundaries are '.', '!', '?' or end of text.
int count_step_length(std::string_view step_text);

/// Brevity penalty: 1 when l_steps exceeds the reference length, otherwise
/// e^(1 - L/l_steps) clamped to a floor of 0.5. l_steps = 0 maps to the
/// floor.
double brevity_penalty(double mean_step_length);

/// n_ts / (n_ts + n_as). Throws UndefinedMetricError when both are zero.
double completeness(const ProtocolStats& stats);

/// brevity_penalty(l_steps) * n_cs / n_ts. Throws UndefinedMetricError when
/// there are no steps.
double correctness(const ProtocolStats& stats);

/// n_rs / n_ts. Throws UndefinedMetricError when there are no steps.
double logical_soundness(const ProtocolStats& stats);

/// The five quality dimensions, each in [0,1]; the overall score is their
/// sum (in [0,5]).
struct MetricScores {
  double completeness = 0.0;
  double detail = 0.0;
  double correctness = 0.0;
  double logical_soundness = 0.0;
  double structural_soundness = 0.0;

  double overall() const {
    return completeness + detail + correctness + logical_soundness + structural_soundness;
  }
};

/// Percentage of successfully completed tasks. Throws ValidationError on an
/// empty list.
double execution_success_rate(const std::vector<prog::TaskOutcome>& outcomes);

}  // namespace drylab::eval
