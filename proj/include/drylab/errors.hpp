#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drylab {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A precondition or input-validation failure (empty objective, empty
/// message list, malformed accession, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Configuration document rejected; carries every violation, not just the
/// first, each prefixed with its field path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error("invalid configuration: " + join(violations)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

/// Fatal failure of a pipeline stage. The stage name is preserved so the
/// CLI can report it and exit nonzero.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// LLM gateway errors
// ---------------------------------------------------------------------------

/// Transient backend failure (timeout, 429, 5xx). Retried by the gateway;
/// never escapes it.
class TransientBackendError : public Error {
 public:
  TransientBackendError(const std::string& message, int status = 0)
      : Error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Retries exhausted against the chat backend.
class BackendUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Authentication failure; never retried.
class CredentialError : public Error {
 public:
  using Error::Error;
};

/// Structured output could not be parsed after all repair attempts.
/// Carries the last raw completion text.
class MalformedOutputError : public Error {
 public:
  MalformedOutputError(const std::string& step_key, std::string raw_text,
                       const std::string& detail)
      : Error("malformed output at '" + step_key + "': " + detail),
        raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

/// A scripted-backend key ran out of responses (or was never scripted).
class ScriptUnderflowError : public Error {
 public:
  explicit ScriptUnderflowError(const std::string& key)
      : Error("mock script has no response left for key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// ---------------------------------------------------------------------------
// Retrieval and document errors
// ---------------------------------------------------------------------------

/// HTTP retrieval failed after retries; names the database.
class RetrievalError : public Error {
 public:
  RetrievalError(std::string database, const std::string& message)
      : Error("retrieval from '" + database + "' failed: " + message),
        database_(std::move(database)) {}
  const std::string& database() const { return database_; }

 private:
  std::string database_;
};

/// Full-text (or other document) content could not be parsed.
class DocumentError : public Error {
 public:
  using Error::Error;
};

/// Requested full text is not available for this record.
class AvailabilityError : public Error {
 public:
  using Error::Error;
};

/// Identifier lookup returned nothing.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A reference tag does not resolve in the reference corpus.
class CorpusLookupError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Stage-specific operation errors
// ---------------------------------------------------------------------------

class QueryGenerationError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class ReportGenerationError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class CodeGenerationError : public Error {
 public:
  using Error::Error;
};

/// Sandbox runtime unreachable or broken; distinct from a task failure.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Evaluation errors
// ---------------------------------------------------------------------------

/// Metric denominator is zero (for example no steps at all).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Agreement statistic undefined for the given matrix.
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

/// One or more judging dimensions failed; carries which ones.
class EvaluationError : public Error {
 public:
  explicit EvaluationError(std::vector<std::string> failed_dimensions,
                           const std::string& detail)
      : Error("evaluation failed for [" + join(failed_dimensions) + "]: " + detail),
        failed_dimensions_(std::move(failed_dimensions)) {}

  const std::vector<std::string>& failed_dimensions() const {
    return failed_dimensions_;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += ", ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> failed_dimensions_;
};

// ---------------------------------------------------------------------------
// Run directory errors
// ---------------------------------------------------------------------------

/// Manifest is corrupt or structurally invalid; the run cannot be resumed.
class UnrecoverableRunError : public Error {
 public:
  using Error::Error;
};

}  // namespace drylab
