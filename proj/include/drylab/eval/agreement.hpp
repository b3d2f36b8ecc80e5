#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace drylab::eval {

/// Chance-corrected agreement for multiple raters over categorical labels.
/// `ratings` is subjects x raters (>= 2 each, every cell filled); values
/// are arbitrary category codes. Throws UndefinedStatisticError when
/// expected agreement is 1 (a single category everywhere).
double fleiss_kappa(const std::vector<std::vector<int>>& ratings);

/// Concordance for multiple raters over ordinal scores, with the standard
/// tie correction. `ratings` is subjects x raters (>= 2 each). Throws
/// UndefinedStatisticError when every rater ties every subject.
double kendalls_w(const std::vector<std::vector<double>>& ratings);

/// Matrix loaders for the CLI/library surface: a JSON array of equal-length
/// numeric rows, or CSV text with one subject per line.
std::vector<std::vector<double>> ratings_from_json(const nlohmann::json& j);
std::vector<std::vector<double>> ratings_from_csv(const std::string& text);

/// Narrow a numeric matrix to integer categories; throws ValidationError on
/// non-integral values.
std::vector<std::vector<int>> to_categorical(const std::vector<std::vector<double>>& m);

}  // namespace drylab::eval
