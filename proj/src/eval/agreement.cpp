#include "drylab/eval/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::eval {

namespace {

template <typename T>
void check_shape(const std::vector<std::vector<T>>& ratings, const char* what) {
  if (ratings.size() < 2)
    throw ValidationError(std::string(what) + " requires at least 2 subjects");
  size_t raters = ratings.front().size();
  if (raters < 2) throw ValidationError(std::string(what) + " requires at least 2 raters");
  for (const auto& row : ratings)
    if (row.size() != raters)
      throw ValidationError(std::string(what) + " requires a filled subjects x raters matrix");
}

}  // namespace

double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
  check_shape(ratings, "fleiss_kappa");
  const size_t n_subjects = ratings.size();
  const size_t n_raters = ratings.front().size();

  // Category counts per subject and overall proportions.
  std::map<int, double> overall;
  double mean_agreement = 0.0;
  for (const auto& row : ratings) {
    std::map<int, int> counts;
    for (int v : row) {
      ++counts[v];
      overall[v] += 1.0;
    }
    double sum_sq = 0.0;
    for (const auto& [_, c] : counts) sum_sq += static_cast<double>(c) * c;
    mean_agreement += (sum_sq - static_cast<double>(n_raters)) /
                      (static_cast<double>(n_raters) * (n_raters - 1));
  }
  mean_agreement /= static_cast<double>(n_subjects);

  double expected = 0.0;
  const double total = static_cast<double>(n_subjects) * n_raters;
  for (const auto& [_, c] : overall) {
    double p = c / total;
    expected += p * p;
  }

  if (std::abs(1.0 - expected) < 1e-12)
    throw UndefinedStatisticError(
        "fleiss_kappa undefined: expected agreement is 1 (a single category everywhere)");
  return (mean_agreement - expected) / (1.0 - expected);
}

namespace {

/// Ranks with mean ranks for ties; returns the tie correction term
/// sum(t^3 - t) for this rater as well.
std::vector<double> rank_with_ties(const std::vector<double>& scores, double& tie_term) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  std::vector<double> ranks(n, 0.0);
  tie_term = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double kendalls_w(const std::vector<std::vector<double>>& ratings) {
  check_shape(ratings, "kendalls_w");
  const size_t n = ratings.size();           // subjects
  const size_t m = ratings.front().size();   // raters

  std::vector<double> rank_sums(n, 0.0);
  double tie_correction = 0.0;
  for (size_t j = 0; j < m; ++j) {
    std::vector<double> column(n);
    for (size_t i = 0; i < n; ++i) column[i] = ratings[i][j];
    double tie_term = 0.0;
    auto ranks = rank_with_ties(column, tie_term);
    tie_correction += tie_term;
    for (size_t i = 0; i < n; ++i) rank_sums[i] += ranks[i];
  }

  const double mean_rank_sum = static_cast<double>(m) * (n + 1) / 2.0;
  double deviation_sq = 0.0;
  for (double r : rank_sums) deviation_sq += (r - mean_rank_sum) * (r - mean_rank_sum);

  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  double denominator = mm * mm * (nn * nn * nn - nn) - mm * tie_correction;
  if (denominator <= 1e-12)
    throw UndefinedStatisticError(
        "kendalls_w undefined: every rater ties every subject");
  return 12.0 * deviation_sq / denominator;
}

std::vector<std::vector<double>> ratings_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("ratings document must be an array of rows");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) {
    if (!row.is_array()) throw ValidationError("each ratings row must be an array");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number()) throw ValidationError("ratings must be numeric");
      r.push_back(v.get<double>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<double>> ratings_from_csv(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : util::split(line, ',')) {
      try {
        row.push_back(std::stod(util::trim(cell)));
      } catch (...) {
        throw ValidationError("ratings CSV cell '" + cell + "' is not numeric");
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<int>> to_categorical(const std::vector<std::vector<double>>& m) {
  std::vector<std::vector<int>> out;
  for (const auto& row : m) {
    std::vector<int> r;
    for (double v : row) {
      if (v != std::floor(v))
        throw ValidationError("categorical ratings must be integers");
      r.push_back(static_cast<int>(v));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace drylab::eval
