#include "airtran/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "airtran/error.hpp"

namespace airtran {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::Shape, "length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw Error(ErrorKind::Shape, "need at least 2 models, got " + std::to_string(a.size()));
}

int sign_indicator(double x) { return x > 0 ? 1 : -1; }

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

double kendall_tau_paper(std::span<const double> estimated, std::span<const double> truth) {
  check_lengths(estimated, truth);
  const std::size_t m = estimated.size();
  long long total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      total += sign_indicator(truth[i] - truth[j]) * sign_indicator(estimated[i] - estimated[j]);
    }
  }
  return 2.0 * static_cast<double>(total) / static_cast<double>(m * (m - 1));
}

double kendall_tau_b(std::span<const double> estimated, std::span<const double> truth) {
  check_lengths(estimated, truth);
  const std::size_t m = estimated.size();
  long long concordance = 0;
  long long untied_estimated = 0;
  long long untied_truth = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const int se = sign(estimated[i] - estimated[j]);
      const int st = sign(truth[i] - truth[j]);
      concordance += se * st;
      untied_estimated += se != 0;
      untied_truth += st != 0;
    }
  }
  if (untied_estimated == 0 || untied_truth == 0) return 0.0;
  return static_cast<double>(concordance) /
         std::sqrt(static_cast<double>(untied_estimated) * static_cast<double>(untied_truth));
}

std::size_t estimated_rank_of_best(std::span<const double> estimated, std::span<const double> truth) {
  check_lengths(estimated, truth);
  const auto best = static_cast<std::size_t>(std::max_element(truth.begin(), truth.end()) - truth.begin());
  std::size_t rank = 1;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    if (i != best && estimated[i] > estimated[best]) ++rank;
  }
  return rank;
}

EvalReport evaluate(std::span<const double> estimated, std::span<const double> truth) {
  EvalReport report;
  report.tau = kendall_tau_paper(estimated, truth);
  report.tau_b = kendall_tau_b(estimated, truth);
  report.best_model_estimated_rank = estimated_rank_of_best(estimated, truth);
  report.model_count = estimated.size();
  return report;
}

EvalReport evaluate(const TransferabilityReport& report, const ModelPoolTruth& truth) {
  std::map<std::string, double> estimated_by_id;
  for (const auto& entry : report.entries) estimated_by_id[entry.model_id] = entry.score;
  std::map<std::string, double> truth_by_id;
  for (const auto& entry : truth.entries) truth_by_id[entry.model_id] = entry.fine_tune_score;

  std::vector<std::string> only_report;
  std::vector<std::string> only_truth;
  for (const auto& [id, _] : estimated_by_id) {
    if (truth_by_id.count(id) == 0) only_report.push_back(id);
  }
  for (const auto& [id, _] : truth_by_id) {
    if (estimated_by_id.count(id) == 0) only_truth.push_back(id);
  }
  if (!only_report.empty() || !only_truth.empty()) {
    std::string message = "model ids differ;";
    for (const auto& id : only_report) message += " report-only:" + id;
    for (const auto& id : only_truth) message += " truth-only:" + id;
    throw Error(ErrorKind::Mismatch, message);
  }

  // Truth order decides which model is "first" on ties.
  std::vector<double> estimated;
  std::vector<double> actual;
  for (const auto& entry : truth.entries) {
    estimated.push_back(estimated_by_id.at(entry.model_id));
    actual.push_back(entry.fine_tune_score);
  }
  EvalReport result = evaluate(estimated, actual);
  const auto best = static_cast<std::size_t>(std::max_element(actual.begin(), actual.end()) - actual.begin());
  result.best_model_id = truth.entries[best].model_id;
  return result;
}

std::string format_eval_report(const EvalReport& report) {
  const nlohmann::json doc = {{"tau", report.tau},
                              {"tau_b", report.tau_b},
                              {"best_model_estimated_rank", report.best_model_estimated_rank},
                              {"best_model", report.best_model_id},
                              {"M", report.model_count}};
  return doc.dump(2) + "\n";
}

}  // namespace airtran
