#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "airtran/dataset.hpp"
#include "airtran/scoring.hpp"

namespace airtran {

/// Kendall's tau with the sign indicator I(x) = 1 if x > 0 else -1, applied
/// literally over pairs i < j (a tie therefore counts as -1).
double kendall_tau_paper(std::span<const double> estimated, std::span<const double> truth);

/// Tie-corrected tau-b; 0 when either input is constant.
double kendall_tau_b(std::span<const double> estimated, std::span<const double> truth);

/// Rank the estimate gives to the model that is best by ground truth (first
/// index on truth ties). Only strictly higher estimates push it down.
std::size_t estimated_rank_of_best(std::span<const double> estimated, std::span<const double> truth);

struct EvalReport {
  double tau = 0.0;
  double tau_b = 0.0;
  std::size_t best_model_estimated_rank = 0;
  std::size_t model_count = 0;
  std::string best_model_id;
};

EvalReport evaluate(std::span<const double> estimated, std::span<const double> truth);

/// Joins report and truth by model id. Throws Error{Mismatch} listing the
/// symmetric difference when the id sets differ.
EvalReport evaluate(const TransferabilityReport& report, const ModelPoolTruth& truth);

std::string format_eval_report(const EvalReport& report);

}  // namespace airtran
