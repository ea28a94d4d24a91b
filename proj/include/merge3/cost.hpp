#pragma once

#include <cstddef>
#include <string>

#include "merge3/toy.hpp"

namespace merge3 {

/// Wall-clock hours to evaluate n_models at a throughput of R models per hour.
[[nodiscard]] double cost_model(double n_models, double throughput_per_hour);

/// full / reduced correctness evaluations.
[[nodiscard]] double evaluation_reduction_ratio(std::size_t full_evals, std::size_t reduced_evals);
[[nodiscard]] double evaluation_reduction_ratio(const CostCounter& full_run, const CostCounter& reduced_run);

/// Hours rendered as "1492.5h (62.2 days)" or "10.2h (10h 15m)".
[[nodiscard]] std::string format_hours(double hours);

/// Correctness evaluations of an evolution run: every candidate scored on the
/// fitness subset plus each endpoint scored once on the full dataset.
[[nodiscard]] std::size_t planned_evaluations(std::size_t population, std::size_t iterations,
                                              std::size_t subset_size, std::size_t n_endpoints,
                                              std::size_t full_size);

} // namespace merge3
