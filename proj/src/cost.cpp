#include "merge3/cost.hpp"

#include <cmath>
#include <cstdio>

#include "merge3/error.hpp"

namespace merge3 {

double cost_model(double n_models, double throughput_per_hour) {
    require(throughput_per_hour > 0.0, "cost_model: throughput must be positive");
    require(n_models >= 0.0, "cost_model: model count must be >= 0");
    if (std::isinf(throughput_per_hour)) {
        return 0.0;
    }
    return n_models / throughput_per_hour;
}

double evaluation_reduction_ratio(std::size_t full_evals, std::size_t reduced_evals) {
    require(reduced_evals > 0, "evaluation_reduction_ratio: reduced run has no evaluations");
    return static_cast<double>(full_evals) / static_cast<double>(reduced_evals);
}

double evaluation_reduction_ratio(const CostCounter& full_run, const CostCounter& reduced_run) {
    return evaluation_reduction_ratio(full_run.total(), reduced_run.total());
}

std::string format_hours(double hours) {
    char buf[96];
    if (hours >= 48.0) {
        std::snprintf(buf, sizeof buf, "%.1fh (%.1f days)", hours, hours / 24.0);
    } else {
        const auto total_minutes = static_cast<long>(std::lround(hours * 60.0));
        std::snprintf(buf, sizeof buf, "%.1fh (%ldh %02ldm)", hours, total_minutes / 60, total_minutes % 60);
    }
    return buf;
}

std::size_t planned_evaluations(std::size_t population, std::size_t iterations, std::size_t subset_size,
                                std::size_t n_endpoints, std::size_t full_size) {
    return population * iterations * subset_size + n_endpoints * full_size;
}

} // namespace merge3
