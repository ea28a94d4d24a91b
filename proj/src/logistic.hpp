#pragma once

// Ridge-penalized logistic regression used by every MAP fit in the library:
//
//   maximize  sum_i [y_i z_i - log(1 + e^{z_i})] - 1/2 sum_k u_k (w_k - mu_k)^2,   z = X w + offset
//
// The objective is strictly concave when every u_k > 0, so safeguarded Newton
// ascent converges to the unique maximizer.

#include <cstddef>
#include <cstdint>
#include <span>

#include "merge3/irt.hpp"

namespace merge3::detail {

struct LogisticProblem {
    const Matrix& features;          // n x k
    const Vector& offset;            // n
    std::span<const std::uint8_t> y; // n
    const Vector& prior_mean;        // k
    const Vector& precision;         // k, all > 0
};

struct LogisticResult {
    Vector weights;
    double objective = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

[[nodiscard]] double logistic_objective(const LogisticProblem& problem, const Vector& w);
[[nodiscard]] Vector logistic_gradient(const LogisticProblem& problem, const Vector& w);

/// Newton ascent with step halving. Every accepted step does not decrease the objective.
[[nodiscard]] LogisticResult maximize_logistic(const LogisticProblem& problem, Vector init,
                                               std::size_t max_iters, double tolerance);

/// log(1 + e^z) without overflow.
[[nodiscard]] double softplus(double z) noexcept;

} // namespace merge3::detail
