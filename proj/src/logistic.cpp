#include "logistic.hpp"

#include <cmath>

#include "merge3/error.hpp"

namespace merge3::detail {

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

namespace {

void check_shapes(const LogisticProblem& p, const Vector& w) {
    const auto n = static_cast<Eigen::Index>(p.y.size());
    require(p.features.rows() == n && p.offset.size() == n, "logistic: row count mismatch");
    require(p.features.cols() == w.size() && p.prior_mean.size() == w.size() &&
                p.precision.size() == w.size(),
            "logistic: parameter dimension mismatch");
}

} // namespace

double logistic_objective(const LogisticProblem& p, const Vector& w) {
    const Vector z = p.features * w + p.offset;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        ll += (p.y[static_cast<std::size_t>(i)] ? z[i] : 0.0) - softplus(z[i]);
    }
    const Vector diff = w - p.prior_mean;
    return ll - 0.5 * diff.dot(p.precision.cwiseProduct(diff));
}

Vector logistic_gradient(const LogisticProblem& p, const Vector& w) {
    const Vector z = p.features * w + p.offset;
    Vector residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        residual[i] = static_cast<double>(p.y[static_cast<std::size_t>(i)]) - logistic(z[i]);
    }
    return p.features.transpose() * residual - p.precision.cwiseProduct(w - p.prior_mean);
}

LogisticResult maximize_logistic(const LogisticProblem& p, Vector init, std::size_t max_iters,
                                 double tolerance) {
    check_shapes(p, init);
    LogisticResult result;
    result.weights = std::move(init);
    result.objective = logistic_objective(p, result.weights);

    const auto n = p.features.rows();
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        const Vector z = p.features * result.weights + p.offset;
        Vector residual(n);
        Vector curvature(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double prob = logistic(z[i]);
            residual[i] = static_cast<double>(p.y[static_cast<std::size_t>(i)]) - prob;
            curvature[i] = prob * (1.0 - prob);
        }
        const Vector grad = p.features.transpose() * residual -
                            p.precision.cwiseProduct(result.weights - p.prior_mean);
        result.gradient_norm = grad.norm();
        if (result.gradient_norm <= tolerance) {
            result.converged = true;
            return result;
        }
        Matrix hessian = p.features.transpose() * curvature.asDiagonal() * p.features;
        hessian.diagonal() += p.precision;
        const Vector step = hessian.ldlt().solve(grad);

        double scale = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings, scale *= 0.5) {
            const Vector trial = result.weights + scale * step;
            const double value = logistic_objective(p, trial);
            if (std::isfinite(value) && value >= result.objective) {
                result.weights = trial;
                result.objective = value;
                accepted = true;
                break;
            }
        }
        result.iterations = iter + 1;
        if (!accepted) {
            // No ascent possible at machine precision: treat as stationary.
            result.converged = result.gradient_norm <= std::sqrt(tolerance);
            return result;
        }
    }
    result.gradient_norm = logistic_gradient(p, result.weights).norm();
    result.converged = result.gradient_norm <= tolerance;
    return result;
}

} // namespace merge3::detail
