#pragma once

// Accuracy estimators for a merged model observed only on a reduced item set.
//
// mp-IRT models the merged ability as a linear combination of the endpoint
// abilities (fitted on the full dataset) and only fits the combination
// coefficients on the subset. p-IRT refits a full ability vector from the
// subset. The "g" variants blend either estimate with the raw subset mean.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "merge3/irt.hpp"

namespace merge3 {

/// Reduced evaluation set: item positions into the full dataset plus weights.
struct SubsetSelection {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
    std::string method = "random";

    [[nodiscard]] std::size_t size() const noexcept { return indices.size(); }
    /// Distinct in-range indices, one non-negative weight each, weights summing to 1.
    void validate(std::size_t n_items_total) const;
    /// Indices of the full dataset not in the subset, ascending.
    [[nodiscard]] std::vector<std::size_t> complement(std::size_t n_items_total) const;

    static SubsetSelection uniform(std::vector<std::size_t> indices, std::string method = "random");
};

struct LambdaFit {
    Vector lambda;
    bool converged = false;
    double neg_log_lik = 0.0;
};

enum class EstimatorKind { naive, p_irt, gp_irt, mp_irt, gmp_irt, exact };

[[nodiscard]] std::string_view to_string(EstimatorKind kind) noexcept;
[[nodiscard]] EstimatorKind estimator_kind_from_string(std::string_view name);

struct FitnessEstimate {
    double value = 0.0;
    EstimatorKind kind = EstimatorKind::exact;
    /// Correctness evaluations consumed to produce this estimate.
    std::size_t n_correctness_evals = 0;
    std::optional<Vector> lambda;
    std::optional<Vector> gamma;
    std::optional<double> blend_c;
};

/// Ridge strength r in the lambda objective (penalty r * |lambda|^2).
constexpr double kLambdaRidge = 1e-3;

[[nodiscard]] Vector merged_ability(const Vector& lambda, std::span<const AbilityVector> endpoints);

/// Maximum-likelihood interpolation coefficients on the observed subset, with
/// a weak ridge so that separable subsets still give a finite answer.
[[nodiscard]] LambdaFit fit_lambda(std::span<const std::uint8_t> subset_correctness,
                                   std::span<const AbilityVector> endpoints, const ItemBank& bank,
                                   const SubsetSelection& subset, const Vector& init);

[[nodiscard]] double predict_merged_prob(const Vector& lambda, std::span<const AbilityVector> endpoints,
                                         const ItemParams& item);

/// tau * mean(Y on subset) + (1 - tau) * mean(p on remainder) with tau = |subset| / |D|.
/// When the subset is the whole dataset the remainder term is dropped.
[[nodiscard]] double performance_irt(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                                     const SubsetSelection& subset, const Vector& gamma);

[[nodiscard]] FitnessEstimate estimate_mp_irt(std::span<const std::uint8_t> subset_correctness,
                                              const LambdaFit& lambda_fit,
                                              std::span<const AbilityVector> endpoints, const ItemBank& bank,
                                              const SubsetSelection& subset);

/// c * sum(w_i Y_i) + (1 - c) * base. Works on top of mp-IRT or p-IRT.
[[nodiscard]] FitnessEstimate estimate_gmp_irt(std::span<const std::uint8_t> subset_correctness,
                                               const FitnessEstimate& mp_estimate,
                                               const SubsetSelection& subset, double c);

[[nodiscard]] FitnessEstimate estimate_p_irt(std::span<const std::uint8_t> subset_correctness,
                                             const ItemBank& bank, const SubsetSelection& subset,
                                             const IrtFitConfig& config);

[[nodiscard]] FitnessEstimate estimate_gp_irt(std::span<const std::uint8_t> subset_correctness,
                                              const ItemBank& bank, const SubsetSelection& subset,
                                              const IrtFitConfig& config, double c);

[[nodiscard]] FitnessEstimate estimate_naive(std::span<const std::uint8_t> subset_correctness,
                                             const SubsetSelection& subset);

/// Variance-ratio blend: c = s_irt^2 / (s_irt^2 + s_sample^2), s_sample^2 = p(1-p)/|subset|.
[[nodiscard]] double choose_blend_c(std::size_t subset_size, std::size_t full_size, double sigma_irt,
                                    double subset_mean);

/// Calibration error of the IRT predictions on the observed items:
/// |mean(p_i) - mean(Y_i)| over the subset. Feeds choose_blend_c.
[[nodiscard]] double irt_misfit(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                                const SubsetSelection& subset, const Vector& gamma);

} // namespace merge3
