#include "merge3/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "logistic.hpp"
#include "merge3/error.hpp"

namespace merge3 {

void SubsetSelection::validate(std::size_t n_items_total) const {
    require(!indices.empty(), "SubsetSelection: empty subset");
    require(indices.size() == weights.size(), "SubsetSelection: one weight per index required");
    std::unordered_set<std::size_t> seen;
    double sum = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        require(indices[k] < n_items_total, "SubsetSelection: index out of range");
        require(seen.insert(indices[k]).second, "SubsetSelection: duplicate index");
        require(weights[k] >= 0.0 && std::isfinite(weights[k]), "SubsetSelection: invalid weight");
        sum += weights[k];
    }
    require(std::abs(sum - 1.0) <= 1e-9, "SubsetSelection: weights must sum to 1");
}

std::vector<std::size_t> SubsetSelection::complement(std::size_t n_items_total) const {
    std::vector<bool> in_subset(n_items_total, false);
    for (auto i : indices) {
        in_subset.at(i) = true;
    }
    std::vector<std::size_t> rest;
    rest.reserve(n_items_total - indices.size());
    for (std::size_t i = 0; i < n_items_total; ++i) {
        if (!in_subset[i]) {
            rest.push_back(i);
        }
    }
    return rest;
}

SubsetSelection SubsetSelection::uniform(std::vector<std::size_t> indices, std::string method) {
    require(!indices.empty(), "SubsetSelection::uniform: empty subset");
    const double w = 1.0 / static_cast<double>(indices.size());
    std::vector<double> weights(indices.size(), w);
    return {std::move(indices), std::move(weights), std::move(method)};
}

std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
    case EstimatorKind::naive: return "naive";
    case EstimatorKind::p_irt: return "p-irt";
    case EstimatorKind::gp_irt: return "gp-irt";
    case EstimatorKind::mp_irt: return "mp-irt";
    case EstimatorKind::gmp_irt: return "gmp-irt";
    case EstimatorKind::exact: return "exact";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
    for (auto k : {EstimatorKind::naive, EstimatorKind::p_irt, EstimatorKind::gp_irt, EstimatorKind::mp_irt,
                   EstimatorKind::gmp_irt, EstimatorKind::exact}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ContractError("unknown estimator kind '" + std::string(name) + "'");
}

namespace {

void check_subset_correctness(std::span<const std::uint8_t> y, const SubsetSelection& subset,
                              std::size_t n_items_total) {
    subset.validate(n_items_total);
    require(y.size() == subset.size(), "estimator: one correctness value per subset item required");
    for (auto v : y) {
        require(v <= 1, "estimator: correctness must be 0 or 1");
    }
}

double uniform_mean(std::span<const std::uint8_t> y) {
    return static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) /
           static_cast<double>(y.size());
}

double weighted_mean(std::span<const std::uint8_t> y, const SubsetSelection& subset) {
    double total = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        total += subset.weights[k] * y[k];
    }
    return std::clamp(total, 0.0, 1.0);
}

} // namespace

Vector merged_ability(const Vector& lambda, std::span<const AbilityVector> endpoints) {
    require(endpoints.size() >= 1, "merged_ability: need endpoints");
    require(static_cast<std::size_t>(lambda.size()) == endpoints.size(),
            "merged_ability: one coefficient per endpoint required");
    Vector gamma = Vector::Zero(endpoints.front().gamma.size());
    for (std::size_t j = 0; j < endpoints.size(); ++j) {
        require(endpoints[j].gamma.size() == gamma.size(), "merged_ability: endpoint dimension mismatch");
        gamma += lambda[static_cast<Eigen::Index>(j)] * endpoints[j].gamma;
    }
    return gamma;
}

LambdaFit fit_lambda(std::span<const std::uint8_t> subset_correctness, std::span<const AbilityVector> endpoints,
                     const ItemBank& bank, const SubsetSelection& subset, const Vector& init) {
    require(endpoints.size() >= 2, "fit_lambda: need at least two endpoints");
    check_subset_correctness(subset_correctness, subset, bank.size());
    const auto n_end = static_cast<Eigen::Index>(endpoints.size());
    require(init.size() == n_end, "fit_lambda: init must have one entry per endpoint");

    // logit_i = alpha_i' (Gamma lambda) - beta_i = (Gamma' alpha_i)' lambda - beta_i
    Matrix gamma_cols(static_cast<Eigen::Index>(bank.dim()), n_end);
    for (Eigen::Index j = 0; j < n_end; ++j) {
        const auto& g = endpoints[static_cast<std::size_t>(j)].gamma;
        require(static_cast<std::size_t>(g.size()) == bank.dim(), "fit_lambda: endpoint dimension mismatch");
        gamma_cols.col(j) = g;
    }
    const auto n = static_cast<Eigen::Index>(subset.size());
    Matrix features(n, n_end);
    Vector offset(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& item = bank[subset.indices[static_cast<std::size_t>(k)]];
        features.row(k) = (gamma_cols.transpose() * item.alpha).transpose();
        offset[k] = -item.beta;
    }
    const Vector mean = Vector::Zero(n_end);
    const Vector precision = Vector::Constant(n_end, 2.0 * kLambdaRidge);
    const detail::LogisticProblem problem{features, offset, subset_correctness, mean, precision};
    auto result = detail::maximize_logistic(problem, init, 200, 1e-9);
    const double penalty = kLambdaRidge * result.weights.squaredNorm();
    return {std::move(result.weights), result.converged, -(result.objective + penalty)};
}

double predict_merged_prob(const Vector& lambda, std::span<const AbilityVector> endpoints,
                           const ItemParams& item) {
    return irt_probability(merged_ability(lambda, endpoints), item);
}

double performance_irt(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                       const SubsetSelection& subset, const Vector& gamma) {
    check_subset_correctness(subset_correctness, subset, bank.size());
    const double full = static_cast<double>(bank.size());
    const double observed = static_cast<double>(subset.size());
    const double tau = observed / full;
    const auto rest = subset.complement(bank.size());
    double value = tau * uniform_mean(subset_correctness);
    if (!rest.empty()) {
        double predicted = 0.0;
        for (auto i : rest) {
            predicted += irt_probability(gamma, bank[i]);
        }
        value += (1.0 - tau) * predicted / static_cast<double>(rest.size());
    }
    return std::clamp(value, 0.0, 1.0);
}

FitnessEstimate estimate_mp_irt(std::span<const std::uint8_t> subset_correctness, const LambdaFit& lambda_fit,
                                std::span<const AbilityVector> endpoints, const ItemBank& bank,
                                const SubsetSelection& subset) {
    const Vector gamma = merged_ability(lambda_fit.lambda, endpoints);
    FitnessEstimate est;
    est.value = performance_irt(subset_correctness, bank, subset, gamma);
    est.kind = EstimatorKind::mp_irt;
    est.n_correctness_evals = subset.size();
    est.lambda = lambda_fit.lambda;
    est.gamma = gamma;
    return est;
}

FitnessEstimate estimate_gmp_irt(std::span<const std::uint8_t> subset_correctness,
                                 const FitnessEstimate& mp_estimate, const SubsetSelection& subset, double c) {
    require(c >= 0.0 && c <= 1.0, "estimate_gmp_irt: c must lie in [0, 1]");
    require(subset_correctness.size() == subset.size(), "estimate_gmp_irt: length mismatch");
    FitnessEstimate est = mp_estimate;
    est.value = std::clamp(c * weighted_mean(subset_correctness, subset) + (1.0 - c) * mp_estimate.value, 0.0, 1.0);
    est.kind = mp_estimate.kind == EstimatorKind::p_irt ? EstimatorKind::gp_irt : EstimatorKind::gmp_irt;
    est.blend_c = c;
    return est;
}

FitnessEstimate estimate_p_irt(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                               const SubsetSelection& subset, const IrtFitConfig& config) {
    check_subset_correctness(subset_correctness, subset, bank.size());
    const auto observed_bank = bank.subset(subset.indices);
    auto ability = fit_ability(subset_correctness, observed_bank, config);
    FitnessEstimate est;
    est.value = performance_irt(subset_correctness, bank, subset, ability.gamma);
    est.kind = EstimatorKind::p_irt;
    est.n_correctness_evals = subset.size();
    est.gamma = std::move(ability.gamma);
    return est;
}

FitnessEstimate estimate_gp_irt(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                                const SubsetSelection& subset, const IrtFitConfig& config, double c) {
    return estimate_gmp_irt(subset_correctness, estimate_p_irt(subset_correctness, bank, subset, config), subset, c);
}

FitnessEstimate estimate_naive(std::span<const std::uint8_t> subset_correctness, const SubsetSelection& subset) {
    require(!subset.indices.empty(), "estimate_naive: empty subset");
    require(subset_correctness.size() == subset.size(), "estimate_naive: length mismatch");
    FitnessEstimate est;
    est.value = weighted_mean(subset_correctness, subset);
    est.kind = EstimatorKind::naive;
    est.n_correctness_evals = subset.size();
    return est;
}

double choose_blend_c(std::size_t subset_size, std::size_t full_size, double sigma_irt, double subset_mean) {
    require(subset_size >= 1 && full_size >= 1, "choose_blend_c: sizes must be positive");
    require(subset_size <= full_size, "choose_blend_c: subset larger than dataset");
    require(sigma_irt >= 0.0 && std::isfinite(sigma_irt), "choose_blend_c: sigma must be finite and >= 0");
    require(subset_mean >= 0.0 && subset_mean <= 1.0, "choose_blend_c: subset mean must lie in [0, 1]");
    const double var_irt = sigma_irt * sigma_irt;
    if (var_irt == 0.0) {
        return 0.0;
    }
    const double var_sample = subset_mean * (1.0 - subset_mean) / static_cast<double>(subset_size);
    return var_irt / (var_irt + var_sample);
}

double irt_misfit(std::span<const std::uint8_t> subset_correctness, const ItemBank& bank,
                  const SubsetSelection& subset, const Vector& gamma) {
    check_subset_correctness(subset_correctness, subset, bank.size());
    double predicted = 0.0;
    for (auto i : subset.indices) {
        predicted += irt_probability(gamma, bank[i]);
    }
    return std::abs(predicted / static_cast<double>(subset.size()) - uniform_mean(subset_correctness));
}

} // namespace merge3
