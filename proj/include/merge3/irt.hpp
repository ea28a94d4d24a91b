#pragma once

// Multidimensional two-parameter logistic item response model.
//
//   P(Y_im = 1 | gamma_m, alpha_i, beta_i) = 1 / (1 + exp(-alpha_i' gamma_m + beta_i))
//
// Items carry a discrimination direction alpha and a difficulty beta;
// respondents (models) carry a latent ability vector gamma.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace merge3 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Binary correctness of one respondent over a sequence of items.
using Correctness = std::vector<std::uint8_t>;

constexpr double kProbabilityClamp = 1e-12;

struct ItemParams {
    Vector alpha;
    double beta = 0.0;
    std::string item_id;
};

/// Ordered item parameters sharing one ability dimensionality.
class ItemBank {
public:
    ItemBank() = default;
    explicit ItemBank(std::size_t dim);
    ItemBank(std::size_t dim, std::vector<ItemParams> items);

    void add(ItemParams item);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] const ItemParams& operator[](std::size_t i) const { return items_[i]; }
    [[nodiscard]] const std::vector<ItemParams>& items() const noexcept { return items_; }

    /// Items at the given positions, in the given order.
    [[nodiscard]] ItemBank subset(std::span<const std::size_t> indices) const;

private:
    std::size_t dim_ = 0;
    std::vector<ItemParams> items_;
};

struct AbilityVector {
    Vector gamma;
    std::string model_id;
};

/// Dense binary matrix indexed (item, respondent).
class ResponseMatrix {
public:
    ResponseMatrix() = default;
    ResponseMatrix(std::vector<std::string> item_ids, std::vector<std::string> respondent_ids);

    [[nodiscard]] std::size_t n_items() const noexcept { return item_ids_.size(); }
    [[nodiscard]] std::size_t n_respondents() const noexcept { return respondent_ids_.size(); }
    [[nodiscard]] const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
    [[nodiscard]] const std::vector<std::string>& respondent_ids() const noexcept {
        return respondent_ids_;
    }

    [[nodiscard]] std::uint8_t at(std::size_t item, std::size_t respondent) const {
        return values_[item * n_respondents() + respondent];
    }
    void set(std::size_t item, std::size_t respondent, std::uint8_t value);

    /// All responses of one respondent, in item order.
    [[nodiscard]] Correctness respondent(std::size_t m) const;
    void set_respondent(std::size_t m, std::span<const std::uint8_t> responses);

private:
    std::vector<std::string> item_ids_;
    std::vector<std::string> respondent_ids_;
    std::vector<std::uint8_t> values_;
};

/// Fixed Gaussian priors: gamma ~ N(mu_gamma 1, I/u_gamma), alpha ~ N(mu_alpha 1, I/u_alpha),
/// beta ~ N(mu_beta, 1/u_beta).
struct PriorSpec {
    double mu_gamma = 0.0;
    double mu_alpha = 0.0;
    double mu_beta = 0.0;
    double u_gamma = 1.0;
    double u_alpha = 1.0;
    double u_beta = 1.0;

    void validate() const;
};

struct IrtFitConfig {
    std::size_t dim = 15;
    PriorSpec priors{};
    std::size_t max_iters = 2000;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct IrtFit {
    ItemBank bank;
    std::vector<AbilityVector> abilities;
    bool converged = false;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    /// Penalized log-likelihood after each sweep; non-decreasing.
    std::vector<double> objective_trace;
};

[[nodiscard]] double logistic(double x) noexcept;

[[nodiscard]] double irt_probability(const Vector& gamma, const ItemParams& item);
[[nodiscard]] double irt_probability(const AbilityVector& ability, const ItemParams& item);

/// Bernoulli log-likelihood summed over all cells, with p clamped to
/// [kProbabilityClamp, 1 - kProbabilityClamp].
[[nodiscard]] double log_likelihood(const ResponseMatrix& responses, const ItemBank& bank,
                                    std::span<const AbilityVector> abilities);

/// Log prior density (up to a constant) of a full parameter set.
[[nodiscard]] double log_prior(const ItemBank& bank, std::span<const AbilityVector> abilities,
                               const PriorSpec& priors);

/// MAP fit of item parameters and respondent abilities by alternating
/// block-Newton ascent with step halving.
[[nodiscard]] IrtFit fit_item_bank(const ResponseMatrix& pool, const IrtFitConfig& config);

/// MAP ability for one respondent with the item bank frozen.
[[nodiscard]] AbilityVector fit_ability(std::span<const std::uint8_t> responses,
                                        const ItemBank& bank, const IrtFitConfig& config,
                                        std::string model_id = {});

/// How the synthetic respondents are formed.
struct AbilitySpec {
    /// Explicit abilities for the first respondents; the rest are drawn from the prior.
    std::vector<Vector> fixed;
    /// Respondents whose ability is a linear combination of earlier respondents.
    /// They occupy the last positions of the respondent list.
    struct Mixture {
        std::vector<std::size_t> sources;
        std::vector<double> lambda;
    };
    std::vector<Mixture> mixtures;
    /// Overrides for every item's parameters (otherwise drawn from the prior).
    std::optional<Vector> fixed_alpha;
    std::optional<double> fixed_beta;
};

struct WorldSpec {
    std::size_t dim = 2;
    std::size_t n_items = 100;
    std::size_t n_respondents = 10;
    std::uint64_t seed = 0;
    PriorSpec priors{};
    AbilitySpec abilities{};
};

struct SyntheticWorld {
    ItemBank bank;
    std::vector<AbilityVector> abilities;
    ResponseMatrix responses;
};

[[nodiscard]] SyntheticWorld generate_synthetic_world(const WorldSpec& spec);

/// Bernoulli draws of one respondent over every item of the bank.
template <class Generator>
Correctness sample_responses(const ItemBank& bank, const Vector& gamma, Generator& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Correctness out(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        out[i] = unit(rng) < irt_probability(gamma, bank[i]) ? 1 : 0;
    }
    return out;
}

/// Probabilities of every item for one ability vector.
[[nodiscard]] Vector item_probabilities(const ItemBank& bank, const Vector& gamma);

} // namespace merge3
