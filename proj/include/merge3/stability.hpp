#pragma once

// Empirical checks of subset-fitness stability. Objectives here are minimized
// over a finite grid Theta, so "for all theta" statements are checked
// literally. Also hosts the synthetic worlds in which merged abilities are
// exact linear combinations of endpoint abilities.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "merge3/estimators.hpp"
#include "merge3/irt.hpp"

namespace merge3 {

using Theta = std::vector<double>;
using GridObjective = std::function<double(const Theta&)>;
/// Builds F(.; D_s) for draw s from a seed derived for that draw.
using SubsetObjectiveFactory = std::function<GridObjective(std::size_t draw, std::uint64_t draw_seed)>;

/// Regular grid over [0,1]^dim with points_per_dim points per axis.
[[nodiscard]] std::vector<Theta> make_grid(std::size_t dim, std::size_t points_per_dim);

struct StabilityReport {
    /// max over the grid of the draw-averaged |F(theta; D) - F(theta; D_s)|.
    double epsilon_hat = 0.0;
    std::vector<Theta> grid;
    std::vector<double> per_theta_gaps;
    std::size_t subset_draws = 0;
    /// Averaged gap at the full-data minimizer.
    double gap_at_optimum = 0.0;
};

[[nodiscard]] StabilityReport empirical_epsilon(const GridObjective& full, std::span<const GridObjective> subsets,
                                                std::span<const Theta> grid);
[[nodiscard]] StabilityReport empirical_epsilon(const GridObjective& full, const SubsetObjectiveFactory& factory,
                                                std::span<const Theta> grid, std::size_t draws, std::uint64_t seed);

struct GapCheck {
    /// |min F(.; D) - min F(.; D_sub)|
    double gap = 0.0;
    /// max over the grid of |F(theta; D) - F(theta; D_sub)|
    double epsilon = 0.0;
    bool holds = false;
    std::size_t full_argmin = 0;
    std::size_t subset_argmin = 0;
};

[[nodiscard]] GapCheck check_optimality_gap(const GridObjective& full, const GridObjective& subset,
                                            std::span<const Theta> grid);

struct ExpectedGapCheck {
    double full_min = 0.0;         // m*
    double mean_subset_min = 0.0;  // average of the per-draw minima
    double min_of_mean_subset = 0.0;
    double gap = 0.0;              // |m* - mean_subset_min|
    double epsilon = 0.0;          // max over theta of the draw-averaged absolute gap
    bool holds = false;            // gap <= epsilon + slack
    /// mean of minima <= minimum of means (always true).
    bool jensen_holds = false;
};

[[nodiscard]] ExpectedGapCheck expected_gap_check(const GridObjective& full, std::span<const GridObjective> subsets,
                                                  std::span<const Theta> grid, double slack = 0.0);
[[nodiscard]] ExpectedGapCheck expected_gap_check(const GridObjective& full, const SubsetObjectiveFactory& factory,
                                                  std::span<const Theta> grid, std::size_t draws, std::uint64_t seed,
                                                  double slack = 0.0);

/// All k-subsets of {0..n-1} in lexicographic order.
[[nodiscard]] std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k);

// ---------------------------------------------------------------------------
// Linear-ability worlds

struct LinearAbilityWorld {
    ItemBank bank;
    std::vector<AbilityVector> endpoints;
    Vector lambda;

    [[nodiscard]] Vector merged_gamma() const;
};

/// Bank and endpoint abilities drawn from standard priors; lambda defaults to
/// a uniform draw on the simplex.
[[nodiscard]] LinearAbilityWorld make_linear_ability_world(std::size_t dim, std::size_t n_items,
                                                           std::size_t n_endpoints, std::uint64_t seed,
                                                           std::optional<Vector> lambda = std::nullopt);

struct BiasRow {
    std::size_t subset_size = 0;
    double mean_bias = 0.0;
    double mean_abs_error = 0.0;
    std::size_t trials = 0;
};

struct BiasOptions {
    /// Use the true lambda instead of the fitted one.
    bool oracle_lambda = false;
};

/// mp-IRT minus realized full-dataset accuracy of the merged respondent,
/// averaged over fresh response draws and random subsets per size.
[[nodiscard]] std::vector<BiasRow> bias_curve(const LinearAbilityWorld& world, std::span<const std::size_t> sizes,
                                              std::size_t trials, std::uint64_t seed, BiasOptions options = {});

struct EstimatorTrial {
    double truth = 0.0;
    double naive = 0.0;
    double mp_irt = 0.0;
    double gmp_irt = 0.0;
    double p_irt = 0.0;
    double gp_irt = 0.0;
    /// Cosine to the merged model's full-data ability of the lambda-combined
    /// ability and of the subset refit.
    double cos_mp = 0.0;
    double cos_p = 0.0;
};

/// One trial: endpoint and merged responses are sampled on the full bank,
/// endpoint abilities are fitted on their full responses, then every
/// estimator sees the same random subset of the merged model's responses.
[[nodiscard]] EstimatorTrial run_estimator_trial(const LinearAbilityWorld& world, std::size_t subset_size,
                                                 std::uint64_t seed, const IrtFitConfig& ability_fit);

[[nodiscard]] double cosine_similarity(const Vector& a, const Vector& b);

} // namespace merge3
