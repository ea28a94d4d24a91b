#include "merge3/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "merge3/error.hpp"
#include "merge3/extract.hpp"
#include "merge3/random.hpp"

namespace merge3 {

std::vector<Theta> make_grid(std::size_t dim, std::size_t points_per_dim) {
    require(dim >= 1 && dim <= 2, "make_grid: dimension must be 1 or 2");
    require(points_per_dim >= 2, "make_grid: need at least two points per axis");
    const double step = 1.0 / static_cast<double>(points_per_dim - 1);
    std::vector<Theta> grid;
    if (dim == 1) {
        for (std::size_t i = 0; i < points_per_dim; ++i) {
            grid.push_back({static_cast<double>(i) * step});
        }
    } else {
        for (std::size_t i = 0; i < points_per_dim; ++i) {
            for (std::size_t j = 0; j < points_per_dim; ++j) {
                grid.push_back({static_cast<double>(i) * step, static_cast<double>(j) * step});
            }
        }
    }
    return grid;
}

namespace {

std::vector<double> evaluate(const GridObjective& f, std::span<const Theta> grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (const auto& theta : grid) {
        out.push_back(f(theta));
    }
    return out;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

std::vector<GridObjective> draw_subsets(const SubsetObjectiveFactory& factory, std::size_t draws, std::uint64_t seed) {
    require(draws >= 1, "stability: need at least one subset draw");
    std::vector<GridObjective> out;
    out.reserve(draws);
    for (std::size_t s = 0; s < draws; ++s) {
        out.push_back(factory(s, derive_seed(seed, s, 0x57ab)));
    }
    return out;
}

} // namespace

StabilityReport empirical_epsilon(const GridObjective& full, std::span<const GridObjective> subsets,
                                  std::span<const Theta> grid) {
    require(!grid.empty(), "empirical_epsilon: empty grid");
    require(!subsets.empty(), "empirical_epsilon: need at least one subset objective");
    StabilityReport report;
    report.grid.assign(grid.begin(), grid.end());
    report.subset_draws = subsets.size();
    const auto full_values = evaluate(full, grid);
    report.per_theta_gaps.assign(grid.size(), 0.0);
    for (const auto& f : subsets) {
        const auto values = evaluate(f, grid);
        for (std::size_t t = 0; t < grid.size(); ++t) {
            report.per_theta_gaps[t] += std::abs(full_values[t] - values[t]);
        }
    }
    for (auto& g : report.per_theta_gaps) {
        g /= static_cast<double>(subsets.size());
    }
    report.epsilon_hat = *std::max_element(report.per_theta_gaps.begin(), report.per_theta_gaps.end());
    report.gap_at_optimum = report.per_theta_gaps[argmin(full_values)];
    return report;
}

StabilityReport empirical_epsilon(const GridObjective& full, const SubsetObjectiveFactory& factory,
                                  std::span<const Theta> grid, std::size_t draws, std::uint64_t seed) {
    const auto subsets = draw_subsets(factory, draws, seed);
    return empirical_epsilon(full, subsets, grid);
}

GapCheck check_optimality_gap(const GridObjective& full, const GridObjective& subset, std::span<const Theta> grid) {
    require(!grid.empty(), "check_optimality_gap: empty grid");
    const auto a = evaluate(full, grid);
    const auto b = evaluate(subset, grid);
    GapCheck out;
    for (std::size_t t = 0; t < grid.size(); ++t) {
        out.epsilon = std::max(out.epsilon, std::abs(a[t] - b[t]));
    }
    out.full_argmin = argmin(a);
    out.subset_argmin = argmin(b);
    out.gap = std::abs(a[out.full_argmin] - b[out.subset_argmin]);
    out.holds = out.gap <= out.epsilon;
    return out;
}

ExpectedGapCheck expected_gap_check(const GridObjective& full, std::span<const GridObjective> subsets,
                                    std::span<const Theta> grid, double slack) {
    require(!grid.empty(), "expected_gap_check: empty grid");
    require(!subsets.empty(), "expected_gap_check: need at least one subset objective");
    const auto full_values = evaluate(full, grid);
    const double n = static_cast<double>(subsets.size());
    std::vector<double> mean_gap(grid.size(), 0.0);
    std::vector<double> mean_value(grid.size(), 0.0);
    ExpectedGapCheck out;
    for (const auto& f : subsets) {
        const auto values = evaluate(f, grid);
        out.mean_subset_min += *std::min_element(values.begin(), values.end()) / n;
        for (std::size_t t = 0; t < grid.size(); ++t) {
            mean_gap[t] += std::abs(full_values[t] - values[t]) / n;
            mean_value[t] += values[t] / n;
        }
    }
    out.full_min = *std::min_element(full_values.begin(), full_values.end());
    out.min_of_mean_subset = *std::min_element(mean_value.begin(), mean_value.end());
    out.epsilon = *std::max_element(mean_gap.begin(), mean_gap.end());
    out.gap = std::abs(out.full_min - out.mean_subset_min);
    out.holds = out.gap <= out.epsilon + slack;
    // Allow for summation-order rounding between the two averages.
    out.jensen_holds = out.mean_subset_min <= out.min_of_mean_subset + 1e-12 * (1.0 + std::abs(out.min_of_mean_subset));
    return out;
}

ExpectedGapCheck expected_gap_check(const GridObjective& full, const SubsetObjectiveFactory& factory,
                                    std::span<const Theta> grid, std::size_t draws, std::uint64_t seed, double slack) {
    const auto subsets = draw_subsets(factory, draws, seed);
    return expected_gap_check(full, subsets, grid, slack);
}

std::vector<std::vector<std::size_t>> all_subsets(std::size_t n, std::size_t k) {
    require(k >= 1 && k <= n, "all_subsets: k must lie in [1, n]");
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> current(k);
    std::iota(current.begin(), current.end(), std::size_t{0});
    while (true) {
        out.push_back(current);
        std::size_t i = k;
        while (i > 0 && current[i - 1] == n - k + (i - 1)) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++current[i - 1];
        for (std::size_t j = i; j < k; ++j) {
            current[j] = current[j - 1] + 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

Vector LinearAbilityWorld::merged_gamma() const { return merged_ability(lambda, endpoints); }

LinearAbilityWorld make_linear_ability_world(std::size_t dim, std::size_t n_items, std::size_t n_endpoints,
                                             std::uint64_t seed, std::optional<Vector> lambda) {
    require(n_endpoints >= 2, "make_linear_ability_world: need at least two endpoints");
    WorldSpec spec;
    spec.dim = dim;
    spec.n_items = n_items;
    spec.n_respondents = n_endpoints;
    spec.seed = seed;
    auto world = generate_synthetic_world(spec);
    LinearAbilityWorld out;
    out.bank = std::move(world.bank);
    out.endpoints = std::move(world.abilities);
    if (lambda) {
        require(static_cast<std::size_t>(lambda->size()) == n_endpoints,
                "make_linear_ability_world: one lambda per endpoint required");
        out.lambda = *lambda;
    } else {
        auto rng = make_rng(seed, {0x1a3b});
        std::exponential_distribution<double> exp1(1.0);
        out.lambda = Vector(static_cast<Eigen::Index>(n_endpoints));
        for (auto& l : out.lambda) {
            l = exp1(rng);
        }
        out.lambda /= out.lambda.sum();
    }
    return out;
}

namespace {

double mean_of(const Correctness& y) {
    return static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) / static_cast<double>(y.size());
}

Correctness gather(const Correctness& y, const SubsetSelection& subset) {
    Correctness out;
    out.reserve(subset.size());
    for (auto i : subset.indices) {
        out.push_back(y[i]);
    }
    return out;
}

} // namespace

std::vector<BiasRow> bias_curve(const LinearAbilityWorld& world, std::span<const std::size_t> sizes,
                                std::size_t trials, std::uint64_t seed, BiasOptions options) {
    require(trials >= 1, "bias_curve: need at least one trial");
    const std::size_t n = world.bank.size();
    const Vector gamma = world.merged_gamma();
    std::vector<BiasRow> rows;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        require(sizes[s] >= 1 && sizes[s] <= n, "bias_curve: subset size out of range");
        BiasRow row;
        row.subset_size = sizes[s];
        row.trials = trials;
        for (std::size_t t = 0; t < trials; ++t) {
            auto rng = make_rng(seed, {0xb1a5, s, t});
            const auto y_full = sample_responses(world.bank, gamma, rng);
            const auto subset = extract_random(n, sizes[s], derive_seed(seed, s, t));
            const auto y_sub = gather(y_full, subset);
            LambdaFit lf{world.lambda, true, 0.0};
            if (!options.oracle_lambda) {
                lf = fit_lambda(y_sub, world.endpoints, world.bank, subset, world.lambda);
            }
            const auto est = estimate_mp_irt(y_sub, lf, world.endpoints, world.bank, subset);
            const double err = est.value - mean_of(y_full);
            row.mean_bias += err / static_cast<double>(trials);
            row.mean_abs_error += std::abs(err) / static_cast<double>(trials);
        }
        rows.push_back(row);
    }
    return rows;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "cosine_similarity: dimension mismatch");
    const double denom = a.norm() * b.norm();
    return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

EstimatorTrial run_estimator_trial(const LinearAbilityWorld& world, std::size_t subset_size, std::uint64_t seed,
                                   const IrtFitConfig& ability_fit) {
    const std::size_t n = world.bank.size();
    auto rng = make_rng(seed, {0xe571});
    std::vector<AbilityVector> fitted_endpoints;
    for (std::size_t j = 0; j < world.endpoints.size(); ++j) {
        const auto y = sample_responses(world.bank, world.endpoints[j].gamma, rng);
        fitted_endpoints.push_back(fit_ability(y, world.bank, ability_fit, world.endpoints[j].model_id));
    }
    const auto y_full = sample_responses(world.bank, world.merged_gamma(), rng);
    const auto subset = extract_random(n, subset_size, derive_seed(seed, 0x5b));
    const auto y_sub = gather(y_full, subset);

    EstimatorTrial trial;
    trial.truth = mean_of(y_full);
    trial.naive = estimate_naive(y_sub, subset).value;

    const auto lf = fit_lambda(y_sub, fitted_endpoints, world.bank, subset, world.lambda);
    const auto mp = estimate_mp_irt(y_sub, lf, fitted_endpoints, world.bank, subset);
    trial.mp_irt = mp.value;
    const double c_mp = choose_blend_c(subset_size, n, irt_misfit(y_sub, world.bank, subset, *mp.gamma), trial.naive);
    trial.gmp_irt = estimate_gmp_irt(y_sub, mp, subset, c_mp).value;

    const auto p = estimate_p_irt(y_sub, world.bank, subset, ability_fit);
    trial.p_irt = p.value;
    const double c_p = choose_blend_c(subset_size, n, irt_misfit(y_sub, world.bank, subset, *p.gamma), trial.naive);
    trial.gp_irt = estimate_gmp_irt(y_sub, p, subset, c_p).value;

    const auto full_gamma = fit_ability(y_full, world.bank, ability_fit).gamma;
    trial.cos_mp = cosine_similarity(*mp.gamma, full_gamma);
    trial.cos_p = cosine_similarity(*p.gamma, full_gamma);
    return trial;
}

} // namespace merge3
