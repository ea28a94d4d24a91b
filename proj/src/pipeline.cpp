#include "merge3/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "merge3/error.hpp"

namespace merge3 {

std::size_t genome_dimension(MergeMethod method, std::size_t n_endpoints) {
    return method == MergeMethod::slerp ? 1 : n_endpoints;
}

std::vector<Genome> corner_genomes(MergeMethod method, std::size_t n_endpoints, double coefficient_scale) {
    if (method == MergeMethod::slerp) {
        return {{0.0}, {1.0}};
    }
    std::vector<Genome> corners;
    const bool scaled = method != MergeMethod::linear;
    for (std::size_t j = 0; j < n_endpoints; ++j) {
        Genome g(n_endpoints, 0.0);
        g[j] = scaled ? std::min(1.0, 1.0 / coefficient_scale) : 1.0;
        corners.push_back(std::move(g));
    }
    return corners;
}

MergeRecipe decode_genome(const Genome& genome, MergeMethod method, double density, double coefficient_scale,
                          std::uint64_t seed) {
    require(!genome.empty(), "decode_genome: empty genome");
    require(coefficient_scale > 0.0, "decode_genome: coefficient scale must be positive");
    MergeRecipe recipe;
    recipe.method = method;
    recipe.density = density;
    recipe.seed = seed;
    switch (method) {
    case MergeMethod::slerp: recipe.coefficients = {std::clamp(genome[0], 0.0, 1.0)}; break;
    case MergeMethod::linear: recipe.coefficients = genome; break;
    default:
        recipe.coefficients.reserve(genome.size());
        for (double g : genome) {
            recipe.coefficients.push_back(g * coefficient_scale);
        }
        break;
    }
    return recipe;
}

Vector initial_lambda(const MergeRecipe& recipe, std::size_t n_endpoints) {
    const auto n = static_cast<Eigen::Index>(n_endpoints);
    if (recipe.method == MergeMethod::slerp && n_endpoints == 2 && recipe.coefficients.size() == 1) {
        const double t = recipe.coefficients[0];
        return Vector{{1.0 - t, t}};
    }
    if (recipe.coefficients.size() != n_endpoints) {
        return Vector::Constant(n, 1.0 / static_cast<double>(n_endpoints));
    }
    Vector lambda(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        lambda[j] = recipe.coefficients[static_cast<std::size_t>(j)];
    }
    if (recipe.method == MergeMethod::linear) {
        const double total = lambda.sum();
        lambda = total != 0.0 ? Vector(lambda / total) : Vector::Constant(n, 1.0 / static_cast<double>(n_endpoints));
    }
    return lambda;
}

std::vector<AbilityVector> estimate_abilities(std::span<const Correctness> full_responses, const ItemBank& bank,
                                              const IrtFitConfig& config) {
    std::vector<AbilityVector> out;
    out.reserve(full_responses.size());
    for (std::size_t j = 0; j < full_responses.size(); ++j) {
        out.push_back(fit_ability(full_responses[j], bank, config, "endpoint" + std::to_string(j)));
    }
    return out;
}

namespace {

void validate_problem(const Merge3Problem& p) {
    require(p.bank != nullptr, "run_merge3: missing item bank");
    require(!p.endpoints.empty(), "run_merge3: no endpoints");
    require(!p.objectives.empty(), "run_merge3: no objectives");
    require(static_cast<bool>(p.correctness), "run_merge3: missing correctness callback");
    for (const auto& o : p.objectives) {
        require(!o.items.empty(), "run_merge3: objective '" + o.name + "' has no items");
        for (auto i : o.items) {
            require(i < p.bank->size(), "run_merge3: objective item out of range");
        }
        o.subset.validate(o.items.size());
    }
}

double mean_of(const Correctness& y) {
    return static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) / static_cast<double>(y.size());
}

} // namespace

std::vector<FitnessEstimate> estimate_fitness(const Merge3Config& config, const Merge3Problem& problem,
                                              const ParameterVector& merged, const MergeRecipe& recipe) {
    std::vector<FitnessEstimate> out;
    out.reserve(problem.objectives.size());

    if (config.estimator == EstimatorKind::exact) {
        for (const auto& o : problem.objectives) {
            const auto y = problem.correctness(merged, o.items);
            require(y.size() == o.items.size(), "correctness callback returned the wrong length");
            FitnessEstimate e;
            e.value = mean_of(y);
            e.kind = EstimatorKind::exact;
            e.n_correctness_evals = y.size();
            out.push_back(std::move(e));
        }
        return out;
    }

    std::vector<Correctness> observed;
    std::vector<std::size_t> union_items;
    Correctness union_y;
    std::unordered_set<std::size_t> seen;
    for (const auto& o : problem.objectives) {
        std::vector<std::size_t> global;
        global.reserve(o.subset.size());
        for (auto k : o.subset.indices) {
            global.push_back(o.items[k]);
        }
        auto y = problem.correctness(merged, global);
        require(y.size() == global.size(), "correctness callback returned the wrong length");
        for (std::size_t k = 0; k < global.size(); ++k) {
            if (seen.insert(global[k]).second) {
                union_items.push_back(global[k]);
                union_y.push_back(y[k]);
            }
        }
        observed.push_back(std::move(y));
    }

    const auto& bank = *problem.bank;
    const auto n_end = problem.endpoint_abilities.size();
    std::optional<LambdaFit> lambda_fit;
    std::optional<Vector> refit_gamma;
    if (config.estimator == EstimatorKind::mp_irt || config.estimator == EstimatorKind::gmp_irt) {
        lambda_fit = fit_lambda(union_y, problem.endpoint_abilities, bank, SubsetSelection::uniform(union_items),
                                initial_lambda(recipe, n_end));
    } else if (config.estimator == EstimatorKind::p_irt || config.estimator == EstimatorKind::gp_irt) {
        refit_gamma = fit_ability(union_y, bank.subset(union_items), config.ability_fit).gamma;
    }

    for (std::size_t j = 0; j < problem.objectives.size(); ++j) {
        const auto& o = problem.objectives[j];
        const auto& y = observed[j];
        if (config.estimator == EstimatorKind::naive) {
            out.push_back(estimate_naive(y, o.subset));
            continue;
        }
        const auto task_bank = bank.subset(o.items);
        FitnessEstimate e;
        if (lambda_fit) {
            e = estimate_mp_irt(y, *lambda_fit, problem.endpoint_abilities, task_bank, o.subset);
        } else {
            e.value = performance_irt(y, task_bank, o.subset, *refit_gamma);
            e.kind = EstimatorKind::p_irt;
            e.n_correctness_evals = y.size();
            e.gamma = *refit_gamma;
        }
        if (config.estimator == EstimatorKind::gmp_irt || config.estimator == EstimatorKind::gp_irt) {
            const double c = config.blend_c.value_or(
                choose_blend_c(o.subset.size(), o.items.size(), irt_misfit(y, task_bank, o.subset, *e.gamma),
                               mean_of(y)));
            e = estimate_gmp_irt(y, e, o.subset, c);
        }
        out.push_back(std::move(e));
    }
    return out;
}

Merge3Result run_merge3(const Merge3Config& config, const Merge3Problem& problem) {
    validate_problem(problem);
    const auto n_end = problem.endpoints.size();
    const bool needs_abilities = config.estimator == EstimatorKind::mp_irt || config.estimator == EstimatorKind::gmp_irt;
    if (needs_abilities) {
        require(problem.endpoint_abilities.size() == n_end, "run_merge3: one ability vector per endpoint required");
    }

    // Only subset items may be queried unless fitness is computed exactly.
    std::unordered_set<std::size_t> allowed;
    for (const auto& o : problem.objectives) {
        if (config.estimator == EstimatorKind::exact) {
            allowed.insert(o.items.begin(), o.items.end());
        } else {
            for (auto k : o.subset.indices) {
                allowed.insert(o.items[k]);
            }
        }
    }
    Merge3Problem guarded = problem;
    guarded.correctness = [&problem, &allowed](const ParameterVector& model, std::span<const std::size_t> items) {
        for (auto i : items) {
            require(allowed.count(i) == 1, "run_merge3: correctness requested outside the fitness subset");
        }
        return problem.correctness(model, items);
    };

    const auto decoder = [&config](const Genome& g, std::uint64_t seed) {
        return decode_genome(g, config.method, config.density, config.coefficient_scale, seed);
    };
    const auto evaluator = [&config, &guarded](const Candidate& c) {
        const auto merged = apply_recipe(c.decoded, guarded.base, guarded.endpoints);
        return estimate_fitness(config, guarded, merged, c.decoded);
    };
    const auto corners = corner_genomes(config.method, n_end, config.coefficient_scale);

    Merge3Result result;
    result.evolution = evolve(config.evolve, genome_dimension(config.method, n_end), decoder, evaluator, corners);
    result.front = result.evolution.front;
    result.log.records = result.evolution.evaluated;
    return result;
}

} // namespace merge3
