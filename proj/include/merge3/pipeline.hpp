#pragma once

// Extract / Estimate / Evolve orchestration. The subset is extracted once, the
// endpoint abilities are fitted once on the full dataset, and every candidate
// is scored only on the subset through the configured estimator.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "merge3/estimators.hpp"
#include "merge3/evolve.hpp"
#include "merge3/irt.hpp"
#include "merge3/merge.hpp"

namespace merge3 {

/// Correctness of a merged model on items given as positions in the item bank.
using CorrectnessFn = std::function<Correctness(const ParameterVector&, std::span<const std::size_t>)>;

/// One objective: a task's items (positions in the bank) and its reduced subset
/// (positions within `items`).
struct ObjectiveSpec {
    std::string name;
    std::vector<std::size_t> items;
    SubsetSelection subset;
};

struct Merge3Problem {
    const ItemBank* bank = nullptr;
    std::vector<AbilityVector> endpoint_abilities;
    std::vector<ParameterVector> endpoints;
    ParameterVector base;
    std::vector<ObjectiveSpec> objectives;
    CorrectnessFn correctness;
};

struct Merge3Config {
    EvolveConfig evolve{};
    EstimatorKind estimator = EstimatorKind::mp_irt;
    MergeMethod method = MergeMethod::task_arithmetic;
    double density = 1.0;
    /// Task-vector coefficients are genome * coefficient_scale.
    double coefficient_scale = 1.0;
    /// Fixed blend for the g-variants; the variance-ratio rule when unset.
    std::optional<double> blend_c;
    /// Priors for p-IRT refits.
    IrtFitConfig ability_fit{};
};

struct RunLog {
    std::vector<Candidate> records;
};

struct Merge3Result {
    ParetoFront front;
    RunLog log;
    EvolutionResult evolution;
};

[[nodiscard]] std::size_t genome_dimension(MergeMethod method, std::size_t n_endpoints);

/// Pure-endpoint genomes.
[[nodiscard]] std::vector<Genome> corner_genomes(MergeMethod method, std::size_t n_endpoints, double coefficient_scale);

[[nodiscard]] MergeRecipe decode_genome(const Genome& genome, MergeMethod method, double density,
                                        double coefficient_scale, std::uint64_t seed);

/// Warm start for fit_lambda from the candidate's own merge coefficients.
[[nodiscard]] Vector initial_lambda(const MergeRecipe& recipe, std::size_t n_endpoints);

/// Fits each endpoint's ability on the full dataset with the bank frozen.
[[nodiscard]] std::vector<AbilityVector> estimate_abilities(std::span<const Correctness> full_responses,
                                                            const ItemBank& bank, const IrtFitConfig& config);

/// Scores one merged model on every objective.
[[nodiscard]] std::vector<FitnessEstimate> estimate_fitness(const Merge3Config& config, const Merge3Problem& problem,
                                                            const ParameterVector& merged, const MergeRecipe& recipe);

[[nodiscard]] Merge3Result run_merge3(const Merge3Config& config, const Merge3Problem& problem);

} // namespace merge3
