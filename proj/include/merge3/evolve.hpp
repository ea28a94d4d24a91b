#pragma once

// Real-coded evolutionary search over merge genomes in [0,1]^g: SBX crossover,
// polynomial mutation, binary tournament on (rank, crowding) and (mu + lambda)
// survival over non-dominated fronts. With one objective the same machinery is
// an elitist GA. All objectives are maximized.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "merge3/estimators.hpp"
#include "merge3/merge.hpp"
#include "merge3/random.hpp"

namespace merge3 {

using Genome = std::vector<double>;
using ObjectiveValues = std::vector<double>;

struct Candidate {
    std::size_t id = 0;
    std::size_t generation = 0;
    /// Position within its generation's batch.
    std::size_t index = 0;
    Genome genome;
    MergeRecipe decoded;
    std::vector<FitnessEstimate> fitness;
    bool valid = true;
    std::string error;

    /// Fitness values; -infinity everywhere for an invalid candidate.
    [[nodiscard]] ObjectiveValues objectives() const;
    [[nodiscard]] bool evaluated() const noexcept { return !fitness.empty() || !valid; }
};

struct Population {
    std::vector<Candidate> members;
    std::size_t generation = 0;
};

struct ParetoFront {
    std::vector<Candidate> members;
};

struct EvolveConfig {
    std::size_t population_size = 25;
    /// Evaluated generations including the initial population.
    std::size_t iterations = 7;
    double eta_c = 15.0;
    double eta_m = 20.0;
    double crossover_prob = 0.9;
    /// Per-coordinate mutation probability; 0 selects 1/g.
    double mutation_prob = 0.0;
    bool elitism = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// a >= b everywhere and a > b somewhere.
[[nodiscard]] bool dominates(std::span<const double> a, std::span<const double> b);

/// Fast non-dominated sorting. Front 0 holds the maximal points; each front
/// lists indices in ascending order.
[[nodiscard]] std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveValues> points);
[[nodiscard]] std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Candidate> population);

/// Crowding distance of each member of one front. Boundary members are
/// infinite; interior members sum normalized neighbour gaps.
[[nodiscard]] std::vector<double> crowding_distance(std::span<const ObjectiveValues> front);

/// One SBX coordinate pair for a given uniform draw u (no clipping).
[[nodiscard]] std::pair<double, double> sbx_pair(double x1, double x2, double u, double eta_c);

[[nodiscard]] std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2, double eta_c, Rng& rng);
[[nodiscard]] std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2, double eta_c,
                                                      std::uint64_t seed);

/// Polynomial mutation perturbation for a uniform draw u, in units of the
/// variable range.
[[nodiscard]] double polynomial_delta(double u, double eta_m);

[[nodiscard]] Genome polynomial_mutation(const Genome& genome, double eta_m, double rate, Rng& rng);
[[nodiscard]] Genome polynomial_mutation(const Genome& genome, double eta_m, double rate, std::uint64_t seed);

/// Exactly the non-dominated subset, in input order.
[[nodiscard]] ParetoFront pareto_front(std::span<const Candidate> evaluated);

/// Maps a genome to a recipe; the second argument is a per-candidate seed.
using GenomeDecoder = std::function<MergeRecipe(const Genome&, std::uint64_t)>;
/// Produces one estimate per objective; may throw to mark the candidate invalid.
using CandidateEvaluator = std::function<std::vector<FitnessEstimate>(const Candidate&)>;

struct EvolutionResult {
    /// Every evaluated candidate in (generation, index) order.
    std::vector<Candidate> evaluated;
    Population final_population;
    ParetoFront front;
    /// Best single-objective value among survivors after each generation.
    std::vector<double> best_per_generation;
};

/// Runs the search. Initial genomes are taken from `seed_genomes` first and
/// the remainder drawn uniformly.
[[nodiscard]] EvolutionResult evolve(const EvolveConfig& config, std::size_t genome_dim,
                                     const GenomeDecoder& decoder, const CandidateEvaluator& evaluator,
                                     std::span<const Genome> seed_genomes = {});

} // namespace merge3
