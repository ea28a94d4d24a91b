#include "merge3/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "merge3/error.hpp"

namespace merge3 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

ObjectiveValues Candidate::objectives() const {
    if (!valid) {
        return ObjectiveValues(std::max<std::size_t>(fitness.size(), 1), -kInf);
    }
    ObjectiveValues out;
    out.reserve(fitness.size());
    for (const auto& f : fitness) {
        out.push_back(f.value);
    }
    return out;
}

void EvolveConfig::validate() const {
    require(population_size >= 2, "EvolveConfig: population_size must be >= 2");
    require(iterations >= 1, "EvolveConfig: iterations must be >= 1");
    require(eta_c >= 0.0 && eta_m >= 0.0, "EvolveConfig: distribution indices must be >= 0");
    require(crossover_prob >= 0.0 && crossover_prob <= 1.0, "EvolveConfig: crossover_prob must lie in [0, 1]");
    require(mutation_prob >= 0.0 && mutation_prob <= 1.0, "EvolveConfig: mutation_prob must lie in [0, 1]");
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dominates: objective count mismatch");
    bool strictly = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) {
            return false;
        }
        strictly = strictly || a[k] > b[k];
    }
    return strictly;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveValues> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    if (n == 0) {
        return fronts;
    }
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated_by[p].push_back(q);
                ++domination_count[q];
            } else if (dominates(points[q], points[p])) {
                dominated_by[q].push_back(p);
                ++domination_count[p];
            }
        }
    }
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        if (domination_count[p] == 0) {
            current.push_back(p);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated_by[p]) {
                if (--domination_count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Candidate> population) {
    std::vector<ObjectiveValues> points;
    points.reserve(population.size());
    for (const auto& c : population) {
        require(c.evaluated(), "non_dominated_sort: unevaluated candidate");
        points.push_back(c.objectives());
    }
    return non_dominated_sort(points);
}

std::vector<double> crowding_distance(std::span<const ObjectiveValues> front) {
    require(!front.empty(), "crowding_distance: empty front");
    const std::size_t n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), kInf);
        return distance;
    }
    const std::size_t n_obj = front.front().size();
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n_obj; ++k) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
        distance[order.front()] = kInf;
        distance[order.back()] = kInf;
        const double range = front[order.back()][k] - front[order.front()][k];
        if (!(range > 0.0) || !std::isfinite(range)) {
            continue;
        }
        for (std::size_t r = 1; r + 1 < n; ++r) {
            const double gap = front[order[r + 1]][k] - front[order[r - 1]][k];
            if (std::isfinite(gap)) {
                distance[order[r]] += gap / range;
            }
        }
    }
    return distance;
}

std::pair<double, double> sbx_pair(double x1, double x2, double u, double eta_c) {
    const double exponent = 1.0 / (eta_c + 1.0);
    const double beta = u <= 0.5 ? std::pow(2.0 * u, exponent) : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
    return {0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2), 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)};
}

std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2, double eta_c, Rng& rng) {
    require(p1.size() == p2.size(), "sbx_crossover: genome length mismatch");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Genome c1(p1.size());
    Genome c2(p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const auto [a, b] = sbx_pair(p1[i], p2[i], unit(rng), eta_c);
        c1[i] = std::clamp(a, 0.0, 1.0);
        c2[i] = std::clamp(b, 0.0, 1.0);
    }
    return {std::move(c1), std::move(c2)};
}

std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2, double eta_c, std::uint64_t seed) {
    auto rng = make_rng(seed, {0x5b8});
    return sbx_crossover(p1, p2, eta_c, rng);
}

double polynomial_delta(double u, double eta_m) {
    const double exponent = 1.0 / (eta_m + 1.0);
    return u < 0.5 ? std::pow(2.0 * u, exponent) - 1.0 : 1.0 - std::pow(2.0 * (1.0 - u), exponent);
}

Genome polynomial_mutation(const Genome& genome, double eta_m, double rate, Rng& rng) {
    require(rate >= 0.0 && rate <= 1.0, "polynomial_mutation: rate must lie in [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Genome out = genome;
    for (auto& x : out) {
        if (unit(rng) < rate) {
            x = std::clamp(x + polynomial_delta(unit(rng), eta_m), 0.0, 1.0);
        }
    }
    return out;
}

Genome polynomial_mutation(const Genome& genome, double eta_m, double rate, std::uint64_t seed) {
    auto rng = make_rng(seed, {0x9a});
    return polynomial_mutation(genome, eta_m, rate, rng);
}

ParetoFront pareto_front(std::span<const Candidate> evaluated) {
    ParetoFront front;
    if (evaluated.empty()) {
        return front;
    }
    const auto fronts = non_dominated_sort(evaluated);
    for (auto i : fronts.front()) {
        front.members.push_back(evaluated[i]);
    }
    return front;
}

namespace {

struct Ranked {
    std::vector<std::size_t> rank;
    std::vector<double> crowding;
};

Ranked rank_population(std::span<const Candidate> pop) {
    Ranked r{std::vector<std::size_t>(pop.size(), 0), std::vector<double>(pop.size(), 0.0)};
    const auto fronts = non_dominated_sort(pop);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<ObjectiveValues> values;
        for (auto i : fronts[f]) {
            r.rank[i] = f;
            values.push_back(pop[i].objectives());
        }
        const auto cd = crowding_distance(values);
        for (std::size_t k = 0; k < fronts[f].size(); ++k) {
            r.crowding[fronts[f][k]] = cd[k];
        }
    }
    return r;
}

// Lower rank wins, then larger crowding distance, then the first draw.
std::size_t tournament(const Ranked& r, std::size_t n, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (r.rank[a] != r.rank[b]) {
        return r.rank[a] < r.rank[b] ? a : b;
    }
    if (r.crowding[a] != r.crowding[b]) {
        return r.crowding[a] > r.crowding[b] ? a : b;
    }
    return a;
}

// (mu + lambda) survival: fill by front, then by crowding within the last front.
std::vector<Candidate> survive(std::vector<Candidate> pool, std::size_t size) {
    const auto fronts = non_dominated_sort(pool);
    std::vector<Candidate> next;
    next.reserve(size);
    for (const auto& front : fronts) {
        if (next.size() + front.size() <= size) {
            for (auto i : front) {
                next.push_back(pool[i]);
            }
            continue;
        }
        std::vector<ObjectiveValues> values;
        for (auto i : front) {
            values.push_back(pool[i].objectives());
        }
        const auto cd = crowding_distance(values);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (cd[a] != cd[b]) {
                return cd[a] > cd[b];
            }
            return pool[front[a]].id < pool[front[b]].id;
        });
        for (std::size_t k = 0; next.size() < size; ++k) {
            next.push_back(pool[front[order[k]]]);
        }
        break;
    }
    return next;
}

double best_first_objective(std::span<const Candidate> pop) {
    double best = -kInf;
    for (const auto& c : pop) {
        const auto v = c.objectives();
        if (!v.empty()) {
            best = std::max(best, v.front());
        }
    }
    return best;
}

} // namespace

EvolutionResult evolve(const EvolveConfig& config, std::size_t genome_dim, const GenomeDecoder& decoder,
                       const CandidateEvaluator& evaluator, std::span<const Genome> seed_genomes) {
    config.validate();
    require(genome_dim >= 1, "evolve: genome dimension must be >= 1");
    const double mutation_rate = config.mutation_prob > 0.0 ? config.mutation_prob
                                                            : 1.0 / static_cast<double>(genome_dim);
    EvolutionResult result;
    std::size_t next_id = 0;

    auto evaluate_batch = [&](std::vector<Genome> genomes, std::size_t generation) {
        std::vector<Candidate> batch;
        batch.reserve(genomes.size());
        for (std::size_t k = 0; k < genomes.size(); ++k) {
            Candidate c;
            c.id = next_id++;
            c.generation = generation;
            c.index = k;
            c.genome = std::move(genomes[k]);
            const auto candidate_seed = derive_seed(config.seed, generation, k);
            try {
                c.decoded = decoder(c.genome, candidate_seed);
                c.fitness = evaluator(c);
                require(!c.fitness.empty(), "evaluator returned no objectives");
            } catch (const std::exception& e) {
                c.valid = false;
                c.error = e.what();
                c.fitness.clear();
            }
            batch.push_back(std::move(c));
        }
        // Invalid candidates get the objective count of the valid ones.
        std::size_t n_obj = 0;
        for (const auto& c : batch) {
            n_obj = std::max(n_obj, c.fitness.size());
        }
        for (auto& c : batch) {
            if (!c.valid) {
                c.fitness.assign(std::max<std::size_t>(n_obj, 1), FitnessEstimate{});
            }
        }
        return batch;
    };

    // Initial population: seed genomes, then uniform draws.
    std::vector<Genome> initial;
    for (const auto& g : seed_genomes) {
        if (initial.size() == config.population_size) {
            break;
        }
        require(g.size() == genome_dim, "evolve: seed genome has wrong dimension");
        initial.push_back(g);
    }
    {
        auto rng = make_rng(config.seed, {0x1417});
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (initial.size() < config.population_size) {
            Genome g(genome_dim);
            for (auto& x : g) {
                x = unit(rng);
            }
            initial.push_back(std::move(g));
        }
    }
    auto population = evaluate_batch(std::move(initial), 0);
    result.evaluated = population;
    result.best_per_generation.push_back(best_first_objective(population));

    for (std::size_t gen = 1; gen < config.iterations; ++gen) {
        const auto ranked = rank_population(population);
        auto selection_rng = make_rng(config.seed, {0x5e1, gen});
        std::vector<Genome> offspring;
        offspring.reserve(config.population_size);
        for (std::size_t pair = 0; offspring.size() < config.population_size; ++pair) {
            const auto& p1 = population[tournament(ranked, population.size(), selection_rng)].genome;
            const auto& p2 = population[tournament(ranked, population.size(), selection_rng)].genome;
            auto variation_rng = make_rng(config.seed, {0x7a2, gen, pair});
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            auto [c1, c2] = unit(variation_rng) < config.crossover_prob
                                ? sbx_crossover(p1, p2, config.eta_c, variation_rng)
                                : std::pair<Genome, Genome>{p1, p2};
            offspring.push_back(polynomial_mutation(c1, config.eta_m, mutation_rate, variation_rng));
            if (offspring.size() < config.population_size) {
                offspring.push_back(polynomial_mutation(c2, config.eta_m, mutation_rate, variation_rng));
            }
        }
        auto children = evaluate_batch(std::move(offspring), gen);
        result.evaluated.insert(result.evaluated.end(), children.begin(), children.end());
        if (config.elitism) {
            std::vector<Candidate> pool = std::move(population);
            pool.insert(pool.end(), children.begin(), children.end());
            population = survive(std::move(pool), config.population_size);
        } else {
            population = std::move(children);
        }
        result.best_per_generation.push_back(best_first_objective(population));
    }

    result.final_population = {population, config.iterations - 1};
    result.front = pareto_front(result.evaluated);
    return result;
}

} // namespace merge3
