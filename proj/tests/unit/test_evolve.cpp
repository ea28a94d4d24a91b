#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "merge3/error.hpp"
#include "merge3/evolve.hpp"

using namespace merge3;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FitnessEstimate fe(double v) {
    FitnessEstimate e;
    e.value = v;
    return e;
}

Candidate cand(std::size_t id, std::vector<double> objs) {
    Candidate c;
    c.id = id;
    c.genome = {0.0};
    for (double v : objs) {
        c.fitness.push_back(fe(v));
    }
    return c;
}

MergeRecipe identity_decoder(const Genome& g, std::uint64_t seed) {
    return {MergeMethod::linear, g, 1.0, seed};
}

// Two conflicting objectives on [0,1]^2.
std::vector<FitnessEstimate> tradeoff(const Candidate& c) {
    const double x = c.genome[0];
    return {fe(x), fe(1.0 - x * x)};
}

} // namespace

TEST_CASE("dominance needs weak superiority everywhere and strict somewhere") {
    const std::vector<double> a{1.0, 1.0};
    const std::vector<double> b{1.0, 0.0};
    const std::vector<double> c{0.0, 2.0};
    CHECK(dominates(a, b));
    CHECK_FALSE(dominates(b, a));
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE(dominates(a, c));
    CHECK_FALSE(dominates(c, a));
}

TEST_CASE("non-dominated sort layers points into fronts") {
    const std::vector<ObjectiveValues> pts{{1.0, 1.0}, {2.0, 0.0}, {0.0, 0.0}, {0.5, 0.5}, {0.0, 2.0}};
    const auto fronts = non_dominated_sort(pts);
    REQUIRE(fronts.size() == 3);
    CHECK(fronts[0] == std::vector<std::size_t>{0, 1, 4});
    CHECK(fronts[1] == std::vector<std::size_t>{3});
    CHECK(fronts[2] == std::vector<std::size_t>{2});
}

TEST_CASE("chains and antichains give the expected fronts") {
    std::vector<ObjectiveValues> chain;
    std::vector<ObjectiveValues> antichain;
    for (int i = 0; i < 6; ++i) {
        chain.push_back({double(i), double(i)});
        antichain.push_back({double(i), double(5 - i)});
    }
    const auto fc = non_dominated_sort(chain);
    CHECK(fc.size() == 6);
    CHECK(fc[0] == std::vector<std::size_t>{5});
    const auto fa = non_dominated_sort(antichain);
    CHECK(fa.size() == 1);
    CHECK(fa[0].size() == 6);
}

TEST_CASE("crowding distance marks boundaries infinite") {
    const std::vector<ObjectiveValues> front{{0.0, 4.0}, {1.0, 3.0}, {3.0, 1.0}, {4.0, 0.0}};
    const auto cd = crowding_distance(front);
    CHECK(cd[0] == kInf);
    CHECK(cd[3] == kInf);
    // Each objective has range 4; neighbour gaps for member 1 are 3 and 3.
    CHECK(cd[1] == doctest::Approx(3.0 / 4.0 + 3.0 / 4.0));
    CHECK(cd[2] == doctest::Approx(3.0 / 4.0 + 3.0 / 4.0));
    CHECK(crowding_distance(std::vector<ObjectiveValues>{{1.0, 2.0}, {2.0, 1.0}})[0] == kInf);
}

TEST_CASE("sbx at u = 0.5 returns the parents") {
    const auto [c1, c2] = sbx_pair(0.2, 0.8, 0.5, 15.0);
    CHECK(c1 == doctest::Approx(0.2));
    CHECK(c2 == doctest::Approx(0.8));
}

TEST_CASE("sbx preserves the parent midpoint") {
    for (double u : {0.01, 0.2, 0.7, 0.99}) {
        const auto [c1, c2] = sbx_pair(0.3, 0.6, u, 15.0);
        CHECK(0.5 * (c1 + c2) == doctest::Approx(0.45));
    }
    const auto [c1, c2] = sbx_crossover({0.1, 0.9}, {0.9, 0.1}, 15.0, std::uint64_t{4});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(c1[i] >= 0.0);
        CHECK(c1[i] <= 1.0);
        CHECK(c2[i] >= 0.0);
        CHECK(c2[i] <= 1.0);
    }
}

TEST_CASE("polynomial mutation is centred and bounded") {
    CHECK(polynomial_delta(0.5, 20.0) == doctest::Approx(0.0));
    CHECK(polynomial_delta(0.0, 20.0) == doctest::Approx(-1.0));
    CHECK(polynomial_delta(1.0, 20.0) == doctest::Approx(1.0));
    CHECK(polynomial_delta(0.25, 20.0) == doctest::Approx(-polynomial_delta(0.75, 20.0)));

    double sum = 0.0;
    const int n = 20000;
    Rng rng = make_rng(3);
    for (int i = 0; i < n; ++i) {
        const auto g = polynomial_mutation(Genome{0.5}, 20.0, 1.0, rng);
        CHECK(g[0] >= 0.0);
        CHECK(g[0] <= 1.0);
        sum += g[0] - 0.5;
    }
    CHECK(std::abs(sum / n) < 0.003);
    CHECK(polynomial_mutation(Genome{0.3, 0.4}, 20.0, 0.0, std::uint64_t{1}) == Genome{0.3, 0.4});
}

TEST_CASE("pareto front keeps exactly the non-dominated candidates in order") {
    const std::vector<Candidate> pop{cand(0, {1.0, 0.0}), cand(1, {0.5, 0.5}), cand(2, {0.4, 0.4}),
                                     cand(3, {0.0, 1.0}), cand(4, {0.5, 0.5})};
    const auto front = pareto_front(pop);
    std::vector<std::size_t> ids;
    for (const auto& c : front.members) {
        ids.push_back(c.id);
    }
    CHECK(ids == std::vector<std::size_t>{0, 1, 3, 4});
}

TEST_CASE("invalid candidates score minus infinity") {
    Candidate c = cand(0, {0.5});
    c.valid = false;
    CHECK(c.objectives() == ObjectiveValues{-kInf});
}

TEST_CASE("evolution counts evaluations and is reproducible") {
    EvolveConfig cfg;
    cfg.population_size = 10;
    cfg.iterations = 4;
    cfg.seed = 12;
    const auto a = evolve(cfg, 2, identity_decoder, tradeoff);
    const auto b = evolve(cfg, 2, identity_decoder, tradeoff);
    CHECK(a.evaluated.size() == 40);
    REQUIRE(b.evaluated.size() == 40);
    for (std::size_t i = 0; i < a.evaluated.size(); ++i) {
        CHECK(a.evaluated[i].genome == b.evaluated[i].genome);
        CHECK(a.evaluated[i].id == i);
        CHECK(a.evaluated[i].generation == i / 10);
        CHECK(a.evaluated[i].index == i % 10);
    }
    for (std::size_t i = 0; i < a.front.members.size(); ++i) {
        for (std::size_t j = 0; j < a.front.members.size(); ++j) {
            CHECK_FALSE(dominates(a.front.members[i].objectives(), a.front.members[j].objectives()));
        }
    }
}

TEST_CASE("seed genomes enter the first generation") {
    EvolveConfig cfg;
    cfg.population_size = 4;
    cfg.iterations = 1;
    const std::vector<Genome> seeds{{0.0, 0.0}, {1.0, 1.0}};
    const auto r = evolve(cfg, 2, identity_decoder, tradeoff, seeds);
    CHECK(r.evaluated[0].genome == seeds[0]);
    CHECK(r.evaluated[1].genome == seeds[1]);
    CHECK(r.evaluated.size() == 4);
}

TEST_CASE("elitism never loses the best single-objective value") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EvolveConfig cfg;
        cfg.population_size = 8;
        cfg.iterations = 10;
        cfg.seed = seed;
        const auto r = evolve(cfg, 3, identity_decoder, [](const Candidate& c) {
            double s = 0.0;
            for (double x : c.genome) {
                s -= (x - 0.3) * (x - 0.3);
            }
            return std::vector<FitnessEstimate>{fe(s)};
        });
        for (std::size_t g = 1; g < r.best_per_generation.size(); ++g) {
            CHECK(r.best_per_generation[g] >= r.best_per_generation[g - 1]);
        }
    }
}

TEST_CASE("throwing evaluators mark candidates invalid without stopping the run") {
    EvolveConfig cfg;
    cfg.population_size = 6;
    cfg.iterations = 3;
    const auto r = evolve(cfg, 1, identity_decoder, [](const Candidate& c) -> std::vector<FitnessEstimate> {
        if (c.genome[0] > 0.5) {
            throw RuntimeError("diverged");
        }
        return {fe(c.genome[0])};
    });
    CHECK(r.evaluated.size() == 18);
    bool saw_invalid = false;
    for (const auto& c : r.evaluated) {
        if (!c.valid) {
            saw_invalid = true;
            CHECK(c.error == "diverged");
        }
    }
    CHECK(saw_invalid);
    for (const auto& c : r.front.members) {
        CHECK(c.valid);
    }
}

TEST_CASE("config validation rejects degenerate settings") {
    EvolveConfig cfg;
    cfg.population_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = {};
    cfg.mutation_prob = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
}
