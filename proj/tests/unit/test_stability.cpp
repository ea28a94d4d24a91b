#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "merge3/error.hpp"
#include "merge3/stability.hpp"

using namespace merge3;

namespace {

GridObjective table(std::vector<double> values) {
    return [values](const Theta& t) { return values[static_cast<std::size_t>(std::lround(t[0]))]; };
}

std::vector<Theta> index_grid(std::size_t n) {
    std::vector<Theta> g;
    for (std::size_t i = 0; i < n; ++i) {
        g.push_back({static_cast<double>(i)});
    }
    return g;
}

} // namespace

TEST_CASE("grid covers the unit cube") {
    const auto g1 = make_grid(1, 11);
    REQUIRE(g1.size() == 11);
    CHECK(g1.front()[0] == 0.0);
    CHECK(g1.back()[0] == 1.0);
    CHECK(g1[5][0] == doctest::Approx(0.5));
    const auto g2 = make_grid(2, 3);
    CHECK(g2.size() == 9);
    CHECK_THROWS_AS((void)make_grid(3, 3), ContractError);
}

TEST_CASE("identical subset objectives have zero epsilon") {
    const auto grid = make_grid(1, 21);
    const GridObjective f = [](const Theta& t) { return (t[0] - 0.3) * (t[0] - 0.3); };
    const std::vector<GridObjective> subsets{f, f, f};
    const auto rep = empirical_epsilon(f, subsets, grid);
    CHECK(rep.epsilon_hat == 0.0);
    CHECK(rep.gap_at_optimum == 0.0);
    CHECK(rep.subset_draws == 3);
    const auto gap = check_optimality_gap(f, f, grid);
    CHECK(gap.gap == 0.0);
    CHECK(gap.holds);
}

TEST_CASE("epsilon is the maximum averaged gap") {
    const auto grid = index_grid(3);
    const auto full = table({0.0, 0.0, 0.0});
    const std::vector<GridObjective> subsets{table({0.1, -0.4, 0.0}), table({0.3, 0.0, 0.0})};
    const auto rep = empirical_epsilon(full, subsets, grid);
    CHECK(rep.per_theta_gaps[0] == doctest::Approx(0.2));
    CHECK(rep.per_theta_gaps[1] == doctest::Approx(0.2));
    CHECK(rep.per_theta_gaps[2] == doctest::Approx(0.0));
    CHECK(rep.epsilon_hat == doctest::Approx(0.2));
}

TEST_CASE("optimality gap is bounded by the uniform gap") {
    const auto grid = index_grid(4);
    const auto full = table({3.0, 1.0, 2.0, 5.0});
    const auto sub = table({2.5, 1.4, 0.9, 5.0});
    const auto gap = check_optimality_gap(full, sub, grid);
    CHECK(gap.full_argmin == 1);
    CHECK(gap.subset_argmin == 2);
    CHECK(gap.gap == doctest::Approx(0.1));
    CHECK(gap.epsilon == doctest::Approx(1.1));
    CHECK(gap.holds);
}

TEST_CASE("a constant shift sits exactly on the bound") {
    const auto grid = index_grid(3);
    const auto full = table({1.0, 0.0, 2.0});
    const auto sub = table({1.5, 0.5, 2.5});
    const auto gap = check_optimality_gap(full, sub, grid);
    CHECK(gap.gap == doctest::Approx(0.5));
    CHECK(gap.epsilon == doctest::Approx(0.5));
    CHECK(gap.holds);
}

TEST_CASE("the expected-minimum bound fails on a two-point counterexample") {
    const auto grid = index_grid(2);
    const auto full = table({0.0, 0.0});
    const std::vector<GridObjective> subsets{table({-1.0, 0.0}), table({0.0, -1.0})};
    const auto check = expected_gap_check(full, subsets, grid);
    CHECK(check.full_min == 0.0);
    CHECK(check.mean_subset_min == doctest::Approx(-1.0));
    CHECK(check.min_of_mean_subset == doctest::Approx(-0.5));
    CHECK(check.gap == doctest::Approx(1.0));
    CHECK(check.epsilon == doctest::Approx(0.5));
    CHECK_FALSE(check.holds);
    CHECK(check.jensen_holds);
}

TEST_CASE("all k-subsets come out in lexicographic order") {
    const auto subs = all_subsets(6, 3);
    CHECK(subs.size() == 20);
    CHECK(subs.front() == std::vector<std::size_t>{0, 1, 2});
    CHECK(subs[1] == std::vector<std::size_t>{0, 1, 3});
    CHECK(subs.back() == std::vector<std::size_t>{3, 4, 5});
    for (std::size_t i = 1; i < subs.size(); ++i) {
        CHECK(subs[i - 1] < subs[i]);
    }
    CHECK_THROWS_AS((void)all_subsets(4, 0), ContractError);
    CHECK_THROWS_AS((void)all_subsets(3, 4), ContractError);
}

TEST_CASE("exhaustive subsets of a six-item IRT objective satisfy the bound") {
    const auto world = make_linear_ability_world(2, 6, 2, 5);
    const auto grid = make_grid(1, 101);
    auto objective_on = [&](std::vector<std::size_t> items) -> GridObjective {
        return [&world, items](const Theta& t) {
            const Vector g = (1.0 - t[0]) * world.endpoints[0].gamma + t[0] * world.endpoints[1].gamma;
            double acc = 0.0;
            for (auto i : items) {
                acc += irt_probability(g, world.bank[i]);
            }
            return 1.0 - acc / static_cast<double>(items.size());
        };
    };
    const auto full = objective_on({0, 1, 2, 3, 4, 5});
    std::vector<GridObjective> subsets;
    for (const auto& s : all_subsets(6, 3)) {
        subsets.push_back(objective_on(s));
    }
    const auto check = expected_gap_check(full, subsets, grid);
    CHECK(check.holds);
    CHECK(check.jensen_holds);
    CHECK(check.mean_subset_min <= check.min_of_mean_subset + 1e-12);
}

TEST_CASE("linear-ability worlds combine endpoints with lambda") {
    Vector lambda(2);
    lambda << 0.2, 0.8;
    const auto w = make_linear_ability_world(3, 10, 2, 1, lambda);
    CHECK((w.merged_gamma() - (0.2 * w.endpoints[0].gamma + 0.8 * w.endpoints[1].gamma)).norm() < 1e-12);
    const auto drawn = make_linear_ability_world(3, 10, 4, 1);
    CHECK(drawn.lambda.sum() == doctest::Approx(1.0));
    CHECK(drawn.lambda.minCoeff() >= 0.0);
}

TEST_CASE("oracle-lambda bias is small at every subset size") {
    const auto world = make_linear_ability_world(2, 300, 2, 4);
    const std::vector<std::size_t> sizes{10, 100};
    const auto rows = bias_curve(world, sizes, 200, 6, {true});
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.trials == 200);
        CHECK(std::abs(r.mean_bias) < 0.01);
    }
    CHECK(rows[1].mean_abs_error < rows[0].mean_abs_error);
}

TEST_CASE("cosine similarity of simple vectors") {
    Vector a(2);
    a << 1.0, 0.0;
    Vector b(2);
    b << 0.0, 2.0;
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0));
}
