#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "merge3/error.hpp"
#include "merge3/merge.hpp"
#include "merge3/random.hpp"

using namespace merge3;
using Eigen::VectorXd;

namespace {

ParameterVector pv(std::initializer_list<double> v, std::string id = "m") {
    VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) {
        x[i++] = e;
    }
    return {x, std::move(id), {{"w", v.size()}}};
}

ParameterVector random_pv(std::size_t n, std::uint64_t seed, std::string id = "r") {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal;
    VectorXd x(static_cast<Eigen::Index>(n));
    for (auto& e : x) {
        e = normal(rng);
    }
    return {x, std::move(id), {{"w", n}}};
}

void check_vec(const VectorXd& got, std::initializer_list<double> want) {
    REQUIRE(got.size() == static_cast<Eigen::Index>(want.size()));
    Eigen::Index i = 0;
    for (double w : want) {
        CHECK(got[i++] == doctest::Approx(w));
    }
}

} // namespace

TEST_CASE("linear merge averages with normalized weights") {
    const std::vector<ParameterVector> ends{pv({1.0, 2.0}), pv({3.0, 4.0})};
    check_vec(merge_linear(ends, std::vector<double>{0.5, 0.5}).values, {2.0, 3.0});
    check_vec(merge_linear(ends, std::vector<double>{1.0, 3.0}).values, {2.5, 3.5});
    check_vec(merge_linear(ends, std::vector<double>{0.0, 0.0}).values, {2.0, 3.0});
    CHECK_THROWS_AS((void)merge_linear(ends, std::vector<double>{1.0}), ContractError);
}

TEST_CASE("slerp follows the great circle") {
    const auto a = pv({1.0, 0.0});
    const auto b = pv({0.0, 1.0});
    check_vec(merge_slerp(a, b, 0.5).values, {std::sqrt(0.5), std::sqrt(0.5)});
    check_vec(merge_slerp(a, b, 0.0).values, {1.0, 0.0});
    check_vec(merge_slerp(a, b, 1.0).values, {0.0, 1.0});
    const double angle = M_PI / 2.0 / 3.0;
    check_vec(merge_slerp(a, b, 1.0 / 3.0).values, {std::cos(angle), std::sin(angle)});
}

TEST_CASE("slerp falls back to linear for collinear inputs") {
    const auto a = pv({1.0, 2.0});
    const auto b = pv({2.0, 4.0});
    check_vec(merge_slerp(a, b, 0.25).values, {1.25, 2.5});
}

TEST_CASE("slerp preserves the norm of equal-norm endpoints") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto a = random_pv(30, s);
        auto b = random_pv(30, s + 100);
        b.values *= a.values.norm() / b.values.norm();
        for (double t : {0.1, 0.37, 0.8}) {
            CHECK(merge_slerp(a, b, t).values.norm() == doctest::Approx(a.values.norm()));
        }
    }
}

TEST_CASE("task arithmetic adds scaled task vectors") {
    const auto base = pv({1.0, 1.0, 1.0});
    const auto ft = pv({2.0, 0.0, 1.0});
    const auto tv = task_vector(base, ft);
    check_vec(tv.delta, {1.0, -1.0, 0.0});
    const std::vector<TaskVector> tasks{tv, TaskVector{VectorXd::Constant(3, 2.0)}};
    check_vec(merge_task_arithmetic(base, tasks, std::vector<double>{0.5, 0.25}).values, {2.0, 1.0, 1.5});
}

TEST_CASE("task arithmetic is linear in the task vectors") {
    const auto base = random_pv(16, 1);
    const TaskVector t1{random_pv(16, 2).values};
    const TaskVector t2{random_pv(16, 3).values};
    const std::vector<TaskVector> both{t1, t2};
    const auto joint = merge_task_arithmetic(base, both, std::vector<double>{0.7, -0.3});
    const auto one = merge_task_arithmetic(base, std::vector<TaskVector>{t1}, std::vector<double>{0.7});
    const auto two = merge_task_arithmetic(base, std::vector<TaskVector>{t2}, std::vector<double>{-0.3});
    CHECK((joint.values - (one.values + two.values - base.values)).norm() < 1e-12);
}

TEST_CASE("trim keeps the largest magnitudes with low-index ties") {
    VectorXd v(4);
    v << 0.1, -3.0, 2.0, 0.5;
    check_vec(trim_top_magnitude(v, 0.5), {0.0, -3.0, 2.0, 0.0});
    check_vec(trim_top_magnitude(v, 1.0), {0.1, -3.0, 2.0, 0.5});
    check_vec(trim_top_magnitude(v, 0.25), {0.0, -3.0, 0.0, 0.0});
    VectorXd tied(3);
    tied << 1.0, -1.0, 1.0;
    check_vec(trim_top_magnitude(tied, 0.5), {1.0, -1.0, 0.0});
}

TEST_CASE("ties elects signs and averages agreeing entries") {
    const auto base = pv({0.0, 0.0, 0.0});
    VectorXd d1(3);
    d1 << 1.0, -2.0, 3.0;
    VectorXd d2(3);
    d2 << -1.0, 1.0, 1.0;
    const std::vector<TaskVector> tasks{{d1}, {d2}};
    check_vec(merge_ties(base, tasks, std::vector<double>{1.0, 1.0}, 1.0).values, {1.0, -2.0, 2.0});
}

TEST_CASE("ties with a shared lambda scales the unit-lambda merge") {
    const auto base = random_pv(20, 4);
    const std::vector<TaskVector> tasks{{random_pv(20, 5).values}, {random_pv(20, 6).values}};
    const auto unit = merge_ties(base, tasks, std::vector<double>{1.0, 1.0}, 0.6);
    const auto scaled = merge_ties(base, tasks, std::vector<double>{0.4, 0.4}, 0.6);
    CHECK(((scaled.values - base.values) - 0.4 * (unit.values - base.values)).norm() < 1e-12);
}

TEST_CASE("ties is equivariant under coordinate permutation") {
    const std::size_t n = 12;
    const auto base = random_pv(n, 7);
    const std::vector<TaskVector> tasks{{random_pv(n, 8).values}, {random_pv(n, 9).values}};
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(1);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        p.indices()[static_cast<Eigen::Index>(i)] = perm[i];
    }
    const std::vector<double> lambdas{0.8, 1.3};
    const auto ref = merge_ties(base, tasks, lambdas, 1.0);
    ParameterVector base_p = base;
    base_p.values = p * base.values;
    const std::vector<TaskVector> tasks_p{{p * tasks[0].delta}, {p * tasks[1].delta}};
    const auto got = merge_ties(base_p, tasks_p, lambdas, 1.0);
    CHECK((got.values - p * ref.values).norm() < 1e-12);
}

TEST_CASE("dare with keep rate one is the identity") {
    const TaskVector t{random_pv(10, 3).values};
    CHECK(dare_drop(t, 1.0, 5, 0).delta == t.delta);
}

TEST_CASE("dare survivors are rescaled and the mask is reproducible") {
    const TaskVector ones{VectorXd::Ones(1000)};
    const auto a = dare_drop(ones, 0.25, 42, 1);
    std::size_t kept = 0;
    for (double v : a.delta) {
        CHECK((v == 0.0 || v == doctest::Approx(4.0)));
        kept += v != 0.0 ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(kept) - 250.0) < 4.0 * std::sqrt(1000 * 0.25 * 0.75));
    CHECK(dare_drop(ones, 0.25, 42, 1).delta == a.delta);
    CHECK(dare_drop(ones, 0.25, 42, 2).delta != a.delta);
    const TaskVector head{VectorXd::Ones(100)};
    CHECK(dare_drop(head, 0.25, 42, 1).delta == a.delta.head(100));
}

TEST_CASE("dare is unbiased across seeds") {
    const TaskVector t{random_pv(8, 11).values};
    VectorXd sum = VectorXd::Zero(8);
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
        sum += dare_drop(t, 0.5, static_cast<std::uint64_t>(s), 0).delta;
    }
    const VectorXd mean = sum / seeds;
    for (Eigen::Index i = 0; i < 8; ++i) {
        const double sd = std::abs(t.delta[i]) / std::sqrt(static_cast<double>(seeds));
        CHECK(std::abs(mean[i] - t.delta[i]) < 4.5 * sd + 1e-12);
    }
}

TEST_CASE("convex linear merges never exceed the largest endpoint norm") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const std::vector<ParameterVector> ends{random_pv(10, s), random_pv(10, s + 50), random_pv(10, s + 90)};
        auto rng = make_rng(s, {2});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::vector<double> w{u(rng), u(rng), u(rng)};
        const double bound = std::max({ends[0].values.norm(), ends[1].values.norm(), ends[2].values.norm()});
        CHECK(merge_linear(ends, w).values.norm() <= bound + 1e-12);
    }
}

TEST_CASE("recipes dispatch and validate") {
    const auto base = pv({0.0, 0.0});
    const std::vector<ParameterVector> ends{pv({1.0, 0.0}), pv({0.0, 1.0})};
    MergeRecipe ta{MergeMethod::task_arithmetic, {0.5, 2.0}, 1.0, 0};
    check_vec(apply_recipe(ta, base, ends).values, {0.5, 2.0});
    MergeRecipe sl{MergeMethod::slerp, {0.5}, 1.0, 0};
    check_vec(apply_recipe(sl, base, ends).values, {std::sqrt(0.5), std::sqrt(0.5)});
    MergeRecipe bad{MergeMethod::linear, {1.0}, 1.0, 0};
    CHECK_THROWS_AS((void)apply_recipe(bad, base, ends), ContractError);
    MergeRecipe bad_t{MergeMethod::slerp, {1.5}, 1.0, 0};
    CHECK_THROWS_AS((void)apply_recipe(bad_t, base, ends), ContractError);
    MergeRecipe bad_density{MergeMethod::ties, {1.0, 1.0}, 0.0, 0};
    CHECK_THROWS_AS((void)apply_recipe(bad_density, base, ends), ContractError);
    for (auto m : {MergeMethod::linear, MergeMethod::slerp, MergeMethod::task_arithmetic, MergeMethod::ties,
                   MergeMethod::dare_ties, MergeMethod::dare_ta}) {
        CHECK(merge_method_from_string(to_string(m)) == m);
    }
}

TEST_CASE("parameter vectors reject bad manifests and values") {
    auto p = pv({1.0, 2.0});
    CHECK_NOTHROW(p.validate());
    p.shape_manifest = {{"w", 3}};
    CHECK_THROWS_AS(p.validate(), ContractError);
    auto q = pv({1.0, NAN});
    CHECK_THROWS_AS(q.validate(), ContractError);
    CHECK_THROWS_AS((void)task_vector(pv({1.0}), pv({1.0, 2.0})), ContractError);
}
