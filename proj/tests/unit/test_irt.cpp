#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "merge3/error.hpp"
#include "merge3/io.hpp"
#include "merge3/irt.hpp"
#include "merge3/random.hpp"

using namespace merge3;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

double ref_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ResponseMatrix single_cell(std::uint8_t y) {
    ResponseMatrix r({"i0"}, {"m0"});
    r.set(0, 0, y);
    return r;
}

} // namespace

TEST_CASE("probability at zero logit is one half") {
    ItemParams item{vec({0.0, 0.0}), 0.0, "i"};
    CHECK(irt_probability(vec({0.3, -2.0}), item) == doctest::Approx(0.5));
}

TEST_CASE("probability matches the logistic of alpha'gamma - beta") {
    ItemParams item{vec({1.0, 1.0}), 0.0, "i"};
    CHECK(irt_probability(vec({1.0, 1.0}), item) == doctest::Approx(0.8807970779778823).epsilon(1e-12));

    ItemParams hard{vec({1.0}), 20.0, "h"};
    const double p = irt_probability(vec({0.0}), hard);
    CHECK(p == doctest::Approx(2.0611536181902037e-9).epsilon(1e-6));
    CHECK(p > 0.0);
}

TEST_CASE("probability rejects a dimension mismatch") {
    ItemParams item{vec({1.0, 1.0}), 0.0, "i"};
    CHECK_THROWS_AS((void)irt_probability(vec({1.0, 1.0, 1.0}), item), ContractError);
}

TEST_CASE("log-likelihood of single cells") {
    ItemBank bank(1, {{vec({0.0}), 0.0, "i0"}});
    std::vector<AbilityVector> ab{{vec({0.0}), "m0"}};
    CHECK(log_likelihood(single_cell(1), bank, ab) == doctest::Approx(std::log(0.5)));
    CHECK(log_likelihood(single_cell(0), bank, ab) == doctest::Approx(std::log(0.5)));

    ItemBank extreme(1, {{vec({1.0}), -50.0, "i0"}});
    CHECK(log_likelihood(single_cell(1), extreme, ab) == doctest::Approx(0.0).epsilon(1e-9));
    const double clamped = log_likelihood(single_cell(0), extreme, ab);
    CHECK(std::isfinite(clamped));
    CHECK(clamped == doctest::Approx(std::log(kProbabilityClamp)));
}

TEST_CASE("log-likelihood of N zero-logit cells is N log(0.5)") {
    const std::size_t n = 7;
    std::vector<std::string> items;
    ItemBank bank(2);
    for (std::size_t i = 0; i < n; ++i) {
        items.push_back("i" + std::to_string(i));
        bank.add({vec({0.0, 0.0}), 0.0, items.back()});
    }
    ResponseMatrix r(items, {"m"});
    for (std::size_t i = 0; i < n; ++i) {
        r.set(i, 0, static_cast<std::uint8_t>(i % 2));
    }
    std::vector<AbilityVector> ab{{vec({1.0, -1.0}), "m"}};
    CHECK(log_likelihood(r, bank, ab) == doctest::Approx(n * std::log(0.5)));
}

TEST_CASE("probability is monotone in the logit") {
    auto rng = make_rng(5);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 500; ++trial) {
        ItemParams item{vec({normal(rng), normal(rng)}), normal(rng), "i"};
        Vector g = vec({normal(rng), normal(rng)});
        Vector step = item.alpha * 0.1;
        const double before = irt_probability(g, item);
        const double after = irt_probability(Vector(g + step), item);
        CHECK(after >= before);
        CHECK(before >= 0.0);
        CHECK(before <= 1.0);
        CHECK(before == doctest::Approx(ref_sigmoid(item.alpha.dot(g) - item.beta)));
    }
}

TEST_CASE("response matrix rejects non-binary values") {
    ResponseMatrix r({"a"}, {"m"});
    CHECK_THROWS_AS(r.set(0, 0, 2), ContractError);
    CHECK_THROWS_AS(r.set(1, 0, 1), ContractError);
}

TEST_CASE("generating parameters beat perturbed ones in likelihood") {
    int wins = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        WorldSpec spec;
        spec.dim = 2;
        spec.n_items = 200;
        spec.n_respondents = 30;
        spec.seed = 1000 + static_cast<std::uint64_t>(t);
        const auto world = generate_synthetic_world(spec);
        std::vector<ItemParams> noisy = world.bank.items();
        auto rng = make_rng(spec.seed, {1});
        std::normal_distribution<double> normal(0.0, 0.5);
        for (auto& item : noisy) {
            item.alpha[0] += normal(rng);
            item.alpha[1] += normal(rng);
            item.beta += normal(rng);
        }
        const ItemBank perturbed(2, noisy);
        if (log_likelihood(world.responses, world.bank, world.abilities) >
            log_likelihood(world.responses, perturbed, world.abilities)) {
            ++wins;
        }
    }
    CHECK(wins >= 38);
}

TEST_CASE("synthetic worlds are deterministic per seed") {
    WorldSpec spec;
    spec.seed = 3;
    const auto a = generate_synthetic_world(spec);
    const auto b = generate_synthetic_world(spec);
    for (std::size_t m = 0; m < spec.n_respondents; ++m) {
        CHECK(a.responses.respondent(m) == b.responses.respondent(m));
        CHECK(a.abilities[m].gamma == b.abilities[m].gamma);
    }
    spec.seed = 4;
    const auto c = generate_synthetic_world(spec);
    bool differs = false;
    for (std::size_t m = 0; m < spec.n_respondents; ++m) {
        differs = differs || a.responses.respondent(m) != c.responses.respondent(m);
    }
    CHECK(differs);
}

TEST_CASE("degenerate world answers at chance") {
    WorldSpec spec;
    spec.dim = 1;
    spec.n_items = 2000;
    spec.n_respondents = 1;
    spec.seed = 9;
    spec.abilities.fixed = {vec({0.0})};
    spec.abilities.fixed_alpha = vec({1.0});
    spec.abilities.fixed_beta = 0.0;
    const auto world = generate_synthetic_world(spec);
    const auto y = world.responses.respondent(0);
    const double rate = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    const double sd = std::sqrt(0.25 / static_cast<double>(y.size()));
    CHECK(std::abs(rate - 0.5) < 3.0 * sd);
}

TEST_CASE("mixture respondents are exact combinations of their sources") {
    WorldSpec spec;
    spec.dim = 3;
    spec.n_respondents = 3;
    spec.seed = 21;
    spec.abilities.mixtures.push_back({{0, 1}, {0.3, 0.7}});
    const auto world = generate_synthetic_world(spec);
    const Vector expect = 0.3 * world.abilities[0].gamma + 0.7 * world.abilities[1].gamma;
    CHECK((world.abilities[2].gamma - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("item bank fit is deterministic and its objective never decreases") {
    WorldSpec spec;
    spec.dim = 2;
    spec.n_items = 60;
    spec.n_respondents = 25;
    spec.seed = 17;
    const auto world = generate_synthetic_world(spec);
    IrtFitConfig cfg;
    cfg.dim = 2;
    cfg.seed = 1;
    const auto a = fit_item_bank(world.responses, cfg);
    const auto b = fit_item_bank(world.responses, cfg);
    REQUIRE(a.bank.size() == b.bank.size());
    for (std::size_t i = 0; i < a.bank.size(); ++i) {
        CHECK(a.bank[i].alpha == b.bank[i].alpha);
        CHECK(a.bank[i].beta == b.bank[i].beta);
    }
    CHECK(a.converged);
    CHECK(a.gradient_norm <= cfg.tolerance);
    for (std::size_t s = 1; s < a.objective_trace.size(); ++s) {
        CHECK(a.objective_trace[s] >= a.objective_trace[s - 1] - 1e-9);
    }
}

TEST_CASE("identical respondents leave item directions at the prior") {
    std::vector<std::string> items;
    for (int i = 0; i < 10; ++i) {
        items.push_back("i" + std::to_string(i));
    }
    std::vector<std::string> people{"a", "b", "c", "d", "e", "f"};
    ResponseMatrix r(items, people);
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t m = 0; m < people.size(); ++m) {
            r.set(i, m, static_cast<std::uint8_t>(i % 2));
        }
    }
    IrtFitConfig cfg;
    cfg.dim = 2;
    const auto fit = fit_item_bank(r, cfg);
    for (std::size_t m = 1; m < people.size(); ++m) {
        CHECK((fit.abilities[m].gamma - fit.abilities[0].gamma).norm() < 1e-6);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        // Only the projection onto the shared ability is identified.
        const Vector& g = fit.abilities[0].gamma;
        if (g.norm() > 1e-9) {
            const Vector ortho = fit.bank[i].alpha - g * (fit.bank[i].alpha.dot(g) / g.squaredNorm());
            CHECK(ortho.norm() < 1e-6);
        }
    }
}

TEST_CASE("ability fit recovers direction and handles degenerate input") {
    WorldSpec spec;
    spec.dim = 3;
    spec.n_items = 500;
    spec.n_respondents = 1;
    spec.seed = 31;
    const auto world = generate_synthetic_world(spec);
    IrtFitConfig cfg;
    cfg.dim = 3;
    const auto fit = fit_ability(world.responses.respondent(0), world.bank, cfg);
    const Vector& truth = world.abilities[0].gamma;
    CHECK(fit.gamma.dot(truth) / (fit.gamma.norm() * truth.norm()) >= 0.9);

    const Correctness all_right(world.bank.size(), 1);
    const auto sure = fit_ability(all_right, world.bank, cfg);
    CHECK(sure.gamma.allFinite());

    std::vector<ItemParams> flat;
    for (std::size_t i = 0; i < 20; ++i) {
        flat.push_back({Vector::Zero(3), 0.5, "z" + std::to_string(i)});
    }
    const auto prior_only = fit_ability(Correctness(20, 1), ItemBank(3, flat), cfg);
    CHECK(prior_only.gamma.norm() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ability fit is invariant to item order") {
    WorldSpec spec;
    spec.dim = 2;
    spec.n_items = 120;
    spec.n_respondents = 1;
    spec.seed = 41;
    const auto world = generate_synthetic_world(spec);
    const auto y = world.responses.respondent(0);
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(2);
    std::shuffle(order.begin(), order.end(), rng);
    Correctness y_perm;
    for (auto i : order) {
        y_perm.push_back(y[i]);
    }
    IrtFitConfig cfg;
    cfg.dim = 2;
    const auto a = fit_ability(y, world.bank, cfg);
    const auto b = fit_ability(y_perm, world.bank.subset(order), cfg);
    CHECK((a.gamma - b.gamma).norm() < 1e-6);
}

TEST_CASE("response matrices and banks round-trip through their file formats") {
    WorldSpec spec;
    spec.n_items = 12;
    spec.n_respondents = 4;
    spec.seed = 8;
    const auto world = generate_synthetic_world(spec);
    std::stringstream text;
    write_response_matrix(text, world.responses);
    const auto back = read_response_matrix(text);
    REQUIRE(back.n_items() == world.responses.n_items());
    REQUIRE(back.n_respondents() == world.responses.n_respondents());
    for (std::size_t m = 0; m < back.n_respondents(); ++m) {
        CHECK(back.respondent(m) == world.responses.respondent(m));
    }
    const ItemBank bank = item_bank_from_json(to_json(world.bank));
    for (std::size_t i = 0; i < bank.size(); ++i) {
        CHECK(bank[i].alpha == world.bank[i].alpha);
        CHECK(bank[i].beta == world.bank[i].beta);
        CHECK(bank[i].item_id == world.bank[i].item_id);
    }
}

TEST_CASE("response reader rejects bad cells") {
    std::stringstream dup(
        R"({"respondent_id":"m","responses":[{"item_id":"a","correct":1},{"item_id":"a","correct":0}]})");
    CHECK_THROWS_AS((void)read_response_matrix(dup), ContractError);
    std::stringstream value(R"({"respondent_id":"m","responses":[{"item_id":"a","correct":2}]})");
    CHECK_THROWS_AS((void)read_response_matrix(value), ContractError);
    std::stringstream missing(
        "{\"respondent_id\":\"m\",\"responses\":[{\"item_id\":\"a\",\"correct\":1},{\"item_id\":\"b\",\"correct\":1}]}\n"
        "{\"respondent_id\":\"n\",\"responses\":[{\"item_id\":\"a\",\"correct\":1}]}\n");
    CHECK_THROWS_AS((void)read_response_matrix(missing), ContractError);
}
