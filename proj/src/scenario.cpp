#include "merge3/scenario.hpp"

#include <algorithm>
#include <numeric>

#include "merge3/error.hpp"
#include "merge3/extract.hpp"
#include "merge3/random.hpp"

namespace merge3 {

FlagshipConfig::FlagshipConfig() {
    merge.method = MergeMethod::task_arithmetic;
    merge.estimator = EstimatorKind::mp_irt;
    merge.coefficient_scale = 2.0;
    merge.evolve.population_size = 25;
    merge.evolve.iterations = 7;
}

void FlagshipConfig::validate() const {
    require(hidden >= 1, "flagship: hidden width must be positive");
    require(spread > 0.0, "flagship: spread must be positive");
    require(n_train >= 2 && n_fitness >= 2 && n_heldout >= 2, "flagship: every split needs at least two points");
    require(subset_size >= 1 && subset_size <= n_fitness, "flagship: subset_size must lie in [1, n_fitness]");
    require(extraction == "random" || extraction == "irt", "flagship: extraction must be random or irt");
    require(irt_dim >= 1, "flagship: irt_dim must be positive");
    require(learning_rate > 0.0, "flagship: learning_rate must be positive");
    merge.evolve.validate();
}

namespace {

template <class T>
void maybe(const Json& doc, const char* key, T& out) {
    if (!doc.contains(key)) {
        return;
    }
    try {
        out = doc.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ContractError(std::string("config: field \"") + key + "\" has the wrong type");
    }
}

} // namespace

EvolveConfig evolve_config_from_json(const Json& doc, EvolveConfig c) {
    require(doc.is_object(), "evolve config: expected a JSON object");
    maybe(doc, "population_size", c.population_size);
    maybe(doc, "iterations", c.iterations);
    maybe(doc, "eta_c", c.eta_c);
    maybe(doc, "eta_m", c.eta_m);
    maybe(doc, "crossover_prob", c.crossover_prob);
    maybe(doc, "mutation_prob", c.mutation_prob);
    maybe(doc, "elitism", c.elitism);
    maybe(doc, "seed", c.seed);
    c.validate();
    return c;
}

FlagshipConfig flagship_config_from_json(const Json& doc) {
    require_version(doc, "run config");
    FlagshipConfig c;
    maybe(doc, "seed", c.seed);
    maybe(doc, "hidden", c.hidden);
    maybe(doc, "spread", c.spread);
    maybe(doc, "n_train", c.n_train);
    maybe(doc, "n_fitness", c.n_fitness);
    maybe(doc, "n_heldout", c.n_heldout);
    maybe(doc, "subset_size", c.subset_size);
    maybe(doc, "extraction", c.extraction);
    maybe(doc, "base_epochs", c.base_epochs);
    maybe(doc, "epochs_a", c.epochs_a);
    maybe(doc, "epochs_b", c.epochs_b);
    maybe(doc, "learning_rate", c.learning_rate);
    maybe(doc, "checkpoint_every", c.checkpoint_every);
    maybe(doc, "perturb_sigmas", c.perturb_sigmas);
    maybe(doc, "perturb_per_sigma", c.perturb_per_sigma);
    maybe(doc, "irt_dim", c.irt_dim);
    if (doc.contains("estimator")) {
        c.merge.estimator = estimator_kind_from_string(doc["estimator"].get<std::string>());
    }
    if (doc.contains("method")) {
        c.merge.method = merge_method_from_string(doc["method"].get<std::string>());
    }
    maybe(doc, "density", c.merge.density);
    maybe(doc, "coefficient_scale", c.merge.coefficient_scale);
    if (doc.contains("blend_c") && !doc["blend_c"].is_null()) {
        c.merge.blend_c = doc["blend_c"].get<double>();
    }
    c.merge.evolve.seed = c.seed;
    if (doc.contains("evolve")) {
        c.merge.evolve = evolve_config_from_json(doc["evolve"], c.merge.evolve);
    }
    c.validate();
    return c;
}

Json to_json(const FlagshipConfig& c) {
    const auto& e = c.merge.evolve;
    return {{"version", kFormatVersion},
            {"seed", c.seed},
            {"hidden", c.hidden},
            {"spread", c.spread},
            {"n_train", c.n_train},
            {"n_fitness", c.n_fitness},
            {"n_heldout", c.n_heldout},
            {"subset_size", c.subset_size},
            {"extraction", c.extraction},
            {"base_epochs", c.base_epochs},
            {"epochs_a", c.epochs_a},
            {"epochs_b", c.epochs_b},
            {"learning_rate", c.learning_rate},
            {"checkpoint_every", c.checkpoint_every},
            {"perturb_sigmas", c.perturb_sigmas},
            {"perturb_per_sigma", c.perturb_per_sigma},
            {"irt_dim", c.irt_dim},
            {"estimator", std::string(to_string(c.merge.estimator))},
            {"method", std::string(to_string(c.merge.method))},
            {"density", c.merge.density},
            {"coefficient_scale", c.merge.coefficient_scale},
            {"blend_c", c.merge.blend_c ? Json(*c.merge.blend_c) : Json(nullptr)},
            {"evolve",
             {{"population_size", e.population_size},
              {"iterations", e.iterations},
              {"eta_c", e.eta_c},
              {"eta_m", e.eta_m},
              {"crossover_prob", e.crossover_prob},
              {"mutation_prob", e.mutation_prob},
              {"elitism", e.elitism},
              {"seed", e.seed}}}};
}

namespace {

constexpr int kClasses = 4;

BlobSpec task_a_blobs(double spread) { return {{{-1.5, 1.0}, {1.5, 1.0}}, {0, 1}, spread}; }
BlobSpec task_b_blobs(double spread) { return {{{-1.5, -1.0}, {1.5, -1.0}}, {2, 3}, spread}; }

std::vector<LabeledPoint> concat(const std::vector<LabeledPoint>& a, const std::vector<LabeledPoint>& b) {
    auto out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

TrainResult train_named(const ToyModel& start, std::span<const LabeledPoint> data, std::size_t epochs,
                        const FlagshipConfig& c, std::uint64_t stream, const std::string& id) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.learning_rate = c.learning_rate;
    tc.seed = derive_seed(c.seed, stream);
    tc.checkpoint_every = c.checkpoint_every;
    auto r = train_from(start, data, tc);
    r.model.parameters.model_id = id;
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
        r.checkpoints[k].parameters.model_id = id + "@" + std::to_string(k);
    }
    return r;
}

double mean_correct(const Correctness& y) {
    return static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) / static_cast<double>(y.size());
}

} // namespace

FlagshipWorld build_flagship_world(const FlagshipConfig& c) {
    c.validate();
    FlagshipWorld w;
    w.task_a = make_blob_task("A", task_a_blobs(c.spread), kClasses, c.n_train, c.n_fitness, derive_seed(c.seed, 0xa));
    w.task_b = make_blob_task("B", task_b_blobs(c.spread), kClasses, c.n_train, c.n_fitness, derive_seed(c.seed, 0xb));
    w.heldout_a = sample_blobs(task_a_blobs(c.spread), c.n_heldout, derive_seed(c.seed, 0xa, 3), "A/heldout/");
    w.heldout_b = sample_blobs(task_b_blobs(c.spread), c.n_heldout, derive_seed(c.seed, 0xb, 3), "B/heldout/");

    const ToyArch arch{2, c.hidden, static_cast<std::size_t>(kClasses)};
    const auto joint_train = concat(w.task_a.train, w.task_b.train);
    const auto init = init_toy_model(arch, derive_seed(c.seed, 0x1417), "init");
    auto base = train_named(init, joint_train, c.base_epochs, c, 0xba5e, "base");
    auto a = train_named(base.model, w.task_a.train, c.epochs_a, c, 0xa0, "endpoint_a");
    auto b = train_named(base.model, w.task_b.train, c.epochs_b, c, 0xb0, "endpoint_b");
    auto joint = train_named(base.model, joint_train, c.epochs_a, c, 0x10, "joint");
    w.base = base.model;
    w.endpoint_a = a.model;
    w.endpoint_b = b.model;

    w.pool.push_back(init);
    for (const auto* r : {&base, &a, &b, &joint}) {
        w.pool.insert(w.pool.end(), r->checkpoints.begin(), r->checkpoints.end());
        w.pool.push_back(r->model);
    }
    std::size_t variant = 0;
    for (const auto* m : {&w.base, &w.endpoint_a, &w.endpoint_b, &joint.model}) {
        for (double sigma : c.perturb_sigmas) {
            for (std::size_t k = 0; k < c.perturb_per_sigma; ++k, ++variant) {
                w.pool.push_back(perturb(*m, sigma, derive_seed(c.seed, 0x9e27, variant),
                                         m->parameters.model_id + "~" + std::to_string(variant)));
            }
        }
    }

    w.items = concat(w.task_a.test, w.task_b.test);
    const auto pool_responses = build_pool_responses(w.pool, w.items, w.pool_counter);
    IrtFitConfig fit;
    fit.dim = c.irt_dim;
    fit.seed = derive_seed(c.seed, 0x1e7);
    auto fitted = fit_item_bank(pool_responses, fit);
    w.bank = std::move(fitted.bank);
    w.bank_converged = fitted.converged;
    return w;
}

HeldoutScore score_heldout(const FlagshipWorld& world, const ParameterVector& parameters, CostCounter& counter) {
    const auto model = with_parameters(world.endpoint_a, parameters);
    HeldoutScore s;
    s.task_a = mean_correct(evaluate_correctness(model, world.heldout_a, counter, "baseline"));
    s.task_b = mean_correct(evaluate_correctness(model, world.heldout_b, counter, "baseline"));
    return s;
}

FlagshipOutcome run_flagship(const FlagshipWorld& world, const FlagshipConfig& config) {
    config.validate();
    const std::size_t n = config.n_fitness;
    FlagshipOutcome out;
    CostCounter counter;

    for (std::size_t t = 0; t < 2; ++t) {
        ObjectiveSpec o;
        o.name = t == 0 ? "task_a" : "task_b";
        o.items.resize(n);
        std::iota(o.items.begin(), o.items.end(), t * n);
        const auto seed = derive_seed(config.seed, 0xe1, t);
        o.subset = config.extraction == "irt" ? extract_irt_cluster(world.bank.subset(o.items), config.subset_size, seed)
                                              : extract_random(n, config.subset_size, seed);
        out.objectives.push_back(std::move(o));
    }

    Merge3Problem problem;
    problem.bank = &world.bank;
    problem.base = world.base.parameters;
    problem.endpoints = {world.endpoint_a.parameters, world.endpoint_b.parameters};
    problem.objectives = out.objectives;
    problem.correctness = [&world, &counter](const ParameterVector& p, std::span<const std::size_t> positions) {
        std::vector<LabeledPoint> items;
        items.reserve(positions.size());
        for (auto i : positions) {
            items.push_back(world.items[i]);
        }
        return evaluate_correctness(with_parameters(world.endpoint_a, p), items, counter, "evolve");
    };
    const auto est = config.merge.estimator;
    if (est == EstimatorKind::mp_irt || est == EstimatorKind::gmp_irt) {
        std::vector<Correctness> full;
        for (const auto* m : {&world.endpoint_a, &world.endpoint_b}) {
            full.push_back(evaluate_correctness(*m, world.items, counter, "estimate"));
        }
        problem.endpoint_abilities = estimate_abilities(full, world.bank, config.merge.ability_fit);
    }

    auto merge_config = config.merge;
    merge_config.ability_fit.dim = world.bank.dim();
    out.result = run_merge3(merge_config, problem);

    const auto& front = out.result.front.members;
    require(!front.empty(), "run_flagship: empty front");
    auto best = front.begin();
    double best_mean = -std::numeric_limits<double>::infinity();
    for (auto it = front.begin(); it != front.end(); ++it) {
        const auto obj = it->objectives();
        const double m = std::accumulate(obj.begin(), obj.end(), 0.0) / static_cast<double>(obj.size());
        if (m > best_mean) {
            best_mean = m;
            best = it;
        }
    }
    out.chosen = *best;
    out.run_counter = counter;

    const auto merged = apply_recipe(out.chosen.decoded, problem.base, problem.endpoints);
    out.merged = score_heldout(world, merged, out.report_counter);
    out.endpoint_a = score_heldout(world, world.endpoint_a.parameters, out.report_counter);
    out.endpoint_b = score_heldout(world, world.endpoint_b.parameters, out.report_counter);
    const std::vector<double> half{0.5, 0.5};
    out.uniform_linear = score_heldout(world, merge_linear(problem.endpoints, half), out.report_counter);
    return out;
}

} // namespace merge3
