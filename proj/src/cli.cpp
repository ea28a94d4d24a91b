#include "merge3/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "merge3/cost.hpp"
#include "merge3/extract.hpp"
#include "merge3/io.hpp"
#include "merge3/scenario.hpp"
#include "merge3/stability.hpp"

namespace merge3 {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;

    // fit-items / ability
    std::string responses;
    std::string bank;
    std::size_t dim = 2;
    std::size_t max_iters = 2000;

    // extract
    std::string method = "random";
    std::size_t k = 20;
    std::size_t n_items = 0;
    std::string embeddings;
    std::size_t pca_dim = 2;

    // stability
    std::string mode = "epsilon";

    // toy
    std::size_t epochs = 200;
    std::size_t hidden = 16;

    // cost
    double n_models = 0.0;
    double throughput = 0.0;
    std::size_t full_evals = 0;
    std::size_t reduced_evals = 0;
};

fs::path out_dir(const Options& o) {
    require(!o.out.empty(), "--out is required");
    fs::create_directories(o.out);
    return fs::path(o.out);
}

Json load_config(const Options& o) {
    require(!o.config.empty(), "--config is required");
    return read_json_file(o.config);
}

void write_json(const fs::path& path, const Json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

ResponseMatrix load_responses(const std::string& path) {
    require(!path.empty(), "--responses is required");
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path);
    return read_response_matrix(in);
}

int cmd_world(const Options& o, std::ostream& out) {
    WorldSpec spec;
    if (!o.config.empty()) {
        const auto doc = load_config(o);
        require_version(doc, "world config");
        spec.dim = doc.value("d", spec.dim);
        spec.n_items = doc.value("n_items", spec.n_items);
        spec.n_respondents = doc.value("n_respondents", spec.n_respondents);
    }
    require(o.seed_given, "--seed is required");
    spec.seed = o.seed;
    const auto world = generate_synthetic_world(spec);
    const auto dir = out_dir(o);
    write_json(dir / "bank.json", to_json(world.bank));
    write_json(dir / "abilities.json", to_json(world.abilities, spec.dim));
    std::ostringstream rows;
    write_response_matrix(rows, world.responses);
    write_text_file(dir / "responses.jsonl", rows.str());
    out << "wrote " << world.bank.size() << " items x " << world.abilities.size() << " respondents to " << dir.string()
        << "\n";
    return 0;
}

int cmd_fit_items(const Options& o, std::ostream& out) {
    const auto responses = load_responses(o.responses);
    IrtFitConfig config;
    config.dim = o.dim;
    config.max_iters = o.max_iters;
    config.seed = o.seed;
    const auto fit = fit_item_bank(responses, config);
    const auto dir = out_dir(o);
    write_json(dir / "bank.json", to_json(fit.bank));
    write_json(dir / "abilities.json", to_json(fit.abilities, config.dim));
    CsvTable trace({"sweep", "objective"});
    for (std::size_t i = 0; i < fit.objective_trace.size(); ++i) {
        trace.add_row({std::to_string(i + 1), format_number(fit.objective_trace[i])});
    }
    write_text_file(dir / "trace.csv", trace.str());
    out << "sweeps=" << fit.iterations << " converged=" << (fit.converged ? "true" : "false")
        << " gradient_norm=" << format_number(fit.gradient_norm) << "\n";
    return 0;
}

int cmd_ability(const Options& o, std::ostream& out) {
    const auto responses = load_responses(o.responses);
    require(!o.bank.empty(), "--bank is required");
    const auto full_bank = item_bank_from_json(read_json_file(o.bank));
    std::vector<std::size_t> positions;
    for (const auto& id : responses.item_ids()) {
        const auto& items = full_bank.items();
        const auto it = std::find_if(items.begin(), items.end(), [&id](const ItemParams& p) { return p.item_id == id; });
        require(it != items.end(), "ability: item " + id + " is not in the bank");
        positions.push_back(static_cast<std::size_t>(it - items.begin()));
    }
    const auto bank = full_bank.subset(positions);
    IrtFitConfig config;
    config.dim = bank.dim();
    config.max_iters = o.max_iters;
    std::vector<AbilityVector> abilities;
    for (std::size_t m = 0; m < responses.n_respondents(); ++m) {
        abilities.push_back(fit_ability(responses.respondent(m), bank, config, responses.respondent_ids()[m]));
    }
    write_json(out_dir(o) / "abilities.json", to_json(abilities, bank.dim()));
    out << "fitted " << abilities.size() << " abilities\n";
    return 0;
}

std::vector<EmbeddingMatrix> load_embeddings(const std::string& path, std::vector<std::string>& item_ids) {
    require(!path.empty(), "--embeddings is required for --method repr");
    const auto doc = read_json_file(path);
    require_version(doc, "embeddings");
    require(doc.contains("models") && doc["models"].is_array(), "embeddings: missing \"models\" array");
    item_ids = doc.value("item_ids", std::vector<std::string>{});
    std::vector<EmbeddingMatrix> out;
    for (const auto& model : doc["models"]) {
        const auto rows = model.get<std::vector<std::vector<double>>>();
        require(!rows.empty() && !rows.front().empty(), "embeddings: empty matrix");
        EmbeddingMatrix e;
        e.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            require(rows[r].size() == rows.front().size(), "embeddings: ragged matrix");
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                e.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

int cmd_extract(const Options& o, std::ostream& out) {
    require(o.seed_given, "--seed is required");
    SubsetSelection subset;
    if (o.method == "random") {
        std::size_t n = o.n_items;
        if (n == 0) {
            require(!o.bank.empty(), "extract: give --n or --bank");
            n = item_bank_from_json(read_json_file(o.bank)).size();
        }
        subset = extract_random(n, o.k, o.seed);
    } else if (o.method == "irt") {
        require(!o.bank.empty(), "--bank is required for --method irt");
        subset = extract_irt_cluster(item_bank_from_json(read_json_file(o.bank)), o.k, o.seed);
    } else if (o.method == "repr") {
        std::vector<std::string> ids;
        const auto embeddings = load_embeddings(o.embeddings, ids);
        subset = extract_repr_cluster(embeddings, o.k, o.pca_dim, o.seed, ids);
    } else {
        throw ContractError("extract: unknown method " + o.method);
    }
    write_json(out_dir(o) / "subset.json", to_json(subset));
    out << "selected " << subset.size() << " items\n";
    return 0;
}

std::string counter_line(const CostCounter& c) {
    std::string s = "total=" + std::to_string(c.total());
    for (const auto& [phase, count] : c.by_phase()) {
        s += " " + phase + "=" + std::to_string(count);
    }
    return s;
}

Json counter_json(const CostCounter& c) {
    Json phases = Json::object();
    for (const auto& [phase, count] : c.by_phase()) {
        phases[phase] = count;
    }
    return {{"total", c.total()}, {"by_phase", phases}};
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

Json score_json(const HeldoutScore& s) {
    return {{"task_a", s.task_a}, {"task_b", s.task_b}, {"combined", s.combined()}};
}

int cmd_evolve(const Options& o, std::ostream& out) {
    auto config = flagship_config_from_json(load_config(o));
    if (o.seed_given) {
        config.seed = o.seed;
        config.merge.evolve.seed = o.seed;
    }
    const auto dir = out_dir(o);
    const auto world = build_flagship_world(config);
    const auto outcome = run_flagship(world, config);

    write_text_file(dir / "log.jsonl", run_log_jsonl(outcome.result.log.records));
    const std::vector<std::string> names{"task_a", "task_b"};
    write_text_file(dir / "front.csv", front_csv(outcome.result.front, names));
    write_json(dir / "front.json", front_json(outcome.result.front));
    Json summary{{"version", kFormatVersion},
                 {"config", to_json(config)},
                 {"chosen", to_json(outcome.chosen)},
                 {"heldout",
                  {{"merged", score_json(outcome.merged)},
                   {"endpoint_a", score_json(outcome.endpoint_a)},
                   {"endpoint_b", score_json(outcome.endpoint_b)},
                   {"uniform_linear", score_json(outcome.uniform_linear)}}},
                 {"run_cost", counter_json(outcome.run_counter)},
                 {"pool_cost", counter_json(world.pool_counter)}};
    write_json(dir / "summary.json", summary);
    out << "evaluated " << outcome.result.log.records.size() << " candidates, front size "
        << outcome.result.front.members.size() << "\n";
    out << "held-out combined accuracy: merged " << fixed3(outcome.merged.combined()) << ", endpoint_a "
        << fixed3(outcome.endpoint_a.combined()) << ", endpoint_b " << fixed3(outcome.endpoint_b.combined())
        << ", uniform " << fixed3(outcome.uniform_linear.combined()) << "\n";
    out << "correctness evaluations: " << counter_line(outcome.run_counter) << "\n";
    return 0;
}

// Stability instances: minimize F(t) = 1 - predicted accuracy of the ability
// (1-t) gamma_1 + t gamma_2 over the full bank or a weighted subset.
struct StabilityInstance {
    LinearAbilityWorld world;
    std::size_t subset_size = 20;
    std::size_t draws = 50;
    std::size_t grid_points = 101;
};

StabilityInstance stability_instance(const Json& doc, std::uint64_t seed) {
    require_version(doc, "stability config");
    StabilityInstance s;
    const auto dim = doc.value("d", std::size_t{2});
    const auto n_items = doc.value("n_items", std::size_t{200});
    s.subset_size = doc.value("subset_size", s.subset_size);
    s.draws = doc.value("draws", s.draws);
    s.grid_points = doc.value("grid_points", s.grid_points);
    s.world = make_linear_ability_world(dim, n_items, 2, seed);
    return s;
}

GridObjective loss_on(const LinearAbilityWorld& w, const SubsetSelection& subset) {
    return [&w, subset](const Theta& t) {
        const Vector gamma = (1.0 - t[0]) * w.endpoints[0].gamma + t[0] * w.endpoints[1].gamma;
        double acc = 0.0;
        for (std::size_t k = 0; k < subset.size(); ++k) {
            acc += subset.weights[k] * irt_probability(gamma, w.bank[subset.indices[k]]);
        }
        return 1.0 - acc;
    };
}

SubsetSelection all_items(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return SubsetSelection::uniform(std::move(idx), "full");
}

int cmd_stability(const Options& o, std::ostream& out) {
    require(o.seed_given, "--seed is required");
    const auto doc = load_config(o);
    const auto dir = out_dir(o);
    if (o.mode == "bias") {
        require_version(doc, "stability config");
        const auto world = make_linear_ability_world(doc.value("d", std::size_t{2}), doc.value("n_items", std::size_t{200}),
                                                     2, o.seed);
        const auto sizes = doc.value("sizes", std::vector<std::size_t>{10, 20, 50, 100, 200});
        BiasOptions opts;
        opts.oracle_lambda = doc.value("oracle_lambda", false);
        const auto rows = bias_curve(world, sizes, doc.value("trials", std::size_t{200}), o.seed, opts);
        CsvTable t({"subset_size", "mean_bias", "mean_abs_error", "trials"});
        for (const auto& r : rows) {
            t.add_row({std::to_string(r.subset_size), format_number(r.mean_bias), format_number(r.mean_abs_error),
                       std::to_string(r.trials)});
        }
        write_text_file(dir / "bias.csv", t.str());
        out << "wrote " << rows.size() << " bias rows\n";
        return 0;
    }

    const auto inst = stability_instance(doc, o.seed);
    const auto grid = make_grid(1, inst.grid_points);
    const auto full = loss_on(inst.world, all_items(inst.world.bank.size()));
    const auto n = inst.world.bank.size();
    const SubsetObjectiveFactory factory = [&inst, n](std::size_t, std::uint64_t s) {
        return loss_on(inst.world, extract_random(n, inst.subset_size, s));
    };
    if (o.mode == "epsilon") {
        const auto report = empirical_epsilon(full, factory, grid, inst.draws, o.seed);
        CsvTable t({"theta", "mean_abs_gap"});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            t.add_row({format_number(grid[i][0]), format_number(report.per_theta_gaps[i])});
        }
        write_text_file(dir / "epsilon.csv", t.str());
        out << "epsilon_hat=" << format_number(report.epsilon_hat)
            << " gap_at_optimum=" << format_number(report.gap_at_optimum) << "\n";
        return 0;
    }
    if (o.mode == "gap") {
        CsvTable t({"draw", "gap", "epsilon", "holds", "full_argmin", "subset_argmin"});
        std::size_t violations = 0;
        for (std::size_t d = 0; d < inst.draws; ++d) {
            const auto sub = factory(d, derive_seed(o.seed, d, 0x57ab));
            const auto g = check_optimality_gap(full, sub, grid);
            violations += g.holds ? 0 : 1;
            t.add_row({std::to_string(d), format_number(g.gap), format_number(g.epsilon), g.holds ? "1" : "0",
                       std::to_string(g.full_argmin), std::to_string(g.subset_argmin)});
        }
        write_text_file(dir / "gap.csv", t.str());
        out << "draws=" << inst.draws << " violations=" << violations << "\n";
        return 0;
    }
    throw ContractError("stability: unknown mode " + o.mode);
}

int cmd_toy(const Options& o, std::ostream& out) {
    require(o.seed_given, "--seed is required");
    const BlobSpec spec{{{-2.0, 0.0}, {2.0, 0.0}}, {0, 1}, 0.6};
    const auto task = make_blob_task("toy", spec, 2, 200, 200, o.seed);
    TrainConfig tc;
    tc.epochs = o.epochs;
    tc.seed = o.seed;
    const auto model = train_toy_model(task, ToyArch{2, o.hidden, 2}, tc);
    CostCounter counter;
    const auto train = evaluate_correctness(model, task.train, counter, "baseline");
    const auto test = evaluate_correctness(model, task.test, counter, "baseline");
    auto acc = [](const Correctness& y) {
        return static_cast<double>(std::accumulate(y.begin(), y.end(), std::size_t{0})) / static_cast<double>(y.size());
    };
    write_json(out_dir(o) / "model.json", to_json(model.parameters));
    out << "train_accuracy=" << fixed3(acc(train)) << " test_accuracy=" << fixed3(acc(test)) << "\n";
    return 0;
}

int cmd_cost(const Options& o, std::ostream& out) {
    bool did = false;
    if (o.throughput > 0.0) {
        out << format_hours(cost_model(o.n_models, o.throughput)) << "\n";
        did = true;
    }
    if (o.reduced_evals > 0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f", evaluation_reduction_ratio(o.full_evals, o.reduced_evals));
        out << "reduction " << buf << "x\n";
        did = true;
    }
    require(did, "cost: give --n and --r, or --full and --reduced");
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evolutionary model merging with IRT-estimated fitness", "merge3"};
    app.require_subcommand(1);
    Options o;

    auto seed_flag = [&o](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Random seed")->each([&o](const std::string&) { o.seed_given = true; });
    };

    auto* world = app.add_subcommand("world", "Generate a synthetic IRT world");
    world->add_option("--config", o.config, "World config JSON");
    world->add_option("--out", o.out, "Output directory")->required();
    seed_flag(world);

    auto* fit = app.add_subcommand("fit-items", "Fit an item bank to a response matrix");
    fit->add_option("--responses", o.responses, "Responses JSONL")->required();
    fit->add_option("--dim", o.dim, "Ability dimension");
    fit->add_option("--max-iters", o.max_iters, "Maximum sweeps");
    fit->add_option("--out", o.out, "Output directory")->required();
    seed_flag(fit);

    auto* ability = app.add_subcommand("ability", "Fit abilities against a frozen bank");
    ability->add_option("--responses", o.responses, "Responses JSONL")->required();
    ability->add_option("--bank", o.bank, "Item bank JSON")->required();
    ability->add_option("--max-iters", o.max_iters, "Maximum iterations");
    ability->add_option("--out", o.out, "Output directory")->required();

    auto* extract = app.add_subcommand("extract", "Select a reduced fitness subset");
    extract->add_option("--method", o.method, "random, irt or repr")->check(CLI::IsMember({"random", "irt", "repr"}));
    extract->add_option("--k", o.k, "Subset size")->required();
    extract->add_option("--n", o.n_items, "Dataset size (random)");
    extract->add_option("--bank", o.bank, "Item bank JSON");
    extract->add_option("--embeddings", o.embeddings, "Embeddings JSON (repr)");
    extract->add_option("--pca-dim", o.pca_dim, "PCA dimension (repr)");
    extract->add_option("--out", o.out, "Output directory")->required();
    seed_flag(extract);

    auto* evolve_cmd = app.add_subcommand("evolve", "Run the toy merge search");
    evolve_cmd->add_option("--config", o.config, "Run config JSON")->required();
    evolve_cmd->add_option("--out", o.out, "Output directory")->required();
    seed_flag(evolve_cmd);

    auto* stability = app.add_subcommand("stability", "Subset stability checks");
    stability->add_option("--mode", o.mode, "epsilon, gap or bias")->check(CLI::IsMember({"epsilon", "gap", "bias"}));
    stability->add_option("--config", o.config, "Stability config JSON")->required();
    stability->add_option("--out", o.out, "Output directory")->required();
    seed_flag(stability);

    auto* toy = app.add_subcommand("toy", "Train a toy classifier");
    toy->add_option("--epochs", o.epochs, "Training epochs");
    toy->add_option("--hidden", o.hidden, "Hidden width");
    toy->add_option("--out", o.out, "Output directory")->required();
    seed_flag(toy);

    auto* cost = app.add_subcommand("cost", "Evaluation-time arithmetic");
    cost->add_option("--n", o.n_models, "Number of models evaluated");
    cost->add_option("--r", o.throughput, "Throughput in models per hour");
    cost->add_option("--full", o.full_evals, "Correctness evaluations of the full run");
    cost->add_option("--reduced", o.reduced_evals, "Correctness evaluations of the reduced run");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*world) return cmd_world(o, out);
        if (*fit) return cmd_fit_items(o, out);
        if (*ability) return cmd_ability(o, out);
        if (*extract) return cmd_extract(o, out);
        if (*evolve_cmd) return cmd_evolve(o, out);
        if (*stability) return cmd_stability(o, out);
        if (*toy) return cmd_toy(o, out);
        if (*cost) return cmd_cost(o, out);
    } catch (const ContractError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return cli_main(args, std::cout, std::cerr);
}

} // namespace merge3
