#pragma once

// The desk-scale flagship: two toy classifiers fine-tuned from a shared base
// on disjoint 2-class tasks, an IRT item bank fitted on a pool of checkpoints
// and perturbed variants, and a MERGE3 run scored on held-out data.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "merge3/io.hpp"
#include "merge3/pipeline.hpp"
#include "merge3/toy.hpp"

namespace merge3 {

struct FlagshipConfig {
    std::uint64_t seed = 7;
    std::size_t hidden = 16;
    double spread = 1.0;
    std::size_t n_train = 200;
    /// |D| per task.
    std::size_t n_fitness = 500;
    std::size_t n_heldout = 500;
    /// |D-bar| per task.
    std::size_t subset_size = 20;
    std::string extraction = "random";
    std::size_t base_epochs = 0;
    std::size_t epochs_a = 300;
    std::size_t epochs_b = 30;
    double learning_rate = 0.5;
    std::size_t checkpoint_every = 20;
    std::vector<double> perturb_sigmas{0.05, 0.1, 0.2, 0.4};
    std::size_t perturb_per_sigma = 2;
    std::size_t irt_dim = 2;
    Merge3Config merge{};

    FlagshipConfig();
    void validate() const;
};

[[nodiscard]] FlagshipConfig flagship_config_from_json(const Json& doc);
[[nodiscard]] Json to_json(const FlagshipConfig& config);
[[nodiscard]] EvolveConfig evolve_config_from_json(const Json& doc, EvolveConfig defaults = {});

struct FlagshipWorld {
    ToyTask task_a;
    ToyTask task_b;
    std::vector<LabeledPoint> heldout_a;
    std::vector<LabeledPoint> heldout_b;
    ToyModel base;
    ToyModel endpoint_a;
    ToyModel endpoint_b;
    std::vector<ToyModel> pool;
    /// D: task A fitness items followed by task B fitness items.
    std::vector<LabeledPoint> items;
    ItemBank bank;
    bool bank_converged = false;
    /// Pool evaluations; not part of a run's cost.
    CostCounter pool_counter;
};

[[nodiscard]] FlagshipWorld build_flagship_world(const FlagshipConfig& config);

struct HeldoutScore {
    double task_a = 0.0;
    double task_b = 0.0;
    [[nodiscard]] double combined() const noexcept { return 0.5 * (task_a + task_b); }
};

struct FlagshipOutcome {
    Merge3Result result;
    Candidate chosen;
    HeldoutScore merged;
    HeldoutScore endpoint_a;
    HeldoutScore endpoint_b;
    HeldoutScore uniform_linear;
    /// Estimate and evolve phases of the run.
    CostCounter run_counter;
    /// Held-out scoring, phase "baseline".
    CostCounter report_counter;
    std::vector<ObjectiveSpec> objectives;
};

[[nodiscard]] HeldoutScore score_heldout(const FlagshipWorld& world, const ParameterVector& parameters,
                                         CostCounter& counter);

/// Runs MERGE3 on the world and reports held-out accuracy of the front member
/// with the best mean estimated fitness.
[[nodiscard]] FlagshipOutcome run_flagship(const FlagshipWorld& world, const FlagshipConfig& config);

} // namespace merge3
