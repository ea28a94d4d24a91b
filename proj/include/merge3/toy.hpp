#pragma once

// Desk-scale stand-ins for fine-tuned endpoint models: small one-hidden-layer
// tanh/softmax classifiers on 2-D point tasks, trained with explicit
// backpropagation. Their correctness on task items is real data for the IRT
// and estimator machinery.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "merge3/irt.hpp"
#include "merge3/merge.hpp"

namespace merge3 {

struct LabeledPoint {
    std::array<double, 2> x{};
    int label = 0;
    std::string item_id;
};

/// Gaussian class blobs. Each class has one centre; points are centre + N(0, spread^2 I).
struct BlobSpec {
    std::vector<std::array<double, 2>> centers;
    std::vector<int> labels;
    double spread = 0.5;
};

struct ToyTask {
    std::string task_id;
    std::vector<LabeledPoint> train;
    std::vector<LabeledPoint> test;
    int n_classes = 2;

    void validate() const;
};

/// Samples n points cycling through the blob classes. Item ids are prefix + index.
[[nodiscard]] std::vector<LabeledPoint> sample_blobs(const BlobSpec& spec, std::size_t n, std::uint64_t seed,
                                                     const std::string& id_prefix);

[[nodiscard]] ToyTask make_blob_task(const std::string& task_id, const BlobSpec& spec, int n_classes,
                                     std::size_t n_train, std::size_t n_test, std::uint64_t seed);

struct ToyArch {
    std::size_t input = 2;
    std::size_t hidden = 16;
    std::size_t classes = 2;

    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] std::vector<Segment> manifest() const;
};

struct ToyModel {
    ToyArch arch;
    ParameterVector parameters;
    std::vector<std::string> task_tags;

    void validate() const;
};

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
    /// Record a copy of the parameters every this many epochs (0 = never).
    std::size_t checkpoint_every = 0;
};

/// Random initialization: weights N(0, 1/fan_in), biases 0.
[[nodiscard]] ToyModel init_toy_model(const ToyArch& arch, std::uint64_t seed, std::string model_id = "init");

struct TrainResult {
    ToyModel model;
    std::vector<ToyModel> checkpoints;
    std::vector<double> loss_trace;
};

/// Full-batch gradient descent on mean softmax cross-entropy, starting from `start`.
[[nodiscard]] TrainResult train_from(const ToyModel& start, std::span<const LabeledPoint> data,
                                     const TrainConfig& config);

/// Trains a freshly initialized model (init seed = config.seed) on the task's train split.
[[nodiscard]] ToyModel train_toy_model(const ToyTask& task, const ToyArch& arch, const TrainConfig& config);

[[nodiscard]] int predict(const ToyModel& model, const std::array<double, 2>& x);

/// Thread-safe tally of correctness evaluations by phase.
class CostCounter {
public:
    CostCounter() = default;
    CostCounter(const CostCounter& other);
    CostCounter& operator=(const CostCounter& other);

    void add(const std::string& phase, std::size_t count);
    [[nodiscard]] std::size_t total() const;
    [[nodiscard]] std::size_t phase(const std::string& name) const;
    [[nodiscard]] std::map<std::string, std::size_t> by_phase() const;

private:
    mutable std::mutex mutex_;
    std::size_t total_ = 0;
    std::map<std::string, std::size_t> by_phase_;
};

/// 0/1 correctness per item; adds items.size() evaluations to `phase`.
[[nodiscard]] Correctness evaluate_correctness(const ToyModel& model, std::span<const LabeledPoint> items,
                                               CostCounter& counter, const std::string& phase = "evolve");

/// Stacks the correctness of each model into an (item, respondent) matrix.
[[nodiscard]] ResponseMatrix build_pool_responses(std::span<const ToyModel> models,
                                                  std::span<const LabeledPoint> items, CostCounter& counter);

/// Copy of `model` with N(0, sigma^2) noise added to every parameter.
[[nodiscard]] ToyModel perturb(const ToyModel& model, double sigma, std::uint64_t seed, std::string model_id);

/// Same architecture with a different parameter vector.
[[nodiscard]] ToyModel with_parameters(const ToyModel& like, ParameterVector parameters);

} // namespace merge3
