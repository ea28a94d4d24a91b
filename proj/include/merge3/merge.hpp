#pragma once

// Parameter-space merge operators over flat weight vectors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace merge3 {

struct Segment {
    std::string name;
    std::size_t length = 0;
};

struct ParameterVector {
    Eigen::VectorXd values;
    std::string model_id;
    std::vector<Segment> shape_manifest;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    /// Segment lengths sum to the vector length and every entry is finite.
    void validate() const;
};

/// Fine-tuned minus base.
struct TaskVector {
    Eigen::VectorXd delta;
};

[[nodiscard]] TaskVector task_vector(const ParameterVector& base, const ParameterVector& finetuned);

enum class MergeMethod { linear, slerp, task_arithmetic, ties, dare_ties, dare_ta };

[[nodiscard]] std::string_view to_string(MergeMethod method) noexcept;
[[nodiscard]] MergeMethod merge_method_from_string(std::string_view name);

struct MergeRecipe {
    MergeMethod method = MergeMethod::linear;
    /// Per-endpoint weights, or the single interpolation parameter t for SLERP.
    std::vector<double> coefficients;
    /// TIES trim density / DARE keep rate, in (0, 1].
    double density = 1.0;
    std::uint64_t seed = 0;

    void validate(std::size_t n_endpoints) const;
};

/// Weighted average; weights are normalized to sum to 1 (uniform if they sum to 0).
[[nodiscard]] ParameterVector merge_linear(std::span<const ParameterVector> endpoints, std::span<const double> weights);

/// Spherical interpolation on the whole flattened vectors. Falls back to linear
/// interpolation when |cos(angle)| > 1 - kSlerpCollinear.
[[nodiscard]] ParameterVector merge_slerp(const ParameterVector& a, const ParameterVector& b, double t);

constexpr double kSlerpCollinear = 1e-7;

[[nodiscard]] ParameterVector merge_task_arithmetic(const ParameterVector& base, std::span<const TaskVector> tasks,
                                                    std::span<const double> lambdas);

/// Keeps the ceil(density * n) largest-magnitude coordinates of v (ties keep the
/// lower index) and zeroes the rest.
[[nodiscard]] Eigen::VectorXd trim_top_magnitude(const Eigen::VectorXd& v, double density);

/// Trim, elect sign, disjoint mean. lambdas scale each trimmed task vector
/// before the sign election; a zero coordinate sum elects '+'.
[[nodiscard]] ParameterVector merge_ties(const ParameterVector& base, std::span<const TaskVector> tasks,
                                         std::span<const double> lambdas, double density);

enum class DareCombiner { ties, task_arithmetic };

/// Bernoulli(keep_rate) drop of each coordinate with 1/keep_rate rescaling of
/// the survivors. The draw for (seed, task index, coordinate) is fixed, so the
/// mask does not depend on evaluation order.
[[nodiscard]] TaskVector dare_drop(const TaskVector& task, double keep_rate, std::uint64_t seed,
                                   std::size_t task_index);

[[nodiscard]] ParameterVector merge_dare(const ParameterVector& base, std::span<const TaskVector> tasks,
                                         std::span<const double> lambdas, double keep_rate, std::uint64_t seed,
                                         DareCombiner then);

/// Dispatches a recipe. Linear and SLERP combine the endpoints directly; the
/// task-vector methods work on endpoint - base.
[[nodiscard]] ParameterVector apply_recipe(const MergeRecipe& recipe, const ParameterVector& base,
                                           std::span<const ParameterVector> endpoints);

} // namespace merge3
