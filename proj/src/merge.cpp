#include "merge3/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "merge3/error.hpp"
#include "merge3/random.hpp"

namespace merge3 {

using Eigen::VectorXd;

void ParameterVector::validate() const {
    require(values.allFinite(), "ParameterVector '" + model_id + "': non-finite entries");
    if (!shape_manifest.empty()) {
        std::size_t total = 0;
        for (const auto& s : shape_manifest) {
            total += s.length;
        }
        require(total == size(), "ParameterVector '" + model_id + "': manifest does not cover the vector");
    }
}

TaskVector task_vector(const ParameterVector& base, const ParameterVector& finetuned) {
    require(base.size() == finetuned.size(), "task_vector: length mismatch");
    return {finetuned.values - base.values};
}

std::string_view to_string(MergeMethod method) noexcept {
    switch (method) {
    case MergeMethod::linear: return "linear";
    case MergeMethod::slerp: return "slerp";
    case MergeMethod::task_arithmetic: return "task_arithmetic";
    case MergeMethod::ties: return "ties";
    case MergeMethod::dare_ties: return "dare_ties";
    case MergeMethod::dare_ta: return "dare_ta";
    }
    return "unknown";
}

MergeMethod merge_method_from_string(std::string_view name) {
    for (auto m : {MergeMethod::linear, MergeMethod::slerp, MergeMethod::task_arithmetic, MergeMethod::ties,
                   MergeMethod::dare_ties, MergeMethod::dare_ta}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ContractError("unknown merge method '" + std::string(name) + "'");
}

void MergeRecipe::validate(std::size_t n_endpoints) const {
    require(n_endpoints >= 1, "MergeRecipe: need at least one endpoint");
    require(density > 0.0 && density <= 1.0, "MergeRecipe: density must lie in (0, 1]");
    for (double c : coefficients) {
        require(std::isfinite(c), "MergeRecipe: non-finite coefficient");
    }
    if (method == MergeMethod::slerp) {
        require(n_endpoints == 2, "MergeRecipe: slerp requires exactly two endpoints");
        require(coefficients.size() == 1, "MergeRecipe: slerp takes a single t");
        require(coefficients[0] >= 0.0 && coefficients[0] <= 1.0, "MergeRecipe: slerp t must lie in [0, 1]");
    } else {
        require(coefficients.size() == n_endpoints, "MergeRecipe: one coefficient per endpoint required");
    }
}

namespace {

void require_same_length(std::size_t expected, std::size_t actual, const char* op) {
    require(expected == actual, std::string(op) + ": length mismatch");
}

ParameterVector like(const ParameterVector& shape, VectorXd values, std::string id) {
    return {std::move(values), std::move(id), shape.shape_manifest};
}

} // namespace

ParameterVector merge_linear(std::span<const ParameterVector> endpoints, std::span<const double> weights) {
    require(!endpoints.empty(), "merge_linear: no endpoints");
    require(weights.size() == endpoints.size(), "merge_linear: one weight per endpoint required");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w), "merge_linear: non-finite weight");
        total += w;
    }
    const auto n = endpoints.front().size();
    VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < endpoints.size(); ++j) {
        require_same_length(n, endpoints[j].size(), "merge_linear");
        const double w = total != 0.0 ? weights[j] / total : 1.0 / static_cast<double>(endpoints.size());
        out += w * endpoints[j].values;
    }
    return like(endpoints.front(), std::move(out), "linear");
}

ParameterVector merge_slerp(const ParameterVector& a, const ParameterVector& b, double t) {
    require_same_length(a.size(), b.size(), "merge_slerp");
    require(t >= 0.0 && t <= 1.0, "merge_slerp: t must lie in [0, 1]");
    const double na = a.values.norm();
    const double nb = b.values.norm();
    require(na > 0.0 && nb > 0.0, "merge_slerp: zero vector");
    const double cos_omega = std::clamp(a.values.dot(b.values) / (na * nb), -1.0, 1.0);
    if (std::abs(cos_omega) > 1.0 - kSlerpCollinear) {
        return like(a, (1.0 - t) * a.values + t * b.values, "slerp");
    }
    const double omega = std::acos(cos_omega);
    const double sin_omega = std::sin(omega);
    const double wa = std::sin((1.0 - t) * omega) / sin_omega;
    const double wb = std::sin(t * omega) / sin_omega;
    return like(a, wa * a.values + wb * b.values, "slerp");
}

ParameterVector merge_task_arithmetic(const ParameterVector& base, std::span<const TaskVector> tasks,
                                      std::span<const double> lambdas) {
    require(tasks.size() == lambdas.size(), "merge_task_arithmetic: one lambda per task vector required");
    VectorXd out = base.values;
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        require_same_length(base.size(), static_cast<std::size_t>(tasks[j].delta.size()), "merge_task_arithmetic");
        out += lambdas[j] * tasks[j].delta;
    }
    return like(base, std::move(out), "task_arithmetic");
}

VectorXd trim_top_magnitude(const VectorXd& v, double density) {
    require(density > 0.0 && density <= 1.0, "trim_top_magnitude: density must lie in (0, 1]");
    const auto n = static_cast<std::size_t>(v.size());
    const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(density * static_cast<double>(n) - 1e-12)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) {
        return std::abs(v[static_cast<Eigen::Index>(a)]) > std::abs(v[static_cast<Eigen::Index>(b)]);
    });
    VectorXd out = VectorXd::Zero(v.size());
    for (std::size_t k = 0; k < keep; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        out[i] = v[i];
    }
    return out;
}

namespace {

VectorXd ties_combine(std::span<const VectorXd> trimmed) {
    const auto n = trimmed.front().size();
    VectorXd merged = VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& t : trimmed) {
            sum += t[i];
        }
        const double sign = sum >= 0.0 ? 1.0 : -1.0;
        double agree = 0.0;
        std::size_t count = 0;
        for (const auto& t : trimmed) {
            if (t[i] != 0.0 && (t[i] > 0.0) == (sign > 0.0)) {
                agree += t[i];
                ++count;
            }
        }
        merged[i] = count > 0 ? agree / static_cast<double>(count) : 0.0;
    }
    return merged;
}

} // namespace

ParameterVector merge_ties(const ParameterVector& base, std::span<const TaskVector> tasks,
                           std::span<const double> lambdas, double density) {
    require(!tasks.empty(), "merge_ties: no task vectors");
    require(tasks.size() == lambdas.size(), "merge_ties: one lambda per task vector required");
    std::vector<VectorXd> trimmed;
    trimmed.reserve(tasks.size());
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        require_same_length(base.size(), static_cast<std::size_t>(tasks[j].delta.size()), "merge_ties");
        trimmed.push_back(lambdas[j] * trim_top_magnitude(tasks[j].delta, density));
    }
    return like(base, base.values + ties_combine(trimmed), "ties");
}

TaskVector dare_drop(const TaskVector& task, double keep_rate, std::uint64_t seed, std::size_t task_index) {
    require(keep_rate > 0.0 && keep_rate <= 1.0, "dare_drop: keep rate must lie in (0, 1]");
    if (keep_rate == 1.0) {
        return task;
    }
    TaskVector out{VectorXd::Zero(task.delta.size())};
    const std::uint64_t stream = derive_seed(seed, task_index, 0xda2e);
    for (Eigen::Index i = 0; i < task.delta.size(); ++i) {
        const double u = unit_from_bits(mix64(stream ^ mix64(static_cast<std::uint64_t>(i))));
        if (u < keep_rate) {
            out.delta[i] = task.delta[i] / keep_rate;
        }
    }
    return out;
}

ParameterVector merge_dare(const ParameterVector& base, std::span<const TaskVector> tasks,
                           std::span<const double> lambdas, double keep_rate, std::uint64_t seed, DareCombiner then) {
    std::vector<TaskVector> dropped;
    dropped.reserve(tasks.size());
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        dropped.push_back(dare_drop(tasks[j], keep_rate, seed, j));
    }
    if (then == DareCombiner::ties) {
        // DARE already sparsifies; TIES then only elects signs and takes disjoint means.
        auto out = merge_ties(base, dropped, lambdas, 1.0);
        out.model_id = "dare_ties";
        return out;
    }
    auto out = merge_task_arithmetic(base, dropped, lambdas);
    out.model_id = "dare_ta";
    return out;
}

ParameterVector apply_recipe(const MergeRecipe& recipe, const ParameterVector& base,
                             std::span<const ParameterVector> endpoints) {
    recipe.validate(endpoints.size());
    const auto& c = recipe.coefficients;
    auto task_vectors = [&] {
        std::vector<TaskVector> tasks;
        tasks.reserve(endpoints.size());
        for (const auto& e : endpoints) {
            tasks.push_back(task_vector(base, e));
        }
        return tasks;
    };
    switch (recipe.method) {
    case MergeMethod::linear: return merge_linear(endpoints, c);
    case MergeMethod::slerp: return merge_slerp(endpoints[0], endpoints[1], c[0]);
    case MergeMethod::task_arithmetic: return merge_task_arithmetic(base, task_vectors(), c);
    case MergeMethod::ties: return merge_ties(base, task_vectors(), c, recipe.density);
    case MergeMethod::dare_ties:
        return merge_dare(base, task_vectors(), c, recipe.density, recipe.seed, DareCombiner::ties);
    case MergeMethod::dare_ta:
        return merge_dare(base, task_vectors(), c, recipe.density, recipe.seed, DareCombiner::task_arithmetic);
    }
    throw ContractError("apply_recipe: unknown method");
}

} // namespace merge3
