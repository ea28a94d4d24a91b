#include "merge3/toy.hpp"

#include <cmath>
#include <cstdio>

#include "merge3/error.hpp"
#include "merge3/random.hpp"

namespace merge3 {

void ToyTask::validate() const {
    require(n_classes >= 2, "ToyTask: need at least two classes");
    require(!train.empty() && !test.empty(), "ToyTask: empty split");
    for (const auto* split : {&train, &test}) {
        for (const auto& p : *split) {
            require(p.label >= 0 && p.label < n_classes, "ToyTask: label out of range");
        }
    }
    for (const auto& a : train) {
        for (const auto& b : test) {
            require(a.item_id != b.item_id, "ToyTask: train and test share item '" + a.item_id + "'");
        }
    }
}

std::vector<LabeledPoint> sample_blobs(const BlobSpec& spec, std::size_t n, std::uint64_t seed,
                                       const std::string& id_prefix) {
    require(!spec.centers.empty() && spec.centers.size() == spec.labels.size(),
            "sample_blobs: one label per centre required");
    auto rng = make_rng(seed, {0xb10b});
    std::normal_distribution<double> noise(0.0, spec.spread);
    std::vector<LabeledPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = i % spec.centers.size();
        LabeledPoint p;
        p.x = {spec.centers[c][0] + noise(rng), spec.centers[c][1] + noise(rng)};
        p.label = spec.labels[c];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%05zu", id_prefix.c_str(), i);
        p.item_id = buf;
        out.push_back(std::move(p));
    }
    return out;
}

ToyTask make_blob_task(const std::string& task_id, const BlobSpec& spec, int n_classes, std::size_t n_train,
                       std::size_t n_test, std::uint64_t seed) {
    ToyTask task;
    task.task_id = task_id;
    task.n_classes = n_classes;
    task.train = sample_blobs(spec, n_train, derive_seed(seed, 1), task_id + "/train/");
    task.test = sample_blobs(spec, n_test, derive_seed(seed, 2), task_id + "/test/");
    task.validate();
    return task;
}

std::size_t ToyArch::parameter_count() const noexcept {
    return hidden * input + hidden + classes * hidden + classes;
}

std::vector<Segment> ToyArch::manifest() const {
    return {{"w1", hidden * input}, {"b1", hidden}, {"w2", classes * hidden}, {"b2", classes}};
}

void ToyModel::validate() const {
    parameters.validate();
    require(parameters.size() == arch.parameter_count(), "ToyModel: parameter count does not match architecture");
    const auto expected = arch.manifest();
    require(parameters.shape_manifest.size() == expected.size(), "ToyModel: manifest does not match architecture");
    for (std::size_t s = 0; s < expected.size(); ++s) {
        require(parameters.shape_manifest[s].name == expected[s].name &&
                    parameters.shape_manifest[s].length == expected[s].length,
                "ToyModel: manifest does not match architecture");
    }
}

namespace {

// Views into the flat parameter vector: W1 (hidden x input), b1, W2 (classes x hidden), b2.
struct Layout {
    Eigen::Index w1, b1, w2, b2;
    explicit Layout(const ToyArch& a)
        : w1(0), b1(static_cast<Eigen::Index>(a.hidden * a.input)),
          w2(b1 + static_cast<Eigen::Index>(a.hidden)),
          b2(w2 + static_cast<Eigen::Index>(a.classes * a.hidden)) {}
};

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Weights {
    RowMajor w1;
    Vector b1;
    RowMajor w2;
    Vector b2;
};

Weights unpack(const ToyModel& m) {
    const auto& a = m.arch;
    const Layout l(a);
    const auto h = static_cast<Eigen::Index>(a.hidden);
    const auto in = static_cast<Eigen::Index>(a.input);
    const auto c = static_cast<Eigen::Index>(a.classes);
    const auto& v = m.parameters.values;
    return {Eigen::Map<const RowMajor>(v.data() + l.w1, h, in), v.segment(l.b1, h),
            Eigen::Map<const RowMajor>(v.data() + l.w2, c, h), v.segment(l.b2, c)};
}

void pack(const Weights& w, ToyModel& m) {
    const Layout l(m.arch);
    auto& v = m.parameters.values;
    Eigen::Map<RowMajor>(v.data() + l.w1, w.w1.rows(), w.w1.cols()) = w.w1;
    v.segment(l.b1, w.b1.size()) = w.b1;
    Eigen::Map<RowMajor>(v.data() + l.w2, w.w2.rows(), w.w2.cols()) = w.w2;
    v.segment(l.b2, w.b2.size()) = w.b2;
}

Vector logits(const Weights& w, const std::array<double, 2>& x) {
    const Eigen::Vector2d in(x[0], x[1]);
    const Vector hidden = (w.w1 * in + w.b1).array().tanh().matrix();
    return w.w2 * hidden + w.b2;
}

} // namespace

ToyModel init_toy_model(const ToyArch& arch, std::uint64_t seed, std::string model_id) {
    require(arch.input == 2, "ToyArch: input width must be 2");
    require(arch.hidden >= 1 && arch.classes >= 2, "ToyArch: invalid widths");
    ToyModel m;
    m.arch = arch;
    m.parameters.values = Vector::Zero(static_cast<Eigen::Index>(arch.parameter_count()));
    m.parameters.model_id = std::move(model_id);
    m.parameters.shape_manifest = arch.manifest();
    auto rng = make_rng(seed, {0x1e17});
    std::normal_distribution<double> normal(0.0, 1.0);
    const Layout l(arch);
    auto& v = m.parameters.values;
    for (Eigen::Index i = l.w1; i < l.b1; ++i) {
        v[i] = normal(rng) / std::sqrt(static_cast<double>(arch.input));
    }
    for (Eigen::Index i = l.w2; i < l.b2; ++i) {
        v[i] = normal(rng) / std::sqrt(static_cast<double>(arch.hidden));
    }
    return m;
}

TrainResult train_from(const ToyModel& start, std::span<const LabeledPoint> data, const TrainConfig& config) {
    start.validate();
    require(!data.empty(), "train: empty training set");
    require(config.learning_rate > 0.0, "train: learning rate must be positive");
    const auto& a = start.arch;
    for (const auto& p : data) {
        require(p.label >= 0 && static_cast<std::size_t>(p.label) < a.classes, "train: label out of range");
    }
    TrainResult out;
    out.model = start;
    Weights w = unpack(start);
    const auto h = static_cast<Eigen::Index>(a.hidden);
    const auto c = static_cast<Eigen::Index>(a.classes);
    const double inv_n = 1.0 / static_cast<double>(data.size());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        RowMajor g_w1 = RowMajor::Zero(h, 2);
        Vector g_b1 = Vector::Zero(h);
        RowMajor g_w2 = RowMajor::Zero(c, h);
        Vector g_b2 = Vector::Zero(c);
        double loss = 0.0;
        for (const auto& p : data) {
            const Eigen::Vector2d in(p.x[0], p.x[1]);
            const Vector hidden = (w.w1 * in + w.b1).array().tanh().matrix();
            const Vector z = w.w2 * hidden + w.b2;
            const double zmax = z.maxCoeff();
            Vector prob = (z.array() - zmax).exp().matrix();
            const double norm = prob.sum();
            prob /= norm;
            loss -= (z[p.label] - zmax) - std::log(norm);
            // dL/dz = softmax - onehot
            Vector dz = prob;
            dz[p.label] -= 1.0;
            g_w2 += dz * hidden.transpose();
            g_b2 += dz;
            const Vector dh = (w.w2.transpose() * dz).array() * (1.0 - hidden.array().square());
            g_w1 += dh * in.transpose();
            g_b1 += dh;
        }
        loss *= inv_n;
        if (!std::isfinite(loss)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "train: loss diverged at epoch %zu (learning rate %g)", epoch,
                          config.learning_rate);
            throw RuntimeError(buf);
        }
        out.loss_trace.push_back(loss);
        const double step = config.learning_rate * inv_n;
        w.w1 -= step * g_w1;
        w.b1 -= step * g_b1;
        w.w2 -= step * g_w2;
        w.b2 -= step * g_b2;
        if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
            ToyModel snap = out.model;
            pack(w, snap);
            snap.parameters.model_id = start.parameters.model_id + "@" + std::to_string(epoch + 1);
            out.checkpoints.push_back(std::move(snap));
        }
    }
    pack(w, out.model);
    if (!out.model.parameters.values.allFinite()) {
        throw RuntimeError("train: parameters diverged");
    }
    return out;
}

ToyModel train_toy_model(const ToyTask& task, const ToyArch& arch, const TrainConfig& config) {
    task.validate();
    require(arch.classes >= static_cast<std::size_t>(task.n_classes), "train_toy_model: too few output classes");
    auto start = init_toy_model(arch, config.seed, task.task_id);
    auto result = train_from(start, task.train, config);
    result.model.task_tags = {task.task_id};
    return std::move(result.model);
}

int predict(const ToyModel& model, const std::array<double, 2>& x) {
    const Vector z = logits(unpack(model), x);
    Eigen::Index arg = 0;
    z.maxCoeff(&arg);
    return static_cast<int>(arg);
}

CostCounter::CostCounter(const CostCounter& other) {
    std::lock_guard lock(other.mutex_);
    total_ = other.total_;
    by_phase_ = other.by_phase_;
}

CostCounter& CostCounter::operator=(const CostCounter& other) {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        total_ = other.total_;
        by_phase_ = other.by_phase_;
    }
    return *this;
}

void CostCounter::add(const std::string& phase, std::size_t count) {
    std::lock_guard lock(mutex_);
    total_ += count;
    by_phase_[phase] += count;
}

std::size_t CostCounter::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

std::size_t CostCounter::phase(const std::string& name) const {
    std::lock_guard lock(mutex_);
    const auto it = by_phase_.find(name);
    return it == by_phase_.end() ? 0 : it->second;
}

std::map<std::string, std::size_t> CostCounter::by_phase() const {
    std::lock_guard lock(mutex_);
    return by_phase_;
}

Correctness evaluate_correctness(const ToyModel& model, std::span<const LabeledPoint> items, CostCounter& counter,
                                 const std::string& phase) {
    const auto w = unpack(model);
    Correctness out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        Eigen::Index arg = 0;
        logits(w, items[i].x).maxCoeff(&arg);
        out[i] = static_cast<int>(arg) == items[i].label ? 1 : 0;
    }
    counter.add(phase, items.size());
    return out;
}

ResponseMatrix build_pool_responses(std::span<const ToyModel> models, std::span<const LabeledPoint> items,
                                    CostCounter& counter) {
    require(models.size() >= 2, "build_pool_responses: need at least two models");
    std::vector<std::string> item_ids;
    item_ids.reserve(items.size());
    for (const auto& p : items) {
        item_ids.push_back(p.item_id);
    }
    std::vector<std::string> respondent_ids;
    for (std::size_t m = 0; m < models.size(); ++m) {
        auto id = models[m].parameters.model_id;
        respondent_ids.push_back(id.empty() ? "pool" + std::to_string(m) : id + "#" + std::to_string(m));
    }
    ResponseMatrix out(std::move(item_ids), std::move(respondent_ids));
    for (std::size_t m = 0; m < models.size(); ++m) {
        out.set_respondent(m, evaluate_correctness(models[m], items, counter, "pool"));
    }
    return out;
}

ToyModel perturb(const ToyModel& model, double sigma, std::uint64_t seed, std::string model_id) {
    require(sigma >= 0.0, "perturb: sigma must be >= 0");
    ToyModel out = model;
    auto rng = make_rng(seed, {0x9e27});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < out.parameters.values.size(); ++i) {
        out.parameters.values[i] += sigma * normal(rng);
    }
    out.parameters.model_id = std::move(model_id);
    return out;
}

ToyModel with_parameters(const ToyModel& like, ParameterVector parameters) {
    ToyModel out;
    out.arch = like.arch;
    out.parameters = std::move(parameters);
    if (out.parameters.shape_manifest.empty()) {
        out.parameters.shape_manifest = like.arch.manifest();
    }
    out.validate();
    return out;
}

} // namespace merge3
