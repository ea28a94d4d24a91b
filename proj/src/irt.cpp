#include "merge3/irt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "logistic.hpp"
#include "merge3/error.hpp"
#include "merge3/random.hpp"

namespace merge3 {

namespace {

std::string padded_id(const char* prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%05zu", prefix, index);
    return buf;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

} // namespace

// ---------------------------------------------------------------------------
// Containers

ItemBank::ItemBank(std::size_t dim) : dim_(dim) { require(dim >= 1, "ItemBank: dim must be >= 1"); }

ItemBank::ItemBank(std::size_t dim, std::vector<ItemParams> items) : ItemBank(dim) {
    items_.reserve(items.size());
    for (auto& item : items) {
        add(std::move(item));
    }
}

void ItemBank::add(ItemParams item) {
    require(static_cast<std::size_t>(item.alpha.size()) == dim_,
            "ItemBank: item '" + item.item_id + "' has wrong alpha dimension");
    require(all_finite(item.alpha) && std::isfinite(item.beta),
            "ItemBank: item '" + item.item_id + "' has non-finite parameters");
    for (const auto& existing : items_) {
        require(existing.item_id != item.item_id, "ItemBank: duplicate item id '" + item.item_id + "'");
    }
    items_.push_back(std::move(item));
}

ItemBank ItemBank::subset(std::span<const std::size_t> indices) const {
    ItemBank out(dim_);
    out.items_.reserve(indices.size());
    std::unordered_set<std::size_t> seen;
    for (auto i : indices) {
        require(i < items_.size(), "ItemBank::subset: index out of range");
        require(seen.insert(i).second, "ItemBank::subset: duplicate index");
        out.items_.push_back(items_[i]);
    }
    return out;
}

ResponseMatrix::ResponseMatrix(std::vector<std::string> item_ids, std::vector<std::string> respondent_ids)
    : item_ids_(std::move(item_ids)), respondent_ids_(std::move(respondent_ids)),
      values_(item_ids_.size() * respondent_ids_.size(), 0) {}

void ResponseMatrix::set(std::size_t item, std::size_t respondent, std::uint8_t value) {
    require(item < n_items() && respondent < n_respondents(), "ResponseMatrix::set: index out of range");
    require(value <= 1, "ResponseMatrix::set: responses must be 0 or 1");
    values_[item * n_respondents() + respondent] = value;
}

Correctness ResponseMatrix::respondent(std::size_t m) const {
    require(m < n_respondents(), "ResponseMatrix::respondent: index out of range");
    Correctness out(n_items());
    for (std::size_t i = 0; i < n_items(); ++i) {
        out[i] = at(i, m);
    }
    return out;
}

void ResponseMatrix::set_respondent(std::size_t m, std::span<const std::uint8_t> responses) {
    require(responses.size() == n_items(), "ResponseMatrix::set_respondent: length mismatch");
    for (std::size_t i = 0; i < n_items(); ++i) {
        set(i, m, responses[i]);
    }
}

void PriorSpec::validate() const {
    require(u_gamma > 0.0 && u_alpha > 0.0 && u_beta > 0.0, "prior precisions must be positive");
    require(std::isfinite(mu_gamma) && std::isfinite(mu_alpha) && std::isfinite(mu_beta),
            "prior means must be finite");
}

void IrtFitConfig::validate() const {
    require(dim >= 1, "IrtFitConfig: dim must be >= 1");
    require(tolerance > 0.0, "IrtFitConfig: tolerance must be positive");
    priors.validate();
}

// ---------------------------------------------------------------------------
// Model

double logistic(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double irt_probability(const Vector& gamma, const ItemParams& item) {
    require(gamma.size() == item.alpha.size(), "irt_probability: dimension mismatch");
    return logistic(item.alpha.dot(gamma) - item.beta);
}

double irt_probability(const AbilityVector& ability, const ItemParams& item) {
    return irt_probability(ability.gamma, item);
}

Vector item_probabilities(const ItemBank& bank, const Vector& gamma) {
    Vector p(static_cast<Eigen::Index>(bank.size()));
    for (std::size_t i = 0; i < bank.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = irt_probability(gamma, bank[i]);
    }
    return p;
}

double log_likelihood(const ResponseMatrix& responses, const ItemBank& bank,
                      std::span<const AbilityVector> abilities) {
    require(responses.n_items() == bank.size(), "log_likelihood: item count mismatch");
    require(responses.n_respondents() == abilities.size(), "log_likelihood: respondent count mismatch");
    double total = 0.0;
    for (std::size_t m = 0; m < abilities.size(); ++m) {
        for (std::size_t i = 0; i < bank.size(); ++i) {
            const double p = std::clamp(irt_probability(abilities[m].gamma, bank[i]), kProbabilityClamp,
                                        1.0 - kProbabilityClamp);
            total += responses.at(i, m) ? std::log(p) : std::log1p(-p);
        }
    }
    return total;
}

double log_prior(const ItemBank& bank, std::span<const AbilityVector> abilities, const PriorSpec& priors) {
    double total = 0.0;
    for (const auto& item : bank.items()) {
        total -= 0.5 * priors.u_alpha * (item.alpha.array() - priors.mu_alpha).square().sum();
        total -= 0.5 * priors.u_beta * (item.beta - priors.mu_beta) * (item.beta - priors.mu_beta);
    }
    for (const auto& a : abilities) {
        total -= 0.5 * priors.u_gamma * (a.gamma.array() - priors.mu_gamma).square().sum();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

// Inner Newton iterations per block and sweep. A few are enough because the
// next sweep revisits every block anyway.
constexpr std::size_t kInnerNewtonIters = 3;

struct JointState {
    Matrix alpha; // items x d
    Vector beta;  // items
    Matrix gamma; // respondents x d
};

double joint_objective(const Matrix& y, const JointState& s, const PriorSpec& pr) {
    const Matrix logits = (s.alpha * s.gamma.transpose()).colwise() - s.beta;
    double ll = 0.0;
    for (Eigen::Index m = 0; m < logits.cols(); ++m) {
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            const double z = logits(i, m);
            ll += y(i, m) * z - detail::softplus(z);
        }
    }
    ll -= 0.5 * pr.u_alpha * (s.alpha.array() - pr.mu_alpha).square().sum();
    ll -= 0.5 * pr.u_beta * (s.beta.array() - pr.mu_beta).square().sum();
    ll -= 0.5 * pr.u_gamma * (s.gamma.array() - pr.mu_gamma).square().sum();
    return ll;
}

double joint_gradient_norm(const Matrix& y, const JointState& s, const PriorSpec& pr) {
    const Matrix logits = (s.alpha * s.gamma.transpose()).colwise() - s.beta;
    const Matrix residual = y - logits.unaryExpr([](double z) { return logistic(z); });
    const Matrix g_alpha = residual * s.gamma - pr.u_alpha * (s.alpha.array() - pr.mu_alpha).matrix();
    const Vector g_beta = -residual.rowwise().sum() - pr.u_beta * (s.beta.array() - pr.mu_beta).matrix();
    const Matrix g_gamma =
        residual.transpose() * s.alpha - pr.u_gamma * (s.gamma.array() - pr.mu_gamma).matrix();
    return std::sqrt(g_alpha.squaredNorm() + g_beta.squaredNorm() + g_gamma.squaredNorm());
}

} // namespace

IrtFit fit_item_bank(const ResponseMatrix& pool, const IrtFitConfig& config) {
    config.validate();
    const std::size_t d = config.dim;
    const std::size_t n_items = pool.n_items();
    const std::size_t n_resp = pool.n_respondents();
    require(n_resp >= 2, "fit_item_bank: need at least 2 respondents");
    require(n_items >= d + 1, "fit_item_bank: need at least dim + 1 items");
    const auto& pr = config.priors;
    const auto di = static_cast<Eigen::Index>(d);
    const auto ni = static_cast<Eigen::Index>(n_items);
    const auto mi = static_cast<Eigen::Index>(n_resp);

    Matrix y(ni, mi);
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index m = 0; m < mi; ++m) {
            y(i, m) = pool.at(static_cast<std::size_t>(i), static_cast<std::size_t>(m));
        }
    }

    // Abilities start from a prior draw to break the alpha = gamma = 0 saddle.
    JointState s{Matrix::Constant(ni, di, pr.mu_alpha), Vector::Constant(ni, pr.mu_beta), Matrix(mi, di)};
    {
        auto rng = make_rng(config.seed, {0x1a7e});
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(pr.u_gamma));
        for (Eigen::Index m = 0; m < mi; ++m) {
            for (Eigen::Index k = 0; k < di; ++k) {
                s.gamma(m, k) = pr.mu_gamma + normal(rng);
            }
        }
    }

    const Vector item_prior_mean = [&] {
        Vector v(di + 1);
        v.head(di).setConstant(pr.mu_alpha);
        v[di] = pr.mu_beta;
        return v;
    }();
    const Vector item_precision = [&] {
        Vector v(di + 1);
        v.head(di).setConstant(pr.u_alpha);
        v[di] = pr.u_beta;
        return v;
    }();
    const Vector ability_prior_mean = Vector::Constant(di, pr.mu_gamma);
    const Vector ability_precision = Vector::Constant(di, pr.u_gamma);

    std::vector<std::uint8_t> row(n_resp);
    std::vector<std::uint8_t> column(n_items);

    IrtFit fit;
    fit.objective_trace.push_back(joint_objective(y, s, pr));
    for (std::size_t sweep = 0; sweep < config.max_iters; ++sweep) {
        // Item block: features (gamma_m, -1) shared by every item.
        {
            Matrix features(mi, di + 1);
            features.leftCols(di) = s.gamma;
            features.col(di).setConstant(-1.0);
            const Vector offset = Vector::Zero(mi);
            for (Eigen::Index i = 0; i < ni; ++i) {
                for (Eigen::Index m = 0; m < mi; ++m) {
                    row[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(y(i, m));
                }
                Vector init(di + 1);
                init.head(di) = s.alpha.row(i).transpose();
                init[di] = s.beta[i];
                const auto r = detail::maximize_logistic({features, offset, row, item_prior_mean, item_precision},
                                                         std::move(init), kInnerNewtonIters, 0.0);
                s.alpha.row(i) = r.weights.head(di).transpose();
                s.beta[i] = r.weights[di];
            }
        }
        // Ability block: features alpha_i, offset -beta_i shared by every respondent.
        {
            const Vector offset = -s.beta;
            for (Eigen::Index m = 0; m < mi; ++m) {
                for (Eigen::Index i = 0; i < ni; ++i) {
                    column[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(y(i, m));
                }
                const auto r =
                    detail::maximize_logistic({s.alpha, offset, column, ability_prior_mean, ability_precision},
                                              s.gamma.row(m).transpose(), kInnerNewtonIters, 0.0);
                s.gamma.row(m) = r.weights.transpose();
            }
        }
        fit.objective_trace.push_back(joint_objective(y, s, pr));
        fit.iterations = sweep + 1;
        fit.gradient_norm = joint_gradient_norm(y, s, pr);
        if (fit.gradient_norm <= config.tolerance) {
            fit.converged = true;
            break;
        }
    }

    fit.bank = ItemBank(d);
    for (std::size_t i = 0; i < n_items; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        fit.bank.add({s.alpha.row(ii).transpose(), s.beta[ii], pool.item_ids()[i]});
    }
    fit.abilities.reserve(n_resp);
    for (std::size_t m = 0; m < n_resp; ++m) {
        fit.abilities.push_back({s.gamma.row(static_cast<Eigen::Index>(m)).transpose(), pool.respondent_ids()[m]});
    }
    return fit;
}

AbilityVector fit_ability(std::span<const std::uint8_t> responses, const ItemBank& bank,
                          const IrtFitConfig& config, std::string model_id) {
    config.priors.validate();
    require(config.tolerance > 0.0, "fit_ability: tolerance must be positive");
    require(!bank.empty(), "fit_ability: empty item bank");
    require(responses.size() == bank.size(), "fit_ability: response vector must cover every item");
    const auto d = static_cast<Eigen::Index>(bank.dim());
    const auto n = static_cast<Eigen::Index>(bank.size());
    Matrix features(n, d);
    Vector offset(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& item = bank[static_cast<std::size_t>(i)];
        features.row(i) = item.alpha.transpose();
        offset[i] = -item.beta;
    }
    for (auto r : responses) {
        require(r <= 1, "fit_ability: responses must be 0 or 1");
    }
    const Vector mean = Vector::Constant(d, config.priors.mu_gamma);
    const Vector precision = Vector::Constant(d, config.priors.u_gamma);
    auto result = detail::maximize_logistic({features, offset, responses, mean, precision}, mean,
                                            config.max_iters, config.tolerance);
    return {std::move(result.weights), std::move(model_id)};
}

// ---------------------------------------------------------------------------
// Synthetic worlds

SyntheticWorld generate_synthetic_world(const WorldSpec& spec) {
    require(spec.dim >= 1 && spec.n_items >= 1 && spec.n_respondents >= 1,
            "generate_synthetic_world: counts must be positive");
    spec.priors.validate();
    const auto& ab = spec.abilities;
    require(ab.fixed.size() + ab.mixtures.size() <= spec.n_respondents,
            "generate_synthetic_world: more fixed/mixed respondents than respondents");
    if (ab.fixed_alpha) {
        require(static_cast<std::size_t>(ab.fixed_alpha->size()) == spec.dim,
                "generate_synthetic_world: fixed alpha has wrong dimension");
    }
    const auto d = static_cast<Eigen::Index>(spec.dim);
    auto rng = make_rng(spec.seed, {0x3041d});
    const auto& pr = spec.priors;
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticWorld world;
    world.bank = ItemBank(spec.dim);
    std::vector<std::string> item_ids;
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        Vector alpha(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            alpha[k] = pr.mu_alpha + normal(rng) / std::sqrt(pr.u_alpha);
        }
        double beta = pr.mu_beta + normal(rng) / std::sqrt(pr.u_beta);
        if (ab.fixed_alpha) {
            alpha = *ab.fixed_alpha;
        }
        if (ab.fixed_beta) {
            beta = *ab.fixed_beta;
        }
        item_ids.push_back(padded_id("item", i));
        world.bank.add({std::move(alpha), beta, item_ids.back()});
    }

    const std::size_t n_base = spec.n_respondents - ab.mixtures.size();
    std::vector<std::string> respondent_ids;
    for (std::size_t m = 0; m < spec.n_respondents; ++m) {
        respondent_ids.push_back(padded_id("model", m));
    }
    for (std::size_t m = 0; m < n_base; ++m) {
        Vector gamma(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            gamma[k] = pr.mu_gamma + normal(rng) / std::sqrt(pr.u_gamma);
        }
        if (m < ab.fixed.size()) {
            require(ab.fixed[m].size() == d, "generate_synthetic_world: fixed ability has wrong dimension");
            gamma = ab.fixed[m];
        }
        world.abilities.push_back({std::move(gamma), respondent_ids[m]});
    }
    for (std::size_t j = 0; j < ab.mixtures.size(); ++j) {
        const auto& mix = ab.mixtures[j];
        require(mix.sources.size() == mix.lambda.size() && !mix.sources.empty(),
                "generate_synthetic_world: mixture needs one lambda per source");
        Vector gamma = Vector::Zero(d);
        for (std::size_t s = 0; s < mix.sources.size(); ++s) {
            require(mix.sources[s] < n_base, "generate_synthetic_world: mixture source out of range");
            gamma += mix.lambda[s] * world.abilities[mix.sources[s]].gamma;
        }
        world.abilities.push_back({std::move(gamma), respondent_ids[n_base + j]});
    }

    world.responses = ResponseMatrix(std::move(item_ids), std::move(respondent_ids));
    for (std::size_t m = 0; m < spec.n_respondents; ++m) {
        world.responses.set_respondent(m, sample_responses(world.bank, world.abilities[m].gamma, rng));
    }
    return world;
}

} // namespace merge3
