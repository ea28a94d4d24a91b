#include "merge3/extract.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "merge3/error.hpp"
#include "merge3/random.hpp"

namespace merge3 {

double PcaResult::explained_variance_ratio(std::size_t component) const {
    const double total = eigenvalues.sum();
    require(component < static_cast<std::size_t>(eigenvalues.size()), "explained_variance_ratio: out of range");
    return total > 0.0 ? eigenvalues[static_cast<Eigen::Index>(component)] / total : 0.0;
}

PcaResult pca_reduce(const Matrix& data, std::size_t out_dim) {
    require(data.rows() >= 2, "pca_reduce: need at least two rows");
    require(out_dim >= 1 && out_dim <= static_cast<std::size_t>(data.cols()), "pca_reduce: out_dim must be in [1, in_dim]");
    require(data.allFinite(), "pca_reduce: non-finite input");

    PcaResult out;
    out.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - out.mean.transpose();
    const Matrix covariance = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
    require(solver.info() == Eigen::Success, "pca_reduce: eigen decomposition failed");

    const auto in_dim = covariance.rows();
    out.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
    const Matrix vectors = solver.eigenvectors().rowwise().reverse();
    const double scale = std::max(1.0, out.eigenvalues.maxCoeff());

    const auto k = static_cast<Eigen::Index>(out_dim);
    out.components = vectors.leftCols(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < in_dim; ++r) {
            // First index wins among equal magnitudes.
            if (std::abs(out.components(r, c)) > best + 1e-12) {
                best = std::abs(out.components(r, c));
                arg = r;
            }
        }
        if (out.components(arg, c) < 0.0) {
            out.components.col(c) *= -1.0;
        }
    }
    out.projected = centered * out.components;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (out.eigenvalues[c] <= 1e-12 * scale) {
            out.projected.col(c).setZero();
        }
    }
    return out;
}

namespace {

double squared_distance(const Matrix& points, Eigen::Index row, const Matrix& centroids, Eigen::Index c) {
    return (points.row(row) - centroids.row(c)).squaredNorm();
}

// Nearest centroid per point; ties go to the lowest centroid index.
double assign_points(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index arg = 0;
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points, i, centroids, c);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        assignments[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg);
        inertia += best;
    }
    return inertia;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const auto n = points.rows();
    Matrix centroids(static_cast<Eigen::Index>(k), points.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    Eigen::Index pick = first(rng);
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (c > 0) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            if (total > 0.0) {
                const double target = unit(rng) * total;
                double cumulative = 0.0;
                pick = -1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double w = d2[static_cast<std::size_t>(i)];
                    if (w <= 0.0) {
                        continue;
                    }
                    pick = i; // rounding fallback: last positive-weight point
                    cumulative += w;
                    if (target < cumulative) {
                        break;
                    }
                }
            } else {
                // Every point coincides with a centroid: take the lowest unused index.
                pick = 0;
                while (pick < n && chosen[static_cast<std::size_t>(pick)]) {
                    ++pick;
                }
            }
        }
        chosen[static_cast<std::size_t>(pick)] = true;
        centroids.row(static_cast<Eigen::Index>(c)) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - points.row(pick)).squaredNorm());
        }
    }
    return centroids;
}

} // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(points.rows());
    require(k >= 1 && k <= n, "kmeans: k must lie in [1, n_points]");
    require(points.allFinite(), "kmeans: non-finite input");
    auto rng = make_rng(seed, {0x6b6d});

    KMeansResult out;
    out.centroids = kmeans_plus_plus(points, k, rng);
    out.assignments.assign(n, 0);
    out.inertia = assign_points(points, out.centroids, out.assignments);
    out.inertia_trace.push_back(out.inertia);

    const auto kk = static_cast<Eigen::Index>(k);
    std::vector<std::size_t> next(n, 0);
    for (std::size_t iter = 0; iter < kKMeansMaxIters; ++iter) {
        Matrix sums = Matrix::Zero(kk, points.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(out.assignments[i])) += points.row(static_cast<Eigen::Index>(i));
            ++counts[out.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                out.centroids.row(static_cast<Eigen::Index>(c)) =
                    sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                continue;
            }
            // Move the point farthest from its centroid (taken from a cluster
            // that keeps at least one member) into the empty cluster.
            double best = -1.0;
            std::size_t arg = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[out.assignments[i]] < 2) {
                    continue;
                }
                const double d = squared_distance(points, static_cast<Eigen::Index>(i), out.centroids,
                                                  static_cast<Eigen::Index>(out.assignments[i]));
                if (d > best) {
                    best = d;
                    arg = i;
                }
            }
            require(arg < n, "kmeans: cannot re-seed empty cluster");
            --counts[out.assignments[arg]];
            out.assignments[arg] = c;
            counts[c] = 1;
            out.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(arg));
        }
        out.inertia = assign_points(points, out.centroids, next);
        out.inertia_trace.push_back(out.inertia);
        out.iterations = iter + 1;
        const bool fixpoint = next == out.assignments;
        out.assignments = next;
        if (fixpoint) {
            break;
        }
    }
    return out;
}

SubsetSelection extract_random(std::size_t n_items_total, std::size_t k, std::uint64_t seed) {
    require(k >= 1 && k <= n_items_total, "extract_random: k must lie in [1, n]");
    auto rng = make_rng(seed, {0x5eed});
    std::vector<std::size_t> pool(n_items_total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n_items_total - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return SubsetSelection::uniform(std::move(pool), "random");
}

SubsetSelection select_cluster_representatives(const Matrix& points, std::size_t k, std::uint64_t seed,
                                               std::string method) {
    const auto clusters = kmeans(points, k, seed);
    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<std::size_t> representative(k, n);
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> mass(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = clusters.assignments[i];
        ++mass[c];
        const double d = squared_distance(points, static_cast<Eigen::Index>(i), clusters.centroids,
                                          static_cast<Eigen::Index>(c));
        if (d < best[c]) {
            best[c] = d;
            representative[c] = i;
        }
    }
    std::vector<std::pair<std::size_t, double>> picks;
    for (std::size_t c = 0; c < k; ++c) {
        require(representative[c] < n, "cluster extraction: empty cluster");
        picks.emplace_back(representative[c], static_cast<double>(mass[c]) / static_cast<double>(n));
    }
    std::sort(picks.begin(), picks.end());
    SubsetSelection out;
    out.method = std::move(method);
    for (const auto& [index, weight] : picks) {
        out.indices.push_back(index);
        out.weights.push_back(weight);
    }
    return out;
}

namespace {

// Positions sorted by id; identity order when no ids are given.
std::vector<std::size_t> canonical_order(std::span<const std::string> ids, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!ids.empty()) {
        require(ids.size() == n, "extraction: one id per item required");
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
    }
    return order;
}

SubsetSelection map_back(SubsetSelection canonical, const std::vector<std::size_t>& order) {
    std::vector<std::pair<std::size_t, double>> picks;
    for (std::size_t k = 0; k < canonical.indices.size(); ++k) {
        picks.emplace_back(order[canonical.indices[k]], canonical.weights[k]);
    }
    std::sort(picks.begin(), picks.end());
    canonical.indices.clear();
    canonical.weights.clear();
    for (const auto& [index, weight] : picks) {
        canonical.indices.push_back(index);
        canonical.weights.push_back(weight);
    }
    return canonical;
}

} // namespace

SubsetSelection extract_irt_cluster(const ItemBank& bank, std::size_t k, std::uint64_t seed) {
    require(k >= 1 && k <= bank.size(), "extract_irt_cluster: k must lie in [1, n_items]");
    std::vector<std::string> ids;
    ids.reserve(bank.size());
    for (const auto& item : bank.items()) {
        ids.push_back(item.item_id);
    }
    const auto order = canonical_order(ids, bank.size());
    const auto d = static_cast<Eigen::Index>(bank.dim());
    Matrix embedding(static_cast<Eigen::Index>(bank.size()), d + 1);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& item = bank[order[r]];
        embedding.row(static_cast<Eigen::Index>(r)).head(d) = item.alpha.transpose();
        embedding(static_cast<Eigen::Index>(r), d) = item.beta;
    }
    return map_back(select_cluster_representatives(embedding, k, seed, "irt"), order);
}

SubsetSelection extract_repr_cluster(std::span<const EmbeddingMatrix> embeddings_per_model, std::size_t k,
                                     std::size_t pca_dim, std::uint64_t seed, std::span<const std::string> item_ids) {
    require(!embeddings_per_model.empty(), "extract_repr_cluster: need at least one embedding matrix");
    const auto n = embeddings_per_model.front().rows.rows();
    Eigen::Index total_dim = 0;
    for (const auto& e : embeddings_per_model) {
        require(e.rows.rows() == n, "extract_repr_cluster: item count differs across models");
        require(e.rows.allFinite(), "extract_repr_cluster: non-finite embedding");
        total_dim += e.rows.cols();
    }
    require(k >= 1 && k <= static_cast<std::size_t>(n), "extract_repr_cluster: k must lie in [1, n_items]");
    require(pca_dim >= 1 && pca_dim <= static_cast<std::size_t>(total_dim),
            "extract_repr_cluster: pca_dim must lie in [1, concatenated dim]");

    const auto order = canonical_order(item_ids, static_cast<std::size_t>(n));
    Matrix concatenated(n, total_dim);
    for (std::size_t r = 0; r < order.size(); ++r) {
        Eigen::Index col = 0;
        for (const auto& e : embeddings_per_model) {
            concatenated.row(static_cast<Eigen::Index>(r)).segment(col, e.rows.cols()) =
                e.rows.row(static_cast<Eigen::Index>(order[r]));
            col += e.rows.cols();
        }
    }
    const Matrix reduced = n >= 2 ? pca_reduce(concatenated, pca_dim).projected : concatenated.leftCols(
                                                                                      static_cast<Eigen::Index>(pca_dim));
    return map_back(select_cluster_representatives(reduced, k, seed, "repr"), order);
}

} // namespace merge3
