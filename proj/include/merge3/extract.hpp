#pragma once

// Reduced-dataset extraction: uniform sampling, clustering on IRT item
// embeddings [alpha_i || beta_i], and clustering on concatenated per-model
// representation embeddings after PCA.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "merge3/estimators.hpp"
#include "merge3/irt.hpp"

namespace merge3 {

enum class EmbeddingSource { irt, representation };

/// One row per item.
struct EmbeddingMatrix {
    Matrix rows;
    EmbeddingSource source = EmbeddingSource::representation;

    [[nodiscard]] std::size_t n_items() const noexcept { return static_cast<std::size_t>(rows.rows()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.cols()); }
};

struct PcaResult {
    Matrix projected;       // n x out_dim
    Matrix components;      // in_dim x out_dim, columns are unit eigenvectors
    Vector eigenvalues;     // all in_dim eigenvalues, descending
    Vector mean;            // column means removed before projection
    [[nodiscard]] double explained_variance_ratio(std::size_t component) const;
};

/// Projects centered rows onto the top out_dim eigenvectors of the sample
/// covariance. Each eigenvector is signed so its largest-magnitude entry is
/// positive; components with zero variance project to 0.
[[nodiscard]] PcaResult pca_reduce(const Matrix& data, std::size_t out_dim);

struct KMeansResult {
    std::vector<std::size_t> assignments;
    Matrix centroids; // k x dim
    double inertia = 0.0;
    /// Inertia after every assignment step.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;
};

constexpr std::size_t kKMeansMaxIters = 300;

/// Lloyd's algorithm from a k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its centroid.
[[nodiscard]] KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed);

/// k distinct indices drawn uniformly without replacement, ascending.
[[nodiscard]] SubsetSelection extract_random(std::size_t n_items_total, std::size_t k, std::uint64_t seed);

[[nodiscard]] SubsetSelection extract_irt_cluster(const ItemBank& bank, std::size_t k, std::uint64_t seed);

/// item_ids, when given, fix the canonical row order; otherwise row order is used.
[[nodiscard]] SubsetSelection extract_repr_cluster(std::span<const EmbeddingMatrix> embeddings_per_model,
                                                   std::size_t k, std::size_t pca_dim, std::uint64_t seed,
                                                   std::span<const std::string> item_ids = {});

/// Clusters the rows (already in canonical order) and picks, for each
/// cluster, the member closest to its centroid with weight |C|/n. Returned
/// indices refer to canonical row positions.
[[nodiscard]] SubsetSelection select_cluster_representatives(const Matrix& points, std::size_t k,
                                                             std::uint64_t seed, std::string method);

} // namespace merge3
