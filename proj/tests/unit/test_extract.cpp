#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "merge3/error.hpp"
#include "merge3/extract.hpp"
#include "merge3/random.hpp"

using namespace merge3;

namespace {

Matrix three_blobs(std::size_t per_blob, std::uint64_t seed) {
    const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    Matrix pts(static_cast<Eigen::Index>(3 * per_blob), 2);
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t j = 0; j < per_blob; ++j) {
            const auto r = static_cast<Eigen::Index>(b * per_blob + j);
            pts(r, 0) = centers[b][0] + noise(rng);
            pts(r, 1) = centers[b][1] + noise(rng);
        }
    }
    return pts;
}

} // namespace

TEST_CASE("random extraction returns distinct sorted indices with uniform weights") {
    const auto s = extract_random(50, 10, 3);
    CHECK(s.size() == 10);
    CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
    CHECK(std::set<std::size_t>(s.indices.begin(), s.indices.end()).size() == 10);
    for (double w : s.weights) {
        CHECK(w == doctest::Approx(0.1));
    }
    CHECK(s.method == "random");
    CHECK(extract_random(50, 10, 3).indices == s.indices);
    CHECK_THROWS_AS((void)extract_random(5, 6, 0), ContractError);
    CHECK_THROWS_AS((void)extract_random(5, 0, 0), ContractError);
}

TEST_CASE("random extraction includes every item with probability k/n") {
    const std::size_t n = 10;
    const std::size_t k = 3;
    const std::size_t draws = 4000;
    std::vector<std::size_t> hits(n, 0);
    for (std::size_t s = 0; s < draws; ++s) {
        for (auto i : extract_random(n, k, s).indices) {
            ++hits[i];
        }
    }
    const double expect = static_cast<double>(draws * k) / static_cast<double>(n);
    const double sd = std::sqrt(static_cast<double>(draws) * 0.3 * 0.7);
    for (auto h : hits) {
        CHECK(std::abs(static_cast<double>(h) - expect) < 4.0 * sd);
    }
}

TEST_CASE("pca explains variance in proportion to the axis spreads") {
    const double a = std::sqrt(2.0);
    Matrix data(4, 2);
    data << a, 0.0, -a, 0.0, 0.0, 1.0, 0.0, -1.0;
    const auto pca = pca_reduce(data, 1);
    CHECK(pca.explained_variance_ratio(0) == doctest::Approx(2.0 / 3.0));
    CHECK(std::abs(pca.components(0, 0)) == doctest::Approx(1.0));
    CHECK(pca.components(0, 0) > 0.0);
    CHECK(pca.projected(0, 0) == doctest::Approx(a));
    CHECK(pca.projected(2, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pca is reproducible and orthonormal") {
    const Matrix data = three_blobs(20, 5);
    Matrix lifted(data.rows(), 4);
    lifted << data, data.col(0) - data.col(1), Matrix::Constant(data.rows(), 1, 3.0);
    const auto a = pca_reduce(lifted, 3);
    const auto b = pca_reduce(lifted, 3);
    CHECK(a.projected == b.projected);
    const Matrix gram = a.components.transpose() * a.components;
    CHECK((gram.topLeftCorner(2, 2) - Matrix::Identity(2, 2)).norm() < 1e-9);
    for (Eigen::Index i = 1; i < a.eigenvalues.size(); ++i) {
        CHECK(a.eigenvalues[i] <= a.eigenvalues[i - 1] + 1e-12);
    }
    CHECK_THROWS_AS((void)pca_reduce(lifted, 5), ContractError);
}

TEST_CASE("k-means separates well-separated blobs") {
    const Matrix pts = three_blobs(30, 7);
    const auto res = kmeans(pts, 3, 1);
    for (std::size_t b = 0; b < 3; ++b) {
        const auto label = res.assignments[b * 30];
        for (std::size_t j = 0; j < 30; ++j) {
            CHECK(res.assignments[b * 30 + j] == label);
        }
    }
    CHECK(std::set<std::size_t>(res.assignments.begin(), res.assignments.end()).size() == 3);
    for (std::size_t s = 1; s < res.inertia_trace.size(); ++s) {
        CHECK(res.inertia_trace[s] <= res.inertia_trace[s - 1] + 1e-9);
    }
    const auto again = kmeans(pts, 3, 1);
    CHECK(again.assignments == res.assignments);
}

TEST_CASE("k equal to n picks every item with equal weight") {
    const Matrix pts = three_blobs(4, 2);
    const auto s = select_cluster_representatives(pts, 12, 0, "irt");
    std::vector<std::size_t> all(12);
    std::iota(all.begin(), all.end(), 0);
    CHECK(s.indices == all);
    for (double w : s.weights) {
        CHECK(w == doctest::Approx(1.0 / 12.0));
    }
}

TEST_CASE("cluster representatives carry cluster mass") {
    Matrix pts(8, 1);
    pts << 0.0, 0.1, 0.2, 0.05, 0.15, 0.12, 50.0, 50.1;
    const auto s = select_cluster_representatives(pts, 2, 4, "repr");
    REQUIRE(s.size() == 2);
    CHECK_NOTHROW(s.validate(8));
    const auto big = s.indices[0] < 6 ? 0 : 1;
    CHECK(s.weights[big] == doctest::Approx(0.75));
    CHECK(s.weights[1 - big] == doctest::Approx(0.25));
}

TEST_CASE("duplicate points do not break clustering") {
    Matrix pts(10, 2);
    pts.setZero();
    pts.row(7) << 5.0, 5.0;
    pts.row(8) << -5.0, 5.0;
    pts.row(9) << 5.0, -5.0;
    const auto s = select_cluster_representatives(pts, 4, 3, "irt");
    CHECK(s.size() == 4);
    CHECK_NOTHROW(s.validate(10));
}

TEST_CASE("IRT clustering uses alpha and beta") {
    ItemBank bank(1);
    for (int i = 0; i < 6; ++i) {
        Vector a(1);
        a << (i < 3 ? 1.0 : -1.0);
        bank.add({a, i < 3 ? 0.0 : 3.0, "item" + std::to_string(i)});
    }
    const auto s = extract_irt_cluster(bank, 2, 0);
    REQUIRE(s.size() == 2);
    CHECK(s.indices[0] < 3);
    CHECK(s.indices[1] >= 3);
    CHECK(s.method == "irt");
}

TEST_CASE("representation clustering is independent of row order") {
    const Matrix base = three_blobs(10, 9);
    std::vector<std::string> ids;
    for (Eigen::Index r = 0; r < base.rows(); ++r) {
        ids.push_back("q" + std::to_string(100 + r));
    }
    std::vector<EmbeddingMatrix> models{{base, EmbeddingSource::representation},
                                        {base * 2.0, EmbeddingSource::representation}};
    const auto ref = extract_repr_cluster(models, 3, 2, 11, ids);

    std::vector<std::size_t> perm(ids.size());
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> ids_p;
    Matrix permuted(base.rows(), base.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        ids_p.push_back(ids[perm[i]]);
        permuted.row(static_cast<Eigen::Index>(i)) = base.row(static_cast<Eigen::Index>(perm[i]));
    }
    std::vector<EmbeddingMatrix> models_p{{permuted, EmbeddingSource::representation},
                                          {permuted * 2.0, EmbeddingSource::representation}};
    const auto got = extract_repr_cluster(models_p, 3, 2, 11, ids_p);

    std::map<std::string, double> a;
    std::map<std::string, double> b;
    for (std::size_t j = 0; j < ref.size(); ++j) {
        a[ids[ref.indices[j]]] = ref.weights[j];
        b[ids_p[got.indices[j]]] = got.weights[j];
    }
    CHECK(a == b);
}

TEST_CASE("representation clustering rejects mismatched models") {
    std::vector<EmbeddingMatrix> models{{Matrix::Zero(5, 2), EmbeddingSource::representation},
                                        {Matrix::Zero(4, 2), EmbeddingSource::representation}};
    CHECK_THROWS_AS((void)extract_repr_cluster(models, 2, 1, 0), ContractError);
}
