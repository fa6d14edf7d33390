// ============================================================================
// clustering.hpp - image featurization and Lloyd K-Means with diagnostics
//
// Feature modes cover the five clustering inputs studied for scene grouping:
// flattened RGB or equalized images, and RGB / equalized / gray histograms
// (256 bins). K-Means uses k-means++ seeding, squared Euclidean distances and
// deterministic empty-cluster repair.
// ============================================================================

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pardinus/common.hpp"
#include "pardinus/image.hpp"

namespace pardinus {

enum class FeatureMode {
    rgb_image,
    equalized_image,
    rgb_histogram,
    equalized_histogram,
    gray_histogram,
};

inline const char* to_string(FeatureMode m) {
    switch (m) {
        case FeatureMode::rgb_image: return "rgb_image";
        case FeatureMode::equalized_image: return "equalized_image";
        case FeatureMode::rgb_histogram: return "rgb_histogram";
        case FeatureMode::equalized_histogram: return "equalized_histogram";
        default: return "gray_histogram";
    }
}

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "rgb_image") return FeatureMode::rgb_image;
    if (s == "equalized_image") return FeatureMode::equalized_image;
    if (s == "rgb_histogram") return FeatureMode::rgb_histogram;
    if (s == "equalized_histogram") return FeatureMode::equalized_histogram;
    if (s == "gray_histogram") return FeatureMode::gray_histogram;
    throw IoError("unknown feature mode '" + s + "'");
}

inline std::vector<float> featurize(const ImageTensor& img, FeatureMode mode) {
    switch (mode) {
        case FeatureMode::rgb_image:
            if (img.channels != 3) throw ModeMismatch("featurize: rgb_image needs 3 channels");
            return img.data;
        case FeatureMode::equalized_image:
            return equalize(img).data;
        case FeatureMode::rgb_histogram:
            if (img.channels != 3) throw ModeMismatch("featurize: rgb_histogram needs 3 channels");
            return histogram_features(img, 256);
        case FeatureMode::equalized_histogram:
            return histogram_features(equalize(img), 256);
        case FeatureMode::gray_histogram:
            return histogram_features(img.channels == 1 ? img : to_grayscale(img), 256);
    }
    throw ModeMismatch("featurize: bad mode");
}

struct KMeansModel {
    int k = 0;
    int dim = 0;
    FeatureMode mode = FeatureMode::rgb_image;
    std::uint64_t seed = 0;
    double inertia = 0.0;               // final intra-cluster sum of squares
    std::vector<float> centroids;       // k rows of dim, row-major
    std::vector<double> inertia_trace;  // per-iteration inertia, non-increasing

    const float* centroid(int c) const { return centroids.data() + std::size_t(c) * dim; }
};

namespace detail {

inline double sq_dist(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

} // namespace detail

// argmin over squared Euclidean distance, ties to the lowest index
inline int assign(const KMeansModel& model, const std::vector<float>& vec) {
    if (int(vec.size()) != model.dim)
        throw DimensionMismatch("assign: vector dim != model dim");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.k; ++c) {
        const double d = detail::sq_dist(vec.data(), model.centroid(c), model.dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace detail {

// one Lloyd run from k-means++ seeding. Stops when the largest centroid
// displacement drops below tol or max_iter is reached. A cluster that loses
// all its points is reseeded to the point farthest from its assigned
// centroid, which never increases the objective.
inline KMeansModel fit_kmeans_once(const std::vector<std::vector<float>>& vectors, int k,
                                   std::uint64_t rng_seed, int max_iter, double tol) {
    const int dim = int(vectors.front().size());
    const std::size_t n = vectors.size();
    KMeansModel model;
    model.k = k;
    model.dim = dim;

    Rng rng(rng_seed);

    // k-means++ seeding
    model.centroids.assign(std::size_t(k) * dim, 0.0f);
    auto set_centroid = [&](int c, const float* src) {
        std::copy(src, src + dim, model.centroids.begin() + std::size_t(c) * dim);
    };
    set_centroid(0, vectors[rng.next_below(n)].data());

    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = detail::sq_dist(vectors[i].data(), model.centroid(c - 1), dim);
            if (d < min_d[i]) min_d[i] = d;
            total += min_d[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = rng.next_double() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_d[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = rng.next_below(n); // all points coincide with a centroid
        }
        set_centroid(c, vectors[chosen].data());
    }

    std::vector<int> assignment(n, -1);
    std::vector<double> dist_to_own(n, 0.0);
    std::vector<double> sums(std::size_t(k) * dim);
    std::vector<std::size_t> counts(k);

    for (int iter = 0; iter < max_iter; ++iter) {
        // assignment step + objective
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = detail::sq_dist(vectors[i].data(), model.centroid(c), dim);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
            dist_to_own[i] = best_d;
            inertia += best_d;
        }
        model.inertia = inertia;
        model.inertia_trace.push_back(inertia);

        // update step
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), std::size_t(0));
        for (std::size_t i = 0; i < n; ++i) {
            double* row = sums.data() + std::size_t(assignment[i]) * dim;
            const float* v = vectors[i].data();
            for (int d = 0; d < dim; ++d) row[d] += v[d];
            ++counts[assignment[i]];
        }

        double max_shift_sq = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed to the point farthest from its assigned centroid
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (dist_to_own[i] > far_d) {
                        far_d = dist_to_own[i];
                        far = i;
                    }
                set_centroid(c, vectors[far].data());
                dist_to_own[far] = 0.0; // don't pick the same point for another empty cluster
                max_shift_sq = std::numeric_limits<double>::infinity();
                continue;
            }
            const double inv = 1.0 / double(counts[c]);
            float* dst = model.centroids.data() + std::size_t(c) * dim;
            double shift_sq = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double nd = sums[std::size_t(c) * dim + d] * inv;
                const double diff = nd - dst[d];
                shift_sq += diff * diff;
                dst[d] = float(nd);
            }
            max_shift_sq = std::max(max_shift_sq, shift_sq);
        }

        if (max_shift_sq < tol * tol) break;
    }

    // final assignment pass so inertia matches the returned centroids
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            best_d = std::min(best_d, sq_dist(vectors[i].data(), model.centroid(c), dim));
        inertia += best_d;
    }
    model.inertia = inertia;
    model.inertia_trace.push_back(inertia);
    return model;
}

} // namespace detail

// ----------------------------------------------------------------------------
// fit_kmeans - best of n_init independently seeded Lloyd runs, judged by
// final inertia (the restart scheme the reference K-Means implementations
// default to). Deterministic: restart seeds derive from the caller's seed.
// ----------------------------------------------------------------------------
inline KMeansModel fit_kmeans(const std::vector<std::vector<float>>& vectors, int k,
                              std::uint64_t seed, int max_iter = 300, double tol = 1e-4,
                              int n_init = 10) {
    if (k < 2) throw TooFewPoints("fit_kmeans: k must be >= 2");
    if (vectors.size() < std::size_t(k))
        throw TooFewPoints("fit_kmeans: fewer points than clusters");
    const int dim = int(vectors.front().size());
    for (const auto& v : vectors)
        if (int(v.size()) != dim) throw DimensionMismatch("fit_kmeans: ragged input");
    if (n_init < 1) throw TooFewPoints("fit_kmeans: n_init must be >= 1");

    KMeansModel best;
    for (int r = 0; r < n_init; ++r) {
        KMeansModel candidate = detail::fit_kmeans_once(
            vectors, k, derive_seed(seed, "kmeans-restart", std::uint64_t(r)), max_iter, tol);
        if (r == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
    }
    best.seed = seed;
    return best;
}

// ----------------------------------------------------------------------------
// silhouette - mean over points of (b - a) / max(a, b) with Euclidean
// distances; a is the mean distance inside the point's cluster, b the best
// mean distance to another cluster. Singleton clusters and all-identical
// degenerate cases contribute 0. On large inputs a seeded subsample caps the
// O(n^2) cost.
// ----------------------------------------------------------------------------
inline double silhouette(const std::vector<std::vector<float>>& vectors,
                         const std::vector<int>& assignments,
                         std::size_t max_points = 2000, std::uint64_t subsample_seed = 0) {
    if (vectors.size() != assignments.size())
        throw DimensionMismatch("silhouette: size mismatch");

    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    if (k < 2) throw SingleCluster("silhouette: needs at least two clusters");

    std::vector<std::size_t> idx(vectors.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > max_points) {
        Rng rng(derive_seed(subsample_seed, "silhouette"));
        rng.shuffle(idx.begin(), idx.end());
        idx.resize(max_points);
    }

    const int dim = int(vectors.front().size());
    std::vector<std::size_t> cluster_size(k, 0);
    for (std::size_t i : idx) ++cluster_size[assignments[i]];

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (std::size_t i : idx) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t j : idx) {
            if (i == j) continue;
            mean_dist[assignments[j]] +=
                std::sqrt(detail::sq_dist(vectors[i].data(), vectors[j].data(), dim));
        }
        const int own = assignments[i];
        if (cluster_size[own] <= 1) continue; // singleton contributes 0

        const double a = mean_dist[own] / double(cluster_size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || cluster_size[c] == 0) continue;
            b = std::min(b, mean_dist[c] / double(cluster_size[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / double(idx.size());
}

// sum of squared distances of points to their assigned centroid; equals the
// fit inertia when evaluated on the training set
inline double intra_cluster_distance(const KMeansModel& model,
                                     const std::vector<std::vector<float>>& vectors,
                                     const std::vector<int>& assignments) {
    if (vectors.size() != assignments.size())
        throw DimensionMismatch("intra_cluster_distance: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (int(vectors[i].size()) != model.dim)
            throw DimensionMismatch("intra_cluster_distance: vector dim != model dim");
        total += detail::sq_dist(vectors[i].data(), model.centroid(assignments[i]), model.dim);
    }
    return total;
}

} // namespace pardinus
