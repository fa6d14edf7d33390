// ============================================================================
// grid_features.hpp - blockwise reconstruction-error features
//
// Original and reconstructed images are cut into a W x H grid of equal
// blocks (row-major); each block contributes [mse, mae, ssim] and the
// cluster id is appended last, giving 3*W*H + 1 features (73 at the default
// 6x4 grid). SSIM is a single window over the whole block with k1=0.01,
// k2=0.03, L=1, population statistics, channels averaged.
// ============================================================================

#pragma once

#include <fstream>
#include <optional>
#include <vector>

#include "pardinus/dataset.hpp"
#include "pardinus/image.hpp"

namespace pardinus {

struct GridSpec {
    int blocks_w = 6;
    int blocks_h = 4;
    int block_count() const { return blocks_w * blocks_h; }
};

struct Block {
    int channels = 0, height = 0, width = 0;
    std::vector<float> data; // channel-major, same layout as ImageTensor

    float at(int c, int y, int x) const {
        return data[(std::size_t(c) * height + y) * width + x];
    }
};

inline std::vector<Block> partition_grid(const ImageTensor& img, const GridSpec& grid) {
    if (grid.blocks_w < 1 || grid.blocks_h < 1 || img.width % grid.blocks_w != 0 ||
        img.height % grid.blocks_h != 0)
        throw IndivisibleGrid("partition_grid: image dims not divisible by grid");

    const int bw = img.width / grid.blocks_w;
    const int bh = img.height / grid.blocks_h;
    std::vector<Block> blocks;
    blocks.reserve(std::size_t(grid.block_count()));
    for (int gy = 0; gy < grid.blocks_h; ++gy) {
        for (int gx = 0; gx < grid.blocks_w; ++gx) {
            Block b;
            b.channels = img.channels;
            b.height = bh;
            b.width = bw;
            b.data.resize(std::size_t(img.channels) * bh * bw);
            for (int c = 0; c < img.channels; ++c)
                for (int y = 0; y < bh; ++y)
                    for (int x = 0; x < bw; ++x)
                        b.data[(std::size_t(c) * bh + y) * bw + x] =
                            img.at(c, gy * bh + y, gx * bw + x);
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

namespace detail {

inline void check_block_pair(const Block& a, const Block& b) {
    if (a.channels != b.channels || a.height != b.height || a.width != b.width)
        throw ShapeMismatch("block metric: shape mismatch");
}

} // namespace detail

// mean squared error, averaged over channels
inline double block_mse(const Block& a, const Block& b) {
    detail::check_block_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        acc += d * d;
    }
    return acc / double(a.data.size());
}

// mean absolute error, averaged over channels
inline double block_mae(const Block& a, const Block& b) {
    detail::check_block_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        acc += std::fabs(double(a.data[i]) - double(b.data[i]));
    return acc / double(a.data.size());
}

// Single-window SSIM with population (1/N) variance and covariance,
// computed per channel and averaged. L = 1 for [0,1] float images.
inline double block_ssim(const Block& a, const Block& b) {
    detail::check_block_pair(a, b);
    const std::size_t pixels = std::size_t(a.height) * a.width;
    if (pixels < 2) throw TooSmall("block_ssim: needs at least 2 pixels");

    constexpr double k1 = 0.01, k2 = 0.03, L = 1.0;
    constexpr double c1 = (k1 * L) * (k1 * L);
    constexpr double c2 = (k2 * L) * (k2 * L);

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        const float* xa = a.data.data() + std::size_t(c) * pixels;
        const float* xb = b.data.data() + std::size_t(c) * pixels;

        double mean_a = 0.0, mean_b = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) {
            mean_a += xa[i];
            mean_b += xb[i];
        }
        mean_a /= double(pixels);
        mean_b /= double(pixels);

        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) {
            const double da = xa[i] - mean_a;
            const double db = xb[i] - mean_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
        var_a /= double(pixels);
        var_b /= double(pixels);
        cov /= double(pixels);

        total += ((2.0 * mean_a * mean_b + c1) * (2.0 * cov + c2)) /
                 ((mean_a * mean_a + mean_b * mean_b + c1) * (var_a + var_b + c2));
    }
    return total / double(a.channels);
}

struct FeatureVector {
    std::vector<float> values; // 3 * W * H block metrics then cluster id
    std::optional<Label> label;

    int cluster_id() const { return int(values.back()); }
};

inline FeatureVector extract_features(const ImageTensor& original, const ImageTensor& reconstructed,
                                      int cluster_id, const GridSpec& grid) {
    if (!original.same_shape(reconstructed))
        throw ShapeMismatch("extract_features: image pair shape mismatch");

    const std::vector<Block> a = partition_grid(original, grid);
    const std::vector<Block> b = partition_grid(reconstructed, grid);

    FeatureVector fv;
    fv.values.reserve(std::size_t(3) * a.size() + 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        fv.values.push_back(float(block_mse(a[i], b[i])));
        fv.values.push_back(float(block_mae(a[i], b[i])));
        fv.values.push_back(float(block_ssim(a[i], b[i])));
    }
    fv.values.push_back(float(cluster_id));
    return fv;
}

// CSV dump: header b0_mse,b0_mae,b0_ssim,...,cluster,label
inline void save_features_csv(const std::vector<FeatureVector>& features, const GridSpec& grid,
                              const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write features: " + path);
    for (int i = 0; i < grid.block_count(); ++i)
        out << 'b' << i << "_mse,b" << i << "_mae,b" << i << "_ssim,";
    out << "cluster,label\n";
    out.precision(9);
    for (const auto& fv : features) {
        for (std::size_t i = 0; i + 1 < fv.values.size(); ++i) out << fv.values[i] << ',';
        out << fv.cluster_id() << ',';
        out << (fv.label ? to_string(*fv.label) : "") << '\n';
    }
    if (!out) throw IoError("feature write failed: " + path);
}

} // namespace pardinus
