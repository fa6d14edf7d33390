// ============================================================================
// image.hpp - dense float image tensor and preprocessing operations
//
// Images are channel-major then row-major, values in [0,1]. Preprocessing
// covers bilinear resize, per-channel histogram equalization, grayscale
// conversion and normalized histograms.
// ============================================================================

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pardinus/common.hpp"

namespace pardinus {

struct ImageTensor {
    int channels = 0; // 1 or 3
    int height = 0;
    int width = 0;
    std::vector<float> data; // channels * height * width, channel-major

    ImageTensor() = default;
    ImageTensor(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {
        if (c < 1 || h < 1 || w < 1) throw InvalidDimensions("ImageTensor: non-positive dims");
    }

    std::size_t size() const { return data.size(); }

    float& at(int c, int y, int x) {
        return data[(std::size_t(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(std::size_t(c) * height + y) * width + x];
    }

    bool same_shape(const ImageTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// ----------------------------------------------------------------------------
// resize_bilinear - align-corners-false sampling.
//
// Source coordinate for output pixel d is (d + 0.5) * scale - 0.5, clamped to
// the valid range. Interpolation weights always sum to one, so constant
// images stay constant and an identity resize is bit-exact.
// ----------------------------------------------------------------------------
inline ImageTensor resize_bilinear(const ImageTensor& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw InvalidDimensions("resize_bilinear: target dims must be >= 1");
    if (out_w == img.width && out_h == img.height) return img;

    ImageTensor out(img.channels, out_h, out_w);
    const double sx = double(img.width) / out_w;
    const double sy = double(img.height) / out_h;

    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            double fy = (y + 0.5) * sy - 0.5;
            if (fy < 0) fy = 0;
            int y0 = int(fy);
            if (y0 > img.height - 1) y0 = img.height - 1;
            int y1 = std::min(y0 + 1, img.height - 1);
            double wy = fy - y0;
            for (int x = 0; x < out_w; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                if (fx < 0) fx = 0;
                int x0 = int(fx);
                if (x0 > img.width - 1) x0 = img.width - 1;
                int x1 = std::min(x0 + 1, img.width - 1);
                double wx = fx - x0;

                double top = (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
                double bot = (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
                out.at(c, y, x) = float((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// equalize - per-channel histogram equalization over 256 bins.
//
// Remap is h(v) = (cdf(v) - cdf_min) / (P - cdf_min). A constant channel has
// a degenerate cdf (P - cdf_min = 0) and is returned unchanged.
// ----------------------------------------------------------------------------
inline ImageTensor equalize(const ImageTensor& img) {
    if (img.channels != 3) throw ModeMismatch("equalize: expects a 3-channel image");

    ImageTensor out(img.channels, img.height, img.width);
    const std::size_t pixels = std::size_t(img.height) * img.width;

    for (int c = 0; c < img.channels; ++c) {
        const float* src = img.data.data() + std::size_t(c) * pixels;
        float* dst = out.data.data() + std::size_t(c) * pixels;

        std::array<std::uint32_t, 256> hist{};
        for (std::size_t i = 0; i < pixels; ++i) {
            int level = int(src[i] * 255.0f + 0.5f);
            level = std::clamp(level, 0, 255);
            ++hist[level];
        }

        std::array<std::uint32_t, 256> cdf{};
        std::uint32_t running = 0;
        std::uint32_t cdf_min = 0;
        for (int v = 0; v < 256; ++v) {
            running += hist[v];
            cdf[v] = running;
            if (cdf_min == 0 && hist[v] > 0) cdf_min = running;
        }

        const std::uint32_t denom = std::uint32_t(pixels) - cdf_min;
        if (denom == 0) { // constant channel
            std::copy(src, src + pixels, dst);
            continue;
        }

        std::array<float, 256> remap{};
        for (int v = 0; v < 256; ++v)
            remap[v] = float(double(cdf[v] - cdf_min) / double(denom));

        for (std::size_t i = 0; i < pixels; ++i) {
            int level = int(src[i] * 255.0f + 0.5f);
            level = std::clamp(level, 0, 255);
            dst[i] = remap[level];
        }
    }
    return out;
}

// luma conversion, Rec.601 weights
inline ImageTensor to_grayscale(const ImageTensor& img) {
    if (img.channels == 1) throw AlreadyGray("to_grayscale: image is already single-channel");
    if (img.channels != 3) throw ModeMismatch("to_grayscale: expects a 3-channel image");

    ImageTensor out(1, img.height, img.width);
    const std::size_t pixels = std::size_t(img.height) * img.width;
    const float* r = img.data.data();
    const float* g = r + pixels;
    const float* b = g + pixels;
    for (std::size_t i = 0; i < pixels; ++i)
        out.data[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    return out;
}

// Per-channel normalized histogram (each channel sums to 1), concatenated.
// Bin index is floor(v * bins) clamped to the last bin.
inline std::vector<float> histogram_features(const ImageTensor& img, int bins = 256) {
    if (bins < 2) throw InvalidDimensions("histogram_features: bins must be >= 2");

    const std::size_t pixels = std::size_t(img.height) * img.width;
    std::vector<float> features(std::size_t(img.channels) * bins, 0.0f);
    for (int c = 0; c < img.channels; ++c) {
        const float* src = img.data.data() + std::size_t(c) * pixels;
        float* h = features.data() + std::size_t(c) * bins;
        for (std::size_t i = 0; i < pixels; ++i) {
            int bin = int(src[i] * bins);
            bin = std::clamp(bin, 0, bins - 1);
            h[bin] += 1.0f;
        }
        const float inv = 1.0f / float(pixels);
        for (int b = 0; b < bins; ++b) h[b] *= inv;
    }
    return features;
}

} // namespace pardinus
