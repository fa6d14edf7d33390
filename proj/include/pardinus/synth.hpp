// ============================================================================
// synth.hpp - synthetic camera-trap corpus generator
//
// Desk-scale stand-in for a real photo-trap corpus. Empty images are
// per-scene parametric backgrounds (vertical color gradient, sinusoidal
// texture, per-image noise, day/night palettes); animal images are the same
// background with one elliptical blob of contrasting intensity stamped on
// top. Everything derives from the seed, so a corpus regenerates
// byte-identically.
// ============================================================================

#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pardinus/codec.hpp"
#include "pardinus/dataset.hpp"
#include "pardinus/image.hpp"

namespace pardinus {

struct SynthSpec {
    int n_empty = 700;
    int n_animal = 350;
    int width = 96;   // divisible by 16 and by the grid
    int height = 64;
    int n_scene_types = 7;
};

struct BlobBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open [x0,x1) x [y0,y1)
};

namespace detail {

struct ScenePalette {
    float top[3];
    float bottom[3];
    float tex_amp;
    float tex_fx, tex_fy;
};

inline void hsv_to_rgb(float h, float s, float v, float rgb[3]) {
    h = h - std::floor(h);
    float r = std::fabs(h * 6.0f - 3.0f) - 1.0f;
    float g = 2.0f - std::fabs(h * 6.0f - 2.0f);
    float b = 2.0f - std::fabs(h * 6.0f - 4.0f);
    float base[3] = {std::clamp(r, 0.0f, 1.0f), std::clamp(g, 0.0f, 1.0f),
                     std::clamp(b, 0.0f, 1.0f)};
    for (int c = 0; c < 3; ++c) rgb[c] = ((base[c] - 1.0f) * s + 1.0f) * v;
}

// Golden-ratio hue spacing keeps any number of scene types well separated;
// every third type is a dark desaturated night scene.
inline ScenePalette scene_palette(int scene) {
    ScenePalette p{};
    const float hue = 0.137f + 0.61803398875f * float(scene);
    const bool night = (scene % 3) == 2;
    const float sat = night ? 0.12f : 0.45f;
    const float v_top = night ? 0.16f : 0.62f;
    const float v_bot = night ? 0.34f : 0.40f;
    hsv_to_rgb(hue, sat, v_top, p.top);
    hsv_to_rgb(hue + 0.06f, sat + 0.08f, v_bot, p.bottom);
    p.tex_amp = night ? 0.028f : 0.045f;
    p.tex_fx = float(2 + (scene * 3) % 7);
    p.tex_fy = float(1 + (scene * 2) % 5);
    return p;
}

} // namespace detail

// One empty background. Per-image variation: texture phase, global
// brightness jitter, per-image texture strength and a noise level drawn
// from [0.003, 0.022]. The amplitude and noise spread is what keeps whole-image
// error totals from separating the classes on their own.
inline ImageTensor synth_background(int scene, int width, int height, Rng& rng) {
    const detail::ScenePalette p = detail::scene_palette(scene);

    const double phase_x = rng.uniform(0.0, 6.283185307179586);
    const double phase_y = rng.uniform(0.0, 6.283185307179586);
    const double brightness = rng.uniform(0.95, 1.05);
    const double noise_sigma = rng.uniform(0.003, 0.022);
    const double tex_scale = rng.uniform(0.8, 1.3);

    ImageTensor img(3, height, width);
    const double two_pi = 6.283185307179586;
    for (int y = 0; y < height; ++y) {
        const double t = double(y) / double(height - 1);
        for (int x = 0; x < width; ++x) {
            const double tex = p.tex_amp * tex_scale *
                               std::sin(two_pi * p.tex_fx * x / width + phase_x) *
                               std::sin(two_pi * p.tex_fy * y / height + phase_y);
            for (int c = 0; c < 3; ++c) {
                double v = (1.0 - t) * p.top[c] + t * p.bottom[c];
                v = v * brightness + tex + noise_sigma * rng.normal();
                img.at(c, y, x) = float(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

// Stamp one axis-aligned elliptical blob covering 5-20% of the image area.
// The blob intensity sits just beyond the local background range, so it is
// subtle in raw RGB but lands on an extreme percentile once the image is
// equalized. Pixels outside the ellipse are untouched.
inline ImageTensor synth_stamp_blob(const ImageTensor& background, Rng& rng, BlobBox* box_out = nullptr) {
    const int w = background.width;
    const int h = background.height;

    const double area_frac = rng.uniform(0.05, 0.20);
    const double aspect = rng.uniform(0.6, 1.7);
    double ab = area_frac * w * h / 3.14159265358979323846; // product of half-axes
    double a = std::sqrt(ab * aspect);                      // horizontal half-axis
    double b = std::sqrt(ab / aspect);
    a = std::min(a, 0.45 * w);
    b = std::min(b, 0.45 * h);

    const double cx = rng.uniform(a + 1.0, w - a - 1.0);
    const double cy = rng.uniform(b + 1.0, h - b - 1.0);

    const int x0 = std::max(0, int(std::floor(cx - a)));
    const int x1 = std::min(w, int(std::ceil(cx + a)) + 1);
    const int y0 = std::max(0, int(std::floor(cy - b)));
    const int y1 = std::min(h, int(std::ceil(cy + b)) + 1);
    if (box_out) *box_out = {x0, y0, x1, y1};

    // local background statistics over the bounding box
    double mean[3] = {0, 0, 0};
    double lo[3] = {2, 2, 2}, hi[3] = {-1, -1, -1};
    std::size_t count = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = background.at(c, y, x);
                mean[c] += v;
                lo[c] = std::min(lo[c], v);
                hi[c] = std::max(hi[c], v);
            }
            ++count;
        }
    for (double& m : mean) m /= double(count);

    const double beyond = rng.uniform(0.008, 0.03);
    float blob_color[3];
    for (int c = 0; c < 3; ++c) {
        const double dir = mean[c] < 0.5 ? 1.0 : -1.0;
        const double edge = dir > 0 ? hi[c] : lo[c];
        blob_color[c] = float(std::clamp(edge + dir * beyond, 0.0, 1.0));
    }
    const double speckle = rng.uniform(0.005, 0.02);

    ImageTensor out = background;
    for (int y = y0; y < y1; ++y) {
        const double dy = (y - cy) / b;
        for (int x = x0; x < x1; ++x) {
            const double dx = (x - cx) / a;
            if (dx * dx + dy * dy > 1.0) continue;
            for (int c = 0; c < 3; ++c) {
                double v = blob_color[c] + speckle * rng.normal();
                out.at(c, y, x) = float(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

struct SynthResult {
    DatasetManifest manifest;   // paths relative to out_dir, split unassigned
    std::vector<int> scene_of;  // parallel to manifest.entries
};

// Generate the corpus under out_dir/images and write out_dir/manifest.csv.
// Scene types cycle uniformly through each class. Per-image generators are
// seeded independently, so the corpus does not depend on generation order.
inline SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed, const std::string& out_dir) {
    if (spec.n_empty < 1 || spec.n_animal < 1 || spec.n_scene_types < 1)
        throw InvalidDimensions("synth_generate: counts must be >= 1");
    if (spec.width < 16 || spec.height < 16 || spec.width % 16 != 0 || spec.height % 16 != 0)
        throw InvalidDimensions("synth_generate: dims must be positive multiples of 16");

    namespace fs = std::filesystem;
    const fs::path root(out_dir);
    fs::create_directories(root / "images");

    SynthResult result;
    char name[64];

    for (int i = 0; i < spec.n_empty; ++i) {
        const int scene = i % spec.n_scene_types;
        Rng rng(derive_seed(seed, "synth-empty", std::uint64_t(i)));
        ImageTensor img = synth_background(scene, spec.width, spec.height, rng);
        std::snprintf(name, sizeof name, "images/empty_s%d_%05d.png", scene, i);
        save_png(img, (root / name).string());
        result.manifest.entries.push_back({name, Label::empty, Split::unassigned});
        result.scene_of.push_back(scene);
    }
    for (int i = 0; i < spec.n_animal; ++i) {
        const int scene = i % spec.n_scene_types;
        Rng rng(derive_seed(seed, "synth-animal", std::uint64_t(i)));
        ImageTensor background = synth_background(scene, spec.width, spec.height, rng);
        ImageTensor img = synth_stamp_blob(background, rng);
        std::snprintf(name, sizeof name, "images/animal_s%d_%05d.png", scene, i);
        save_png(img, (root / name).string());
        result.manifest.entries.push_back({name, Label::animal, Split::unassigned});
        result.scene_of.push_back(scene);
    }

    save_manifest(result.manifest, (root / "manifest.csv").string());
    return result;
}

} // namespace pardinus
