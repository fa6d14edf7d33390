// ============================================================================
// config.hpp - end-to-end pipeline configuration
//
// Defaults follow the final system: k=7 clusters on raw RGB image features,
// 6x4 grid, correntropy-trained autoencoders, global balancing before
// classifier training. Stage seeds derive from one master seed.
// ============================================================================

#pragma once

#include "pardinus/clustering.hpp"
#include "pardinus/forest.hpp"
#include "pardinus/rae.hpp"

namespace pardinus {

struct PipelineConfig {
    int width = 96;   // image dims after resize; divisible by 16 and the grid
    int height = 64;
    FeatureMode feature_mode = FeatureMode::rgb_image;
    int k = 7;
    GridSpec grid{};
    RaeConfig rae{};
    ForestParams forest{};
    BalanceMode balance = BalanceMode::global;
    bool equalize_inputs = true;   // feed equalized images to the autoencoders
    double threshold = 0.5;
    bool tune_threshold = false;   // validation sweep capping fn_rate
    double fn_target = 0.05;
    std::uint64_t master_seed = 42;

    std::uint64_t split_seed() const { return derive_seed(master_seed, "stage-split"); }
    std::uint64_t kmeans_seed() const { return derive_seed(master_seed, "stage-kmeans"); }
    std::uint64_t rae_seed() const { return derive_seed(master_seed, "stage-rae"); }
    std::uint64_t forest_seed() const { return derive_seed(master_seed, "stage-forest"); }
    std::uint64_t balance_seed() const { return derive_seed(master_seed, "stage-balance"); }

    void validate() const {
        if (k < 2 || k > 16) throw InvalidDimensions("config: k must be in [2,16]");
        if (threshold < 0.0 || threshold > 1.0)
            throw BadThreshold("config: threshold must be in [0,1]");
        if (width % 16 != 0 || height % 16 != 0 || width < 16 || height < 16)
            throw IndivisibleDims("config: dims must be positive multiples of 16");
        if (width % grid.blocks_w != 0 || height % grid.blocks_h != 0)
            throw IndivisibleGrid("config: dims not divisible by grid");
        if (rae.width != width || rae.height != height)
            throw ShapeMismatch("config: rae dims must match pipeline dims");
    }

    // feature vector length the forest consumes
    int feature_dim() const { return 3 * grid.block_count() + 1; }
};

} // namespace pardinus
