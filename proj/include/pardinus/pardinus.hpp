// ============================================================================
// pardinus.hpp - umbrella include
// ============================================================================

#pragma once

#include "pardinus/bundle.hpp"
#include "pardinus/clustering.hpp"
#include "pardinus/codec.hpp"
#include "pardinus/common.hpp"
#include "pardinus/config.hpp"
#include "pardinus/dataset.hpp"
#include "pardinus/forest.hpp"
#include "pardinus/grid_features.hpp"
#include "pardinus/image.hpp"
#include "pardinus/losses.hpp"
#include "pardinus/metrics.hpp"
#include "pardinus/network.hpp"
#include "pardinus/pipeline.hpp"
#include "pardinus/rae.hpp"
#include "pardinus/synth.hpp"
#include "pardinus/tensor.hpp"
