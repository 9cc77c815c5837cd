#pragma once

#include "acam/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acam {

// One 3x3 / stride-2 / same-padding convolution followed by ReLU.
// Weights are stored {out_ch, in_ch, 9} with the 3x3 taps row-major.
struct ConvBlock {
    int in_ch = 0;
    int out_ch = 0;
    Tensor weights; // {out_ch, in_ch, 9}
    Tensor bias;    // {out_ch}
};

// Small trainable stand-in for a deep feature extractor. Each block halves
// the spatial extents (ceil); cumulative stride is 2^depth.
struct ToyBackbone {
    std::vector<ConvBlock> blocks;

    int depth() const { return static_cast<int>(blocks.size()); }
    int out_channels() const { return blocks.back().out_ch; }
    int stride() const { return 1 << depth(); }

    // He-style uniform init (+-sqrt(6/fan_in)), biases zero.
    static ToyBackbone make(const std::vector<int>& widths, std::uint64_t seed);
    static ToyBackbone make_default(std::uint64_t seed) {
        return make({3, 16, 32, 64}, seed);
    }
};

struct BackboneCache {
    std::vector<Tensor> inputs;  // input to each block
    std::vector<Tensor> preact;  // pre-ReLU output of each block
};

struct ConvBlockGrads {
    Tensor grad_weights;
    Tensor grad_bias;
};

struct BackboneGrads {
    std::vector<ConvBlockGrads> blocks; // empty when the backbone is frozen
    std::optional<Tensor> grad_input;
};

Tensor extract_features(const Tensor& image, const ToyBackbone& bb, BackboneCache* cache = nullptr);

BackboneGrads backbone_backward(const ToyBackbone& bb, const BackboneCache& cache,
                                const Tensor& grad_features, bool frozen = false,
                                bool want_input_grad = false);

// Single conv block primitives, exposed for gradient checking.
Tensor conv3x3_s2_forward(const Tensor& input, const ConvBlock& blk);
void conv3x3_s2_backward(const Tensor& input, const ConvBlock& blk, const Tensor& grad_out,
                         Tensor& grad_weights, Tensor& grad_bias, Tensor* grad_input);

// FMAP feature-map file: magic "FMAP", u32 version=1, u32 C,H,W,
// then C*H*W little-endian float32, channel-major.
Tensor read_feature_maps(const std::string& path);
void write_feature_maps(const std::string& path, const Tensor& t);

} // namespace acam
