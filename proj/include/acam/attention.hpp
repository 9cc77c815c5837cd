#pragma once

#include "acam/tensor.hpp"

#include <cstdint>
#include <vector>

namespace acam {

// Inclusive pixel/cell box; x is column, y is row.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool operator==(const BBox&) const = default;
};

// {0,1}-valued spatial map.
struct Mask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> v;

    std::uint8_t at(int i, int j) const { return v[static_cast<std::size_t>(i) * w + j]; }
    std::uint8_t& at(int i, int j) { return v[static_cast<std::size_t>(i) * w + j]; }
};

// n linear local classifiers over C-dim feature columns, each emitting L+1
// scores (index L is the background category).
struct LocalClassifierBank {
    int n = 0;
    int L = 0;
    int C = 0;
    std::vector<Tensor> weights; // n tensors {L+1, C}
    std::vector<Tensor> biases;  // n tensors {L+1}

    static LocalClassifierBank make(int n, int L, int C, std::uint64_t seed);
};

// Classifier-dimension max of the n activation volumes, with per-cell
// provenance of the winning classifier.
struct AggregatedVolume {
    Tensor probs;            // {L+1, H, W}
    std::vector<int> winner; // same layout, values in [0, n)
    int n = 0;
};

struct AttentionArtifacts {
    Tensor map;              // {1, H, W}
    Mask mask;
    double foreground_ratio = 0.0;
    int otsu_threshold = 0;
    BBox bbox;               // tight enclosure of mask 1-cells, feature coords
};

// Per-classifier logits: conv1x1 of every classifier against the features.
std::vector<Tensor> dense_local_logits(const Tensor& features, const LocalClassifierBank& bank);

// Per-classifier probability volumes (conv1x1 then channel softmax).
std::vector<Tensor> dense_local_activations(const Tensor& features,
                                            const LocalClassifierBank& bank);

// Elementwise max across the classifier list; ties go to the lowest index.
AggregatedVolume aggregate(const std::vector<Tensor>& volumes);

// Routes each cell's gradient to its winning volume only.
std::vector<Tensor> aggregate_backward(const AggregatedVolume& agg, const Tensor& grad_probs);

// Channel max excluding the last (background) channel.
Tensor attention_map(const AggregatedVolume& agg);

struct OtsuResult {
    Mask mask;
    int threshold = 0; // quantized level; mask = 1 iff level > threshold
};
// Otsu thresholding of a continuous map quantized to `bins` levels over
// [min, max]. A constant map yields an all-ones mask.
OtsuResult otsu_binarize(const Tensor& map, int bins = 256);

// Mean of the mask, clamped to [1/(WH), 1].
double foreground_ratio(const Mask& mask);

// Tight bbox of the 1-cells, then expanded by round(margin * extent) on each
// side and clipped to the map.
BBox mask_to_bbox(const Mask& mask, double margin_fraction);

// Full attention pipeline from an aggregated volume. The stored bbox is the
// tight enclosure; margin expansion happens where crops are taken.
AttentionArtifacts make_attention_artifacts(const AggregatedVolume& agg, int otsu_bins);

} // namespace acam
