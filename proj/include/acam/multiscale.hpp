#pragma once

#include "acam/attention.hpp"
#include "acam/backbone.hpp"
#include "acam/config.hpp"
#include "acam/losses.hpp"
#include "acam/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acam {

// Per-scale bundle: backbone, local classifier bank, object-level classifier.
// Scales share nothing; each is trained independently.
struct ScaleModel {
    ToyBackbone backbone;
    LocalClassifierBank bank;
    ObjectClassifier object_clf;
    int scale_index = 0;

    static ScaleModel make(const RunConfig& cfg, int scale_index, std::uint64_t seed);
};

struct MultiScaleModel {
    std::vector<ScaleModel> scales;
};

// In-memory dataset at one scale.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<int> labels;
    std::vector<BBox> gt_boxes; // ground-truth patch boxes, original image coords

    std::size_t size() const { return images.size(); }
};

// Loads every manifest record relative to `root`, resized to size x size.
Dataset load_dataset(const std::string& root, const std::string& manifest_path, int size);

// Corner-aligned bilinear resize. out == in extents reproduces the input
// bit-for-bit.
Tensor bilinear_resize(const Tensor& image, int out_h, int out_w);

// Feature-coordinate box to image coordinates: each feature cell covers a
// stride x stride block. Clipped to the image.
BBox feature_box_to_image(const BBox& fb, int stride, int img_h, int img_w);

// Maps a feature-coordinate box to image coordinates through the cumulative
// stride, crops (clipped), and resizes. A crop that degenerates to zero area
// falls back to the full image and sets *fell_back.
Tensor crop_and_zoom(const Tensor& image, const BBox& feature_box, int stride,
                     int out_h, int out_w, bool* fell_back = nullptr);

// ---- per-image forward/backward -------------------------------------------
//
// All model entry points below take [0,1] images and center them around
// mid-gray before the backbone (standard input normalization).

struct ImageLossOptions {
    bool use_local = true;
    bool use_object = true;
    bool freeze_backbone = false;
    AggregateOn aggregate_on = AggregateOn::Probs;
    int otsu_bins = 256;
    // When set, the surrogate mask is not recomputed; used by the
    // finite-difference harness (M_b is a detached constant).
    const Mask* frozen_mask = nullptr;
};

struct ImageGrads {
    std::vector<ConvBlockGrads> backbone; // empty when frozen
    std::vector<Tensor> bank_weights;     // per classifier {L+1, C}
    std::vector<Tensor> bank_biases;      // per classifier {L+1}
    Tensor obj_weights;                   // {L, C}
    Tensor obj_bias;                      // {L}
    LossBreakdown breakdown;
};

// Forward-only loss under the options (loc/obj terms zeroed when gated off).
LossBreakdown compute_image_loss(const ScaleModel& model, const Tensor& image, int label,
                                 const ImageLossOptions& opts);
ImageGrads compute_image_grads(const ScaleModel& model, const Tensor& image, int label,
                               const ImageLossOptions& opts);

// Flat parameter vector in a fixed order (backbone blocks, bank, object
// classifier); the backbone segment is omitted when `frozen`.
std::vector<double> flatten_params(const ScaleModel& model, bool frozen = false);
void assign_params(ScaleModel& model, std::span<const double> params, bool frozen = false);
std::vector<double> flatten_grads(const ImageGrads& grads, bool frozen = false);

// ---- inference --------------------------------------------------------------

struct ScaleEval {
    Tensor local_pred;  // {L}: spatial mean of A over the fine-grained channels
    Tensor obj_pred;    // {L}: object classifier softmax
    Tensor prediction;  // {L}: mean of the two
    AttentionArtifacts artifacts;
};
ScaleEval scale_forward(const ScaleModel& model, const Tensor& image, const RunConfig& cfg);

struct PredictResult {
    Tensor final_pred;                       // {L}: mean over scales
    std::vector<ScaleEval> per_scale;
    std::vector<Tensor> scale_images;        // input seen by each scale
    int fallback_count = 0;                  // degenerate-crop warnings
};
PredictResult predict(const MultiScaleModel& model, const Tensor& image, const RunConfig& cfg);

int argmax_lowest(const Tensor& v);

// ---- training ----------------------------------------------------------------

struct TrainOptions {
    bool use_local = true;
    bool use_object = true;
};

struct TrainStats {
    double monitor_loss_before = 0.0;        // fixed monitoring batch, pre-training
    std::vector<double> monitor_losses;      // same batch after each epoch
};

// Mini-batch SGD with momentum on the combined loss; deterministic
// given the seed (fixed shuffle schedule, ordered accumulation).
void train_scale(ScaleModel& model, const Dataset& data, const RunConfig& cfg,
                 std::uint64_t seed, const TrainOptions& opts = {},
                 TrainStats* stats = nullptr);

struct PipelineLog {
    // crops[s][i]: image-coordinate crop rectangle used to build scale s+1's
    // training image i (S-1 entries per image).
    std::vector<std::vector<BBox>> crops;
    int fallback_count = 0;
};

MultiScaleModel train_pipeline(const Dataset& data, const RunConfig& cfg,
                               const TrainOptions& opts = {}, PipelineLog* log = nullptr);

// Checkpoint: magic "ACAM", u32 version=1, u32 scale count, then per scale
// the backbone layer dims + weights, bank dims (n, L, C) + weights, object
// classifier weights; dims u32, reals f64 little-endian.
void save_checkpoint(const std::string& path, const MultiScaleModel& model);
MultiScaleModel load_checkpoint(const std::string& path);

} // namespace acam
