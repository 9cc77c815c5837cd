#pragma once

#include "acam/multiscale.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace acam {

// Fraction of argmax-correct predictions (ties to the lowest index).
double accuracy(const std::vector<Tensor>& predictions, const std::vector<int>& labels);

// Intersection over union with inclusive pixel-count semantics
// (width = x1 - x0 + 1).
double iou(const BBox& a, const BBox& b);

struct AttentionIouResult {
    double mean_iou = 0.0;      // scale-1 attended bbox vs ground truth
    double baseline_iou = 0.0;  // same-extent box placed uniformly at random
};
AttentionIouResult attention_iou(const MultiScaleModel& model, const Dataset& data,
                                 const RunConfig& cfg, std::uint64_t baseline_seed = 1234);

// Mirrors the accuracy table layout of the multi-scale experiments: one
// column per scale plus the multi-scale ensemble column, with rows for the
// averaged local prediction, the object prediction, and their mean.
struct EvalReport {
    std::vector<double> acc_loc, acc_obj, acc_avg; // per scale
    double ms_loc = 0.0, ms_obj = 0.0, ms_avg = 0.0;
    double mean_iou = 0.0, baseline_iou = 0.0;
    double runtime_sec = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
};

EvalReport evaluate(const MultiScaleModel& model, const Dataset& data, const RunConfig& cfg);

std::string report_to_csv(const EvalReport& r);
EvalReport report_from_csv(const std::string& csv);
std::string report_to_text(const EvalReport& r);

struct LossAblationResult {
    double acc_combined = 0.0;
    double acc_local_only = 0.0;
    double acc_object_only = 0.0;
    bool object_clf_untouched_in_local_only = false;
    bool bank_untouched_in_object_only = false;
};
LossAblationResult ablate_losses(const Dataset& train, const Dataset& test,
                                 const RunConfig& cfg);

struct ClassifierCountPoint {
    int n = 0;
    double acc = 0.0;
};
std::vector<ClassifierCountPoint> ablate_num_classifiers(const Dataset& train,
                                                         const Dataset& test,
                                                         const RunConfig& cfg,
                                                         const std::vector<int>& n_list);

// Writes the raw attention map (P5, min-max normalized, upsampled to the
// image extents; a constant map becomes mid-gray) and a red-channel overlay
// (P6, 0.5*image + 0.5*heat on red).
void export_heatmap(const Tensor& image, const Tensor& attention,
                    const std::string& raw_path, const std::string& overlay_path);

} // namespace acam
