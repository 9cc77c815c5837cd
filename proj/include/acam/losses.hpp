#pragma once

#include "acam/attention.hpp"
#include "acam/tensor.hpp"

#include <cstdint>

namespace acam {

// Linear object-level classifier over L fine-grained categories (no
// background class).
struct ObjectClassifier {
    int L = 0;
    int C = 0;
    Tensor weights; // {L, C}
    Tensor bias;    // {L}

    static ObjectClassifier make(int L, int C, std::uint64_t seed);
};

struct LossBreakdown {
    double loc = 0.0;
    double obj = 0.0;
    double total = 0.0;
    double l0 = 0.0;
    double l1 = 0.0;
    double w = 0.0;
};

// Probabilities are floored at this value inside every log.
inline constexpr double kProbFloor = 1e-12;

struct LocalLossResult {
    double l1 = 0.0;   // fine-grained term, summed over mask-1 cells
    double l0 = 0.0;   // background term, summed over mask-0 cells
    double loss = 0.0; // (1/WH) * ((1-w) l1 + w l0)
    Tensor grad_probs; // cotangent w.r.t. the aggregated probability volume
};
// agg_probs is the (L+1)xHxW aggregated volume; label t indexes a
// fine-grained category; the mask and w are treated as constants.
LocalLossResult local_loss(const Tensor& agg_probs, const Mask& mask, double w, int label);

// Max-pool of the mask-weighted feature maps. The mask is a detached
// constant; gradients flow to the features only.
MaxPoolResult object_features(const Tensor& features, const Mask& mask);
Tensor object_features_backward(const MaxPoolResult& pooled, const Mask& mask,
                                const Tensor& grad_values);

struct ObjectLossResult {
    double loss = 0.0;
    Tensor probs;        // {L}
    Tensor grad_logits;  // {L}
    Tensor grad_features; // {C}, w.r.t. the pooled object feature vector
    Tensor grad_weights; // {L, C}
    Tensor grad_bias;    // {L}
};
ObjectLossResult object_loss(const Tensor& obj_feat, const ObjectClassifier& clf, int label);

// Forward-only softmax probabilities of the object classifier.
Tensor object_predict(const Tensor& obj_feat, const ObjectClassifier& clf);

LossBreakdown total_loss(const LocalLossResult& loc, const ObjectLossResult& obj, double w);

} // namespace acam
