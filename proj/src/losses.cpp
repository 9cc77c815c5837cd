#include "acam/losses.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <cmath>

namespace acam {

ObjectClassifier ObjectClassifier::make(int L, int C, std::uint64_t seed) {
    if (L < 1 || C < 1) throw invalid_input("object classifier: L, C must be positive");
    ObjectClassifier clf;
    clf.L = L;
    clf.C = C;
    clf.weights = Tensor::zeros({L, C});
    std::mt19937_64 rng(seed);
    const double bound = std::sqrt(6.0 / C);
    for (double& v : clf.weights.data) v = uniform(rng, -bound, bound);
    clf.bias = Tensor::zeros({L});
    return clf;
}

LocalLossResult local_loss(const Tensor& agg_probs, const Mask& mask, double w, int label) {
    const int lp1 = agg_probs.channels();
    const int h = agg_probs.height(), ww = agg_probs.width();
    const int L = lp1 - 1;
    if (label < 0 || label >= L) throw invalid_input("local_loss: label out of range");
    if (mask.h != h || mask.w != ww) throw invalid_input("local_loss: mask shape mismatch");
    if (w <= 0.0 || w > 1.0) throw invalid_input("local_loss: w must be in (0,1]");

    const int hw = h * ww;
    LocalLossResult r;
    r.grad_probs = Tensor::zeros(agg_probs.shape);
    const double inv_area = 1.0 / hw;
    for (int p = 0; p < hw; ++p) {
        const int ch = mask.v[p] ? label : L;
        const double prob = std::max(agg_probs.data[static_cast<std::size_t>(ch) * hw + p],
                                     kProbFloor);
        const double term = -std::log(prob);
        const double weight = mask.v[p] ? (1.0 - w) : w;
        if (mask.v[p])
            r.l1 += term;
        else
            r.l0 += term;
        r.grad_probs.data[static_cast<std::size_t>(ch) * hw + p] =
            -inv_area * weight / prob;
    }
    r.loss = inv_area * ((1.0 - w) * r.l1 + w * r.l0);
    return r;
}

MaxPoolResult object_features(const Tensor& features, const Mask& mask) {
    if (mask.h != features.height() || mask.w != features.width())
        throw invalid_input("object_features: mask shape mismatch");
    Tensor weighted = features;
    const int hw = mask.h * mask.w;
    for (int c = 0; c < features.channels(); ++c)
        for (int p = 0; p < hw; ++p)
            if (!mask.v[p]) weighted.data[static_cast<std::size_t>(c) * hw + p] = 0.0;
    return spatial_max_pool(weighted);
}

Tensor object_features_backward(const MaxPoolResult& pooled, const Mask& mask,
                                const Tensor& grad_values) {
    Tensor g = spatial_max_pool_backward(pooled, grad_values);
    const int hw = mask.h * mask.w;
    for (int c = 0; c < g.channels(); ++c)
        for (int p = 0; p < hw; ++p)
            if (!mask.v[p]) g.data[static_cast<std::size_t>(c) * hw + p] = 0.0;
    return g;
}

ObjectLossResult object_loss(const Tensor& obj_feat, const ObjectClassifier& clf, int label) {
    if (label < 0 || label >= clf.L) throw invalid_input("object_loss: label out of range");
    if (obj_feat.rank() != 1 || obj_feat.shape[0] != clf.C)
        throw invalid_input("object_loss: feature length does not match classifier");

    ObjectLossResult r;
    // Logits, stabilized softmax over L classes.
    std::vector<double> logits(clf.L);
    for (int l = 0; l < clf.L; ++l) {
        double acc = clf.bias[l];
        for (int c = 0; c < clf.C; ++c) acc += clf.weights.at(l, c) * obj_feat[c];
        logits[l] = acc;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    r.probs = Tensor::zeros({clf.L});
    for (int l = 0; l < clf.L; ++l) {
        r.probs[l] = std::exp(logits[l] - mx);
        sum += r.probs[l];
    }
    for (int l = 0; l < clf.L; ++l) r.probs[l] /= sum;

    r.loss = -std::log(std::max(r.probs[label], kProbFloor));

    r.grad_logits = r.probs;
    r.grad_logits[label] -= 1.0;

    r.grad_weights = Tensor::zeros({clf.L, clf.C});
    r.grad_bias = r.grad_logits;
    r.grad_features = Tensor::zeros({clf.C});
    for (int l = 0; l < clf.L; ++l) {
        const double g = r.grad_logits[l];
        for (int c = 0; c < clf.C; ++c) {
            r.grad_weights.at(l, c) = g * obj_feat[c];
            r.grad_features[c] += g * clf.weights.at(l, c);
        }
    }
    return r;
}

Tensor object_predict(const Tensor& obj_feat, const ObjectClassifier& clf) {
    if (obj_feat.rank() != 1 || obj_feat.shape[0] != clf.C)
        throw invalid_input("object_predict: feature length does not match classifier");
    std::vector<double> logits(clf.L);
    for (int l = 0; l < clf.L; ++l) {
        double acc = clf.bias[l];
        for (int c = 0; c < clf.C; ++c) acc += clf.weights.at(l, c) * obj_feat[c];
        logits[l] = acc;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    Tensor probs = Tensor::zeros({clf.L});
    double sum = 0.0;
    for (int l = 0; l < clf.L; ++l) {
        probs[l] = std::exp(logits[l] - mx);
        sum += probs[l];
    }
    for (int l = 0; l < clf.L; ++l) probs[l] /= sum;
    return probs;
}

LossBreakdown total_loss(const LocalLossResult& loc, const ObjectLossResult& obj, double w) {
    LossBreakdown b;
    b.loc = loc.loss;
    b.obj = obj.loss;
    b.total = loc.loss + obj.loss;
    b.l0 = loc.l0;
    b.l1 = loc.l1;
    b.w = w;
    return b;
}

} // namespace acam
