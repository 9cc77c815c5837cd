#include "acam/attention.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <cmath>

namespace acam {

LocalClassifierBank LocalClassifierBank::make(int n, int L, int C, std::uint64_t seed) {
    if (n < 1 || L < 1 || C < 1)
        throw invalid_input("classifier bank: n, L, C must be positive");
    LocalClassifierBank bank;
    bank.n = n;
    bank.L = L;
    bank.C = C;
    std::mt19937_64 rng(seed);
    const double bound = std::sqrt(6.0 / C);
    for (int i = 0; i < n; ++i) {
        Tensor w = Tensor::zeros({L + 1, C});
        for (double& v : w.data) v = uniform(rng, -bound, bound);
        bank.weights.push_back(std::move(w));
        bank.biases.push_back(Tensor::zeros({L + 1}));
    }
    return bank;
}

std::vector<Tensor> dense_local_logits(const Tensor& features, const LocalClassifierBank& bank) {
    if (features.channels() != bank.C)
        throw invalid_input("dense local activations: feature channels do not match bank");
    std::vector<Tensor> out;
    out.reserve(bank.n);
    for (int i = 0; i < bank.n; ++i)
        out.push_back(conv1x1_forward(features, bank.weights[i], bank.biases[i]));
    return out;
}

std::vector<Tensor> dense_local_activations(const Tensor& features,
                                            const LocalClassifierBank& bank) {
    std::vector<Tensor> out = dense_local_logits(features, bank);
    for (Tensor& t : out) t = softmax_channel(t);
    return out;
}

AggregatedVolume aggregate(const std::vector<Tensor>& volumes) {
    if (volumes.empty()) throw invalid_input("aggregate: need at least one volume");
    for (const Tensor& v : volumes)
        if (!v.same_shape(volumes.front()))
            throw invalid_input("aggregate: volume shape mismatch");
    AggregatedVolume agg;
    agg.n = static_cast<int>(volumes.size());
    agg.probs = volumes.front();
    agg.winner.assign(agg.probs.size(), 0);
    for (int i = 1; i < agg.n; ++i) {
        const Tensor& v = volumes[i];
        for (std::size_t k = 0; k < v.data.size(); ++k) {
            if (v.data[k] > agg.probs.data[k]) {
                agg.probs.data[k] = v.data[k];
                agg.winner[k] = i;
            }
        }
    }
    return agg;
}

std::vector<Tensor> aggregate_backward(const AggregatedVolume& agg, const Tensor& grad_probs) {
    if (!grad_probs.same_shape(agg.probs))
        throw invalid_input("aggregate backward: gradient shape mismatch");
    std::vector<Tensor> grads(agg.n, Tensor::zeros(agg.probs.shape));
    for (std::size_t k = 0; k < grad_probs.data.size(); ++k)
        grads[agg.winner[k]].data[k] = grad_probs.data[k];
    return grads;
}

Tensor attention_map(const AggregatedVolume& agg) {
    const int lp1 = agg.probs.channels();
    if (lp1 < 2) throw invalid_input("attention_map: need at least one fine-grained channel");
    const int h = agg.probs.height(), w = agg.probs.width();
    const int hw = h * w;
    Tensor m = Tensor::zeros({1, h, w});
    for (int p = 0; p < hw; ++p) {
        double mx = agg.probs.data[p];
        for (int k = 1; k < lp1 - 1; ++k)
            mx = std::max(mx, agg.probs.data[static_cast<std::size_t>(k) * hw + p]);
        m.data[p] = mx;
    }
    return m;
}

OtsuResult otsu_binarize(const Tensor& map, int bins) {
    if (map.rank() != 3 || map.channels() != 1)
        throw invalid_input("otsu_binarize: expected a 1xHxW map");
    if (bins < 2) throw invalid_input("otsu_binarize: need at least 2 bins");
    const int h = map.height(), w = map.width();
    const int hw = h * w;
    OtsuResult r;
    r.mask.h = h;
    r.mask.w = w;
    r.mask.v.assign(static_cast<std::size_t>(hw), 0);

    double lo = map.data[0], hi = map.data[0];
    for (double v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
        // Degenerate (constant) map: everything is foreground.
        std::fill(r.mask.v.begin(), r.mask.v.end(), std::uint8_t{1});
        r.threshold = 0;
        return r;
    }

    std::vector<int> level(hw);
    std::vector<long long> hist(bins, 0);
    const double scale = (bins - 1) / (hi - lo);
    for (int p = 0; p < hw; ++p) {
        int q = static_cast<int>(std::lround((map.data[p] - lo) * scale));
        q = std::clamp(q, 0, bins - 1);
        level[p] = q;
        ++hist[q];
    }

    // Between-class variance sweep; ties keep the lowest threshold.
    double total_sum = 0.0;
    for (int q = 0; q < bins; ++q) total_sum += static_cast<double>(q) * hist[q];
    const double total_n = hw;
    double best = -1.0;
    int best_t = 0;
    double n0 = 0.0, sum0 = 0.0;
    for (int t = 0; t + 1 < bins; ++t) {
        n0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        const double n1 = total_n - n0;
        if (n0 == 0.0 || n1 == 0.0) continue;
        const double mu0 = sum0 / n0;
        const double mu1 = (total_sum - sum0) / n1;
        const double var = n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    r.threshold = best_t;
    for (int p = 0; p < hw; ++p)
        if (level[p] > best_t) r.mask.v[p] = 1;
    return r;
}

double foreground_ratio(const Mask& mask) {
    const double total = static_cast<double>(mask.h) * mask.w;
    long long ones = 0;
    for (std::uint8_t b : mask.v) ones += b;
    double w = static_cast<double>(ones) / total;
    return std::clamp(w, 1.0 / total, 1.0);
}

BBox mask_to_bbox(const Mask& mask, double margin_fraction) {
    int r0 = mask.h, c0 = mask.w, r1 = -1, c1 = -1;
    for (int i = 0; i < mask.h; ++i)
        for (int j = 0; j < mask.w; ++j)
            if (mask.at(i, j)) {
                r0 = std::min(r0, i);
                c0 = std::min(c0, j);
                r1 = std::max(r1, i);
                c1 = std::max(c1, j);
            }
    if (r1 < 0) throw invalid_input("mask_to_bbox: empty mask");
    const int mh = static_cast<int>(std::lround(margin_fraction * (r1 - r0 + 1)));
    const int mw = static_cast<int>(std::lround(margin_fraction * (c1 - c0 + 1)));
    BBox b;
    b.y0 = std::max(r0 - mh, 0);
    b.x0 = std::max(c0 - mw, 0);
    b.y1 = std::min(r1 + mh, mask.h - 1);
    b.x1 = std::min(c1 + mw, mask.w - 1);
    return b;
}

AttentionArtifacts make_attention_artifacts(const AggregatedVolume& agg, int otsu_bins) {
    AttentionArtifacts art;
    art.map = attention_map(agg);
    OtsuResult otsu = otsu_binarize(art.map, otsu_bins);
    art.mask = std::move(otsu.mask);
    art.otsu_threshold = otsu.threshold;
    art.foreground_ratio = foreground_ratio(art.mask);
    art.bbox = mask_to_bbox(art.mask, 0.0);
    return art;
}

} // namespace acam
