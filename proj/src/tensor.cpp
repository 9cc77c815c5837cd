#include "acam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acam {

namespace {
std::size_t shape_product(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int e : s) n *= static_cast<std::size_t>(e);
    return n;
}
} // namespace

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape.empty() || shape.size() > 3)
        throw invalid_input("tensor rank must be 1..3");
    for (int e : shape)
        if (e < 1) throw invalid_input("tensor extents must be positive");
    if (shape_product(shape) != data.size())
        throw invalid_input("tensor shape does not match data length");
}

Tensor Tensor::zeros(std::vector<int> s) {
    std::size_t n = shape_product(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<int> s, double v) {
    std::size_t n = shape_product(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
}

Tensor conv1x1_forward(const Tensor& features, const Tensor& weights, const Tensor& bias) {
    if (features.rank() != 3 || weights.rank() != 2 || bias.rank() != 1)
        throw invalid_input("conv1x1: expected rank-3 features, rank-2 weights, rank-1 bias");
    const int c = features.channels(), h = features.height(), w = features.width();
    const int k = weights.shape[0];
    if (weights.shape[1] != c)
        throw invalid_input("conv1x1: feature channels do not match weight columns");
    if (bias.shape[0] != k)
        throw invalid_input("conv1x1: bias length does not match output channels");

    Tensor out = Tensor::zeros({k, h, w});
    const int hw = h * w;
    for (int ko = 0; ko < k; ++ko) {
        double* dst = &out.data[static_cast<std::size_t>(ko) * hw];
        for (int p = 0; p < hw; ++p) dst[p] = bias[ko];
        for (int ci = 0; ci < c; ++ci) {
            const double wv = weights.at(ko, ci);
            const double* src = &features.data[static_cast<std::size_t>(ci) * hw];
            for (int p = 0; p < hw; ++p) dst[p] += wv * src[p];
        }
    }
    return out;
}

Conv1x1Grads conv1x1_backward(const Tensor& features, const Tensor& weights,
                              const Tensor& grad_out) {
    const int c = features.channels(), h = features.height(), w = features.width();
    const int k = weights.shape[0];
    if (weights.shape[1] != c)
        throw invalid_input("conv1x1 backward: feature channels do not match weight columns");
    if (grad_out.rank() != 3 || grad_out.channels() != k || grad_out.height() != h ||
        grad_out.width() != w)
        throw invalid_input("conv1x1 backward: grad_out shape inconsistent with forward");

    Conv1x1Grads g;
    g.grad_features = Tensor::zeros({c, h, w});
    g.grad_weights = Tensor::zeros({k, c});
    g.grad_bias = Tensor::zeros({k});
    const int hw = h * w;
    for (int ko = 0; ko < k; ++ko) {
        const double* go = &grad_out.data[static_cast<std::size_t>(ko) * hw];
        double gb = 0.0;
        for (int p = 0; p < hw; ++p) gb += go[p];
        g.grad_bias[ko] = gb;
        for (int ci = 0; ci < c; ++ci) {
            const double* src = &features.data[static_cast<std::size_t>(ci) * hw];
            double* gf = &g.grad_features.data[static_cast<std::size_t>(ci) * hw];
            const double wv = weights.at(ko, ci);
            double gw = 0.0;
            for (int p = 0; p < hw; ++p) {
                gw += go[p] * src[p];
                gf[p] += wv * go[p];
            }
            g.grad_weights.at(ko, ci) = gw;
        }
    }
    return g;
}

Tensor softmax_channel(const Tensor& logits) {
    if (logits.rank() != 3) throw invalid_input("softmax_channel: expected rank-3 input");
    const int k = logits.channels(), h = logits.height(), w = logits.width();
    Tensor out = Tensor::zeros({k, h, w});
    const int hw = h * w;
    for (int p = 0; p < hw; ++p) {
        double mx = logits.data[p];
        for (int ko = 1; ko < k; ++ko)
            mx = std::max(mx, logits.data[static_cast<std::size_t>(ko) * hw + p]);
        double sum = 0.0;
        for (int ko = 0; ko < k; ++ko) {
            double e = std::exp(logits.data[static_cast<std::size_t>(ko) * hw + p] - mx);
            out.data[static_cast<std::size_t>(ko) * hw + p] = e;
            sum += e;
        }
        for (int ko = 0; ko < k; ++ko)
            out.data[static_cast<std::size_t>(ko) * hw + p] /= sum;
    }
    return out;
}

Tensor softmax_channel_backward(const Tensor& probs, const Tensor& grad_probs) {
    if (!probs.same_shape(grad_probs))
        throw invalid_input("softmax backward: shape mismatch");
    const int k = probs.channels(), h = probs.height(), w = probs.width();
    Tensor out = Tensor::zeros({k, h, w});
    const int hw = h * w;
    for (int p = 0; p < hw; ++p) {
        double dot = 0.0;
        for (int ko = 0; ko < k; ++ko) {
            std::size_t idx = static_cast<std::size_t>(ko) * hw + p;
            dot += grad_probs.data[idx] * probs.data[idx];
        }
        for (int ko = 0; ko < k; ++ko) {
            std::size_t idx = static_cast<std::size_t>(ko) * hw + p;
            out.data[idx] = probs.data[idx] * (grad_probs.data[idx] - dot);
        }
    }
    return out;
}

MaxPoolResult spatial_max_pool(const Tensor& features) {
    if (features.rank() != 3) throw invalid_input("spatial_max_pool: expected rank-3 input");
    const int c = features.channels(), h = features.height(), w = features.width();
    if (h < 1 || w < 1) throw invalid_input("spatial_max_pool: empty spatial extent");
    MaxPoolResult r;
    r.values = Tensor::zeros({c});
    r.argmax.assign(c, 0);
    r.h = h;
    r.w = w;
    const int hw = h * w;
    for (int ci = 0; ci < c; ++ci) {
        const double* src = &features.data[static_cast<std::size_t>(ci) * hw];
        int best = 0;
        for (int p = 1; p < hw; ++p)
            if (src[p] > src[best]) best = p;
        r.values[ci] = src[best];
        r.argmax[ci] = best;
    }
    return r;
}

Tensor spatial_max_pool_backward(const MaxPoolResult& pooled, const Tensor& grad_values) {
    const int c = pooled.values.shape[0];
    if (grad_values.rank() != 1 || grad_values.shape[0] != c)
        throw invalid_input("max_pool backward: grad shape mismatch");
    Tensor out = Tensor::zeros({c, pooled.h, pooled.w});
    const int hw = pooled.h * pooled.w;
    for (int ci = 0; ci < c; ++ci)
        out.data[static_cast<std::size_t>(ci) * hw + pooled.argmax[ci]] = grad_values[ci];
    return out;
}

Tensor spatial_avg_pool(const Tensor& volume) {
    if (volume.rank() != 3) throw invalid_input("spatial_avg_pool: expected rank-3 input");
    const int k = volume.channels(), h = volume.height(), w = volume.width();
    if (h < 1 || w < 1) throw invalid_input("spatial_avg_pool: empty spatial extent");
    Tensor out = Tensor::zeros({k});
    const int hw = h * w;
    for (int ko = 0; ko < k; ++ko) {
        double s = 0.0;
        const double* src = &volume.data[static_cast<std::size_t>(ko) * hw];
        for (int p = 0; p < hw; ++p) s += src[p];
        out[ko] = s / hw;
    }
    return out;
}

Tensor spatial_avg_pool_backward(const Tensor& grad_values, int h, int w) {
    const int k = grad_values.shape[0];
    Tensor out = Tensor::zeros({k, h, w});
    const int hw = h * w;
    for (int ko = 0; ko < k; ++ko) {
        const double g = grad_values[ko] / hw;
        for (int p = 0; p < hw; ++p)
            out.data[static_cast<std::size_t>(ko) * hw + p] = g;
    }
    return out;
}

GradCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> params,
                               std::span<const double> analytic,
                               double step, double tolerance) {
    if (params.size() != analytic.size())
        throw invalid_input("gradient_check: parameter/gradient length mismatch");
    GradCheckReport rep;
    std::vector<double> p(params.begin(), params.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + step;
        const double lp = loss(p);
        p[i] = orig - step;
        const double lm = loss(p);
        p[i] = orig;
        if (!std::isfinite(lp) || !std::isfinite(lm)) {
            rep.finite = false;
            rep.worst_index = i;
            rep.pass = false;
            return rep;
        }
        const double fd = (lp - lm) / (2.0 * step);
        const double an = analytic[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1.0});
        const double rel = std::abs(fd - an) / denom;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_index = i;
        }
    }
    rep.pass = rep.finite && rep.max_rel_error <= tolerance;
    return rep;
}

} // namespace acam
