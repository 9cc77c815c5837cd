#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acam {

// Thrown when an operation's input violates its contract (shape mismatch,
// out-of-range label, empty extent).
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown by file readers on malformed on-disk data; the message names the
// offending field ("bad magic", "truncated payload", ...).
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense rank-1..3 double tensor. Rank-3 layout is channel-major row-major:
// index(c,i,j) = (c*H + i)*W + j. Treated as immutable once built; ops
// return new tensors.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d);

    static Tensor zeros(std::vector<int> s);
    static Tensor full(std::vector<int> s, double v);

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return data.size(); }

    // Rank-3 accessors.
    int channels() const { return shape[0]; }
    int height() const { return shape[1]; }
    int width() const { return shape[2]; }

    double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    double& at(int c, int i) { return data[static_cast<std::size_t>(c) * shape[1] + i]; }
    double at(int c, int i) const { return data[static_cast<std::size_t>(c) * shape[1] + i]; }
    double& operator[](std::size_t k) { return data[k]; }
    double operator[](std::size_t k) const { return data[k]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

// value/grad pair; grad is the cotangent w.r.t. a scalar loss.
struct GradPair {
    Tensor value;
    Tensor grad;
};

// out[k,i,j] = bias[k] + sum_c weights[k,c] * features[c,i,j]
Tensor conv1x1_forward(const Tensor& features, const Tensor& weights, const Tensor& bias);

struct Conv1x1Grads {
    Tensor grad_features;
    Tensor grad_weights;
    Tensor grad_bias;
};
Conv1x1Grads conv1x1_backward(const Tensor& features, const Tensor& weights,
                              const Tensor& grad_out);

// Per-location softmax over the channel dimension, stabilized by max
// subtraction.
Tensor softmax_channel(const Tensor& logits);

// Adjoint of softmax_channel; `probs` is the forward output.
Tensor softmax_channel_backward(const Tensor& probs, const Tensor& grad_probs);

struct MaxPoolResult {
    Tensor values;           // shape {C}
    std::vector<int> argmax; // flattened spatial index per channel
    int h = 0;
    int w = 0;
};
// Ties broken toward the first cell in row-major order.
MaxPoolResult spatial_max_pool(const Tensor& features);
Tensor spatial_max_pool_backward(const MaxPoolResult& pooled, const Tensor& grad_values);

Tensor spatial_avg_pool(const Tensor& volume);
Tensor spatial_avg_pool_backward(const Tensor& grad_values, int h, int w);

// Central-finite-difference check of an analytic gradient. `loss` evaluates
// the scalar objective at a parameter vector; `params`/`analytic` are the
// point and its claimed gradient. Relative error uses max(|fd|,|an|,1) as
// the denominator.
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool finite = true;
    bool pass = false;
};
GradCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> params,
                               std::span<const double> analytic,
                               double step, double tolerance);

} // namespace acam
