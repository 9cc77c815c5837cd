#include "acam/backbone.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace acam {

namespace {

struct Geometry {
    int out_h, out_w, pad_top, pad_left;
};

Geometry geometry(int in_h, int in_w) {
    Geometry g;
    g.out_h = (in_h + 1) / 2;
    g.out_w = (in_w + 1) / 2;
    const int pad_h = std::max((g.out_h - 1) * 2 + 3 - in_h, 0);
    const int pad_w = std::max((g.out_w - 1) * 2 + 3 - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
}

} // namespace

ToyBackbone ToyBackbone::make(const std::vector<int>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw invalid_input("backbone: need at least one block");
    ToyBackbone bb;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        ConvBlock blk;
        blk.in_ch = widths[i];
        blk.out_ch = widths[i + 1];
        const double bound = std::sqrt(6.0 / (blk.in_ch * 9));
        blk.weights = Tensor::zeros({blk.out_ch, blk.in_ch, 9});
        for (double& v : blk.weights.data) v = uniform(rng, -bound, bound);
        blk.bias = Tensor::zeros({blk.out_ch});
        bb.blocks.push_back(std::move(blk));
    }
    return bb;
}

Tensor conv3x3_s2_forward(const Tensor& input, const ConvBlock& blk) {
    const int c_in = input.channels(), in_h = input.height(), in_w = input.width();
    if (c_in != blk.in_ch) throw invalid_input("conv3x3: channel mismatch");
    const Geometry g = geometry(in_h, in_w);
    Tensor out = Tensor::zeros({blk.out_ch, g.out_h, g.out_w});
    for (int co = 0; co < blk.out_ch; ++co) {
        for (int oi = 0; oi < g.out_h; ++oi) {
            for (int oj = 0; oj < g.out_w; ++oj) {
                double acc = blk.bias[co];
                const int base_i = oi * 2 - g.pad_top;
                const int base_j = oj * 2 - g.pad_left;
                for (int ci = 0; ci < c_in; ++ci) {
                    const double* wrow = &blk.weights.data[(static_cast<std::size_t>(co) * c_in + ci) * 9];
                    for (int ki = 0; ki < 3; ++ki) {
                        const int ii = base_i + ki;
                        if (ii < 0 || ii >= in_h) continue;
                        for (int kj = 0; kj < 3; ++kj) {
                            const int jj = base_j + kj;
                            if (jj < 0 || jj >= in_w) continue;
                            acc += wrow[ki * 3 + kj] * input.at(ci, ii, jj);
                        }
                    }
                }
                out.at(co, oi, oj) = acc;
            }
        }
    }
    return out;
}

void conv3x3_s2_backward(const Tensor& input, const ConvBlock& blk, const Tensor& grad_out,
                         Tensor& grad_weights, Tensor& grad_bias, Tensor* grad_input) {
    const int c_in = input.channels(), in_h = input.height(), in_w = input.width();
    const Geometry g = geometry(in_h, in_w);
    if (grad_out.channels() != blk.out_ch || grad_out.height() != g.out_h ||
        grad_out.width() != g.out_w)
        throw invalid_input("conv3x3 backward: grad_out shape inconsistent with forward");
    grad_weights = Tensor::zeros({blk.out_ch, c_in, 9});
    grad_bias = Tensor::zeros({blk.out_ch});
    if (grad_input) *grad_input = Tensor::zeros({c_in, in_h, in_w});
    for (int co = 0; co < blk.out_ch; ++co) {
        for (int oi = 0; oi < g.out_h; ++oi) {
            for (int oj = 0; oj < g.out_w; ++oj) {
                const double go = grad_out.at(co, oi, oj);
                if (go == 0.0) continue;
                grad_bias[co] += go;
                const int base_i = oi * 2 - g.pad_top;
                const int base_j = oj * 2 - g.pad_left;
                for (int ci = 0; ci < c_in; ++ci) {
                    double* gw = &grad_weights.data[(static_cast<std::size_t>(co) * c_in + ci) * 9];
                    const double* wrow = &blk.weights.data[(static_cast<std::size_t>(co) * c_in + ci) * 9];
                    for (int ki = 0; ki < 3; ++ki) {
                        const int ii = base_i + ki;
                        if (ii < 0 || ii >= in_h) continue;
                        for (int kj = 0; kj < 3; ++kj) {
                            const int jj = base_j + kj;
                            if (jj < 0 || jj >= in_w) continue;
                            gw[ki * 3 + kj] += go * input.at(ci, ii, jj);
                            if (grad_input) grad_input->at(ci, ii, jj) += go * wrow[ki * 3 + kj];
                        }
                    }
                }
            }
        }
    }
}

Tensor extract_features(const Tensor& image, const ToyBackbone& bb, BackboneCache* cache) {
    if (image.rank() != 3 || image.channels() != bb.blocks.front().in_ch)
        throw invalid_input("extract_features: image channel mismatch");
    const int min_extent = bb.stride();
    if (image.height() < min_extent || image.width() < min_extent)
        throw invalid_input("extract_features: image smaller than 2^depth");
    if (cache) {
        cache->inputs.clear();
        cache->preact.clear();
    }
    Tensor x = image;
    for (const ConvBlock& blk : bb.blocks) {
        if (cache) cache->inputs.push_back(x);
        Tensor pre = conv3x3_s2_forward(x, blk);
        if (cache) cache->preact.push_back(pre);
        for (double& v : pre.data) v = std::max(v, 0.0);
        x = std::move(pre);
    }
    return x;
}

BackboneGrads backbone_backward(const ToyBackbone& bb, const BackboneCache& cache,
                                const Tensor& grad_features, bool frozen,
                                bool want_input_grad) {
    if (cache.inputs.size() != bb.blocks.size() || cache.preact.size() != bb.blocks.size())
        throw invalid_input("backbone_backward: cache does not match backbone");
    BackboneGrads grads;
    if (frozen && !want_input_grad) return grads;
    if (!frozen) grads.blocks.resize(bb.blocks.size());

    Tensor g = grad_features;
    for (int b = static_cast<int>(bb.blocks.size()) - 1; b >= 0; --b) {
        const Tensor& pre = cache.preact[b];
        if (!g.same_shape(pre))
            throw invalid_input("backbone_backward: gradient shape inconsistent with cache");
        // ReLU adjoint.
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (pre.data[i] <= 0.0) g.data[i] = 0.0;
        Tensor gw, gb, gi;
        const bool need_input = b > 0 || want_input_grad;
        conv3x3_s2_backward(cache.inputs[b], bb.blocks[b], g, gw, gb,
                            need_input ? &gi : nullptr);
        if (!frozen) grads.blocks[b] = ConvBlockGrads{std::move(gw), std::move(gb)};
        if (need_input) g = std::move(gi);
    }
    if (want_input_grad) grads.grad_input = std::move(g);
    return grads;
}

namespace {

void write_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const char* field) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw format_error(std::string("truncated ") + field);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_feature_maps(const std::string& path, const Tensor& t) {
    if (t.rank() != 3) throw invalid_input("write_feature_maps: expected rank-3 tensor");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write("FMAP", 4);
    write_u32(f, 1);
    write_u32(f, static_cast<std::uint32_t>(t.channels()));
    write_u32(f, static_cast<std::uint32_t>(t.height()));
    write_u32(f, static_cast<std::uint32_t>(t.width()));
    for (double v : t.data) {
        float fv = static_cast<float>(v);
        static_assert(sizeof(float) == 4);
        std::uint32_t bits;
        std::memcpy(&bits, &fv, 4);
        write_u32(f, bits);
    }
    if (!f) throw io_error("write failed: " + path);
}

Tensor read_feature_maps(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "FMAP", 4) != 0)
        throw format_error("bad magic");
    const std::uint32_t version = read_u32(f, "version");
    if (version != 1) throw format_error("unsupported version");
    const std::uint32_t c = read_u32(f, "channel extent");
    const std::uint32_t h = read_u32(f, "height extent");
    const std::uint32_t w = read_u32(f, "width extent");
    if (c == 0 || h == 0 || w == 0) throw format_error("zero extent");
    const std::size_t n = static_cast<std::size_t>(c) * h * w;
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char b[4];
        if (!f.read(reinterpret_cast<char*>(b), 4))
            throw format_error("truncated payload");
        std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                             (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
        float fv;
        std::memcpy(&fv, &bits, 4);
        data[i] = fv;
    }
    // No trailing bytes allowed.
    char extra;
    if (f.read(&extra, 1)) throw format_error("trailing bytes after payload");
    return Tensor({static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)},
                  std::move(data));
}

} // namespace acam
