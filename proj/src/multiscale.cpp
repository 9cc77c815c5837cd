#include "acam/multiscale.hpp"
#include "acam/data.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace acam {

ScaleModel ScaleModel::make(const RunConfig& cfg, int scale_index, std::uint64_t seed) {
    ScaleModel m;
    m.backbone = ToyBackbone::make_default(mix_seed(seed, 1));
    const int C = m.backbone.out_channels();
    m.bank = LocalClassifierBank::make(cfg.n_classifiers, cfg.categories, C, mix_seed(seed, 2));
    m.object_clf = ObjectClassifier::make(cfg.categories, C, mix_seed(seed, 3));
    m.scale_index = scale_index;
    return m;
}

Tensor bilinear_resize(const Tensor& image, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw invalid_input("bilinear_resize: empty output");
    const int c = image.channels(), in_h = image.height(), in_w = image.width();
    Tensor out = Tensor::zeros({c, out_h, out_w});
    const double sy = out_h == 1 ? 0.0 : static_cast<double>(in_h - 1) / (out_h - 1);
    const double sx = out_w == 1 ? 0.0 : static_cast<double>(in_w - 1) / (out_w - 1);
    for (int i = 0; i < out_h; ++i) {
        const double fy = i * sy;
        const int y0 = std::min(static_cast<int>(fy), in_h - 1);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double ty = fy - y0;
        for (int j = 0; j < out_w; ++j) {
            const double fx = j * sx;
            const int x0 = std::min(static_cast<int>(fx), in_w - 1);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const double tx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                const double v00 = image.at(ch, y0, x0), v01 = image.at(ch, y0, x1);
                const double v10 = image.at(ch, y1, x0), v11 = image.at(ch, y1, x1);
                out.at(ch, i, j) = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                                   ty * ((1 - tx) * v10 + tx * v11);
            }
        }
    }
    return out;
}

// Each feature cell covers a stride x stride block of the image.
BBox feature_box_to_image(const BBox& fb, int stride, int img_h, int img_w) {
    BBox b;
    b.x0 = std::clamp(fb.x0 * stride, 0, img_w - 1);
    b.y0 = std::clamp(fb.y0 * stride, 0, img_h - 1);
    b.x1 = std::clamp((fb.x1 + 1) * stride - 1, 0, img_w - 1);
    b.y1 = std::clamp((fb.y1 + 1) * stride - 1, 0, img_h - 1);
    return b;
}

Tensor crop_and_zoom(const Tensor& image, const BBox& feature_box, int stride,
                     int out_h, int out_w, bool* fell_back) {
    if (fell_back) *fell_back = false;
    const int h = image.height(), w = image.width();
    BBox b = feature_box_to_image(feature_box, stride, h, w);
    if (b.x1 < b.x0 || b.y1 < b.y0) {
        if (fell_back) *fell_back = true;
        b = BBox{0, 0, w - 1, h - 1};
    }
    const int ch = image.channels();
    Tensor crop = Tensor::zeros({ch, b.height(), b.width()});
    for (int c = 0; c < ch; ++c)
        for (int i = b.y0; i <= b.y1; ++i)
            for (int j = b.x0; j <= b.x1; ++j)
                crop.at(c, i - b.y0, j - b.x0) = image.at(c, i, j);
    return bilinear_resize(crop, out_h, out_w);
}

Dataset load_dataset(const std::string& root, const std::string& manifest_path, int size) {
    namespace fs = std::filesystem;
    Dataset ds;
    for (const SampleRecord& r : read_manifest(manifest_path)) {
        Tensor img = read_image((fs::path(root) / r.path).string());
        if (img.channels() == 1) {
            Tensor rgb = Tensor::zeros({3, img.height(), img.width()});
            for (int c = 0; c < 3; ++c)
                std::copy(img.data.begin(), img.data.end(),
                          rgb.data.begin() + static_cast<std::size_t>(c) * img.height() * img.width());
            img = std::move(rgb);
        }
        if (img.height() != size || img.width() != size)
            img = bilinear_resize(img, size, size);
        ds.images.push_back(std::move(img));
        ds.labels.push_back(r.label);
        ds.gt_boxes.push_back(r.bbox);
    }
    return ds;
}

// ---- per-image forward/backward -------------------------------------------

namespace {

// Model inputs are centered around mid-gray before the backbone. Uncentered
// [0,1] pixels put a large shared DC component into every feature column,
// which drowns the contrast between textured and flat regions that the
// attention map needs, especially at initialization.
Tensor centered(const Tensor& image) {
    Tensor out = image;
    for (double& v : out.data) v -= 0.5;
    return out;
}

struct ForwardPass {
    BackboneCache cache;
    Tensor features;
    std::vector<Tensor> logits;
    std::vector<Tensor> probs;  // per-classifier probs (probs mode only)
    AggregatedVolume agg;       // winner provenance; probs field per mode
    Tensor agg_probs;           // probability volume driving loss/attention
    Mask mask;
    double w = 1.0;
    LocalLossResult loc;
    MaxPoolResult objpool;
    ObjectLossResult obj;
    LossBreakdown breakdown;
};

void forward_image(const ScaleModel& model, const Tensor& image, int label,
                   const ImageLossOptions& opts, ForwardPass& fp) {
    fp.features = extract_features(centered(image), model.backbone, &fp.cache);
    fp.logits = dense_local_logits(fp.features, model.bank);
    if (opts.aggregate_on == AggregateOn::Probs) {
        fp.probs.clear();
        fp.probs.reserve(fp.logits.size());
        for (const Tensor& l : fp.logits) fp.probs.push_back(softmax_channel(l));
        fp.agg = aggregate(fp.probs);
        fp.agg_probs = fp.agg.probs;
    } else {
        fp.agg = aggregate(fp.logits);
        fp.agg_probs = softmax_channel(fp.agg.probs);
    }

    if (opts.frozen_mask) {
        fp.mask = *opts.frozen_mask;
    } else {
        AggregatedVolume view{fp.agg_probs, fp.agg.winner, fp.agg.n};
        Tensor m = attention_map(view);
        fp.mask = otsu_binarize(m, opts.otsu_bins).mask;
    }
    fp.w = foreground_ratio(fp.mask);

    fp.loc = local_loss(fp.agg_probs, fp.mask, fp.w, label);
    fp.objpool = object_features(fp.features, fp.mask);
    fp.obj = object_loss(fp.objpool.values, model.object_clf, label);

    fp.breakdown.l0 = fp.loc.l0;
    fp.breakdown.l1 = fp.loc.l1;
    fp.breakdown.w = fp.w;
    fp.breakdown.loc = opts.use_local ? fp.loc.loss : 0.0;
    fp.breakdown.obj = opts.use_object ? fp.obj.loss : 0.0;
    fp.breakdown.total = fp.breakdown.loc + fp.breakdown.obj;
}

} // namespace

LossBreakdown compute_image_loss(const ScaleModel& model, const Tensor& image, int label,
                                 const ImageLossOptions& opts) {
    ForwardPass fp;
    forward_image(model, image, label, opts, fp);
    return fp.breakdown;
}

ImageGrads compute_image_grads(const ScaleModel& model, const Tensor& image, int label,
                               const ImageLossOptions& opts) {
    ForwardPass fp;
    forward_image(model, image, label, opts, fp);

    const int n = model.bank.n;
    ImageGrads g;
    g.breakdown = fp.breakdown;
    g.bank_weights.assign(n, Tensor::zeros({model.bank.L + 1, model.bank.C}));
    g.bank_biases.assign(n, Tensor::zeros({model.bank.L + 1}));
    g.obj_weights = Tensor::zeros({model.object_clf.L, model.object_clf.C});
    g.obj_bias = Tensor::zeros({model.object_clf.L});

    Tensor grad_features = Tensor::zeros(fp.features.shape);

    if (opts.use_local) {
        if (opts.aggregate_on == AggregateOn::Probs) {
            std::vector<Tensor> per_vol = aggregate_backward(fp.agg, fp.loc.grad_probs);
            for (int i = 0; i < n; ++i) {
                Tensor gl = softmax_channel_backward(fp.probs[i], per_vol[i]);
                Conv1x1Grads cg = conv1x1_backward(fp.features, model.bank.weights[i], gl);
                g.bank_weights[i] = std::move(cg.grad_weights);
                g.bank_biases[i] = std::move(cg.grad_bias);
                for (std::size_t k = 0; k < grad_features.data.size(); ++k)
                    grad_features.data[k] += cg.grad_features.data[k];
            }
        } else {
            Tensor grad_agg_logits = softmax_channel_backward(fp.agg_probs, fp.loc.grad_probs);
            std::vector<Tensor> per_vol = aggregate_backward(fp.agg, grad_agg_logits);
            for (int i = 0; i < n; ++i) {
                Conv1x1Grads cg = conv1x1_backward(fp.features, model.bank.weights[i], per_vol[i]);
                g.bank_weights[i] = std::move(cg.grad_weights);
                g.bank_biases[i] = std::move(cg.grad_bias);
                for (std::size_t k = 0; k < grad_features.data.size(); ++k)
                    grad_features.data[k] += cg.grad_features.data[k];
            }
        }
    }

    if (opts.use_object) {
        g.obj_weights = fp.obj.grad_weights;
        g.obj_bias = fp.obj.grad_bias;
        Tensor gf = object_features_backward(fp.objpool, fp.mask, fp.obj.grad_features);
        for (std::size_t k = 0; k < grad_features.data.size(); ++k)
            grad_features.data[k] += gf.data[k];
    }

    if (!opts.freeze_backbone) {
        BackboneGrads bg = backbone_backward(model.backbone, fp.cache, grad_features);
        g.backbone = std::move(bg.blocks);
    }
    return g;
}

// ---- parameter flattening ---------------------------------------------------

std::vector<double> flatten_params(const ScaleModel& model, bool frozen) {
    std::vector<double> out;
    if (!frozen) {
        for (const ConvBlock& b : model.backbone.blocks) {
            out.insert(out.end(), b.weights.data.begin(), b.weights.data.end());
            out.insert(out.end(), b.bias.data.begin(), b.bias.data.end());
        }
    }
    for (int i = 0; i < model.bank.n; ++i) {
        out.insert(out.end(), model.bank.weights[i].data.begin(), model.bank.weights[i].data.end());
        out.insert(out.end(), model.bank.biases[i].data.begin(), model.bank.biases[i].data.end());
    }
    out.insert(out.end(), model.object_clf.weights.data.begin(), model.object_clf.weights.data.end());
    out.insert(out.end(), model.object_clf.bias.data.begin(), model.object_clf.bias.data.end());
    return out;
}

void assign_params(ScaleModel& model, std::span<const double> params, bool frozen) {
    std::size_t pos = 0;
    auto take = [&](Tensor& t) {
        if (pos + t.data.size() > params.size())
            throw invalid_input("assign_params: vector too short");
        std::copy(params.begin() + pos, params.begin() + pos + t.data.size(), t.data.begin());
        pos += t.data.size();
    };
    if (!frozen) {
        for (ConvBlock& b : model.backbone.blocks) {
            take(b.weights);
            take(b.bias);
        }
    }
    for (int i = 0; i < model.bank.n; ++i) {
        take(model.bank.weights[i]);
        take(model.bank.biases[i]);
    }
    take(model.object_clf.weights);
    take(model.object_clf.bias);
    if (pos != params.size()) throw invalid_input("assign_params: vector length mismatch");
}

std::vector<double> flatten_grads(const ImageGrads& grads, bool frozen) {
    std::vector<double> out;
    if (!frozen) {
        for (const ConvBlockGrads& b : grads.backbone) {
            out.insert(out.end(), b.grad_weights.data.begin(), b.grad_weights.data.end());
            out.insert(out.end(), b.grad_bias.data.begin(), b.grad_bias.data.end());
        }
    }
    for (std::size_t i = 0; i < grads.bank_weights.size(); ++i) {
        out.insert(out.end(), grads.bank_weights[i].data.begin(), grads.bank_weights[i].data.end());
        out.insert(out.end(), grads.bank_biases[i].data.begin(), grads.bank_biases[i].data.end());
    }
    out.insert(out.end(), grads.obj_weights.data.begin(), grads.obj_weights.data.end());
    out.insert(out.end(), grads.obj_bias.data.begin(), grads.obj_bias.data.end());
    return out;
}

// ---- inference ----------------------------------------------------------------

int argmax_lowest(const Tensor& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.data.size()); ++i)
        if (v.data[i] > v.data[best]) best = i;
    return best;
}

ScaleEval scale_forward(const ScaleModel& model, const Tensor& image, const RunConfig& cfg) {
    ScaleEval ev;
    Tensor features = extract_features(centered(image), model.backbone);
    std::vector<Tensor> logits = dense_local_logits(features, model.bank);
    AggregatedVolume agg;
    Tensor agg_probs;
    if (cfg.aggregate_on == AggregateOn::Probs) {
        std::vector<Tensor> probs;
        probs.reserve(logits.size());
        for (const Tensor& l : logits) probs.push_back(softmax_channel(l));
        agg = aggregate(probs);
        agg_probs = agg.probs;
    } else {
        agg = aggregate(logits);
        agg_probs = softmax_channel(agg.probs);
    }
    AggregatedVolume view{agg_probs, agg.winner, agg.n};
    ev.artifacts = make_attention_artifacts(view, cfg.otsu_bins);

    const int L = model.bank.L;
    const int hw = agg_probs.height() * agg_probs.width();
    ev.local_pred = Tensor::zeros({L});
    for (int k = 0; k < L; ++k) {
        double s = 0.0;
        for (int p = 0; p < hw; ++p)
            s += agg_probs.data[static_cast<std::size_t>(k) * hw + p];
        ev.local_pred[k] = s / hw;
    }

    MaxPoolResult pooled = object_features(features, ev.artifacts.mask);
    ev.obj_pred = object_predict(pooled.values, model.object_clf);

    ev.prediction = Tensor::zeros({L});
    for (int k = 0; k < L; ++k)
        ev.prediction[k] = 0.5 * (ev.local_pred[k] + ev.obj_pred[k]);
    return ev;
}

PredictResult predict(const MultiScaleModel& model, const Tensor& image, const RunConfig& cfg) {
    if (model.scales.empty()) throw invalid_input("predict: empty model");
    PredictResult r;
    Tensor cur = image;
    if (cur.height() != cfg.image_size || cur.width() != cfg.image_size)
        cur = bilinear_resize(cur, cfg.image_size, cfg.image_size);
    const int S = static_cast<int>(model.scales.size());
    for (int s = 0; s < S; ++s) {
        r.scale_images.push_back(cur);
        r.per_scale.push_back(scale_forward(model.scales[s], cur, cfg));
        if (s + 1 < S) {
            BBox fb = mask_to_bbox(r.per_scale.back().artifacts.mask, cfg.margin_fraction);
            bool fb_warn = false;
            cur = crop_and_zoom(cur, fb, model.scales[s].backbone.stride(), cfg.image_size,
                                cfg.image_size, &fb_warn);
            if (fb_warn) ++r.fallback_count;
        }
    }
    const int L = model.scales.front().bank.L;
    r.final_pred = Tensor::zeros({L});
    for (int s = 0; s < S; ++s)
        for (int k = 0; k < L; ++k) r.final_pred[k] += r.per_scale[s].prediction[k];
    for (int k = 0; k < L; ++k) r.final_pred[k] /= S;
    return r;
}

// ---- training -------------------------------------------------------------------

void train_scale(ScaleModel& model, const Dataset& data, const RunConfig& cfg,
                 std::uint64_t seed, const TrainOptions& opts, TrainStats* stats) {
    if (data.size() == 0) throw invalid_input("train_scale: empty dataset");
    ImageLossOptions lopts;
    lopts.use_local = opts.use_local;
    lopts.use_object = opts.use_object;
    lopts.freeze_backbone = cfg.freeze_backbone;
    lopts.aggregate_on = cfg.aggregate_on;
    lopts.otsu_bins = cfg.otsu_bins;

    const std::size_t n = data.size();
    const std::size_t monitor_n = std::min<std::size_t>(cfg.batch_size, n);
    auto monitor_loss = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < monitor_n; ++i)
            s += compute_image_loss(model, data.images[i], data.labels[i], lopts).total;
        return s / static_cast<double>(monitor_n);
    };
    if (stats) stats->monitor_loss_before = monitor_loss();

    const bool frozen = cfg.freeze_backbone;
    std::vector<double> params = flatten_params(model, frozen);
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(seed, 1000 + epoch));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[uniform_int(rng, static_cast<int>(i))]);

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, n);
            std::vector<double> acc(params.size(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                ImageGrads g =
                    compute_image_grads(model, data.images[idx], data.labels[idx], lopts);
                if (!std::isfinite(g.breakdown.total)) {
                    char buf[256];
                    std::snprintf(buf, sizeof(buf),
                                  "train_scale: non-finite loss at epoch %d batch %zu "
                                  "(loc=%g obj=%g l0=%g l1=%g w=%g)",
                                  epoch, start / cfg.batch_size, g.breakdown.loc,
                                  g.breakdown.obj, g.breakdown.l0, g.breakdown.l1,
                                  g.breakdown.w);
                    throw std::runtime_error(buf);
                }
                std::vector<double> gf = flatten_grads(g, frozen);
                for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += gf[p];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t p = 0; p < params.size(); ++p) {
                velocity[p] = cfg.momentum * velocity[p] - cfg.lr * acc[p] * inv;
                params[p] += velocity[p];
            }
            assign_params(model, params, frozen);
        }
        if (stats) stats->monitor_losses.push_back(monitor_loss());
    }
}

MultiScaleModel train_pipeline(const Dataset& data, const RunConfig& cfg,
                               const TrainOptions& opts, PipelineLog* log) {
    if (cfg.scales < 1) throw invalid_input("train_pipeline: need at least one scale");
    MultiScaleModel model;
    Dataset current = data;
    if (log) {
        log->crops.assign(cfg.scales - 1, {});
        log->fallback_count = 0;
    }
    for (int s = 0; s < cfg.scales; ++s) {
        ScaleModel sm = ScaleModel::make(cfg, s, mix_seed(cfg.seed, 7000 + s));
        train_scale(sm, current, cfg, mix_seed(cfg.seed, 100 + s), opts);
        model.scales.push_back(std::move(sm));

        if (s + 1 < cfg.scales) {
            const ScaleModel& trained = model.scales.back();
            const int stride = trained.backbone.stride();
            Dataset next;
            next.labels = current.labels;
            next.gt_boxes = current.gt_boxes;
            for (std::size_t i = 0; i < current.size(); ++i) {
                ScaleEval ev = scale_forward(trained, current.images[i], cfg);
                BBox fb = mask_to_bbox(ev.artifacts.mask, cfg.margin_fraction);
                bool fell = false;
                next.images.push_back(crop_and_zoom(current.images[i], fb, stride,
                                                    cfg.image_size, cfg.image_size, &fell));
                if (log) {
                    log->crops[s].push_back(feature_box_to_image(
                        fb, stride, current.images[i].height(), current.images[i].width()));
                    if (fell) ++log->fallback_count;
                }
            }
            current = std::move(next);
        }
    }
    return model;
}

// ---- checkpoint I/O ---------------------------------------------------------------

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f, const char* field) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw format_error(std::string("truncated ") + field);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_reals(std::ofstream& f, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        f.write(reinterpret_cast<const char*>(b), 8);
    }
}

void get_reals(std::ifstream& f, std::vector<double>& v, const char* field) {
    for (double& d : v) {
        unsigned char b[8];
        if (!f.read(reinterpret_cast<char*>(b), 8))
            throw format_error(std::string("truncated ") + field);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        std::memcpy(&d, &bits, 8);
    }
}

} // namespace

void save_checkpoint(const std::string& path, const MultiScaleModel& model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write("ACAM", 4);
    put_u32(f, 1);
    put_u32(f, static_cast<std::uint32_t>(model.scales.size()));
    for (const ScaleModel& sm : model.scales) {
        put_u32(f, static_cast<std::uint32_t>(sm.backbone.blocks.size()));
        for (const ConvBlock& b : sm.backbone.blocks) {
            put_u32(f, static_cast<std::uint32_t>(b.out_ch));
            put_u32(f, static_cast<std::uint32_t>(b.in_ch));
            put_reals(f, b.weights.data);
            put_reals(f, b.bias.data);
        }
        put_u32(f, static_cast<std::uint32_t>(sm.bank.n));
        put_u32(f, static_cast<std::uint32_t>(sm.bank.L));
        put_u32(f, static_cast<std::uint32_t>(sm.bank.C));
        for (int i = 0; i < sm.bank.n; ++i) {
            put_reals(f, sm.bank.weights[i].data);
            put_reals(f, sm.bank.biases[i].data);
        }
        put_reals(f, sm.object_clf.weights.data);
        put_reals(f, sm.object_clf.bias.data);
    }
    if (!f) throw io_error("write failed: " + path);
}

MultiScaleModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "ACAM", 4) != 0)
        throw format_error("bad magic");
    if (get_u32(f, "version") != 1) throw format_error("unsupported version");
    const std::uint32_t scales = get_u32(f, "scale count");
    if (scales == 0 || scales > 64) throw format_error("bad scale count");
    MultiScaleModel model;
    for (std::uint32_t s = 0; s < scales; ++s) {
        ScaleModel sm;
        sm.scale_index = static_cast<int>(s);
        const std::uint32_t depth = get_u32(f, "backbone depth");
        if (depth == 0 || depth > 16) throw format_error("bad backbone depth");
        for (std::uint32_t b = 0; b < depth; ++b) {
            ConvBlock blk;
            blk.out_ch = static_cast<int>(get_u32(f, "block out channels"));
            blk.in_ch = static_cast<int>(get_u32(f, "block in channels"));
            if (blk.out_ch < 1 || blk.in_ch < 1 || blk.out_ch > 65536 || blk.in_ch > 65536)
                throw format_error("bad block extents");
            blk.weights = Tensor::zeros({blk.out_ch, blk.in_ch, 9});
            blk.bias = Tensor::zeros({blk.out_ch});
            get_reals(f, blk.weights.data, "block weights");
            get_reals(f, blk.bias.data, "block bias");
            sm.backbone.blocks.push_back(std::move(blk));
        }
        const std::uint32_t n = get_u32(f, "bank n");
        const std::uint32_t L = get_u32(f, "bank L");
        const std::uint32_t C = get_u32(f, "bank C");
        if (n < 1 || L < 1 || C < 1 || n > 65536 || L > 1000000 || C > 65536)
            throw format_error("bad bank dims");
        sm.bank.n = static_cast<int>(n);
        sm.bank.L = static_cast<int>(L);
        sm.bank.C = static_cast<int>(C);
        for (std::uint32_t i = 0; i < n; ++i) {
            Tensor w = Tensor::zeros({static_cast<int>(L) + 1, static_cast<int>(C)});
            Tensor b = Tensor::zeros({static_cast<int>(L) + 1});
            get_reals(f, w.data, "bank weights");
            get_reals(f, b.data, "bank bias");
            sm.bank.weights.push_back(std::move(w));
            sm.bank.biases.push_back(std::move(b));
        }
        sm.object_clf.L = static_cast<int>(L);
        sm.object_clf.C = static_cast<int>(C);
        sm.object_clf.weights = Tensor::zeros({static_cast<int>(L), static_cast<int>(C)});
        sm.object_clf.bias = Tensor::zeros({static_cast<int>(L)});
        get_reals(f, sm.object_clf.weights.data, "object classifier weights");
        get_reals(f, sm.object_clf.bias.data, "object classifier bias");
        model.scales.push_back(std::move(sm));
    }
    return model;
}

} // namespace acam
