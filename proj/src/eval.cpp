#include "acam/eval.hpp"
#include "acam/data.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace acam {

double accuracy(const std::vector<Tensor>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw invalid_input("accuracy: empty or mismatched inputs");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (argmax_lowest(predictions[i]) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double iou(const BBox& a, const BBox& b) {
    if (a.x1 < a.x0 || a.y1 < a.y0 || b.x1 < b.x0 || b.y1 < b.y0)
        throw invalid_input("iou: malformed box");
    const long long ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
    const long long ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
    const long long iw = ix1 - ix0 + 1, ih = iy1 - iy0 + 1;
    const long long inter = (iw > 0 && ih > 0) ? iw * ih : 0;
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

AttentionIouResult attention_iou(const MultiScaleModel& model, const Dataset& data,
                                 const RunConfig& cfg, std::uint64_t baseline_seed) {
    if (model.scales.empty() || data.size() == 0)
        throw invalid_input("attention_iou: empty model or dataset");
    const ScaleModel& first = model.scales.front();
    const int stride = first.backbone.stride();
    AttentionIouResult r;
    std::mt19937_64 rng(baseline_seed);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Tensor& img = data.images[i];
        ScaleEval ev = scale_forward(first, img, cfg);
        BBox fb = mask_to_bbox(ev.artifacts.mask, 0.0);
        BBox attended = feature_box_to_image(fb, stride, img.height(), img.width());
        r.mean_iou += iou(attended, data.gt_boxes[i]);

        // Uniformly placed box with the attended extents.
        const int bw = attended.width(), bh = attended.height();
        BBox rb;
        rb.x0 = uniform_int(rng, std::max(img.width() - bw + 1, 1));
        rb.y0 = uniform_int(rng, std::max(img.height() - bh + 1, 1));
        rb.x1 = std::min(rb.x0 + bw - 1, img.width() - 1);
        rb.y1 = std::min(rb.y0 + bh - 1, img.height() - 1);
        r.baseline_iou += iou(rb, data.gt_boxes[i]);
    }
    r.mean_iou /= static_cast<double>(data.size());
    r.baseline_iou /= static_cast<double>(data.size());
    return r;
}

EvalReport evaluate(const MultiScaleModel& model, const Dataset& data, const RunConfig& cfg) {
    if (data.size() == 0) throw invalid_input("evaluate: empty dataset");
    const auto t0 = std::chrono::steady_clock::now();
    const int S = static_cast<int>(model.scales.size());
    const int L = model.scales.front().bank.L;

    std::vector<std::vector<Tensor>> loc(S), obj(S), avg(S);
    std::vector<Tensor> ms_loc_p, ms_obj_p, ms_avg_p;
    for (std::size_t i = 0; i < data.size(); ++i) {
        PredictResult pr = predict(model, data.images[i], cfg);
        Tensor mloc = Tensor::zeros({L}), mobj = Tensor::zeros({L});
        for (int s = 0; s < S; ++s) {
            loc[s].push_back(pr.per_scale[s].local_pred);
            obj[s].push_back(pr.per_scale[s].obj_pred);
            avg[s].push_back(pr.per_scale[s].prediction);
            for (int k = 0; k < L; ++k) {
                mloc[k] += pr.per_scale[s].local_pred[k];
                mobj[k] += pr.per_scale[s].obj_pred[k];
            }
        }
        for (int k = 0; k < L; ++k) {
            mloc[k] /= S;
            mobj[k] /= S;
        }
        ms_loc_p.push_back(std::move(mloc));
        ms_obj_p.push_back(std::move(mobj));
        ms_avg_p.push_back(pr.final_pred);
    }

    EvalReport rep;
    for (int s = 0; s < S; ++s) {
        rep.acc_loc.push_back(accuracy(loc[s], data.labels));
        rep.acc_obj.push_back(accuracy(obj[s], data.labels));
        rep.acc_avg.push_back(accuracy(avg[s], data.labels));
    }
    rep.ms_loc = accuracy(ms_loc_p, data.labels);
    rep.ms_obj = accuracy(ms_obj_p, data.labels);
    rep.ms_avg = accuracy(ms_avg_p, data.labels);

    AttentionIouResult ir = attention_iou(model, data, cfg);
    rep.mean_iou = ir.mean_iou;
    rep.baseline_iou = ir.baseline_iou;
    rep.seed = cfg.seed;
    rep.config_echo = cfg.echo();
    rep.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    return out;
}

} // namespace

std::string report_to_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "acam-eval-report,v1\n";
    out << "seed," << r.seed << "\n";
    out << "runtime_sec," << fmt_real(r.runtime_sec) << "\n";
    out << "mean_iou," << fmt_real(r.mean_iou) << "\n";
    out << "baseline_iou," << fmt_real(r.baseline_iou) << "\n";
    for (const auto& [k, v] : r.config_echo) out << "config," << k << "," << v << "\n";
    for (std::size_t s = 0; s < r.acc_loc.size(); ++s)
        out << "acc," << (s + 1) << "," << fmt_real(r.acc_loc[s]) << ","
            << fmt_real(r.acc_obj[s]) << "," << fmt_real(r.acc_avg[s]) << "\n";
    out << "acc,ms," << fmt_real(r.ms_loc) << "," << fmt_real(r.ms_obj) << ","
        << fmt_real(r.ms_avg) << "\n";
    return out.str();
}

EvalReport report_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "acam-eval-report,v1")
        throw format_error("report: bad header");
    EvalReport r;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv(line);
        auto bad = [&](const std::string& what) -> format_error {
            return format_error("report:" + std::to_string(lineno) + ": " + what);
        };
        if (f[0] == "seed" && f.size() == 2)
            r.seed = std::stoull(f[1]);
        else if (f[0] == "runtime_sec" && f.size() == 2)
            r.runtime_sec = std::stod(f[1]);
        else if (f[0] == "mean_iou" && f.size() == 2)
            r.mean_iou = std::stod(f[1]);
        else if (f[0] == "baseline_iou" && f.size() == 2)
            r.baseline_iou = std::stod(f[1]);
        else if (f[0] == "config" && f.size() == 3)
            r.config_echo.emplace_back(f[1], f[2]);
        else if (f[0] == "acc" && f.size() == 5) {
            if (f[1] == "ms") {
                r.ms_loc = std::stod(f[2]);
                r.ms_obj = std::stod(f[3]);
                r.ms_avg = std::stod(f[4]);
            } else {
                r.acc_loc.push_back(std::stod(f[2]));
                r.acc_obj.push_back(std::stod(f[3]));
                r.acc_avg.push_back(std::stod(f[4]));
            }
        } else {
            throw bad("unrecognized row '" + f[0] + "'");
        }
    }
    return r;
}

std::string report_to_text(const EvalReport& r) {
    std::ostringstream out;
    out << "seed " << r.seed << ", runtime " << fmt_real(r.runtime_sec) << " s\n";
    out << "scale      ";
    for (std::size_t s = 0; s < r.acc_loc.size(); ++s) out << "  " << (s + 1) << "     ";
    out << "  ms\n";
    auto row = [&](const char* name, const std::vector<double>& v, double ms) {
        out << name;
        char buf[16];
        for (double a : v) {
            std::snprintf(buf, sizeof(buf), " %6.4f ", a);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), " %6.4f\n", ms);
        out << buf;
    };
    row("acc_loc   ", r.acc_loc, r.ms_loc);
    row("acc_obj   ", r.acc_obj, r.ms_obj);
    row("acc_avg   ", r.acc_avg, r.ms_avg);
    out << "attention iou " << fmt_real(r.mean_iou) << " (random baseline "
        << fmt_real(r.baseline_iou) << ")\n";
    return out.str();
}

LossAblationResult ablate_losses(const Dataset& train, const Dataset& test,
                                 const RunConfig& cfg) {
    LossAblationResult r;
    auto run = [&](bool use_local, bool use_object) {
        TrainOptions opts{use_local, use_object};
        MultiScaleModel model = train_pipeline(train, cfg, opts);
        std::vector<Tensor> preds;
        for (const Tensor& img : test.images) preds.push_back(predict(model, img, cfg).final_pred);
        return std::make_pair(std::move(model), accuracy(preds, test.labels));
    };
    auto [m_comb, a_comb] = run(true, true);
    auto [m_loc, a_loc] = run(true, false);
    auto [m_obj, a_obj] = run(false, true);
    r.acc_combined = a_comb;
    r.acc_local_only = a_loc;
    r.acc_object_only = a_obj;

    // Gating sanity: the ungated branch of each single-loss run must stay at
    // its initialization.
    ScaleModel init = ScaleModel::make(cfg, 0, mix_seed(cfg.seed, 7000));
    r.object_clf_untouched_in_local_only =
        m_loc.scales[0].object_clf.weights.data == init.object_clf.weights.data &&
        m_loc.scales[0].object_clf.bias.data == init.object_clf.bias.data;
    bool bank_same = true;
    for (int i = 0; i < init.bank.n; ++i)
        bank_same = bank_same &&
                    m_obj.scales[0].bank.weights[i].data == init.bank.weights[i].data &&
                    m_obj.scales[0].bank.biases[i].data == init.bank.biases[i].data;
    r.bank_untouched_in_object_only = bank_same;
    return r;
}

std::vector<ClassifierCountPoint> ablate_num_classifiers(const Dataset& train,
                                                         const Dataset& test,
                                                         const RunConfig& cfg,
                                                         const std::vector<int>& n_list) {
    if (n_list.empty()) throw invalid_input("ablate_num_classifiers: empty n list");
    std::vector<ClassifierCountPoint> curve;
    for (int n : n_list) {
        RunConfig c = cfg;
        c.n_classifiers = n;
        MultiScaleModel model = train_pipeline(train, c);
        std::vector<Tensor> preds;
        for (const Tensor& img : test.images) preds.push_back(predict(model, img, c).final_pred);
        curve.push_back({n, accuracy(preds, test.labels)});
    }
    return curve;
}

void export_heatmap(const Tensor& image, const Tensor& attention,
                    const std::string& raw_path, const std::string& overlay_path) {
    if (!attention.all_finite()) throw invalid_input("export_heatmap: non-finite map");
    double lo = attention.data[0], hi = attention.data[0];
    for (double v : attention.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor norm = attention;
    if (hi - lo < 1e-12) {
        for (double& v : norm.data) v = 0.5;
    } else {
        for (double& v : norm.data) v = (v - lo) / (hi - lo);
    }
    Tensor heat = bilinear_resize(norm, image.height(), image.width());
    write_image(raw_path, heat);

    Tensor overlay = Tensor::zeros({3, image.height(), image.width()});
    const int hw = image.height() * image.width();
    for (int c = 0; c < 3; ++c) {
        const int src_c = image.channels() == 3 ? c : 0;
        for (int p = 0; p < hw; ++p) {
            double v = 0.5 * image.data[static_cast<std::size_t>(src_c) * hw + p];
            if (c == 0) v += 0.5 * heat.data[p];
            overlay.data[static_cast<std::size_t>(c) * hw + p] = v;
        }
    }
    write_image(overlay_path, overlay);
}

} // namespace acam
