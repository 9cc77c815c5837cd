// Command-line front end: dataset synthesis, training, evaluation, attention
// export, and ablation runs, all reproducible from a key=value config file.

#include "acam/config.hpp"
#include "acam/data.hpp"
#include "acam/eval.hpp"
#include "acam/multiscale.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct CliError {
    std::string category;
    std::string message;
};

acam::RunConfig load_config(const std::string& path) {
    if (path.empty()) return acam::RunConfig{};
    try {
        return acam::parse_config_file(path);
    } catch (const acam::format_error& e) {
        throw CliError{"config-parse", e.what()};
    } catch (const acam::io_error& e) {
        throw CliError{"io", e.what()};
    }
}

void print_resolved(const acam::RunConfig& cfg) {
    std::printf("resolved config:\n");
    for (const auto& [k, v] : cfg.echo()) std::printf("  %s=%s\n", k.c_str(), v.c_str());
    std::fflush(stdout);
}

acam::MultiScaleModel load_model(const std::string& path) {
    try {
        return acam::load_checkpoint(path);
    } catch (const acam::format_error& e) {
        throw CliError{"checkpoint-format", e.what()};
    } catch (const acam::io_error& e) {
        throw CliError{"io", e.what()};
    }
}

acam::Dataset load_split(const std::string& root, const std::string& manifest, int size) {
    try {
        return acam::load_dataset(root, manifest, size);
    } catch (const acam::format_error& e) {
        throw CliError{"data-format", e.what()};
    } catch (const acam::io_error& e) {
        throw CliError{"io", e.what()};
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acam: attention from classifier activations, desk scale.\n"
                 "Defaults are desk-scale (n_classifiers=4, epochs=15, lr=5e-4,\n"
                 "image_size=64); full-scale values (16, 40, 1e-4, 448) are\n"
                 "reachable through the config file."};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, model_path, image_path, out_prefix, out_path;
    int train_per_class = 50, test_per_class = 50, patch = 24;
    double clutter = 0.1;
    std::string which = "losses";

    auto* synth = app.add_subcommand("synth", "Generate a synthetic fine-grained dataset");
    synth->add_option("--config", config_path, "key=value config file");
    synth->add_option("--out", out_dir, "output dataset root")->required();
    synth->add_option("--train-per-class", train_per_class, "training images per category");
    synth->add_option("--test-per-class", test_per_class, "test images per category");
    synth->add_option("--patch", patch, "texture patch edge in pixels");
    synth->add_option("--clutter", clutter, "background clutter amplitude");

    auto* train = app.add_subcommand("train", "Train the multi-scale model");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--data", data_dir, "dataset root (expects train.csv)")->required();
    train->add_option("--out", model_path, "output checkpoint path")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    eval->add_option("--config", config_path, "key=value config file");
    eval->add_option("--model", model_path, "checkpoint path")->required();
    eval->add_option("--data", data_dir, "dataset root (expects test.csv)")->required();
    eval->add_option("--out", out_path, "write the report CSV here");

    auto* attend = app.add_subcommand("attend", "Export per-scale attention heatmaps");
    attend->add_option("--config", config_path, "key=value config file");
    attend->add_option("--model", model_path, "checkpoint path")->required();
    attend->add_option("--image", image_path, "input image (P5/P6)")->required();
    attend->add_option("--out-prefix", out_prefix, "output file prefix")->required();

    auto* ablate = app.add_subcommand("ablate", "Run an ablation study");
    ablate->add_option("--config", config_path, "key=value config file");
    ablate->add_option("--data", data_dir, "dataset root (train.csv + test.csv)")->required();
    ablate->add_option("--which", which, "losses | nclf | scales")
        ->check(CLI::IsMember({"losses", "nclf", "scales"}));
    ablate->add_option("--out", out_path, "write the result CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        acam::RunConfig cfg = load_config(config_path);
        print_resolved(cfg);
        namespace fs = std::filesystem;

        if (synth->parsed()) {
            acam::SynthConfig sc;
            sc.categories = cfg.categories;
            sc.train_per_class = train_per_class;
            sc.test_per_class = test_per_class;
            sc.image_h = sc.image_w = cfg.image_size;
            sc.patch = patch;
            sc.clutter = clutter;
            sc.seed = cfg.seed;
            try {
                acam::synth_generate(sc, out_dir);
            } catch (const acam::io_error& e) {
                throw CliError{"io", e.what()};
            }
            std::printf("wrote %d train + %d test images per category to %s\n",
                        sc.train_per_class, sc.test_per_class, out_dir.c_str());
        } else if (train->parsed()) {
            acam::Dataset ds = load_split(
                data_dir, (fs::path(data_dir) / "train.csv").string(), cfg.image_size);
            acam::PipelineLog log;
            acam::MultiScaleModel model = acam::train_pipeline(ds, cfg, {}, &log);
            if (log.fallback_count > 0)
                std::fprintf(stderr, "warning: degenerate-crop fallback on %d crops\n",
                             log.fallback_count);
            acam::save_checkpoint(model_path, model);
            std::printf("checkpoint written to %s\n", model_path.c_str());
        } else if (eval->parsed()) {
            acam::MultiScaleModel model = load_model(model_path);
            acam::Dataset ds = load_split(
                data_dir, (fs::path(data_dir) / "test.csv").string(), cfg.image_size);
            acam::EvalReport rep = acam::evaluate(model, ds, cfg);
            std::fputs(acam::report_to_text(rep).c_str(), stdout);
            if (!out_path.empty()) {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw CliError{"io", "cannot open for writing: " + out_path};
                f << acam::report_to_csv(rep);
            }
        } else if (attend->parsed()) {
            acam::MultiScaleModel model = load_model(model_path);
            acam::Tensor img = [&] {
                try {
                    return acam::read_image(image_path);
                } catch (const acam::format_error& e) {
                    throw CliError{"data-format", e.what()};
                }
            }();
            acam::PredictResult pr = acam::predict(model, img, cfg);
            for (std::size_t s = 0; s < pr.per_scale.size(); ++s) {
                char raw[512], overlay[512];
                std::snprintf(raw, sizeof(raw), "%s_s%zu_raw.pgm", out_prefix.c_str(), s + 1);
                std::snprintf(overlay, sizeof(overlay), "%s_s%zu_overlay.ppm",
                              out_prefix.c_str(), s + 1);
                acam::export_heatmap(pr.scale_images[s], pr.per_scale[s].artifacts.map, raw,
                                     overlay);
            }
            std::printf("predicted label %d\n", acam::argmax_lowest(pr.final_pred));
            std::printf("wrote %zu heatmap files with prefix %s\n", 2 * pr.per_scale.size(),
                        out_prefix.c_str());
        } else if (ablate->parsed()) {
            acam::Dataset tr = load_split(
                data_dir, (fs::path(data_dir) / "train.csv").string(), cfg.image_size);
            acam::Dataset te = load_split(
                data_dir, (fs::path(data_dir) / "test.csv").string(), cfg.image_size);
            std::string csv;
            if (which == "losses") {
                acam::LossAblationResult r = acam::ablate_losses(tr, te, cfg);
                char buf[256];
                std::snprintf(buf, sizeof(buf),
                              "loss,acc\ncombined,%.6f\nlocal_only,%.6f\nobject_only,%.6f\n",
                              r.acc_combined, r.acc_local_only, r.acc_object_only);
                csv = buf;
            } else if (which == "nclf") {
                auto curve = acam::ablate_num_classifiers(tr, te, cfg, {1, 2, 4, 8, 16});
                csv = "n_classifiers,acc\n";
                for (const auto& p : curve) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", p.n, p.acc);
                    csv += buf;
                }
            } else { // scales: ensemble accuracy over scale prefixes
                acam::MultiScaleModel model = acam::train_pipeline(tr, cfg);
                csv = "scales,acc\n";
                const int L = model.scales.front().bank.L;
                for (int s = 1; s <= cfg.scales; ++s) {
                    std::vector<acam::Tensor> preds;
                    for (const acam::Tensor& img : te.images) {
                        acam::PredictResult pr = acam::predict(model, img, cfg);
                        acam::Tensor mean = acam::Tensor::zeros({L});
                        for (int q = 0; q < s; ++q)
                            for (int k = 0; k < L; ++k)
                                mean[k] += pr.per_scale[q].prediction[k] / s;
                        preds.push_back(std::move(mean));
                    }
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", s,
                                  acam::accuracy(preds, te.labels));
                    csv += buf;
                }
            }
            std::fputs(csv.c_str(), stdout);
            if (!out_path.empty()) {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw CliError{"io", "cannot open for writing: " + out_path};
                f << csv;
            }
        }
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.category.c_str(), e.message.c_str());
        return 1;
    } catch (const acam::format_error& e) {
        std::fprintf(stderr, "error: format: %s\n", e.what());
        return 1;
    } catch (const acam::io_error& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return 1;
    } catch (const acam::invalid_input& e) {
        std::fprintf(stderr, "error: invalid-input: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
