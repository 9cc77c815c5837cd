#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace acam {

enum class AggregateOn { Probs, Logits };

// Run configuration, parsed from a plain key=value file so ablation runs are
// diffable. Defaults are desk-scale; full-scale values (n=16, 40 epochs,
// lr 1e-4, 448 short edge) remain reachable through the file.
struct RunConfig {
    int scales = 3;
    int n_classifiers = 4;
    int categories = 4;
    int epochs = 15;
    double lr = 5e-4;
    double momentum = 0.9;
    int batch_size = 8;
    int image_size = 64;
    double margin_fraction = 0.1;
    bool freeze_backbone = false;
    std::uint64_t seed = 42;
    int otsu_bins = 256;
    AggregateOn aggregate_on = AggregateOn::Probs;

    // key/value echo in declaration order, for report headers and --help.
    std::vector<std::pair<std::string, std::string>> echo() const;
};

// Parses `key=value` lines; '#' starts a comment. Unknown keys and
// out-of-range values raise format_error naming the key and line.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

} // namespace acam
