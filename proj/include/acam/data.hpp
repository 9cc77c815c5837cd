#pragma once

#include "acam/attention.hpp"
#include "acam/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acam {

// Synthetic fine-grained task: each category is an oriented sinusoidal
// texture patch (orientation k*pi/L) dropped onto band-limited clutter at a
// random position, so the discriminative region is known exactly.
struct SynthConfig {
    int categories = 4;
    int train_per_class = 50;
    int test_per_class = 50;
    int image_h = 64;
    int image_w = 64;
    int patch = 24;             // square patch edge, must fit in the image
    double clutter = 0.1;       // clutter amplitude around mid-gray
    std::uint64_t seed = 42;
};

struct SampleRecord {
    std::string path; // relative to the dataset root
    int label = 0;
    BBox bbox;        // ground-truth patch box, inclusive image coords

    bool operator==(const SampleRecord&) const = default;
};

// Writes P6 images under out_dir/images/ plus train.csv and test.csv.
// Train and test draws come from disjoint seed streams.
void synth_generate(const SynthConfig& cfg, const std::string& out_dir);

// Renders one sample deterministically; exposed for tests.
Tensor synth_render(const SynthConfig& cfg, int label, const BBox& patch_box,
                    std::uint64_t noise_seed);

// 8-bit binary PGM (P5, 1 channel) / PPM (P6, 3 channels). Pixels map
// linearly to [0,1]; writes round half up.
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& image);

// CSV manifest: header "path,label,x0,y0,x1,y1", one record per line.
std::vector<SampleRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<SampleRecord>& records);

} // namespace acam
