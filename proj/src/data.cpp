#include "acam/data.hpp"
#include "acam/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace acam {

namespace {

// Coarse random grid bilinearly upsampled to the image: cheap band-limited
// clutter with no energy above the grid frequency.
void add_clutter(Tensor& img, double amplitude, std::mt19937_64& rng) {
    const int h = img.height(), w = img.width();
    const int cell = 8;
    const int gh = h / cell + 2, gw = w / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(3) * gh * gw);
    for (double& v : grid) v = uniform(rng, -1.0, 1.0);
    for (int c = 0; c < 3; ++c) {
        const double* g = &grid[static_cast<std::size_t>(c) * gh * gw];
        for (int i = 0; i < h; ++i) {
            const double fy = static_cast<double>(i) / cell;
            const int y0 = static_cast<int>(fy);
            const double ty = fy - y0;
            for (int j = 0; j < w; ++j) {
                const double fx = static_cast<double>(j) / cell;
                const int x0 = static_cast<int>(fx);
                const double tx = fx - x0;
                const double v00 = g[y0 * gw + x0], v01 = g[y0 * gw + x0 + 1];
                const double v10 = g[(y0 + 1) * gw + x0], v11 = g[(y0 + 1) * gw + x0 + 1];
                const double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                                 ty * ((1 - tx) * v10 + tx * v11);
                img.at(c, i, j) += amplitude * v;
            }
        }
    }
}

} // namespace

Tensor synth_render(const SynthConfig& cfg, int label, const BBox& patch_box,
                    std::uint64_t noise_seed) {
    if (label < 0 || label >= cfg.categories)
        throw invalid_input("synth_render: label out of range");
    Tensor img = Tensor::full({3, cfg.image_h, cfg.image_w}, 0.5);
    std::mt19937_64 rng(noise_seed);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    if (cfg.clutter > 0.0) add_clutter(img, cfg.clutter, rng);

    // Oriented sinusoid, orientation label*pi/L, period 8 px.
    const double theta = label * std::numbers::pi / cfg.categories;
    const double freq = 2.0 * std::numbers::pi / 8.0;
    const double cx = std::cos(theta), sx = std::sin(theta);
    for (int i = patch_box.y0; i <= patch_box.y1; ++i) {
        for (int j = patch_box.x0; j <= patch_box.x1; ++j) {
            const double u = (j - patch_box.x0) * cx + (i - patch_box.y0) * sx;
            const double v = 0.5 + 0.45 * std::sin(freq * u + phase);
            for (int c = 0; c < 3; ++c) img.at(c, i, j) = v;
        }
    }
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

void synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.categories < 2) throw invalid_input("synth: need at least 2 categories");
    if (cfg.patch >= cfg.image_h || cfg.patch >= cfg.image_w)
        throw invalid_input("synth: patch must be smaller than the image");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir);

    auto make_split = [&](const char* split, int per_class, std::uint64_t salt) {
        std::vector<SampleRecord> records;
        int idx = 0;
        for (int label = 0; label < cfg.categories; ++label) {
            for (int k = 0; k < per_class; ++k, ++idx) {
                std::mt19937_64 rng(mix_seed(cfg.seed, salt + idx));
                BBox box;
                box.x0 = uniform_int(rng, cfg.image_w - cfg.patch + 1);
                box.y0 = uniform_int(rng, cfg.image_h - cfg.patch + 1);
                box.x1 = box.x0 + cfg.patch - 1;
                box.y1 = box.y0 + cfg.patch - 1;
                Tensor img = synth_render(cfg, label, box, rng());

                char name[64];
                std::snprintf(name, sizeof(name), "images/%s_c%02d_i%04d.ppm", split, label, k);
                write_image((fs::path(out_dir) / name).string(), img);
                records.push_back(SampleRecord{name, label, box});
            }
        }
        return records;
    };

    // Disjoint seed streams for the two splits.
    auto train = make_split("train", cfg.train_per_class, 0x100000ULL);
    auto test = make_split("test", cfg.test_per_class, 0x200000ULL);
    write_manifest((fs::path(out_dir) / "train.csv").string(), train);
    write_manifest((fs::path(out_dir) / "test.csv").string(), test);
}

namespace {

int read_pnm_int(std::istream& f, const char* field) {
    // Skips whitespace and '#' comments, classic PNM tokenization.
    int c = f.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = f.get();
        c = f.get();
    }
    if (c == EOF || !std::isdigit(c)) throw format_error(std::string("bad ") + field);
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = f.get();
    }
    return v;
}

} // namespace

Tensor read_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path);
    char m0 = static_cast<char>(f.get());
    char m1 = static_cast<char>(f.get());
    int channels;
    if (m0 == 'P' && m1 == '5')
        channels = 1;
    else if (m0 == 'P' && m1 == '6')
        channels = 3;
    else
        throw format_error("unsupported magic");
    const int w = read_pnm_int(f, "width");
    const int h = read_pnm_int(f, "height");
    const int maxval = read_pnm_int(f, "maxval");
    if (w < 1 || h < 1) throw format_error("bad extents");
    if (maxval != 255) throw format_error("unsupported maxval");

    const std::size_t n = static_cast<std::size_t>(channels) * h * w;
    std::vector<unsigned char> raw(n);
    if (!f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
        throw format_error("truncated payload");

    Tensor img = Tensor::zeros({channels, h, w});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < channels; ++c)
                img.at(c, i, j) =
                    raw[(static_cast<std::size_t>(i) * w + j) * channels + c] / 255.0;
    return img;
}

void write_image(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || (image.channels() != 1 && image.channels() != 3))
        throw invalid_input("write_image: expected 1 or 3 channels");
    const int c = image.channels(), h = image.height(), w = image.width();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(static_cast<std::size_t>(c) * h * w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int ch = 0; ch < c; ++ch) {
                const double v = image.at(ch, i, j);
                const int b = std::clamp(static_cast<int>(std::floor(v * 255.0 + 0.5)), 0, 255);
                raw[(static_cast<std::size_t>(i) * w + j) * c + ch] =
                    static_cast<unsigned char>(b);
            }
    f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw io_error("write failed: " + path);
}

static const char* kManifestHeader = "path,label,x0,y0,x1,y1";

void write_manifest(const std::string& path, const std::vector<SampleRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << kManifestHeader << "\n";
    for (const SampleRecord& r : records)
        f << r.path << "," << r.label << "," << r.bbox.x0 << "," << r.bbox.y0 << ","
          << r.bbox.x1 << "," << r.bbox.y1 << "\n";
    if (!f) throw io_error("write failed: " + path);
}

std::vector<SampleRecord> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw format_error(path + ":1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader) throw format_error(path + ":1: bad header");

    std::vector<SampleRecord> records;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        auto bad = [&](const std::string& what) -> format_error {
            return format_error(path + ":" + std::to_string(lineno) + ": " + what);
        };
        if (fields.size() != 6) throw bad("expected 6 fields");
        SampleRecord r;
        r.path = fields[0];
        if (r.path.empty()) throw bad("empty path");
        int vals[5];
        for (int k = 0; k < 5; ++k) {
            const std::string& s = fields[k + 1];
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), vals[k]);
            if (ec != std::errc() || p != s.data() + s.size())
                throw bad("field " + std::to_string(k + 2) + " is not an integer");
        }
        r.label = vals[0];
        r.bbox = BBox{vals[1], vals[2], vals[3], vals[4]};
        if (r.label < 0) throw bad("negative label");
        if (r.bbox.x1 < r.bbox.x0 || r.bbox.y1 < r.bbox.y0) throw bad("unordered bbox");
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace acam
