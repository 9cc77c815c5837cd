#include "acam/attention.hpp"
#include "acam/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace acam;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = 0.0,
                     double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = uniform(rng, lo, hi);
    return t;
}

// Independent Otsu oracle: quantize, then try every cut and score the
// between-class variance directly from the quantized sample.
int otsu_oracle_threshold(const Tensor& map, int bins) {
    double lo = map.data[0], hi = map.data[0];
    for (double v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    REQUIRE(hi - lo >= 1e-12);
    std::vector<int> level(map.data.size());
    for (std::size_t i = 0; i < map.data.size(); ++i)
        level[i] = std::clamp(
            static_cast<int>(std::lround((map.data[i] - lo) / (hi - lo) * (bins - 1))), 0,
            bins - 1);
    double best = -1.0;
    int best_t = 0;
    for (int t = 0; t + 1 < bins; ++t) {
        double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (int q : level)
            if (q <= t) {
                n0 += 1;
                s0 += q;
            } else {
                n1 += 1;
                s1 += q;
            }
        if (n0 == 0 || n1 == 0) continue;
        const double mu0 = s0 / n0, mu1 = s1 / n1;
        const double var = n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            best_t = t; // ties toward the lower threshold
        }
    }
    return best_t;
}

} // namespace

TEST_CASE("dense_local_activations: zero bank gives uniform distributions") {
    std::mt19937_64 rng(31);
    Tensor f = random_tensor({4, 3, 3}, rng);
    LocalClassifierBank bank = LocalClassifierBank::make(1, 2, 4, 0);
    for (Tensor& w : bank.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    auto vols = dense_local_activations(f, bank);
    REQUIRE(vols.size() == 1);
    for (double v : vols[0].data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("dense_local_activations: per-location columns sum to one") {
    std::mt19937_64 rng(32);
    Tensor f = random_tensor({5, 4, 4}, rng, -2.0, 2.0);
    LocalClassifierBank bank = LocalClassifierBank::make(3, 4, 5, 77);
    for (const Tensor& vol : dense_local_activations(f, bank)) {
        const int hw = 16;
        for (int p = 0; p < hw; ++p) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += vol.data[static_cast<std::size_t>(k) * hw + p];
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("dense_local_activations: closed-form single-cell softmax") {
    // L=1, C=1: logits are [ln 3, 0] -> probs [0.75, 0.25].
    LocalClassifierBank bank = LocalClassifierBank::make(1, 1, 1, 0);
    bank.weights[0] = Tensor({2, 1}, {1.0, 0.0});
    bank.biases[0] = Tensor::zeros({2});
    Tensor f({1, 1, 1}, {std::log(3.0)});
    auto vols = dense_local_activations(f, bank);
    CHECK(vols[0].at(0, 0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(vols[0].at(1, 0, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("dense_local_activations rejects channel mismatch") {
    LocalClassifierBank bank = LocalClassifierBank::make(1, 2, 4, 0);
    CHECK_THROWS_AS(dense_local_activations(Tensor::zeros({3, 2, 2}), bank), invalid_input);
}

TEST_CASE("aggregate: single volume is the identity with winner 0") {
    std::mt19937_64 rng(33);
    Tensor v = random_tensor({3, 2, 2}, rng);
    AggregatedVolume agg = aggregate({v});
    CHECK(agg.probs.data == v.data);
    for (int w : agg.winner) CHECK(w == 0);
}

TEST_CASE("aggregate: elementwise max with winner provenance") {
    Tensor a({2, 1, 1}, {0.1, 0.9});
    Tensor b({2, 1, 1}, {0.4, 0.2});
    AggregatedVolume agg = aggregate({a, b});
    CHECK(agg.probs.data == std::vector<double>{0.4, 0.9});
    CHECK(agg.winner == std::vector<int>{1, 0});
}

TEST_CASE("aggregate: permuting the classifier list leaves probs unchanged") {
    std::mt19937_64 rng(34);
    std::vector<Tensor> vols;
    for (int i = 0; i < 4; ++i) vols.push_back(random_tensor({3, 3, 3}, rng));
    AggregatedVolume fwd = aggregate(vols);
    std::vector<Tensor> rev(vols.rbegin(), vols.rend());
    AggregatedVolume bwd = aggregate(rev);
    CHECK(fwd.probs.data == bwd.probs.data);
    // attention_map is therefore unchanged too
    CHECK(attention_map(fwd).data == attention_map(bwd).data);
}

TEST_CASE("aggregate backward routes to winners and conserves mass") {
    std::mt19937_64 rng(35);
    std::vector<Tensor> vols;
    for (int i = 0; i < 3; ++i) vols.push_back(random_tensor({2, 4, 4}, rng));
    AggregatedVolume agg = aggregate(vols);
    Tensor g = random_tensor({2, 4, 4}, rng, -1.0, 1.0);
    auto grads = aggregate_backward(agg, g);
    double in_mass = 0.0, out_mass = 0.0;
    for (double v : g.data) in_mass += v;
    // Same accumulation order cell-by-cell: the non-winning entries are an
    // exact 0.0, so the sums are bit-identical.
    for (std::size_t k = 0; k < g.data.size(); ++k) {
        double cell = 0.0;
        for (const Tensor& t : grads) cell += t.data[k];
        out_mass += cell;
    }
    CHECK(out_mass == in_mass);
    // Gradient lands only on winning cells.
    for (std::size_t k = 0; k < g.data.size(); ++k)
        for (int i = 0; i < 3; ++i)
            if (i != agg.winner[k]) CHECK(grads[i].data[k] == 0.0);
}

TEST_CASE("attention_map excludes the background channel") {
    Tensor probs({3, 1, 2},
                 {0.7, 0.005, // class 0
                  0.2, 0.005, // class 1
                  0.1, 0.99}); // background
    AggregatedVolume agg{probs, std::vector<int>(6, 0), 1};
    Tensor m = attention_map(agg);
    CHECK(m.at(0, 0, 0) == doctest::Approx(0.7));
    CHECK(m.at(0, 0, 1) == doctest::Approx(0.005)); // background excluded

    Tensor uni = Tensor::full({4, 2, 2}, 0.25);
    AggregatedVolume agg2{uni, std::vector<int>(16, 0), 1};
    for (double v : attention_map(agg2).data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("attention_map never exceeds the all-channel max") {
    std::mt19937_64 rng(36);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor probs = random_tensor({5, 3, 3}, rng);
        AggregatedVolume agg{probs, std::vector<int>(probs.size(), 0), 1};
        Tensor m = attention_map(agg);
        const int hw = 9;
        for (int p = 0; p < hw; ++p) {
            double mx_all = 0.0, mx_fg = 0.0;
            for (int k = 0; k < 5; ++k) {
                const double v = probs.data[static_cast<std::size_t>(k) * hw + p];
                mx_all = std::max(mx_all, v);
                if (k < 4) mx_fg = std::max(mx_fg, v);
            }
            CHECK(m.data[p] <= mx_all);
            CHECK(m.data[p] == mx_fg);
        }
    }
}

TEST_CASE("otsu_binarize: constant map is all foreground") {
    OtsuResult r = otsu_binarize(Tensor::full({1, 4, 4}, 0.3), 256);
    for (auto b : r.mask.v) CHECK(b == 1);
}

TEST_CASE("otsu_binarize: bimodal map splits exactly at the modes") {
    Tensor m = Tensor::zeros({1, 4, 4});
    for (int i = 0; i < 8; ++i) m.data[i] = 0.1;
    for (int i = 8; i < 16; ++i) m.data[i] = 0.9;
    OtsuResult r = otsu_binarize(m, 256);
    for (int i = 0; i < 8; ++i) CHECK(r.mask.v[i] == 0);
    for (int i = 8; i < 16; ++i) CHECK(r.mask.v[i] == 1);
    CHECK(r.threshold == otsu_oracle_threshold(m, 256));
}

TEST_CASE("otsu_binarize matches the exhaustive oracle on random maps") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor m = random_tensor({1, 16, 16}, rng);
        CHECK(otsu_binarize(m, 256).threshold == otsu_oracle_threshold(m, 256));
    }
}

TEST_CASE("foreground_ratio with clamping") {
    Mask all1{4, 4, std::vector<std::uint8_t>(16, 1)};
    CHECK(foreground_ratio(all1) == 1.0);

    Mask quarter{4, 4, std::vector<std::uint8_t>(16, 0)};
    for (int i = 0; i < 4; ++i) quarter.v[i] = 1;
    CHECK(foreground_ratio(quarter) == doctest::Approx(0.25));

    Mask empty{4, 4, std::vector<std::uint8_t>(16, 0)};
    CHECK(foreground_ratio(empty) == doctest::Approx(1.0 / 16));
}

TEST_CASE("mask_to_bbox") {
    Mask m{6, 6, std::vector<std::uint8_t>(36, 0)};
    m.at(2, 3) = 1;
    BBox b = mask_to_bbox(m, 0.0);
    CHECK(b == BBox{3, 2, 3, 2});

    Mask all{3, 5, std::vector<std::uint8_t>(15, 1)};
    CHECK(mask_to_bbox(all, 0.5) == BBox{0, 0, 4, 2});

    Mask two{6, 6, std::vector<std::uint8_t>(36, 0)};
    two.at(1, 1) = 1;
    two.at(3, 4) = 1;
    CHECK(mask_to_bbox(two, 0.0) == BBox{1, 1, 4, 3});
}

TEST_CASE("mask_to_bbox margin-0 is idempotent under mask restriction") {
    std::mt19937_64 rng(38);
    for (int trial = 0; trial < 50; ++trial) {
        Mask m{8, 8, std::vector<std::uint8_t>(64, 0)};
        int ones = 0;
        for (auto& b : m.v)
            if (uniform01(rng) < 0.3) {
                b = 1;
                ++ones;
            }
        if (ones == 0) m.v[uniform_int(rng, 64)] = 1;
        BBox outer = mask_to_bbox(m, 0.0);
        Mask cropped{outer.height(), outer.width(), {}};
        cropped.v.resize(static_cast<std::size_t>(outer.height()) * outer.width());
        for (int i = 0; i < cropped.h; ++i)
            for (int j = 0; j < cropped.w; ++j)
                cropped.at(i, j) = m.at(outer.y0 + i, outer.x0 + j);
        BBox inner = mask_to_bbox(cropped, 0.0);
        CHECK(inner == BBox{0, 0, cropped.w - 1, cropped.h - 1});
    }
}
