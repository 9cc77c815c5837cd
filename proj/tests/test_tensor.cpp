#include "acam/rng.hpp"
#include "acam/tensor.hpp"

#include <doctest.h>

#include <cmath>

using namespace acam;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = uniform(rng, lo, hi);
    return t;
}

} // namespace

TEST_CASE("conv1x1 forward: identity weights reproduce the features") {
    std::mt19937_64 rng(7);
    Tensor f = random_tensor({3, 4, 5}, rng);
    Tensor w = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
    Tensor out = conv1x1_forward(f, w, Tensor::zeros({3}));
    for (std::size_t i = 0; i < f.data.size(); ++i) CHECK(out.data[i] == f.data[i]);
}

TEST_CASE("conv1x1 forward: zero weights give bias everywhere") {
    std::mt19937_64 rng(8);
    Tensor f = random_tensor({2, 3, 3}, rng);
    Tensor b({2}, {0.7, -1.2});
    Tensor out = conv1x1_forward(f, Tensor::zeros({2, 2}), b);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(out.at(k, i, j) == b[k]);
}

TEST_CASE("conv1x1 forward: hand-evaluated dot product") {
    Tensor f({2, 1, 1}, {3.0, 4.0});
    Tensor w({1, 2}, {1.0, 2.0});
    Tensor b({1}, {0.5});
    Tensor out = conv1x1_forward(f, w, b);
    CHECK(out.at(0, 0, 0) == doctest::Approx(11.5).epsilon(1e-15));
}

TEST_CASE("conv1x1 forward: shape mismatch is rejected") {
    Tensor f = Tensor::zeros({2, 2, 2});
    CHECK_THROWS_AS(conv1x1_forward(f, Tensor::zeros({1, 3}), Tensor::zeros({1})),
                    invalid_input);
    CHECK_THROWS_AS(conv1x1_forward(f, Tensor::zeros({2, 2}), Tensor::zeros({3})),
                    invalid_input);
}

TEST_CASE("conv1x1 forward is linear in the features") {
    std::mt19937_64 rng(9);
    Tensor w = random_tensor({3, 4}, rng);
    Tensor b = Tensor::zeros({3});
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor({4, 3, 3}, rng);
        Tensor y = random_tensor({4, 3, 3}, rng);
        const double a = uniform(rng, -2.0, 2.0), c = uniform(rng, -2.0, 2.0);
        Tensor mix = Tensor::zeros({4, 3, 3});
        for (std::size_t i = 0; i < mix.data.size(); ++i)
            mix.data[i] = a * x.data[i] + c * y.data[i];
        Tensor lhs = conv1x1_forward(mix, w, b);
        Tensor fx = conv1x1_forward(x, w, b), fy = conv1x1_forward(y, w, b);
        for (std::size_t i = 0; i < lhs.data.size(); ++i)
            CHECK(lhs.data[i] == doctest::Approx(a * fx.data[i] + c * fy.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv1x1 backward: zero cotangent gives zero gradients") {
    std::mt19937_64 rng(10);
    Tensor f = random_tensor({3, 2, 2}, rng);
    Tensor w = random_tensor({2, 3}, rng);
    Conv1x1Grads g = conv1x1_backward(f, w, Tensor::zeros({2, 2, 2}));
    for (double v : g.grad_features.data) CHECK(v == 0.0);
    for (double v : g.grad_weights.data) CHECK(v == 0.0);
    for (double v : g.grad_bias.data) CHECK(v == 0.0);
}

TEST_CASE("conv1x1 backward: 1x1x1 hand case") {
    Tensor f({1, 1, 1}, {2.0});
    Tensor w({1, 1}, {3.0});
    Conv1x1Grads g = conv1x1_backward(f, w, Tensor({1, 1, 1}, {1.0}));
    CHECK(g.grad_weights[0] == 2.0);
    CHECK(g.grad_features[0] == 3.0);
    CHECK(g.grad_bias[0] == 1.0);
}

TEST_CASE("conv1x1 backward matches central finite differences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor f = random_tensor({3, 2, 2}, rng);
        Tensor w = random_tensor({2, 3}, rng);
        Tensor b = random_tensor({2}, rng);
        // Scalarize through a fixed random cotangent.
        Tensor cot = random_tensor({2, 2, 2}, rng);
        auto loss_of = [&](const Tensor& ff, const Tensor& ww, const Tensor& bb) {
            Tensor out = conv1x1_forward(ff, ww, bb);
            double s = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) s += cot.data[i] * out.data[i];
            return s;
        };
        Conv1x1Grads g = conv1x1_backward(f, w, cot);

        // All parameters packed: features, weights, bias.
        std::vector<double> params;
        params.insert(params.end(), f.data.begin(), f.data.end());
        params.insert(params.end(), w.data.begin(), w.data.end());
        params.insert(params.end(), b.data.begin(), b.data.end());
        std::vector<double> analytic;
        analytic.insert(analytic.end(), g.grad_features.data.begin(), g.grad_features.data.end());
        analytic.insert(analytic.end(), g.grad_weights.data.begin(), g.grad_weights.data.end());
        analytic.insert(analytic.end(), g.grad_bias.data.begin(), g.grad_bias.data.end());

        auto loss = [&](std::span<const double> p) {
            Tensor ff = f, ww = w, bb = b;
            std::size_t pos = 0;
            for (double& v : ff.data) v = p[pos++];
            for (double& v : ww.data) v = p[pos++];
            for (double& v : bb.data) v = p[pos++];
            return loss_of(ff, ww, bb);
        };
        GradCheckReport rep = gradient_check(loss, params, analytic, 1e-6, 1e-6);
        CHECK(rep.pass);
    }
}

TEST_CASE("softmax_channel: equal logits give uniform probabilities") {
    Tensor l = Tensor::full({3, 2, 2}, 1.7);
    Tensor p = softmax_channel(l);
    for (double v : p.data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax_channel: huge logit saturates without overflow") {
    Tensor l({2, 1, 1}, {1000.0, 0.0});
    Tensor p = softmax_channel(l);
    CHECK(p.all_finite());
    CHECK(p.at(0, 0, 0) >= 1.0 - 1e-12);
}

TEST_CASE("softmax_channel: closed-form 2-class case") {
    Tensor l({2, 1, 1}, {0.0, std::log(3.0)});
    Tensor p = softmax_channel(l);
    CHECK(p.at(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.at(1, 0, 0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax_channel columns sum to one for random logits") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor l = random_tensor({5, 3, 4}, rng, -50.0, 50.0);
        Tensor p = softmax_channel(l);
        const int hw = 12;
        for (int q = 0; q < hw; ++q) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += p.data[static_cast<std::size_t>(k) * hw + q];
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax backward matches finite differences through a log loss") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor l = random_tensor({4, 2, 2}, rng, -2.0, 2.0);
        auto loss = [&](std::span<const double> p) {
            Tensor ll = l;
            std::copy(p.begin(), p.end(), ll.data.begin());
            Tensor pr = softmax_channel(ll);
            // -log prob of channel 0 at every location
            double s = 0.0;
            for (int q = 0; q < 4; ++q) s += -std::log(pr.data[q]);
            return s;
        };
        Tensor pr = softmax_channel(l);
        Tensor gp = Tensor::zeros({4, 2, 2});
        for (int q = 0; q < 4; ++q) gp.data[q] = -1.0 / pr.data[q];
        Tensor gl = softmax_channel_backward(pr, gp);
        GradCheckReport rep = gradient_check(loss, l.data, gl.data, 1e-6, 1e-6);
        CHECK(rep.pass);
    }
}

TEST_CASE("spatial_max_pool basics and tie rule") {
    Tensor single({2, 1, 1}, {4.0, -1.0});
    MaxPoolResult r1 = spatial_max_pool(single);
    CHECK(r1.values[0] == 4.0);
    CHECK(r1.values[1] == -1.0);

    Tensor flat = Tensor::full({3, 2, 2}, 2.5);
    MaxPoolResult r2 = spatial_max_pool(flat);
    for (int c = 0; c < 3; ++c) {
        CHECK(r2.values[c] == 2.5);
        CHECK(r2.argmax[c] == 0); // first cell wins ties
    }

    Tensor t({1, 2, 2}, {1.0, 5.0, 3.0, 2.0});
    CHECK(spatial_max_pool(t).values[0] == 5.0);
}

TEST_CASE("spatial_max_pool backward conserves gradient mass") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor f = random_tensor({3, 4, 4}, rng);
        MaxPoolResult r = spatial_max_pool(f);
        Tensor g = random_tensor({3}, rng);
        Tensor back = spatial_max_pool_backward(r, g);
        double in_mass = 0.0, out_mass = 0.0;
        for (double v : g.data) in_mass += v;
        for (double v : back.data) out_mass += v;
        CHECK(out_mass == in_mass); // exact: each value is copied once
    }
}

TEST_CASE("spatial_avg_pool") {
    Tensor c = Tensor::full({2, 3, 3}, -0.25);
    Tensor r = spatial_avg_pool(c);
    CHECK(r[0] == doctest::Approx(-0.25).epsilon(1e-15));

    Tensor t({1, 2, 2}, {0.0, 0.0, 1.0, 1.0});
    CHECK(spatial_avg_pool(t)[0] == doctest::Approx(0.5).epsilon(1e-15));

    Tensor single({3, 1, 1}, {1.0, 2.0, 3.0});
    Tensor rs = spatial_avg_pool(single);
    for (int i = 0; i < 3; ++i) CHECK(rs[i] == single[i]);
}

TEST_CASE("gradient_check: vacuous pass on empty parameter set") {
    auto loss = [](std::span<const double>) { return 1.0; };
    GradCheckReport rep = gradient_check(loss, {}, {}, 1e-6, 1e-6);
    CHECK(rep.pass);
    CHECK(rep.max_rel_error == 0.0);
}

TEST_CASE("gradient_check: reports non-finite intermediates") {
    std::vector<double> p{0.0};
    std::vector<double> g{1.0};
    auto loss = [](std::span<const double> x) { return std::log(x[0]); };
    GradCheckReport rep = gradient_check(loss, p, g, 1e-6, 1e-6);
    CHECK_FALSE(rep.finite);
    CHECK_FALSE(rep.pass);
}

TEST_CASE("tensor invariants are enforced at construction") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), invalid_input);
    CHECK_THROWS_AS(Tensor({0}, {}), invalid_input);
}
