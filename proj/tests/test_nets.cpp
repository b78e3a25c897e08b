// Copyright (c) 2026 siplab contributors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <cstring>

#include "siplab/nets.hpp"
#include "test_helpers.hpp"

using namespace siplab;
using nets::Activation;
using nets::Mode;
using nets::Network;

TEST_CASE("mlp construction") {
    Rng rng(1);
    SECTION("parameter count for the characterization net") {
        Network n = nets::build_mlp({2, 32, 64, 32, 2}, Activation::relu, rng);
        REQUIRE(n.param_count() == 2 * 32 + 32 + 32 * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2);
        REQUIRE(n.param_count() == 4354);
    }
    SECTION("zero-initialized sigmoid net maps 0 to 0") {
        Network n = nets::build_mlp({1, 16, 64, 16, 1}, Activation::sigmoid, rng);
        n.theta = Grid::zeros(n.theta.shape);
        Grid out = nets::forward_eval(n, Grid::zeros({1, 1}));
        REQUIRE(out[0] == 0.0);
    }
    SECTION("single linear layer with identity weights reproduces input") {
        Network n = nets::build_mlp({2, 2}, Activation::relu, rng);
        n.theta = Grid::zeros(n.theta.shape);
        n.theta[0] = 1.0;  // W[0,0]
        n.theta[3] = 1.0;  // W[1,1]
        Grid out = nets::forward_eval(n, Grid({3, 2}, {1, 2, -0.5, 4, 0, -7}));
        REQUIRE(out.data == std::vector<double>{1, 2, -0.5, 4, 0, -7});
    }
    SECTION("empty size list is rejected") {
        REQUIRE_THROWS(nets::build_mlp({}, Activation::relu, rng));
    }
}

TEST_CASE("u-net parameter counts match the published architectures") {
    Rng rng(2);
    Network u4 = nets::build_unet(4, 16, 1, 1, rng);
    REQUIRE(u4.param_count() == 37697);
    Network u5 = nets::build_unet(5, 16, 2, 2, rng);
    REQUIRE(u5.param_count() == 49570);
}

TEST_CASE("u-net forward behavior") {
    Rng rng(3);
    Network u = nets::build_unet(4, 16, 1, 1, rng);
    SECTION("output spatial shape equals input spatial shape") {
        Grid out = nets::forward_eval(u, rng.uniform_grid({2, 1, 16, 16}, -1, 1));
        REQUIRE(out.shape == Shape{2, 1, 16, 16});
        Grid out32 = nets::forward_eval(u, rng.uniform_grid({1, 1, 32, 32}, -1, 1));
        REQUIRE(out32.shape == Shape{1, 1, 32, 32});
    }
    SECTION("indivisible spatial extent is rejected") {
        REQUIRE_THROWS_WITH(nets::forward_eval(u, Grid::zeros({1, 1, 24, 24})),
                            Catch::Matchers::ContainsSubstring("divisible"));
    }
    SECTION("zero input with zero-initialized final conv gives zero output") {
        Network n = nets::build_unet(4, 16, 1, 1, rng);
        auto& head = n.layers.back();
        for (std::int64_t i = 0; i < head.param_size; ++i) n.theta[head.param_offset + i] = 0.0;
        Grid out = nets::forward_eval(n, Grid::zeros({1, 1, 16, 16}));
        for (double v : out.data) REQUIRE(v == 0.0);
    }
}

TEST_CASE("wave-packet localizer") {
    Rng rng(4);
    Network n = nets::build_wavepacket_net(rng);
    SECTION("parameter count matches the layer recipe") {
        // five blocks of two k=3 convs with 16 maps, then 128-64-32-1 dense
        std::int64_t convs = (1 * 16 * 3 + 16) + (16 * 16 * 3 + 16);  // block 1
        convs += 4 * 2 * (16 * 16 * 3 + 16);                          // blocks 2..5
        std::int64_t dense = (128 * 64 + 64) + (64 * 32 + 32) + (32 * 1 + 1);
        REQUIRE(n.param_count() == convs + dense);
    }
    SECTION("head output always lies in [25.6, 128)") {
        for (int trial = 0; trial < 5; ++trial) {
            Grid out = nets::forward_eval(n, rng.uniform_grid({2, 1, 256}, -2, 2));
            for (double v : out.data) {
                REQUIRE(v >= 25.6);
                REQUIRE(v < 128.0);
            }
        }
    }
    SECTION("zero weights put the head at the midpoint of the range") {
        n.theta = Grid::zeros(n.theta.shape);
        Grid out = nets::forward_eval(n, Grid::zeros({1, 1, 256}));
        REQUIRE(out[0] == Catch::Approx(76.8).margin(1e-12));
    }
    SECTION("wrong input length is rejected") {
        REQUIRE_THROWS(nets::forward_eval(n, Grid::zeros({1, 1, 128})));
    }
}

TEST_CASE("forward modes") {
    Rng rng(5);
    Network u = nets::build_unet(2, 4, 1, 1, rng);
    Grid batch = rng.uniform_grid({3, 1, 8, 8}, -1, 1);

    SECTION("eval forward is deterministic across calls") {
        Grid a = nets::forward_eval(u, batch);
        Grid b = nets::forward_eval(u, batch);
        REQUIRE(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
    }
    SECTION("train-mode forward moves running stats monotonically toward batch stats") {
        Tape t;
        auto theta = t.constant(u.theta);
        auto in = t.constant(batch);
        (void)nets::forward(u, t, theta, in, Mode::train);
        // recompute what the first batch-norm layer saw: its input is the raw first conv output
        Grid rm1 = u.running_mean[0];
        (void)nets::forward(u, t, theta, in, Mode::train);
        Grid rm2 = u.running_mean[0];
        // the batch statistics of the same batch are a fixed target; each
        // update shrinks the gap by the momentum factor
        Grid batch_mean = Grid::zeros(rm1.shape);
        {
            Tape t2;
            auto th = t2.constant(u.theta);
            Grid bm, bv;
            auto& l0 = u.layers[0];
            auto w = ops::slice_param(t2, th, l0.param_offset, {l0.out_ch, l0.in_ch, 3, 3});
            auto bi = ops::slice_param(t2, th, l0.param_offset + l0.out_ch * l0.in_ch * 9, {l0.out_ch});
            auto conv = ops::conv2d(t2, t2.constant(batch), w, bi);
            auto ga = t2.constant(Grid::full({l0.out_ch}, 1.0));
            auto be = t2.constant(Grid::zeros({l0.out_ch}));
            (void)ops::batchnorm2d_train(t2, conv, ga, be, 1e-5, &bm, &bv);
            batch_mean = bm;
        }
        for (std::int64_t c = 0; c < rm1.numel(); ++c) {
            double gap1 = std::abs(rm1[c] - batch_mean[c]);
            double gap2 = std::abs(rm2[c] - batch_mean[c]);
            REQUIRE(gap2 <= gap1 + 1e-12);
            REQUIRE(gap2 == Catch::Approx(u.bn_momentum * gap1).margin(1e-9));
        }
    }
    SECTION("gradient of a scalar head w.r.t. theta matches finite differences") {
        Network small = nets::build_mlp({2, 8, 8, 2}, Activation::relu, rng);
        Grid input = rng.uniform_grid({4, 2}, -1, 1);
        testing::ScalarFn fn = [&](Tape& t, Tape::Id th) {
            auto out = nets::forward(small, t, th, t.constant(input), Mode::eval);
            return ops::scale(t, ops::sum(t, ops::mul(t, out, out)), 0.5);
        };
        REQUIRE(testing::grad_check(fn, small.theta) < 1e-5);
    }
    SECTION("u-net gradient through batch norm matches finite differences") {
        Network tiny = nets::build_unet(2, 3, 1, 1, rng);
        Grid input = rng.uniform_grid({2, 1, 4, 4}, -1, 1);
        testing::ScalarFn fn = [&](Tape& t, Tape::Id th) {
            nets::Network copy = tiny;  // keep running stats untouched across fd probes
            auto out = nets::forward(copy, t, th, t.constant(input), Mode::train);
            return ops::scale(t, ops::sum(t, ops::mul(t, out, out)), 0.5);
        };
        REQUIRE(testing::grad_check(fn, tiny.theta, 1e-4) < 1e-4);
    }
}

TEST_CASE("checkpoint round trip is bit-exact") {
    Rng rng(6);
    Network u = nets::build_unet(2, 4, 1, 1, rng);
    // dirty the running stats so they carry information
    Tape t;
    (void)nets::forward(u, t, t.constant(u.theta), t.constant(rng.uniform_grid({2, 1, 8, 8}, -1, 1)), Mode::train);

    std::string path = "checkpoint_test.sipl";
    nets::save_checkpoint(path, u);
    Network v = nets::build_unet(2, 4, 1, 1, rng);  // different init
    nets::load_checkpoint(path, v);
    REQUIRE(std::memcmp(u.theta.data.data(), v.theta.data.data(), u.theta.data.size() * sizeof(double)) == 0);
    for (size_t i = 0; i < u.running_mean.size(); ++i) {
        REQUIRE(u.running_mean[i].data == v.running_mean[i].data);
        REQUIRE(u.running_var[i].data == v.running_var[i].data);
    }
    SECTION("mismatched architecture is rejected") {
        Network w = nets::build_unet(3, 4, 1, 1, rng);
        REQUIRE_THROWS(nets::load_checkpoint(path, w));
    }
    std::remove(path.c_str());
}
