// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fgrn/model.hpp"
#include "testutil.hpp"

using namespace fgrn;
using testutil::grad_check;
using testutil::random_tensor;

namespace {

ModelConfig tiny_config(int scale = 2) {
    ModelConfig c;
    c.scale = scale;
    c.width = 8;
    c.resblocks = 2;
    c.flow_cells = 2;
    c.dense_growth = 4;
    return c;
}

} // namespace

TEST_SUITE("rescale/shapes") {

TEST_CASE("downscaler output shape, x2") {
    Rng rng(301);
    auto gd = DownscalerT<double>::make(2, 8, 2, rng);
    auto y = gd.forward(Tensor64::zeros({1, 3, 8, 8}));
    CHECK(y.shape() == Shape{1, 3, 4, 4});
}

TEST_CASE("downscaler output shape, x4") {
    Rng rng(303);
    auto gd = DownscalerT<double>::make(4, 8, 1, rng);
    auto y = gd.forward(Tensor64::zeros({2, 3, 16, 8}));
    CHECK(y.shape() == Shape{2, 3, 4, 2});
}

TEST_CASE("upscaler output shape") {
    Rng rng(305);
    auto gu = UpscalerT<double>::make(2, 8, 2, rng);
    auto y = gu.forward(Tensor64::zeros({1, 3, 4, 4}));
    CHECK(y.shape() == Shape{1, 3, 8, 8});
    auto gu4 = UpscalerT<double>::make(4, 8, 1, rng);
    CHECK(gu4.forward(Tensor64::zeros({1, 3, 4, 4})).shape() == Shape{1, 3, 16, 16});
}

TEST_CASE("indivisible input raises NotDivisible") {
    Rng rng(307);
    auto gd = DownscalerT<double>::make(2, 8, 1, rng);
    CHECK_THROWS_AS(gd.forward(Tensor64::zeros({1, 3, 7, 8})), Error);
}

TEST_CASE("upscaler rejects wrong channel count") {
    Rng rng(309);
    auto gu = UpscalerT<double>::make(2, 8, 1, rng);
    CHECK_THROWS_AS(gu.forward(Tensor64::zeros({1, 4, 4, 4})), Error);
}

} // TEST_SUITE

TEST_SUITE("rescale/behavior") {

TEST_CASE("zero-parameter nets map everything to zero") {
    Rng rng(311);
    auto gd = DownscalerT<double>::make(2, 8, 2, rng);
    auto gu = UpscalerT<double>::make(2, 8, 2, rng);
    ParamMapT<double> params;
    gd.collect_params("gd", params);
    gu.collect_params("gu", params);
    for (auto& [name, p] : params)
        for (auto& v : p.mut_values()) v = 0.0;
    auto x = random_tensor<double>({1, 3, 8, 8}, rng);
    auto down = gd.forward(x);
    for (auto v : down.values()) CHECK(v == 0.0);
    auto lr = random_tensor<double>({1, 3, 4, 4}, rng);
    auto up = gu.forward(lr);
    for (auto v : up.values()) CHECK(v == 0.0);
}

TEST_CASE("zero-weight resblock is the identity") {
    Rng rng(313);
    auto block = ResBlockT<double>::make(4, rng);
    ParamMapT<double> params;
    block.collect_params("b", params);
    for (auto& [name, p] : params)
        for (auto& v : p.mut_values()) v = 0.0;
    auto x = random_tensor<double>({1, 4, 5, 5}, rng);
    CHECK(block.forward(x).values() == x.values());
}

TEST_CASE("end-to-end gradient wrt an HR pixel vs finite differences") {
    Rng rng(317);
    auto gd = DownscalerT<double>::make(2, 4, 1, rng);
    auto gu = UpscalerT<double>::make(2, 4, 1, rng);
    auto hr = random_tensor<double>({1, 3, 4, 4}, rng, 0.1, 0.9, true);
    auto target = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
    const double err = grad_check(
        [&](GraphT<double>& g) { return l1_mean(gu.forward(gd.forward(g.attach(hr))), target); },
        {&hr}, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("parameter gradients of both nets vs finite differences") {
    Rng rng(319);
    auto gd = DownscalerT<double>::make(2, 4, 1, rng);
    auto gu = UpscalerT<double>::make(2, 4, 1, rng);
    auto hr = random_tensor<double>({1, 3, 4, 4}, rng, 0.1, 0.9);
    auto target = random_tensor<double>({1, 3, 4, 4}, rng, 0.0, 1.0);
    std::vector<Tensor64*> ptrs{&gd.tail.weight, &gd.tail.bias, &gu.head.weight,
                                &gd.body[0].conv1.bias, &gu.tail.weight};
    const double err = grad_check(
        [&](GraphT<double>& g) { return l1_mean(gu.forward(gd.forward(g.attach(hr))), target); },
        ptrs, 1e-5);
    CHECK(err < 1e-4);
}

} // TEST_SUITE

TEST_SUITE("model") {

TEST_CASE("gd and gu share no parameter storage") {
    auto model = RescaleModelT<double>::create(tiny_config(), 42);
    std::set<const void*> gd_storage;
    ParamMapT<double> gd_params, gu_params;
    model.gd.collect_params("gd", gd_params);
    model.gu.collect_params("gu", gu_params);
    for (const auto& [name, p] : gd_params) gd_storage.insert(p.payload().get());
    for (const auto& [name, p] : gu_params) CHECK(gd_storage.count(p.payload().get()) == 0);
}

TEST_CASE("parameter names are unique and stable") {
    auto model = RescaleModelT<double>::create(tiny_config(), 42);
    auto params = model.params();
    std::set<std::string> names;
    for (const auto& [name, p] : params) names.insert(name);
    CHECK(names.size() == params.size());
    auto again = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(params[i].first == again[i].first);
        CHECK(params[i].second.payload().get() == again[i].second.payload().get());
    }
}

TEST_CASE("summary counts match a hand count for a small net") {
    ModelConfig c;
    c.width = 4;
    c.resblocks = 1;
    c.flow_cells = 1;
    c.dense_growth = 2;
    auto model = RescaleModelT<double>::create(c, 1);
    auto s = model.summary();
    // gd: head 12->4 (12*4*9+4), block 2x(4*4*9+4), tail 4->3 (4*3*9+3)
    const std::int64_t gd = (12 * 4 * 9 + 4) + 2 * (4 * 4 * 9 + 4) + (4 * 3 * 9 + 3);
    // gu: head 3->4, block, tail 4->12
    const std::int64_t gu = (3 * 4 * 9 + 4) + 2 * (4 * 4 * 9 + 4) + (4 * 12 * 9 + 12);
    CHECK(s.gd == gd);
    CHECK(s.gu == gu);
    // flow cell: alpha 2->1, beta/phi 1->2, growth 2, five layers each
    auto dense = [](std::int64_t in, std::int64_t out, std::int64_t g) {
        std::int64_t n = 0;
        for (int i = 0; i < 4; ++i) n += (in + i * g) * g * 9 + g;
        n += (in + 4 * g) * out * 9 + out;
        return n;
    };
    CHECK(s.flow == dense(2, 1, 2) + 2 * dense(1, 2, 2));
    CHECK(s.total == s.gd + s.gu + s.flow);
}

TEST_CASE("paper-scale x2 config lands near the published parameter count") {
    ModelConfig c; // defaults: w=64, R=8, K=4, g=16
    auto model = RescaleModelT<double>::create(c, 1);
    const double total = static_cast<double>(model.summary().total);
    CHECK(total > 1.0e6);
    CHECK(total < 1.8e6);
}

TEST_CASE("deterministic creation under a seed") {
    auto a = RescaleModelT<double>::create(tiny_config(), 99);
    auto b = RescaleModelT<double>::create(tiny_config(), 99);
    auto pa = a.params();
    auto pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second.values() == pb[i].second.values());
}

TEST_CASE("inference pipeline shapes and quantized LR range") {
    auto model = RescaleModelT<float>::create(tiny_config(), 7);
    Rng rng(321);
    auto hr = random_tensor<float>({1, 3, 8, 8}, rng, 0.0, 1.0);
    auto lr = model.downscale_lr(hr);
    CHECK(lr.shape() == Shape{1, 3, 4, 4});
    for (auto v : lr.values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        const double scaled = static_cast<double>(v) * 255.0;
        CHECK(std::abs(scaled - std::round(scaled)) < 1e-4);
    }
    auto rec = model.upscale_hr(lr);
    CHECK(rec.shape() == Shape{1, 3, 8, 8});
}

} // TEST_SUITE
