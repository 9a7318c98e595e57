// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fgrn/tensor.hpp"
#include "testutil.hpp"

using namespace fgrn;
using testutil::grad_check;
using testutil::random_tensor;

TEST_SUITE("tensor/elementwise") {

TEST_CASE("add elementwise values") {
    auto a = Tensor64::from_values({2}, {1.0, 2.0});
    auto b = Tensor64::from_values({2}, {3.0, 4.0});
    auto c = add(a, b);
    CHECK(c.values() == std::vector<double>{4.0, 6.0});
}

TEST_CASE("x + 0 is identity") {
    Rng rng(7);
    auto x = random_tensor<double>({2, 3, 4, 4}, rng, 0.0, 2.0);
    auto z = Tensor64::zeros({2, 3, 4, 4});
    auto y = add(x, z);
    CHECK(y.values() == x.values());
}

TEST_CASE("broadcast add over singleton dims") {
    auto a = Tensor64::from_values({2, 2}, {1, 2, 3, 4});
    auto b = Tensor64::from_values({2, 1}, {10, 20});
    auto c = add(a, b);
    CHECK(c.values() == std::vector<double>{11, 12, 23, 24});
    auto s = Tensor64::scalar(5.0);
    auto d = add(a, s);
    CHECK(d.values() == std::vector<double>{6, 7, 8, 9});
}

TEST_CASE("incompatible shapes raise ShapeMismatch") {
    auto a = Tensor64::zeros({2, 3});
    auto b = Tensor64::zeros({2, 4});
    CHECK_THROWS_AS(add(a, b), Error);
    try {
        add(a, b);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("gradient of (a*b).sum() wrt a equals b") {
    Rng rng(11);
    auto a = random_tensor<double>({3, 4}, rng, -2.0, 2.0, true);
    auto b = random_tensor<double>({3, 4}, rng, -2.0, 2.0);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(mul(g.attach(a), b)); }, {&a}, 1e-6);
    CHECK(err < 1e-6);
    // closed form: grad(a) == b
    a.zero_grad();
    {
        GraphT<double> g;
        backward(sum(mul(g.attach(a), b)));
    }
    for (std::size_t i = 0; i < b.values().size(); ++i)
        CHECK(a.grad()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
}

TEST_CASE("broadcast gradients have parameter shapes") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        Shape sa{2, 1 + rng.uniform_int(3), 1, 4};
        Shape sb{1, 1, 3, 4};
        auto a = random_tensor<double>(sa, rng, -1, 1, true);
        auto b = random_tensor<double>(sb, rng, -1, 1, true);
        a.zero_grad();
        b.zero_grad();
        {
            GraphT<double> g;
            backward(sum(mul(g.attach(a), g.attach(b))));
        }
        CHECK(a.grad().size() == a.values().size());
        CHECK(b.grad().size() == b.values().size());
        const double err = grad_check(
            [&](GraphT<double>& g) { return sum(mul(g.attach(a), g.attach(b))); }, {&a, &b}, 1e-6);
        CHECK(err < 1e-6);
    }
}

TEST_CASE("sub and neg gradients") {
    Rng rng(17);
    auto a = random_tensor<double>({2, 5}, rng, -2, 2, true);
    auto b = random_tensor<double>({2, 5}, rng, -2, 2, true);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(mul(sub(g.attach(a), g.attach(b)), neg(g.attach(a)))); },
        {&a, &b}, 1e-6);
    CHECK(err < 1e-5);
}

} // TEST_SUITE

TEST_SUITE("tensor/unary") {

TEST_CASE("exp values") {
    auto z = fgrn::exp(Tensor64::scalar(0.0));
    CHECK(z.item() == 1.0);
    auto two = fgrn::exp(Tensor64::scalar(std::log(2.0)));
    CHECK(two.item() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("exp gradient") {
    Rng rng(19);
    auto a = random_tensor<double>({3, 3}, rng, -1.0, 1.0, true);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(fgrn::exp(g.attach(a))); }, {&a}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("tanh gradient") {
    Rng rng(23);
    auto a = random_tensor<double>({4, 2}, rng, -1.5, 1.5, true);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(fgrn::tanh(g.attach(a))); }, {&a}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("leaky_relu values and gradient") {
    auto v = leaky_relu(Tensor64::from_values({2}, {2.0, -1.0}), 0.2);
    CHECK(v.values()[0] == 2.0);
    CHECK(v.values()[1] == doctest::Approx(-0.2).epsilon(1e-15));

    Rng rng(29);
    // keep points away from the kink
    std::vector<double> vals(12);
    for (auto& x : vals) {
        x = rng.uniform(0.2, 1.5);
        if (rng.bernoulli(0.5)) x = -x;
    }
    auto a = Tensor64::param({3, 4}, vals);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(leaky_relu(g.attach(a), 0.2)); }, {&a}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("scale gradient") {
    Rng rng(31);
    auto a = random_tensor<double>({5}, rng, -1, 1, true);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(scale(g.attach(a), -2.5)); }, {&a}, 1e-6);
    CHECK(err < 1e-6);
}

} // TEST_SUITE

TEST_SUITE("tensor/structure") {

TEST_CASE("split of concat round-trips exactly") {
    Rng rng(37);
    auto a = random_tensor<double>({2, 1, 3, 3}, rng);
    auto b = random_tensor<double>({2, 2, 3, 3}, rng);
    auto cat = concat_channels<double>({a, b});
    auto parts = split_channels(cat, {1, 2});
    CHECK(parts[0].values() == a.values());
    CHECK(parts[1].values() == b.values());
}

TEST_CASE("concat layout: channel 0 then 1..2") {
    auto a = Tensor64::from_values({1, 1, 1, 2}, {1, 2});
    auto b = Tensor64::from_values({1, 2, 1, 2}, {3, 4, 5, 6});
    auto cat = concat_channels<double>({a, b});
    CHECK(cat.values() == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(cat.at({0, 0, 0, 0}) == 1.0);
    CHECK(cat.at({0, 1, 0, 1}) == 4.0);
}

TEST_CASE("gradient of sum(split(x)[0]) marks first slice") {
    Rng rng(41);
    auto x = random_tensor<double>({1, 3, 2, 2}, rng, -1, 1, true);
    x.zero_grad();
    {
        GraphT<double> g;
        auto parts = split_channels(g.attach(x), {1, 2});
        backward(sum(parts[0]));
    }
    for (int i = 0; i < 4; ++i) CHECK(x.grad()[static_cast<std::size_t>(i)] == 1.0);
    for (int i = 4; i < 12; ++i) CHECK(x.grad()[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("split size mismatch raises") {
    auto x = Tensor64::zeros({1, 3, 2, 2});
    CHECK_THROWS_AS(split_channels(x, {2, 2}), Error);
}

TEST_CASE("concat+split gradients vs finite differences") {
    Rng rng(43);
    auto a = random_tensor<double>({1, 2, 2, 2}, rng, -1, 1, true);
    auto b = random_tensor<double>({1, 1, 2, 2}, rng, -1, 1, true);
    const double err = grad_check(
        [&](GraphT<double>& g) {
            auto cat = concat_channels<double>({g.attach(a), g.attach(b)});
            auto parts = split_channels(cat, {1, 2});
            return sum(mul(parts[1], parts[1]));
        },
        {&a, &b}, 1e-6);
    CHECK(err < 1e-6);
}

} // TEST_SUITE

TEST_SUITE("tensor/reductions") {

TEST_CASE("l1_mean basic values") {
    auto x = Tensor64::from_values({2}, {0.3, -0.7});
    CHECK(l1_mean(x, x).item() == 0.0);
    auto a = Tensor64::from_values({2}, {0.0, 2.0});
    auto b = Tensor64::from_values({2}, {1.0, 0.0});
    CHECK(l1_mean(a, b).item() == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("l1_mean rejects shape mismatch") {
    CHECK_THROWS_AS(l1_mean(Tensor64::zeros({2}), Tensor64::zeros({3})), Error);
}

TEST_CASE("l1_mean gradient away from zero differences") {
    Rng rng(47);
    std::vector<double> va(8), vb(8);
    for (std::size_t i = 0; i < 8; ++i) {
        va[i] = rng.uniform(0.5, 1.0);
        vb[i] = -rng.uniform(0.5, 1.0);
    }
    auto a = Tensor64::param({2, 4}, va);
    auto b = Tensor64::param({2, 4}, vb);
    const double err = grad_check(
        [&](GraphT<double>& g) { return l1_mean(g.attach(a), g.attach(b)); }, {&a, &b}, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("l1_mean subgradient at zero is zero") {
    auto a = Tensor64::param({2}, {1.0, 1.0});
    auto b = Tensor64::from_values({2}, {1.0, 1.0});
    a.zero_grad();
    {
        GraphT<double> g;
        backward(l1_mean(g.attach(a), b));
    }
    CHECK(a.grad()[0] == 0.0);
    CHECK(a.grad()[1] == 0.0);
}

} // TEST_SUITE

TEST_SUITE("tensor/graph") {

TEST_CASE("backward of sum gives all-ones gradient") {
    Rng rng(53);
    auto x = random_tensor<double>({3, 5}, rng, -1, 1, true);
    x.zero_grad();
    {
        GraphT<double> g;
        backward(sum(g.attach(x)));
    }
    for (auto v : x.grad()) CHECK(v == 1.0);
}

TEST_CASE("two backward passes without zeroing double the gradients") {
    Rng rng(59);
    auto x = random_tensor<double>({4}, rng, -1, 1, true);
    auto w = random_tensor<double>({4}, rng, -1, 1);
    x.zero_grad();
    GraphT<double> g;
    auto loss = sum(mul(g.attach(x), w));
    backward(loss);
    const auto once = x.grad();
    backward(loss);
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(x.grad()[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}

TEST_CASE("backward requires a scalar") {
    auto x = Tensor64::param({2}, {1.0, 2.0});
    GraphT<double> g;
    auto y = add(g.attach(x), x);
    CHECK_THROWS_AS(backward(y), Error);
    try {
        backward(y);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotScalar);
    }
}

TEST_CASE("backward requires a graph") {
    auto x = Tensor64::scalar(1.0);
    CHECK_THROWS_AS(backward(x), Error);
}

TEST_CASE("graph replay is bitwise deterministic") {
    Rng rng(61);
    auto x = random_tensor<double>({2, 3, 4, 4}, rng);
    auto w = random_tensor<double>({4, 3, 3, 3}, rng, -0.5, 0.5, true);
    auto b = random_tensor<double>({4}, rng, -0.1, 0.1, true);
    auto run = [&]() {
        GraphT<double> g;
        return conv2d(g.attach(x), w, b, 1, 1).values();
    };
    CHECK(run() == run());
}

TEST_CASE("detach blocks gradient flow") {
    Rng rng(67);
    auto x = random_tensor<double>({3}, rng, -1, 1, true);
    x.zero_grad();
    {
        GraphT<double> g;
        auto attached = g.attach(x);
        auto d = g.attach(attached.detach());
        backward(sum(mul(d, d)));
    }
    CHECK_FALSE(x.has_grad());
}

TEST_CASE("composite network gradient vs finite differences") {
    Rng rng(71);
    auto x = random_tensor<double>({1, 2, 4, 4}, rng, -1, 1);
    auto w1 = random_tensor<double>({3, 2, 3, 3}, rng, -0.5, 0.5, true);
    auto b1 = random_tensor<double>({3}, rng, -0.1, 0.1, true);
    auto w2 = random_tensor<double>({2, 3, 3, 3}, rng, -0.5, 0.5, true);
    auto b2 = random_tensor<double>({2}, rng, -0.1, 0.1, true);
    auto target = random_tensor<double>({1, 2, 4, 4}, rng, -1, 1);
    const double err = grad_check(
        [&](GraphT<double>& g) {
            auto h = leaky_relu(conv2d(g.attach(x), w1, b1, 1, 1), 0.2);
            auto y = conv2d(h, w2, b2, 1, 1);
            return l1_mean(y, target);
        },
        {&w1, &b1, &w2, &b2}, 1e-5);
    CHECK(err < 1e-4);
}

} // TEST_SUITE

TEST_SUITE("tensor/conv2d") {

TEST_CASE("ones kernel on ones input, pad 1") {
    auto x = Tensor64::full({1, 1, 3, 3}, 1.0);
    auto w = Tensor64::full({1, 1, 3, 3}, 1.0);
    auto b = Tensor64::zeros({1});
    auto y = conv2d(x, w, b, 1, 1);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    CHECK(y.at({0, 0, 1, 1}) == 9.0);
    const std::vector<double> expected{4, 6, 4, 6, 9, 6, 4, 6, 4};
    CHECK(y.values() == expected);
}

TEST_CASE("identity kernel reproduces input") {
    Rng rng(73);
    auto x = random_tensor<double>({2, 2, 5, 5}, rng);
    std::vector<double> wv(2 * 2 * 9, 0.0);
    // single 1 at the kernel center of the matching channel
    wv[0 * 2 * 9 + 0 * 9 + 4] = 1.0;
    wv[1 * 2 * 9 + 1 * 9 + 4] = 1.0;
    auto w = Tensor64::from_values({2, 2, 3, 3}, wv);
    auto b = Tensor64::zeros({2});
    auto y = conv2d(x, w, b, 1, 1);
    CHECK(y.values() == x.values());
}

TEST_CASE("channel disagreement raises ShapeMismatch") {
    auto x = Tensor64::zeros({1, 3, 4, 4});
    auto w = Tensor64::zeros({2, 2, 3, 3});
    auto b = Tensor64::zeros({2});
    CHECK_THROWS_AS(conv2d(x, w, b, 1, 1), Error);
}

TEST_CASE("strided output shape") {
    auto x = Tensor64::zeros({1, 1, 7, 9});
    auto w = Tensor64::zeros({1, 1, 3, 3});
    auto b = Tensor64::zeros({1});
    auto y = conv2d(x, w, b, 2, 1);
    CHECK(y.shape() == Shape{1, 1, 4, 5});
}

TEST_CASE("all three gradients vs finite differences") {
    Rng rng(79);
    auto x = random_tensor<double>({2, 3, 5, 5}, rng, -1, 1, true);
    auto w = random_tensor<double>({2, 3, 3, 3}, rng, -0.5, 0.5, true);
    auto b = random_tensor<double>({2}, rng, -0.2, 0.2, true);
    auto mask = random_tensor<double>({2, 2, 5, 5}, rng, -1, 1);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(mul(conv2d(g.attach(x), w, b, 1, 1), mask)); },
        {&x, &w, &b}, 1e-5);
    CHECK(err < 1e-5);
}

TEST_CASE("strided conv gradients vs finite differences") {
    Rng rng(83);
    auto x = random_tensor<double>({1, 2, 6, 6}, rng, -1, 1, true);
    auto w = random_tensor<double>({2, 2, 3, 3}, rng, -0.5, 0.5, true);
    auto b = random_tensor<double>({2}, rng, -0.2, 0.2, true);
    auto mask = random_tensor<double>({1, 2, 3, 3}, rng, -1, 1);
    const double err = grad_check(
        [&](GraphT<double>& g) { return sum(mul(conv2d(g.attach(x), w, b, 2, 1), mask)); },
        {&x, &w, &b}, 1e-5);
    CHECK(err < 1e-5);
}

} // TEST_SUITE
