#include <doctest.h>

#include <cmath>

#include "chordlab/errors.hpp"
#include "chordlab/graph.hpp"
#include "gradcheck.hpp"

using namespace chordlab;
using namespace chordlab::testing;

TEST_SUITE_BEGIN("graph");

namespace {

HostTensor<double> randn(Shape shape, Rng& rng, double scale = 1.0) {
    HostTensor<double> t = HostTensor<double>::zeros(std::move(shape));
    for (double& x : t.data) x = rng.normal() * scale;
    return t;
}

}  // namespace

TEST_CASE("matmul forward: identity and hand arithmetic") {
    Graph<float> g;
    const int eye = g.leaf({2, 2}, std::vector<float>{1, 0, 0, 1}, false);
    const int x = g.leaf({2, 2}, std::vector<float>{3, 4, 5, 6}, false);
    CHECK(g.value(g.matmul(eye, x)) == std::vector<float>{3, 4, 5, 6});

    const int a = g.leaf({2, 2}, std::vector<float>{1, 2, 3, 4}, false);
    const int b = g.leaf({2, 1}, std::vector<float>{1, 1}, false);
    CHECK(g.value(g.matmul(a, b)) == std::vector<float>{3, 7});

    CHECK_THROWS_AS(g.matmul(a, g.leaf({3, 1}, std::vector<float>{1, 1, 1}, false)),
                    ShapeMismatch);
}

TEST_CASE("elementwise op values") {
    Graph<float> g;
    const int x = g.leaf({3}, std::vector<float>{0.0f, -3.0f, 2.0f}, false);
    CHECK(g.value(g.sigmoid(x))[0] == doctest::Approx(0.5));
    CHECK(g.value(g.relu(x))[1] == 0.0f);
    CHECK(g.value(g.relu(x))[2] == 2.0f);
    CHECK(g.value(g.tanh_(x))[0] == 0.0f);
    // sigmoid(x) + sigmoid(-x) == 1
    const int nx = g.scale(x, -1.0f);
    const auto s = g.value(g.sigmoid(x));
    const auto sn = g.value(g.sigmoid(nx));
    for (int i = 0; i < 3; ++i) CHECK(s[i] + sn[i] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("softmax rows are normalized and shift invariant") {
    Graph<float> g;
    const int x = g.leaf({1, 3}, std::vector<float>{0, 0, 0}, false);
    for (float p : g.value(g.softmax(x))) CHECK(p == doctest::Approx(1.0 / 3));

    Rng rng(3);
    std::vector<float> vals(12);
    for (float& v : vals) v = static_cast<float>(rng.uniform(-5, 5));
    const int y = g.leaf({3, 4}, vals, false);
    for (float& v : vals) v += 7.5f;
    const int y_shift = g.leaf({3, 4}, vals, false);
    const auto a = g.value(g.softmax(y));
    const auto b = g.value(g.softmax(y_shift));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
}

TEST_CASE("embedding copies rows and accumulates repeated-id gradients") {
    Graph<float> g;
    const int table = g.leaf({3, 2}, std::vector<float>{1, 2, 3, 4, 5, 6}, true);
    const std::vector<std::int32_t> ids{2, 0, 2};
    const int out = g.embedding(table, ids, {3});
    CHECK(g.value(out) == std::vector<float>{5, 6, 1, 2, 5, 6});
    const int loss = g.sum_all(out);
    g.backward(loss);
    // id 2 used twice -> its gradient row doubles
    CHECK(g.grad(table) == std::vector<float>{1, 1, 0, 0, 2, 2});

    Graph<float> g2;
    const int t2 = g2.leaf({3, 2}, std::vector<float>(6, 0.0f), false);
    CHECK_THROWS_AS(g2.embedding(t2, std::vector<std::int32_t>{3}, {1}), IndexOutOfRange);
}

TEST_CASE("layer_norm normalizes rows; constant rows map to bias") {
    Graph<float> g;
    const int gain = g.leaf({4}, std::vector<float>{1, 1, 1, 1}, false);
    const int bias = g.leaf({4}, std::vector<float>{0, 0, 0, 0}, false);
    const int constant = g.leaf({1, 4}, std::vector<float>{3, 3, 3, 3}, false);
    for (float v : g.value(g.layer_norm(constant, gain, bias))) CHECK(v == doctest::Approx(0.0));

    Rng rng(8);
    std::vector<float> vals(8);
    for (float& v : vals) v = static_cast<float>(rng.uniform(-4, 4));
    const int x = g.leaf({2, 4}, vals, false);
    const auto y = g.value(g.layer_norm(x, gain, bias));
    for (int r = 0; r < 2; ++r) {
        double mean = 0, var = 0;
        for (int j = 0; j < 4; ++j) mean += y[static_cast<std::size_t>(r * 4 + j)];
        mean /= 4;
        for (int j = 0; j < 4; ++j) {
            const double d = y[static_cast<std::size_t>(r * 4 + j)] - mean;
            var += d * d;
        }
        var /= 4;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("cross entropy closed forms") {
    Graph<float> g;
    const int uniform = g.leaf({1, 4}, std::vector<float>{0, 0, 0, 0}, false);
    CHECK(g.value(g.cross_entropy(uniform, std::vector<std::int32_t>{2}))[0] ==
          doctest::Approx(std::log(4.0)).epsilon(1e-6));

    const int confident = g.leaf({1, 3}, std::vector<float>{50, 0, 0}, false);
    CHECK(g.value(g.cross_entropy(confident, std::vector<std::int32_t>{0}))[0] ==
          doctest::Approx(0.0).epsilon(1e-6));

    // ignored rows drop out of the mean
    const int two = g.leaf({2, 2}, std::vector<float>{5, 0, 0, 5}, false);
    const int all = g.cross_entropy(two, std::vector<std::int32_t>{0, 0});
    const int ignored = g.cross_entropy(two, std::vector<std::int32_t>{0, -7}, -7);
    CHECK(g.value(ignored)[0] < g.value(all)[0]);
}

TEST_CASE("concat and slice shapes") {
    Graph<float> g;
    const int a = g.leaf({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}, false);
    const int b = g.leaf({2, 2}, std::vector<float>{7, 8, 9, 10}, false);
    const int cat = g.concat(std::vector<int>{a, b}, 1);
    CHECK(g.shape(cat) == Shape{2, 5});
    CHECK(g.value(cat) == std::vector<float>{1, 2, 3, 7, 8, 4, 5, 6, 9, 10});
    const int back = g.slice(cat, 1, 3, 2);
    CHECK(g.value(back) == g.value(b));
    CHECK_THROWS_AS(g.slice(cat, 1, 4, 2), ShapeMismatch);
    CHECK_THROWS_AS(g.concat(std::vector<int>{a, g.leaf({3, 3}, std::vector<float>(9), false)}, 1),
                    ShapeMismatch);
}

TEST_CASE("mask_fill with -inf zeroes softmax weights") {
    Graph<float> g;
    const int x = g.leaf({1, 4}, std::vector<float>{1, 2, 3, 4}, false);
    const std::vector<std::uint8_t> mask{0, 1, 0, 1};
    const int masked = g.mask_fill(x, mask, -std::numeric_limits<float>::infinity());
    const auto p = g.value(g.softmax(masked));
    CHECK(p[1] == 0.0f);
    CHECK(p[3] == 0.0f);
    CHECK(p[0] + p[2] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("transpose swaps axes") {
    Graph<float> g;
    const int x = g.leaf({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}, false);
    const int xt = g.transpose(x, 0, 1);
    CHECK(g.shape(xt) == Shape{3, 2});
    CHECK(g.value(xt) == std::vector<float>{1, 4, 2, 5, 3, 6});
    // 4d swap used by attention
    std::vector<float> v(2 * 3 * 2 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const int y = g.leaf({2, 3, 2, 2}, v, false);
    const int yt = g.transpose(y, 1, 2);
    CHECK(g.shape(yt) == Shape{2, 2, 3, 2});
    CHECK(g.value(g.transpose(yt, 1, 2)) == v);
}

TEST_CASE("linear loss gradient is the broadcast input") {
    // loss = sum(W.x): dW = x^T broadcast over rows
    Graph<float> g;
    const int w = g.leaf({2, 2}, std::vector<float>{0.5f, -1.0f, 2.0f, 0.25f}, true);
    const int x = g.leaf({2, 1}, std::vector<float>{3, 4}, false);
    const int loss = g.sum_all(g.matmul(w, x));
    g.backward(loss);
    CHECK(g.grad(w) == std::vector<float>{3, 4, 3, 4});
    CHECK_THROWS_AS(g.backward(loss), DoubleBackward);
}

TEST_CASE("disconnected leaf keeps an exactly zero gradient") {
    Graph<float> g;
    const int used = g.leaf({2}, std::vector<float>{1, 2}, true);
    const int unused = g.leaf({2}, std::vector<float>{5, 5}, true);
    g.backward(g.sum_all(g.mul(used, used)));
    CHECK(g.grad(unused) == std::vector<float>{0, 0});
}

TEST_CASE("backward requires a scalar") {
    Graph<float> g;
    const int x = g.leaf({2}, std::vector<float>{1, 2}, true);
    CHECK_THROWS_AS(g.backward(x), ShapeMismatch);
}

TEST_CASE("deterministic forward results across distinct graphs") {
    auto run = [] {
        Graph<float> g;
        Rng rng(99);
        std::vector<float> v(24);
        for (float& x : v) x = rng.next_float();
        const int a = g.leaf({4, 6}, v, false);
        std::vector<float> w(18);
        for (float& x : w) x = rng.next_float();
        const int b = g.leaf({6, 3}, w, false);
        return g.value(g.softmax(g.matmul(a, b)));
    };
    CHECK(run() == run());
}

// ---- finite-difference checks, 3 random shapes per op ----

TEST_CASE("gradient checks: matmul / bmm") {
    Rng rng(17);
    for (int i = 0; i < 3; ++i) {
        const int m = static_cast<int>(rng.uniform_int(2, 5)), k = static_cast<int>(rng.uniform_int(2, 5)),
                  n = static_cast<int>(rng.uniform_int(2, 5));
        const double err = gradcheck(
            {randn({m, k}, rng), randn({k, n}, rng)},
            [](Graph<double>& g, const std::vector<int>& p) {
                return g.sum_all(g.tanh_(g.matmul(p[0], p[1])));
            });
        CHECK(err < 1e-4);
    }
    for (int i = 0; i < 3; ++i) {
        const int nb = static_cast<int>(rng.uniform_int(1, 3)), m = static_cast<int>(rng.uniform_int(2, 4)),
                  k = static_cast<int>(rng.uniform_int(2, 4)), n = static_cast<int>(rng.uniform_int(2, 4));
        const double err = gradcheck(
            {randn({nb, m, k}, rng), randn({nb, k, n}, rng)},
            [](Graph<double>& g, const std::vector<int>& p) {
                return g.sum_all(g.sigmoid(g.bmm(p[0], p[1])));
            });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient checks: activations and softmax") {
    Rng rng(23);
    for (int i = 0; i < 3; ++i) {
        const int r = static_cast<int>(rng.uniform_int(2, 5)), c = static_cast<int>(rng.uniform_int(2, 6));
        for (int op = 0; op < 4; ++op) {
            const double err = gradcheck(
                {randn({r, c}, rng)},
                [op](Graph<double>& g, const std::vector<int>& p) {
                    int y = 0;
                    switch (op) {
                        case 0: y = g.sigmoid(p[0]); break;
                        case 1: y = g.tanh_(p[0]); break;
                        case 2: y = g.relu(p[0]); break;
                        default: y = g.softmax(p[0]); break;
                    }
                    // weighted sum keeps softmax gradients non-trivial
                    return g.sum_all(g.mul(y, g.tanh_(p[0])));
                });
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("gradient checks: add / add_bias / mul / scale / concat / slice / transpose") {
    Rng rng(29);
    for (int i = 0; i < 3; ++i) {
        const int r = static_cast<int>(rng.uniform_int(2, 4)), c = static_cast<int>(rng.uniform_int(2, 5));
        double err = gradcheck(
            {randn({r, c}, rng), randn({r, c}, rng), randn({c}, rng)},
            [](Graph<double>& g, const std::vector<int>& p) {
                const int s = g.add_bias(g.add(g.mul(p[0], p[1]), g.scale(p[0], 0.5)), p[2]);
                return g.sum_all(g.sigmoid(s));
            });
        CHECK(err < 1e-4);

        err = gradcheck(
            {randn({r, c}, rng), randn({r, c + 1}, rng)},
            [](Graph<double>& g, const std::vector<int>& p) {
                const int cat = g.concat(std::vector<int>{p[0], p[1]}, 1);
                const int sl = g.slice(cat, 1, 1, 2);
                return g.sum_all(g.tanh_(g.transpose(sl, 0, 1)));
            });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient checks: layer_norm / embedding / cross_entropy / mask_fill") {
    Rng rng(37);
    for (int i = 0; i < 3; ++i) {
        const int r = static_cast<int>(rng.uniform_int(2, 4)), c = static_cast<int>(rng.uniform_int(3, 6));
        double err = gradcheck(
            {randn({r, c}, rng), randn({c}, rng, 0.5), randn({c}, rng, 0.5)},
            [](Graph<double>& g, const std::vector<int>& p) {
                return g.sum_all(g.sigmoid(g.layer_norm(p[0], p[1], p[2])));
            });
        CHECK(err < 1e-4);

        const int v = static_cast<int>(rng.uniform_int(3, 6));
        std::vector<std::int32_t> ids;
        for (int j = 0; j < r; ++j)
            ids.push_back(static_cast<std::int32_t>(rng.uniform_int(0, v - 1)));
        std::vector<std::int32_t> targets;
        for (int j = 0; j < r; ++j)
            targets.push_back(static_cast<std::int32_t>(rng.uniform_int(0, c - 1)));
        err = gradcheck(
            {randn({v, 3}, rng), randn({3, c}, rng)},
            [&](Graph<double>& g, const std::vector<int>& p) {
                const int e = g.embedding(p[0], ids, {r});
                return g.cross_entropy(g.matmul(e, p[1]), targets);
            });
        CHECK(err < 1e-4);

        std::vector<std::uint8_t> mask(static_cast<std::size_t>(r) * c);
        for (auto& mby : mask) mby = rng.next_double() < 0.3 ? 1 : 0;
        err = gradcheck(
            {randn({r, c}, rng)},
            [&](Graph<double>& g, const std::vector<int>& p) {
                return g.sum_all(g.softmax(g.mask_fill(p[0], mask, -1e30)));
            });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient check: three-layer mlp composite") {
    Rng rng(41);
    std::vector<std::int32_t> targets{1, 0, 2};
    const double err = gradcheck(
        {randn({3, 5}, rng), randn({5, 6}, rng), randn({6}, rng, 0.3), randn({6, 4}, rng),
         randn({4}, rng, 0.3), randn({4, 3}, rng)},
        [&](Graph<double>& g, const std::vector<int>& p) {
            int x = g.tanh_(g.add_bias(g.matmul(p[0], p[1]), p[2]));
            x = g.relu(g.add_bias(g.matmul(x, p[3]), p[4]));
            return g.cross_entropy(g.matmul(x, p[5]), targets);
        });
    CHECK(err < 1e-4);
}

TEST_SUITE_END();
