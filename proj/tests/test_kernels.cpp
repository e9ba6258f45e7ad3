#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "edformer/engine/kernels.hpp"
#include "edformer/engine/threads.hpp"

using namespace edformer::engine;
namespace k = edformer::engine::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
    }
    return worst;
}

// Runs `omp_fn` with 1 and 4 threads and `serial_fn` once, each into a fresh
// buffer seeded with `init`.
template <class Serial, class Omp>
void compare(const std::vector<double>& init, Serial serial_fn, Omp omp_fn) {
    auto s = init;
    serial_fn(s);
    const int saved = num_threads();
    set_num_threads(1);
    auto one = init;
    omp_fn(one);
    set_num_threads(4);
    auto four = init;
    omp_fn(four);
    set_num_threads(saved);
    CHECK(one == four);
    CHECK(max_rel_diff(s, one) < 1e-12);
}

struct Layout {
    std::vector<std::size_t> a_off, b_off;
    k::MatmulLayout view;
};

Layout make_layout(std::size_t batch, std::size_t p, std::size_t q, std::size_t r, bool a_shared, bool b_shared) {
    Layout l;
    for (std::size_t i = 0; i < batch; ++i) {
        l.a_off.push_back(a_shared ? 0 : i * p * q);
        l.b_off.push_back(b_shared ? 0 : i * q * r);
    }
    l.view = {p, q, r, l.a_off, l.b_off, !a_shared || batch == 1, !b_shared || batch == 1};
    return l;
}

}  // namespace

TEST_CASE("threads can be capped and reported") {
    const int saved = num_threads();
    set_num_threads(2);
    CHECK(num_threads() == 2);
    set_num_threads(saved);
}

TEST_CASE("matmul kernels agree between serial and omp") {
    std::mt19937_64 rng(11);
    const std::size_t batch = 6, p = 20, q = 24, r = 18;
    for (int shared = 0; shared < 3; ++shared) {
        INFO("shared mode " << shared);
        const bool a_shared = shared == 1;
        const bool b_shared = shared == 2;
        auto L = make_layout(batch, p, q, r, a_shared, b_shared);
        const auto a = random_vec((a_shared ? 1 : batch) * p * q, rng);
        const auto b = random_vec((b_shared ? 1 : batch) * q * r, rng);
        const auto dc = random_vec(batch * p * r, rng);

        compare(std::vector<double>(batch * p * r, 0.0),
                [&](std::vector<double>& c) { k::serial::matmul(L.view, a, b, c); },
                [&](std::vector<double>& c) { k::omp::matmul(L.view, a, b, c); });
        compare(random_vec(a.size(), rng),
                [&](std::vector<double>& da) { k::serial::matmul_grad_a(L.view, dc, b, da); },
                [&](std::vector<double>& da) { k::omp::matmul_grad_a(L.view, dc, b, da); });
        compare(random_vec(b.size(), rng),
                [&](std::vector<double>& db) { k::serial::matmul_grad_b(L.view, a, dc, db); },
                [&](std::vector<double>& db) { k::omp::matmul_grad_b(L.view, a, dc, db); });
    }
}

TEST_CASE("softmax kernels agree between serial and omp") {
    std::mt19937_64 rng(12);
    const k::AxisLayout l{40, 32, 30};
    const auto x = random_vec(l.outer * l.len * l.inner, rng);
    std::vector<double> y(x.size());
    k::serial::softmax(l, x, y);
    const auto dy = random_vec(x.size(), rng);
    compare(std::vector<double>(x.size()), [&](std::vector<double>& o) { k::serial::softmax(l, x, o); },
            [&](std::vector<double>& o) { k::omp::softmax(l, x, o); });
    compare(random_vec(x.size(), rng), [&](std::vector<double>& o) { k::serial::softmax_grad(l, y, dy, o); },
            [&](std::vector<double>& o) { k::omp::softmax_grad(l, y, dy, o); });
}

TEST_CASE("layer norm kernels agree between serial and omp") {
    std::mt19937_64 rng(13);
    const std::size_t rows = 600, width = 64;
    const auto x = random_vec(rows * width, rng);
    std::vector<double> y(x.size()), rstd(rows);
    k::serial::layer_norm(rows, width, 1e-5, x, y, rstd);
    const auto dy = random_vec(x.size(), rng);
    compare(std::vector<double>(x.size()),
            [&](std::vector<double>& o) {
                std::vector<double> r(rows);
                k::serial::layer_norm(rows, width, 1e-5, x, o, r);
            },
            [&](std::vector<double>& o) {
                std::vector<double> r(rows);
                k::omp::layer_norm(rows, width, 1e-5, x, o, r);
            });
    compare(random_vec(x.size(), rng),
            [&](std::vector<double>& o) { k::serial::layer_norm_grad(rows, width, y, rstd, dy, o); },
            [&](std::vector<double>& o) { k::omp::layer_norm_grad(rows, width, y, rstd, dy, o); });
}

TEST_CASE("moving average kernels agree between serial and omp") {
    std::mt19937_64 rng(14);
    const k::AxisLayout l{16, 96, 7};
    const auto x = random_vec(l.outer * l.len * l.inner, rng);
    const auto dy = random_vec(x.size(), rng);
    for (std::size_t kernel : {1u, 3u, 25u, 121u}) {
        INFO("kernel " << kernel);
        compare(std::vector<double>(x.size()),
                [&](std::vector<double>& o) { k::serial::moving_average(l, kernel, x, o); },
                [&](std::vector<double>& o) { k::omp::moving_average(l, kernel, x, o); });
        compare(random_vec(x.size(), rng),
                [&](std::vector<double>& o) { k::serial::moving_average_grad(l, kernel, dy, o); },
                [&](std::vector<double>& o) { k::omp::moving_average_grad(l, kernel, dy, o); });
    }
}
