#include <algorithm>
#include <cmath>
#include <cstdint>

#include "edformer/engine/kernels.hpp"

namespace edformer::engine::kernels::omp {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 15;

using Index = std::int64_t;

}  // namespace

void matmul(const MatmulLayout& m, std::span<const double> a, std::span<const double> b, std::span<double> c) {
    const Index batch = static_cast<Index>(m.batch());
    const Index rows = static_cast<Index>(m.p);
    const bool parallel = m.batch() * m.p * m.q * m.r >= kMinParallelWork;
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
    for (Index bt = 0; bt < batch; ++bt) {
        for (Index i = 0; i < rows; ++i) {
            const double* A = a.data() + m.a_offsets[bt] + i * m.q;
            const double* B = b.data() + m.b_offsets[bt];
            double* C = c.data() + (bt * m.p + i) * m.r;
            std::fill(C, C + m.r, 0.0);
            for (std::size_t k = 0; k < m.q; ++k) {
                const double aik = A[k];
                const double* Bk = B + k * m.r;
                for (std::size_t j = 0; j < m.r; ++j) C[j] += aik * Bk[j];
            }
        }
    }
}

void matmul_grad_a(const MatmulLayout& m, std::span<const double> dc, std::span<const double> b,
                   std::span<double> da) {
    const Index batch = static_cast<Index>(m.batch());
    const Index rows = static_cast<Index>(m.p);
    const bool parallel = m.batch() * m.p * m.q * m.r >= kMinParallelWork;
    auto row = [&](Index bt, Index i) {
        const double* dC = dc.data() + (bt * m.p + i) * m.r;
        const double* B = b.data() + m.b_offsets[bt];
        double* dA = da.data() + m.a_offsets[bt] + i * m.q;
        for (std::size_t k = 0; k < m.q; ++k) {
            const double* Bk = B + k * m.r;
            double s = 0.0;
            for (std::size_t j = 0; j < m.r; ++j) s += dC[j] * Bk[j];
            dA[k] += s;
        }
    };
    if (m.a_unique) {
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
        for (Index bt = 0; bt < batch; ++bt)
            for (Index i = 0; i < rows; ++i) row(bt, i);
    } else {
        // Shared A block: each thread owns whole rows and walks the batch in order.
#pragma omp parallel for schedule(static) if (parallel)
        for (Index i = 0; i < rows; ++i)
            for (Index bt = 0; bt < batch; ++bt) row(bt, i);
    }
}

void matmul_grad_b(const MatmulLayout& m, std::span<const double> a, std::span<const double> dc,
                   std::span<double> db) {
    const Index batch = static_cast<Index>(m.batch());
    const Index inner = static_cast<Index>(m.q);
    const bool parallel = m.batch() * m.p * m.q * m.r >= kMinParallelWork;
    auto row = [&](Index bt, Index k) {
        const double* A = a.data() + m.a_offsets[bt];
        const double* dC = dc.data() + bt * m.p * m.r;
        double* dBk = db.data() + m.b_offsets[bt] + k * m.r;
        for (std::size_t i = 0; i < m.p; ++i) {
            const double aik = A[i * m.q + k];
            const double* dCi = dC + i * m.r;
            for (std::size_t j = 0; j < m.r; ++j) dBk[j] += aik * dCi[j];
        }
    };
    if (m.b_unique) {
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
        for (Index bt = 0; bt < batch; ++bt)
            for (Index k = 0; k < inner; ++k) row(bt, k);
    } else {
#pragma omp parallel for schedule(static) if (parallel)
        for (Index k = 0; k < inner; ++k)
            for (Index bt = 0; bt < batch; ++bt) row(bt, k);
    }
}

void softmax(const AxisLayout& l, std::span<const double> x, std::span<double> y) {
    const Index slices = static_cast<Index>(l.outer * l.inner);
    const bool parallel = l.outer * l.inner * l.len * 8 >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index s = 0; s < slices; ++s) {
        const std::size_t o = static_cast<std::size_t>(s) / l.inner;
        const std::size_t in = static_cast<std::size_t>(s) % l.inner;
        const double* xs = x.data() + o * l.len * l.inner + in;
        double* ys = y.data() + o * l.len * l.inner + in;
        double mx = xs[0];
        for (std::size_t t = 1; t < l.len; ++t) mx = std::max(mx, xs[t * l.inner]);
        double sum = 0.0;
        for (std::size_t t = 0; t < l.len; ++t) {
            const double e = std::exp(xs[t * l.inner] - mx);
            ys[t * l.inner] = e;
            sum += e;
        }
        for (std::size_t t = 0; t < l.len; ++t) ys[t * l.inner] /= sum;
    }
}

void softmax_grad(const AxisLayout& l, std::span<const double> y, std::span<const double> dy,
                  std::span<double> dx) {
    const Index slices = static_cast<Index>(l.outer * l.inner);
    const bool parallel = l.outer * l.inner * l.len * 4 >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index s = 0; s < slices; ++s) {
        const std::size_t base = (static_cast<std::size_t>(s) / l.inner) * l.len * l.inner +
                                 static_cast<std::size_t>(s) % l.inner;
        double dot = 0.0;
        for (std::size_t t = 0; t < l.len; ++t) dot += y[base + t * l.inner] * dy[base + t * l.inner];
        for (std::size_t t = 0; t < l.len; ++t) {
            const std::size_t i = base + t * l.inner;
            dx[i] += y[i] * (dy[i] - dot);
        }
    }
}

void layer_norm(std::size_t rows, std::size_t width, double eps, std::span<const double> x, std::span<double> y,
                std::span<double> rstd) {
    const double n = static_cast<double>(width);
    const bool parallel = rows * width * 4 >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
        const double* xr = x.data() + r * width;
        double* yr = y.data() + r * width;
        double mean = 0.0;
        for (std::size_t i = 0; i < width; ++i) mean += xr[i];
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) var += (xr[i] - mean) * (xr[i] - mean);
        var /= n;
        const double rs = 1.0 / std::sqrt(var + eps);
        rstd[r] = rs;
        for (std::size_t i = 0; i < width; ++i) yr[i] = (xr[i] - mean) * rs;
    }
}

void layer_norm_grad(std::size_t rows, std::size_t width, std::span<const double> y, std::span<const double> rstd,
                     std::span<const double> dy, std::span<double> dx) {
    const double n = static_cast<double>(width);
    const bool parallel = rows * width * 4 >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
        const double* yr = y.data() + r * width;
        const double* gr = dy.data() + r * width;
        double* dxr = dx.data() + r * width;
        double mean_g = 0.0;
        double mean_gy = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            mean_g += gr[i];
            mean_gy += gr[i] * yr[i];
        }
        mean_g /= n;
        mean_gy /= n;
        for (std::size_t i = 0; i < width; ++i) dxr[i] += rstd[r] * (gr[i] - mean_g - yr[i] * mean_gy);
    }
}

void moving_average(const AxisLayout& l, std::size_t kernel, std::span<const double> x, std::span<double> y) {
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto last = static_cast<std::ptrdiff_t>(l.len) - 1;
    const double k = static_cast<double>(kernel);
    const Index slices = static_cast<Index>(l.outer * l.inner);
    const bool parallel = l.outer * l.inner * l.len * kernel >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index s = 0; s < slices; ++s) {
        const std::size_t base = (static_cast<std::size_t>(s) / l.inner) * l.len * l.inner +
                                 static_cast<std::size_t>(s) % l.inner;
        for (std::ptrdiff_t t = 0; t <= last; ++t) {
            double acc = 0.0;
            for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
                acc += x[base + static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)) * l.inner];
            }
            y[base + static_cast<std::size_t>(t) * l.inner] = acc / k;
        }
    }
}

void moving_average_grad(const AxisLayout& l, std::size_t kernel, std::span<const double> dy, std::span<double> dx) {
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto last = static_cast<std::ptrdiff_t>(l.len) - 1;
    const double k = static_cast<double>(kernel);
    const Index slices = static_cast<Index>(l.outer * l.inner);
    const bool parallel = l.outer * l.inner * l.len * kernel >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (Index s = 0; s < slices; ++s) {
        const std::size_t base = (static_cast<std::size_t>(s) / l.inner) * l.len * l.inner +
                                 static_cast<std::size_t>(s) % l.inner;
        for (std::ptrdiff_t t = 0; t <= last; ++t) {
            const double g = dy[base + static_cast<std::size_t>(t) * l.inner] / k;
            for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
                dx[base + static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)) * l.inner] += g;
            }
        }
    }
}

}  // namespace edformer::engine::kernels::omp
