#include <algorithm>
#include <cmath>

#include "edformer/engine/kernels.hpp"

namespace edformer::engine::kernels::serial {

void matmul(const MatmulLayout& m, std::span<const double> a, std::span<const double> b, std::span<double> c) {
    for (std::size_t bt = 0; bt < m.batch(); ++bt) {
        const double* A = a.data() + m.a_offsets[bt];
        const double* B = b.data() + m.b_offsets[bt];
        double* C = c.data() + bt * m.p * m.r;
        for (std::size_t i = 0; i < m.p; ++i) {
            for (std::size_t j = 0; j < m.r; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < m.q; ++k) s += A[i * m.q + k] * B[k * m.r + j];
                C[i * m.r + j] = s;
            }
        }
    }
}

void matmul_grad_a(const MatmulLayout& m, std::span<const double> dc, std::span<const double> b,
                   std::span<double> da) {
    for (std::size_t bt = 0; bt < m.batch(); ++bt) {
        const double* dC = dc.data() + bt * m.p * m.r;
        const double* B = b.data() + m.b_offsets[bt];
        double* dA = da.data() + m.a_offsets[bt];
        for (std::size_t i = 0; i < m.p; ++i) {
            for (std::size_t k = 0; k < m.q; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < m.r; ++j) s += dC[i * m.r + j] * B[k * m.r + j];
                dA[i * m.q + k] += s;
            }
        }
    }
}

void matmul_grad_b(const MatmulLayout& m, std::span<const double> a, std::span<const double> dc,
                   std::span<double> db) {
    for (std::size_t bt = 0; bt < m.batch(); ++bt) {
        const double* A = a.data() + m.a_offsets[bt];
        const double* dC = dc.data() + bt * m.p * m.r;
        double* dB = db.data() + m.b_offsets[bt];
        for (std::size_t k = 0; k < m.q; ++k) {
            for (std::size_t i = 0; i < m.p; ++i) {
                const double aik = A[i * m.q + k];
                for (std::size_t j = 0; j < m.r; ++j) dB[k * m.r + j] += aik * dC[i * m.r + j];
            }
        }
    }
}

void softmax(const AxisLayout& l, std::span<const double> x, std::span<double> y) {
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.len * l.inner + in;
            double mx = x[base];
            for (std::size_t t = 1; t < l.len; ++t) mx = std::max(mx, x[base + t * l.inner]);
            double sum = 0.0;
            for (std::size_t t = 0; t < l.len; ++t) {
                const double e = std::exp(x[base + t * l.inner] - mx);
                y[base + t * l.inner] = e;
                sum += e;
            }
            for (std::size_t t = 0; t < l.len; ++t) y[base + t * l.inner] /= sum;
        }
    }
}

void softmax_grad(const AxisLayout& l, std::span<const double> y, std::span<const double> dy,
                  std::span<double> dx) {
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.len * l.inner + in;
            double dot = 0.0;
            for (std::size_t t = 0; t < l.len; ++t) dot += y[base + t * l.inner] * dy[base + t * l.inner];
            for (std::size_t t = 0; t < l.len; ++t) {
                const std::size_t i = base + t * l.inner;
                dx[i] += y[i] * (dy[i] - dot);
            }
        }
    }
}

void layer_norm(std::size_t rows, std::size_t width, double eps, std::span<const double> x, std::span<double> y,
                std::span<double> rstd) {
    const double n = static_cast<double>(width);
    for (std::size_t r = 0; r < rows; ++r) {
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
    for (std::size_t r = 0; r < rows; ++r) {
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
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.len * l.inner + in;
            for (std::ptrdiff_t t = 0; t <= last; ++t) {
                double s = 0.0;
                for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
                    s += x[base + static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)) * l.inner];
                }
                y[base + static_cast<std::size_t>(t) * l.inner] = s / k;
            }
        }
    }
}

void moving_average_grad(const AxisLayout& l, std::size_t kernel, std::span<const double> dy, std::span<double> dx) {
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto last = static_cast<std::ptrdiff_t>(l.len) - 1;
    const double k = static_cast<double>(kernel);
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.len * l.inner + in;
            for (std::ptrdiff_t t = 0; t <= last; ++t) {
                const double g = dy[base + static_cast<std::size_t>(t) * l.inner] / k;
                for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
                    dx[base + static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)) * l.inner] += g;
                }
            }
        }
    }
}

}  // namespace edformer::engine::kernels::serial
