#pragma once

// Numeric kernels behind the differentiable ops. Two implementations share
// each signature: `serial` is the plain reference, `omp` is OpenMP-parallel
// over independent output rows. For any input the omp kernels produce the
// same bits regardless of thread count, because every output element is
// accumulated by one thread in a fixed order. Gradient kernels accumulate
// (+=) into their output buffers.

#include <cstddef>
#include <span>

namespace edformer::engine::kernels {

// Batched product C[b] = A[a_offsets[b]] (p x q) * B[b_offsets[b]] (q x r).
// Offsets may repeat when an operand is broadcast across the batch; the
// *_unique flags say whether they do not.
struct MatmulLayout {
    std::size_t p = 0;
    std::size_t q = 0;
    std::size_t r = 0;
    std::span<const std::size_t> a_offsets;
    std::span<const std::size_t> b_offsets;
    bool a_unique = true;
    bool b_unique = true;

    std::size_t batch() const { return a_offsets.size(); }
};

// Strided view of a reduction axis: `outer` slices, each with `len` elements
// spaced `inner` apart.
struct AxisLayout {
    std::size_t outer = 1;
    std::size_t len = 1;
    std::size_t inner = 1;
};

#define EDFORMER_KERNEL_DECLS                                                                             \
    void matmul(const MatmulLayout& layout, std::span<const double> a, std::span<const double> b,         \
                std::span<double> c);                                                                     \
    void matmul_grad_a(const MatmulLayout& layout, std::span<const double> dc, std::span<const double> b, \
                       std::span<double> da);                                                             \
    void matmul_grad_b(const MatmulLayout& layout, std::span<const double> a, std::span<const double> dc, \
                       std::span<double> db);                                                             \
    void softmax(const AxisLayout& layout, std::span<const double> x, std::span<double> y);               \
    void softmax_grad(const AxisLayout& layout, std::span<const double> y, std::span<const double> dy,    \
                      std::span<double> dx);                                                              \
    void layer_norm(std::size_t rows, std::size_t width, double eps, std::span<const double> x,           \
                    std::span<double> y, std::span<double> rstd);                                         \
    void layer_norm_grad(std::size_t rows, std::size_t width, std::span<const double> y,                  \
                         std::span<const double> rstd, std::span<const double> dy, std::span<double> dx); \
    void moving_average(const AxisLayout& layout, std::size_t kernel, std::span<const double> x,          \
                        std::span<double> y);                                                             \
    void moving_average_grad(const AxisLayout& layout, std::size_t kernel, std::span<const double> dy,    \
                             std::span<double> dx);

namespace serial {
EDFORMER_KERNEL_DECLS
}  // namespace serial

namespace omp {
EDFORMER_KERNEL_DECLS
}  // namespace omp

#undef EDFORMER_KERNEL_DECLS

}  // namespace edformer::engine::kernels
