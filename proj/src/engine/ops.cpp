#include "edformer/engine/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "edformer/engine/kernels.hpp"
#include "edformer/error.hpp"

namespace edformer::engine {

namespace {

Tape& tape_of(Var a) {
    if (a.tape == nullptr) throw TapeError("operand is not on a tape");
    return *a.tape;
}

Tape& common_tape(Var a, Var b) {
    if (a.tape != b.tape) throw TapeError("operands live on different tapes");
    return tape_of(a);
}

std::vector<std::size_t> strides_of(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
    return strides;
}

// For every flat index of `out`, the flat index of the element of `in` that
// broadcasts onto it. `in` is right-aligned against `out`.
std::vector<std::size_t> broadcast_map(const Shape& in, const Shape& out) {
    const std::size_t rank = out.size();
    const std::size_t lead = rank - in.size();
    std::vector<std::size_t> in_strides(rank, 0);
    const auto native = strides_of(in);
    for (std::size_t i = 0; i < in.size(); ++i) in_strides[lead + i] = in[i] == 1 ? 0 : native[i];

    std::vector<std::size_t> map(shape_size(out));
    std::vector<std::size_t> counter(rank, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < map.size(); ++flat) {
        map[flat] = src;
        for (std::size_t ax = rank; ax-- > 0;) {
            ++counter[ax];
            src += in_strides[ax];
            if (counter[ax] < out[ax]) break;
            src -= in_strides[ax] * counter[ax];
            counter[ax] = 0;
        }
    }
    return map;
}

std::size_t normalize_axis(int axis, std::size_t rank) {
    const int r = static_cast<int>(rank);
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) throw ShapeError("axis " + std::to_string(axis) + " is invalid for rank " + std::to_string(rank));
    return static_cast<std::size_t>(a);
}

kernels::AxisLayout axis_layout(const Shape& shape, std::size_t axis) {
    kernels::AxisLayout l;
    l.outer = std::accumulate(shape.begin(), shape.begin() + static_cast<std::ptrdiff_t>(axis), std::size_t{1},
                              std::multiplies<>());
    l.len = shape[axis];
    l.inner = std::accumulate(shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, shape.end(), std::size_t{1},
                              std::multiplies<>());
    return l;
}

// Shared machinery for broadcasting binary ops. `fwd(a, b)` computes one
// element; `da(a, b, g)` / `db(a, b, g)` give the input gradient contributions.
template <class Fwd, class DA, class DB>
Var binary(Var a, Var b, const char* name, Fwd fwd, DA da, DB db) {
    Tape& tape = common_tape(a, b);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    Shape out_shape;
    try {
        out_shape = broadcast_shapes(sa, sb);
    } catch (const ShapeError&) {
        throw ShapeError(std::string(name) + ": cannot broadcast " + shape_string(sa) + " with " + shape_string(sb));
    }
    const bool a_direct = sa == out_shape;
    const bool b_direct = sb == out_shape;
    std::vector<std::size_t> amap = a_direct ? std::vector<std::size_t>{} : broadcast_map(sa, out_shape);
    std::vector<std::size_t> bmap = b_direct ? std::vector<std::size_t>{} : broadcast_map(sb, out_shape);

    const auto av = a.value().data();
    const auto bv = b.value().data();
    std::vector<double> out(shape_size(out_shape));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = fwd(av[a_direct ? i : amap[i]], bv[b_direct ? i : bmap[i]]);
    }

    return tape.record(Tensor(out_shape, std::move(out)), {a, b},
                       [a, b, a_direct, b_direct, amap = std::move(amap), bmap = std::move(bmap), da,
                        db](Tape& t, std::size_t self) {
                           const auto g = t.incoming(self);
                           const auto av = t.data(a.id);
                           const auto bv = t.data(b.id);
                           if (t.needs_grad(a)) {
                               auto acc = t.accumulator(a);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   const std::size_t ia = a_direct ? i : amap[i];
                                   const std::size_t ib = b_direct ? i : bmap[i];
                                   acc[ia] += da(av[ia], bv[ib], g[i]);
                               }
                           }
                           if (t.needs_grad(b)) {
                               auto acc = t.accumulator(b);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   const std::size_t ia = a_direct ? i : amap[i];
                                   const std::size_t ib = b_direct ? i : bmap[i];
                                   acc[ib] += db(av[ia], bv[ib], g[i]);
                               }
                           }
                       });
}

template <class Fwd, class Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
    Tape& tape = tape_of(x);
    const auto xv = x.value().data();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
    return tape.record(Tensor(x.shape(), std::move(out)), {x}, [x, deriv](Tape& t, std::size_t self) {
        const auto g = t.incoming(self);
        const auto xv = t.data(x.id);
        const auto yv = t.data(self);
        auto acc = t.accumulator(x);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += deriv(xv[i], yv[i]) * g[i];
    });
}

// out[i] = x[map[i]]; the backward pass scatters gradients through the same map.
Var gather(Var x, Shape out_shape, std::vector<std::size_t> map) {
    Tape& tape = tape_of(x);
    const auto xv = x.value().data();
    std::vector<double> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = xv[map[i]];
    return tape.record(Tensor(std::move(out_shape), std::move(out)), {x},
                       [x, map = std::move(map)](Tape& t, std::size_t self) {
                           const auto g = t.incoming(self);
                           auto acc = t.accumulator(x);
                           for (std::size_t i = 0; i < g.size(); ++i) acc[map[i]] += g[i];
                       });
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            throw ShapeError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
        }
        out[i] = std::max(da, db);
    }
    return out;
}

Var add(Var a, Var b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double g) { return g; },
        [](double, double, double g) { return g; });
}

Var sub(Var a, Var b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double g) { return g; },
        [](double, double, double g) { return -g; });
}

Var mul(Var a, Var b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double g) { return g * y; },
        [](double x, double, double g) { return g * x; });
}

Var div(Var a, Var b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double g) { return g / y; },
        [](double x, double y, double g) { return -g * x / (y * y); });
}

Var scale(Var x, double factor) {
    return unary(
        x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var square(Var x) {
    return unary(
        x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var relu(Var x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sqrt_floor(Var x, double floor) {
    return unary(
        x, [floor](double v) { return std::max(std::sqrt(std::max(v, 0.0)), floor); },
        [floor](double v, double y) { return (v > 0.0 && std::sqrt(v) > floor) ? 0.5 / y : 0.0; });
}

Var matmul(Var a, Var b) {
    Tape& tape = common_tape(a, b);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sb.size() < 2) {
        throw ShapeError("matmul needs rank >= 2 operands, got " + shape_string(sa) + " and " + shape_string(sb));
    }
    const std::size_t p = sa[sa.size() - 2];
    const std::size_t q = sa.back();
    const std::size_t r = sb.back();
    if (sb[sb.size() - 2] != q) {
        throw ShapeError("matmul inner dimensions disagree: " + shape_string(sa) + " x " + shape_string(sb));
    }
    const Shape batch_a(sa.begin(), sa.end() - 2);
    const Shape batch_b(sb.begin(), sb.end() - 2);
    Shape batch_out;
    try {
        batch_out = broadcast_shapes(batch_a.empty() ? Shape{1} : batch_a, batch_b.empty() ? Shape{1} : batch_b);
    } catch (const ShapeError&) {
        throw ShapeError("matmul batch dimensions disagree: " + shape_string(sa) + " x " + shape_string(sb));
    }
    const std::size_t n_batch = shape_size(batch_out);
    auto offsets = [&](const Shape& batch, std::size_t block) {
        std::vector<std::size_t> off(n_batch);
        const auto map = broadcast_map(batch.empty() ? Shape{1} : batch, batch_out);
        for (std::size_t i = 0; i < n_batch; ++i) off[i] = map[i] * block;
        return off;
    };
    auto a_off = std::make_shared<std::vector<std::size_t>>(offsets(batch_a, p * q));
    auto b_off = std::make_shared<std::vector<std::size_t>>(offsets(batch_b, q * r));
    const bool a_unique = shape_size(batch_a) == n_batch;
    const bool b_unique = shape_size(batch_b) == n_batch;

    Shape out_shape;
    if (batch_a.empty() && batch_b.empty()) {
        out_shape = {p, r};
    } else {
        out_shape = batch_out;
        out_shape.push_back(p);
        out_shape.push_back(r);
    }

    kernels::MatmulLayout layout{p, q, r, *a_off, *b_off, a_unique, b_unique};
    std::vector<double> out(n_batch * p * r);
    kernels::omp::matmul(layout, a.value().data(), b.value().data(), out);

    return tape.record(Tensor(out_shape, std::move(out)), {a, b},
                       [a, b, p, q, r, a_off, b_off, a_unique, b_unique](Tape& t, std::size_t self) {
                           kernels::MatmulLayout l{p, q, r, *a_off, *b_off, a_unique, b_unique};
                           const auto g = t.incoming(self);
                           if (t.needs_grad(a)) kernels::omp::matmul_grad_a(l, g, t.data(b.id), t.accumulator(a));
                           if (t.needs_grad(b)) kernels::omp::matmul_grad_b(l, t.data(a.id), g, t.accumulator(b));
                       });
}

Var softmax(Var x, int axis) {
    Tape& tape = tape_of(x);
    const std::size_t ax = normalize_axis(axis, x.rank());
    const auto layout = axis_layout(x.shape(), ax);
    std::vector<double> out(x.value().size());
    kernels::omp::softmax(layout, x.value().data(), out);
    return tape.record(Tensor(x.shape(), std::move(out)), {x}, [x, layout](Tape& t, std::size_t self) {
        kernels::omp::softmax_grad(layout, t.data(self), t.incoming(self), t.accumulator(x));
    });
}

Var layer_norm(Var x, double eps) {
    Tape& tape = tape_of(x);
    const std::size_t width = x.shape().back();
    const std::size_t rows = x.value().size() / width;
    std::vector<double> out(x.value().size());
    std::vector<double> rstd(rows);
    kernels::omp::layer_norm(rows, width, eps, x.value().data(), out, rstd);
    return tape.record(Tensor(x.shape(), std::move(out)), {x},
                       [x, rows, width, rstd = std::move(rstd)](Tape& t, std::size_t self) {
                           kernels::omp::layer_norm_grad(rows, width, t.data(self), rstd, t.incoming(self),
                                                         t.accumulator(x));
                       });
}

Var permute(Var x, const std::vector<std::size_t>& axes) {
    const Shape& in = x.shape();
    if (axes.size() != in.size()) throw ShapeError("permute needs one axis per dimension of " + shape_string(in));
    std::vector<bool> seen(in.size(), false);
    Shape out_shape(in.size());
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] >= in.size() || seen[axes[i]]) throw ShapeError("permute axes are not a permutation");
        seen[axes[i]] = true;
        out_shape[i] = in[axes[i]];
    }
    const auto in_strides = strides_of(in);
    std::vector<std::size_t> strides(in.size());
    for (std::size_t i = 0; i < axes.size(); ++i) strides[i] = in_strides[axes[i]];

    std::vector<std::size_t> map(shape_size(out_shape));
    std::vector<std::size_t> counter(in.size(), 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < map.size(); ++flat) {
        map[flat] = src;
        for (std::size_t ax = in.size(); ax-- > 0;) {
            ++counter[ax];
            src += strides[ax];
            if (counter[ax] < out_shape[ax]) break;
            src -= strides[ax] * counter[ax];
            counter[ax] = 0;
        }
    }
    return gather(x, std::move(out_shape), std::move(map));
}

Var transpose(Var x, std::size_t axis_a, std::size_t axis_b) {
    std::vector<std::size_t> axes(x.rank());
    std::iota(axes.begin(), axes.end(), 0);
    std::swap(axes.at(axis_a), axes.at(axis_b));
    return permute(x, axes);
}

Var reshape(Var x, Shape shape) {
    Tape& tape = tape_of(x);
    Tensor out = x.value().reshaped(std::move(shape));
    return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
        const auto g = t.incoming(self);
        auto acc = t.accumulator(x);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    });
}

Var flip(Var x, std::size_t axis) {
    if (axis >= x.rank()) throw ShapeError("flip axis out of range");
    const auto l = axis_layout(x.shape(), axis);
    std::vector<std::size_t> map(x.value().size());
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t t = 0; t < l.len; ++t)
            for (std::size_t in = 0; in < l.inner; ++in)
                map[(o * l.len + t) * l.inner + in] = (o * l.len + (l.len - 1 - t)) * l.inner + in;
    return gather(x, x.shape(), std::move(map));
}

Var sum(Var x) {
    Tape& tape = tape_of(x);
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return tape.record(Tensor::scalar(s), {x}, [x](Tape& t, std::size_t self) {
        const double g = t.incoming(self)[0];
        for (double& a : t.accumulator(x)) a += g;
    });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean_axis(Var x, std::size_t axis, bool keepdim) {
    Tape& tape = tape_of(x);
    if (axis >= x.rank()) throw ShapeError("mean_axis axis out of range");
    const auto l = axis_layout(x.shape(), axis);
    Shape out_shape = x.shape();
    if (keepdim) {
        out_shape[axis] = 1;
    } else {
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
        if (out_shape.empty()) out_shape = {1};
    }
    const auto xv = x.value().data();
    const double n = static_cast<double>(l.len);
    std::vector<double> out(l.outer * l.inner, 0.0);
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t in = 0; in < l.inner; ++in) {
            double s = 0.0;
            for (std::size_t t = 0; t < l.len; ++t) s += xv[(o * l.len + t) * l.inner + in];
            out[o * l.inner + in] = s / n;
        }
    return tape.record(Tensor(std::move(out_shape), std::move(out)), {x}, [x, l, n](Tape& t, std::size_t self) {
        const auto g = t.incoming(self);
        auto acc = t.accumulator(x);
        for (std::size_t o = 0; o < l.outer; ++o)
            for (std::size_t in = 0; in < l.inner; ++in) {
                const double gi = g[o * l.inner + in] / n;
                for (std::size_t k = 0; k < l.len; ++k) acc[(o * l.len + k) * l.inner + in] += gi;
            }
    });
}

Var moving_average(Var x, std::size_t axis, std::size_t kernel) {
    Tape& tape = tape_of(x);
    if (kernel == 0 || kernel % 2 == 0) {
        throw ConfigError("moving average kernel must be odd and positive, got " + std::to_string(kernel));
    }
    if (axis >= x.rank()) throw ShapeError("moving_average axis out of range");
    const auto layout = axis_layout(x.shape(), axis);
    std::vector<double> out(x.value().size());
    kernels::omp::moving_average(layout, kernel, x.value().data(), out);
    return tape.record(Tensor(x.shape(), std::move(out)), {x}, [x, layout, kernel](Tape& t, std::size_t self) {
        kernels::omp::moving_average_grad(layout, kernel, t.incoming(self), t.accumulator(x));
    });
}

Var dropout(Var x, double p, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
    if (p == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - p);
    const double survivor = 1.0 / (1.0 - p);
    std::vector<double> mask(x.value().size());
    for (double& m : mask) m = keep(rng) ? survivor : 0.0;
    Var m = tape_of(x).constant(Tensor(x.shape(), std::move(mask)));
    return mul(x, m);
}

}  // namespace edformer::engine
