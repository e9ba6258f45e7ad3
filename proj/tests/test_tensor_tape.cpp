#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "edformer/engine/ops.hpp"
#include "edformer/engine/tape.hpp"
#include "edformer/error.hpp"

using namespace edformer;
using namespace edformer::engine;

TEST_CASE("tensor construction validates shape and values") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.at({1, 2}) == 1.5);

    CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({1}, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}), NonFiniteError);
    CHECK_THROWS_AS(Tensor({1}, std::vector<double>{std::numeric_limits<double>::infinity()}), NonFiniteError);
}

TEST_CASE("tensor indexing is row-major") {
    const Tensor t = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
    CHECK(t.shape() == Shape{2, 3});
    CHECK(t.at({0, 2}) == 3);
    CHECK(t.at({1, 0}) == 4);
    CHECK(t[4] == 5);
    CHECK_THROWS_AS(t.at({2, 0}), ShapeError);
    CHECK(t.reshaped({3, 2}).at({2, 1}) == 6);
    CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
}

TEST_CASE("backward may run only once") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(3.0), true);
    Var y = square(x);
    tape.backward(y);
    CHECK((*tape.grad(x))[0] == 6.0);
    CHECK(tape.consumed());
    CHECK_THROWS_AS(tape.backward(y), TapeError);
}

TEST_CASE("backward requires a scalar loss from the same tape") {
    Tape a;
    Tape b;
    Var x = a.leaf(Tensor({2}, 1.0), true);
    CHECK_THROWS_AS(a.backward(x), TapeError);
    Var other = b.leaf(Tensor::scalar(1.0), true);
    CHECK_THROWS_AS(a.backward(other), TapeError);
    Var y = b.leaf(Tensor::scalar(2.0), true);
    CHECK_THROWS_AS(add(x, y), TapeError);
}

TEST_CASE("gradients accumulate over shared subexpressions") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(2.0), true);
    Var y = mul(x, x);       // x^2
    Var z = add(y, mul(y, x));  // x^2 + x^3
    tape.backward(z);
    CHECK((*tape.grad(x))[0] == Catch::Approx(2 * 2.0 + 3 * 4.0));
}

TEST_CASE("grad is absent for constants and zero for unreached leaves") {
    Tape tape;
    Var c = tape.constant(Tensor::scalar(5.0));
    Var x = tape.leaf(Tensor::scalar(1.0), true);
    Var unused = tape.leaf(Tensor({3}, 1.0), true);
    Var loss = mul(x, c);
    tape.backward(loss);
    CHECK_FALSE(tape.grad(c).has_value());
    CHECK((*tape.grad(x))[0] == 5.0);
    CHECK(*tape.grad(unused) == Tensor({3}, 0.0));
}

TEST_CASE("non-finite intermediate results are rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(1.0), true);
    Var zero = tape.constant(Tensor::scalar(0.0));
    CHECK_THROWS_AS(div(x, zero), NonFiniteError);
}
