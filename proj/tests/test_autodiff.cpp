#include <doctest.h>

#include <cmath>
#include <string>

#include "scen/autodiff.hpp"
#include "scen/errors.hpp"
#include "support/grad_check.hpp"

using namespace scen;

TEST_CASE("relu forward values") {
    auto y = relu(constant(Tensor::vector({-1.0, 0.0, 2.0})));
    CHECK(y->value[0] == 0.0);
    CHECK(y->value[1] == 0.0);
    CHECK(y->value[2] == 2.0);
}

TEST_CASE("relu subgradient at zero is zero") {
    auto x = parameter(Tensor::vector({0.0, -1.0, 3.0}));
    backward(mean(relu(x)));
    CHECK(x->grad[0] == 0.0);
    CHECK(x->grad[1] == 0.0);
    CHECK(x->grad[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("l2_normalize on a 3-4-5 triangle") {
    auto y = l2_normalize(constant(Tensor::vector({3.0, 4.0})));
    CHECK(y->value[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y->value[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(l2_normalize(constant(Tensor::vector({0.0, 0.0}))), NumericError);
}

TEST_CASE("matmul against the identity") {
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Rng rng(11);
    Tensor a = test::random_tensor({3, 5}, rng);
    auto out = matmul(constant(eye), constant(a));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(out->value[i] == a[i]);
}

TEST_CASE("dot gradient is the other vector") {
    auto w = parameter(Tensor::vector({1.0, -2.0, 0.5}));
    auto x = constant(Tensor::vector({3.0, 7.0, -4.0}));
    backward(dot(w, x));
    for (std::size_t i = 0; i < 3; ++i) CHECK(w->grad[i] == x->value[i]);
}

TEST_CASE("log_softmax rows exponentiate and sum to one") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = test::random_tensor({4, 7}, rng, -30.0, 30.0);
        for (std::size_t axis : {std::size_t{0}, std::size_t{1}}) {
            auto y = log_softmax(constant(x), axis);
            const std::size_t groups = axis == 1 ? 4 : 7;
            const std::size_t width = axis == 1 ? 7 : 4;
            for (std::size_t g = 0; g < groups; ++g) {
                double sum = 0.0;
                for (std::size_t j = 0; j < width; ++j)
                    sum += std::exp(axis == 1 ? y->value.at(g, j) : y->value.at(j, g));
                CHECK(std::abs(sum - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("fan-out accumulates the sum of both path gradients") {
    // f(x) = mean(relu(x)) + mean(x * 2), sharing x, against the same graph
    // built from two copies of x.
    Rng rng(17);
    Tensor value = test::random_tensor_off_zero({3, 4}, rng);

    auto shared = parameter(value);
    backward(add(mean(relu(shared)), mean(scale(shared, 2.0))));

    auto copy_a = parameter(value);
    auto copy_b = parameter(value);
    backward(mean(relu(copy_a)));
    backward(mean(scale(copy_b, 2.0)));

    for (std::size_t i = 0; i < value.size(); ++i) {
        CHECK(shared->grad[i] == doctest::Approx(copy_a->grad[i] + copy_b->grad[i]).epsilon(1e-14));
    }
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
    auto x = parameter(Tensor::vector({2.0}));
    auto loss = scale(x, 3.0);
    backward(loss);
    CHECK(x->grad[0] == 3.0);
    backward(loss);
    CHECK(x->grad[0] == 6.0);
    x->zero_grad();
    CHECK(x->grad[0] == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
    auto x = parameter(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(backward(scale(x, 2.0)), ShapeError);
}

TEST_CASE("shape errors name the op and both shapes") {
    auto a = constant(Tensor::zeros(2, 3));
    auto b = constant(Tensor::zeros(4, 5));
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& err) {
        const std::string msg = err.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x5]") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(add_bias(a, constant(Tensor::vector({1.0}))), ShapeError);
    CHECK_THROWS_AS(dot(constant(Tensor::vector({1.0})), constant(Tensor::vector({1.0, 2.0}))),
                    ShapeError);
    CHECK_THROWS_AS(log_softmax(a, 2), ShapeError);
}

TEST_CASE("detach blocks the gradient path") {
    auto x = parameter(Tensor::vector({1.5}));
    auto blocked = detach(scale(x, 2.0));
    CHECK(blocked->value[0] == 3.0);
    CHECK_FALSE(blocked->needs_grad);
    CHECK_THROWS_AS(backward(mean(blocked)), ValidationError);
}

TEST_CASE("frozen leaves pass gradient through without accumulating") {
    auto x = parameter(Tensor::vector({1.0, 2.0}));
    auto w = parameter(Tensor::vector({3.0, 4.0}));
    set_trainable(w, false);
    backward(dot(x, w));
    CHECK(x->grad[0] == 3.0);  // chain rule still uses w's values
    CHECK(x->grad[1] == 4.0);
    CHECK(w->grad[0] == 0.0);
    CHECK(w->grad[1] == 0.0);
    set_trainable(w, true);
    backward(dot(x, w));
    CHECK(w->grad[0] == 1.0);
}

TEST_CASE("finite differences on a composite graph") {
    Rng rng(23);
    auto build = [](const std::vector<NodePtr>& in) {
        auto h = add_bias(matmul(in[0], in[1]), in[2]);
        h = tanh_op(relu(h));
        return mean(rows_dot(l2_normalize(h), sigmoid(h)));
    };
    const double err = test::max_grad_error(
        build,
        {test::random_tensor({4, 3}, rng), test::random_tensor({3, 5}, rng),
         test::random_tensor({5}, rng)},
        rng);
    CHECK(err <= 1e-5);
}

TEST_CASE("finite differences on gather, pick, repeat and concat") {
    Rng rng(29);
    auto build = [](const std::vector<NodePtr>& in) {
        auto g = gather_rows(in[0], {0, 2, 2, 1});
        auto p = pick_per_row(log_softmax(g, 1), {0, 2, 1, 0});
        auto r = repeat_rows(in[1], 2);
        return add(mean(p), mean(concat(r, reshape(in[0], {8, 2}))));
    };
    const double err = test::max_grad_error(
        build, {test::random_tensor({4, 4}, rng), test::random_tensor({4, 2}, rng)}, rng);
    CHECK(err <= 1e-5);
}
