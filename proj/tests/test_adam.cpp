#include <doctest.h>

#include "scen/adam.hpp"
#include "support/oracles.hpp"

using namespace scen;

TEST_CASE("zero gradient from a fresh state is an exact no-op") {
    auto w = parameter(Tensor::vector({1.0, -0.5, 3.25}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam opt({w}, cfg);
    opt.zero_grad();
    opt.step();
    CHECK(w->value[0] == 1.0);
    CHECK(w->value[1] == -0.5);
    CHECK(w->value[2] == 3.25);
    CHECK(opt.steps() == 1);
}

TEST_CASE("single step matches the scalar reference") {
    auto w = parameter(Tensor::vector({1.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam opt({w}, cfg);
    w->grad[0] = 0.5;

    test::AdamRef ref;
    const double expected = ref.step(1.0, 0.5, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    opt.step();
    CHECK(w->value[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(opt.steps() == 1);
}

TEST_CASE("two steps with a constant gradient match the reference at t=2") {
    auto w = parameter(Tensor::vector({1.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam opt({w}, cfg);

    test::AdamRef ref;
    double expected = 1.0;
    for (int t = 0; t < 2; ++t) {
        expected = ref.step(expected, 0.5, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        w->grad[0] = 0.5;
        opt.step();
        w->zero_grad();
    }
    CHECK(w->value[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(opt.steps() == 2);
}

TEST_CASE("per-coordinate updates on a multi-parameter group") {
    Rng rng(3);
    auto a = parameter(Tensor::vector({0.2, -1.0}));
    auto b = parameter(Tensor::zeros(2, 2));
    AdamConfig cfg;
    cfg.lr = 0.05;
    Adam opt({a, b}, cfg);

    std::vector<test::AdamRef> refs(a->value.size() + b->value.size());
    std::vector<double> expected;
    for (std::size_t i = 0; i < a->value.size(); ++i) expected.push_back(a->value[i]);
    for (std::size_t i = 0; i < b->value.size(); ++i) expected.push_back(b->value[i]);

    for (int t = 0; t < 3; ++t) {
        std::vector<double> grads;
        for (std::size_t i = 0; i < expected.size(); ++i) grads.push_back(rng.uniform(-1.0, 1.0));
        for (std::size_t i = 0; i < expected.size(); ++i)
            expected[i] = refs[i].step(expected[i], grads[i], cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] = grads[i];
        for (std::size_t i = 0; i < b->grad.size(); ++i) b->grad[i] = grads[a->grad.size() + i];
        opt.step();
        opt.zero_grad();
    }
    for (std::size_t i = 0; i < a->value.size(); ++i)
        CHECK(a->value[i] == doctest::Approx(expected[i]).epsilon(1e-14));
    for (std::size_t i = 0; i < b->value.size(); ++i)
        CHECK(b->value[i] == doctest::Approx(expected[a->value.size() + i]).epsilon(1e-14));
}
