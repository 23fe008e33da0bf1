#include <doctest.h>

#include <cmath>
#include <limits>

#include "fundus/error.hpp"
#include "fundus/optim.hpp"

using namespace fundus;

namespace {

ModelParams scalar_model(float value) {
    // Smallest valid architecture; only the first scalar is exercised.
    ArchDescriptor a;
    a.variant = Variant::plain;
    a.input_size = 2;
    a.stage_channels = {1};
    a.tap_stages = {0};
    a.head_hidden = 1;
    auto p = zero_params(a);
    p.tensors[0].value[0] = value;
    return p;
}

std::vector<NamedTensor> grads_like(const ModelParams& p, float first) {
    std::vector<NamedTensor> g;
    for (const auto& t : p.tensors) g.push_back({t.name, Tensor(t.value.shape())});
    g[0].value[0] = first;
    return g;
}

}  // namespace

TEST_CASE("adam with zero gradient leaves parameters and advances t") {
    auto p = scalar_model(0.25f);
    const auto before = p;
    AdamState st(p);
    adam_step(p, grads_like(p, 0.0f), st, 0.1);
    CHECK(p == before);
    CHECK(st.t == 1);
}

TEST_CASE("adam first step is lr * sign") {
    // m = 0.1, v = 0.001; bias-corrected m = v = 1 -> theta = -0.1 / (1 + 1e-8).
    auto p = scalar_model(0.0f);
    AdamState st(p);
    adam_step(p, grads_like(p, 1.0f), st, 0.1);
    CHECK(p.tensors[0].value[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-6));
}

TEST_CASE("adam matches a scalar oracle over ten steps") {
    const double g = 0.3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0, v = 0, theta = 0.5;
    auto p = scalar_model(0.5f);
    AdamState st(p);
    double prev_step = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= 10; ++t) {
        const double lr = lr_at(0.01, 0.9, static_cast<std::uint64_t>(t - 1));
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double step = lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
        theta -= step;

        const float before = p.tensors[0].value[0];
        adam_step(p, grads_like(p, static_cast<float>(g)), st, lr);
        const double actual_step = double(before) - double(p.tensors[0].value[0]);
        CHECK(p.tensors[0].value[0] == doctest::Approx(theta).epsilon(1e-6));
        // With constant g the bias-corrected ratio stays at 1, so only the
        // decaying learning rate shrinks the step.
        CHECK(actual_step < prev_step);
        prev_step = actual_step;
    }
}

TEST_CASE("adam rejects non-finite gradients without mutating") {
    auto p = scalar_model(1.0f);
    const auto before = p;
    AdamState st(p);
    CHECK_THROWS_AS(adam_step(p, grads_like(p, std::numeric_limits<float>::quiet_NaN()), st, 0.1), TrainingError);
    CHECK_THROWS_AS(adam_step(p, grads_like(p, std::numeric_limits<float>::infinity()), st, 0.1), TrainingError);
    CHECK(p == before);
    CHECK(st.t == 0);
}

TEST_CASE("lr_at schedule") {
    CHECK(lr_at(1e-4, 0.95, 0) == 1e-4);
    CHECK(lr_at(1e-4, 1.0, 50) == 1e-4);
    CHECK(lr_at(1e-4, 0.95, 2) == doctest::Approx(9.025e-5).epsilon(1e-12));
    for (std::uint64_t e = 0; e < 200; ++e) CHECK(lr_at(1e-4, 0.95, e + 1) == 0.95 * lr_at(1e-4, 0.95, e));
}

TEST_CASE("early stopper") {
    EarlyStopper s(1);
    CHECK(s.observe(0.5));
    CHECK_FALSE(s.should_stop());
    CHECK_FALSE(s.observe(0.6));
    CHECK(s.should_stop());
    CHECK(s.best() == 0.5);

    EarlyStopper p3(3);
    p3.observe(1.0);
    p3.observe(1.0);  // equal is not an improvement
    p3.observe(0.9);
    CHECK(p3.since_best() == 0);
    p3.observe(0.95);
    p3.observe(0.95);
    CHECK_FALSE(p3.should_stop());
    p3.observe(0.95);
    CHECK(p3.should_stop());
    CHECK_THROWS_AS(EarlyStopper(0), ConfigError);
}
