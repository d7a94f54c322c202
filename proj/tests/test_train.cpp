#include <gtest/gtest.h>

#include <cmath>

#include "ia/synth.hpp"
#include "ia/train.hpp"
#include "oracles.hpp"

namespace {

ia::AlignInstance random_instance(int h, int w, int c, uint64_t seed, double flow_range = 1.8) {
    ia::AlignInstance inst;
    inst.current = oracle::random_grid(h, w, c, seed, -1.0, 1.0);
    inst.reference = oracle::random_grid(h, w, c, seed + 1, -1.0, 1.0);
    inst.target = oracle::random_grid(h, w, c, seed + 2, -1.0, 1.0);
    inst.flow = ia::FlowField(h, w);
    ia::Rng rng(seed + 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            inst.flow.u(y, x) = static_cast<float>(rng.uniform(-flow_range, flow_range));
            inst.flow.v(y, x) = static_cast<float>(rng.uniform(-flow_range, flow_range));
        }
    return inst;
}

TEST(L2Loss, HandValues) {
    ia::Grid a(2, 2, 1, 0.5f);
    EXPECT_DOUBLE_EQ(ia::l2_loss(a, a), 0.0);

    ia::Grid b(2, 2, 1, 1.5f);
    EXPECT_DOUBLE_EQ(ia::l2_loss(b, a), 1.0);

    ia::Grid c(1, 2, 1), d(1, 2, 1);
    c.at(0, 0, 0) = 0;
    c.at(0, 1, 0) = 3;
    d.at(0, 0, 0) = 0;
    d.at(0, 1, 0) = 1;
    EXPECT_DOUBLE_EQ(ia::l2_loss(c, d), 2.0);

    ia::Grid e(2, 3, 1);
    EXPECT_THROW(ia::l2_loss(a, e), std::invalid_argument);
}

TEST(Backward, ExactlyZeroGradientsAtExactZeroResidual) {
    // All-zero scene with zero biases: every output is exactly 0, so the
    // residual and all gradients are exactly zero.
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 3);
    std::fill(model.w_v.begin(), model.w_v.end(), 0.0f);
    ia::AlignInstance inst;
    inst.current = ia::Grid(4, 4, 8, 0.0f);
    inst.reference = ia::Grid(4, 4, 8, 0.0f);
    inst.target = ia::Grid(4, 4, 8, 0.0f);
    inst.flow = ia::FlowField(4, 4, 0.3f, 0.7f);

    ia::GradientSet grads;
    double loss = ia::backward(inst, model, grads);
    EXPECT_EQ(loss, 0.0);
    for (const auto* g : {&grads.w_q, &grads.b_q, &grads.w_k, &grads.b_k, &grads.w_v, &grads.b_v})
        for (double v : *g) EXPECT_EQ(v, 0.0);
}

TEST(Backward, SelfTargetIsStationaryUpToStorageRounding) {
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 4);
    ia::AlignInstance inst = random_instance(5, 5, 8, 40);
    inst.target = ia::align(inst.current, inst.reference, inst.flow, model);

    ia::GradientSet grads;
    double loss = ia::backward(inst, model, grads);
    EXPECT_LT(loss, 1e-13);  // float32 quantization of the stored target
    for (const auto* g : {&grads.w_q, &grads.b_q, &grads.w_k, &grads.b_k, &grads.w_v, &grads.b_v})
        for (double v : *g) EXPECT_LT(std::abs(v), 1e-9);
}

TEST(Backward, ValueGradientMatchesClosedFormForW1) {
    // w = 1, single head: the softmax weight is identically 1, so
    // dL/dW_v = sum_p (2/N) resid_p (x) s_p and the Q/K gradients vanish.
    ia::AlignModel model = ia::init_align_model(4, 1, 1, 5);
    ia::AlignInstance inst = random_instance(2, 2, 4, 50);

    ia::GradientSet grads;
    ia::backward(inst, model, grads);

    for (double v : grads.w_q) EXPECT_EQ(v, 0.0);
    for (double v : grads.b_q) EXPECT_EQ(v, 0.0);
    for (double v : grads.w_k) EXPECT_EQ(v, 0.0);
    for (double v : grads.b_k) EXPECT_EQ(v, 0.0);

    int C = 4;
    double n = 2.0 * 2.0 * C;
    std::vector<double> expected(C * C, 0.0);
    std::vector<double> expected_b(C, 0.0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            oracle::RefPixel px = oracle::ref_attend(inst.current, inst.reference,
                                                     inst.flow.u(y, x), inst.flow.v(y, x), x, y,
                                                     model);
            // re-derive the single support row s = value + PE
            auto off = ia::decompose_offset(inst.flow.u(y, x), inst.flow.v(y, x));
            std::vector<double> pe = oracle::ref_gamma(0.0, 0.0, 1);
            std::vector<double> s(C);
            for (int c = 0; c < C; ++c)
                s[c] = inst.reference.at(oracle::clampi(y + off.zy, 2), oracle::clampi(x + off.zx, 2), c) + pe[c];
            for (int r = 0; r < C; ++r) {
                double resid = px.out[r] - inst.target.at(y, x, r);
                for (int c = 0; c < C; ++c) expected[r * C + c] += 2.0 / n * resid * s[c];
                expected_b[r] += 2.0 / n * resid;
            }
        }
    for (int i = 0; i < C * C; ++i) EXPECT_NEAR(grads.w_v[i], expected[i], 1e-10);
    for (int i = 0; i < C; ++i) EXPECT_NEAR(grads.b_v[i], expected_b[i], 1e-10);
}

TEST(GradCheck, FullModelBeatsToleranceAtEps1em4) {
    for (uint64_t seed : {13, 14}) {
        ia::AlignModel model = ia::init_align_model(8, 2, 2, seed);
        ia::AlignInstance inst = random_instance(6, 6, 8, seed * 10);
        double err = ia::grad_check(model, inst, 1e-4);
        EXPECT_LT(err, 1e-4) << "seed " << seed;
    }
}

TEST(GradCheck, LinearDegenerateModelIsExactToRounding) {
    ia::AlignModel model = ia::init_align_model(4, 1, 1, 6);
    ia::AlignInstance inst = random_instance(4, 4, 4, 60);
    EXPECT_LT(ia::grad_check(model, inst, 1e-4), 1e-7);
}

TEST(GradCheck, TruncationGrowsWithEps) {
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 13);
    ia::AlignInstance inst = random_instance(6, 6, 8, 130);
    double coarse = ia::grad_check(model, inst, 1e-2);
    double fine = ia::grad_check(model, inst, 1e-4);
    EXPECT_GT(coarse, fine);
    EXPECT_THROW(ia::grad_check(model, inst, 1e-7), std::invalid_argument);
}

TEST(Adam, FirstStepIsSignScaled) {
    // t = 1: m_hat = g, v_hat = g^2, update = -lr * g / (|g| + eps)
    std::vector<double> param = {1.0};
    std::vector<double> grad = {0.5};
    ia::AdamState st(0, 0.1);
    st.step = 1;
    std::vector<double> m = {0.0}, v = {0.0};
    ia::detail::adam_update(param, grad, m, v, st, st.lr);
    EXPECT_NEAR(param[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
}

TEST(Adam, ZeroGradientLeavesModelUnchanged) {
    ia::AlignModel model = ia::init_align_model(4, 1, 1, 9);
    ia::AlignModel before = model;
    ia::GradientSet zero(4);
    ia::AdamState state(4, 0.05);
    ia::adam_step(model, zero, state);
    EXPECT_EQ(state.step, 1);
    EXPECT_EQ(model.w_q, before.w_q);
    EXPECT_EQ(model.w_k, before.w_k);
    EXPECT_EQ(model.w_v, before.w_v);
    EXPECT_EQ(model.b_q, before.b_q);
}

TEST(Adam, ScalarQuadraticMatchesHandSimulation) {
    // minimize 0.5 * theta^2 with gradient theta, lr = 0.1, theta0 = 1
    std::vector<double> theta = {1.0};
    std::vector<double> m = {0.0}, v = {0.0};
    ia::AdamState st(0, 0.1);

    double sim_theta = 1.0, sim_m = 0.0, sim_v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        st.step = t;
        std::vector<double> grad = {theta[0]};
        ia::detail::adam_update(theta, grad, m, v, st, st.lr);

        double g = sim_theta;
        sim_m = 0.9 * sim_m + 0.1 * g;
        sim_v = 0.999 * sim_v + 0.001 * g * g;
        double mhat = sim_m / (1.0 - std::pow(0.9, t));
        double vhat = sim_v / (1.0 - std::pow(0.999, t));
        sim_theta -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);

        EXPECT_NEAR(theta[0], sim_theta, 1e-12);
    }
    EXPECT_LT(theta[0], 1.0);
    EXPECT_GT(theta[0], 0.0);
}

TEST(Fit, ReachableTeacherTargetReducesLoss) {
    ia::AlignModel teacher = ia::init_align_model(8, 2, 2, 100);
    ia::AlignInstance inst = random_instance(6, 6, 8, 1000);
    inst.target = ia::align(inst.current, inst.reference, inst.flow, teacher);

    ia::AlignModel student = ia::init_align_model(8, 2, 2, 101);
    ia::FitOptions opts;
    opts.iterations = 60;
    opts.lr = 0.02;
    ia::FitResult res = ia::fit(student, {inst}, opts);
    ASSERT_FALSE(res.diverged);
    ASSERT_EQ(res.trace.size(), 60u);
    EXPECT_LT(res.trace.back(), res.trace.front());
}

TEST(Fit, ZeroIterationsLeavesModelUntouched) {
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 7);
    ia::AlignInstance inst = random_instance(5, 5, 8, 70);
    ia::FitOptions opts;
    opts.iterations = 0;
    ia::FitResult res = ia::fit(model, {inst}, opts);
    EXPECT_TRUE(res.trace.empty());
    EXPECT_EQ(res.model.w_q, model.w_q);
    EXPECT_EQ(res.model.w_v, model.w_v);
}

TEST(Fit, TraceIsBitExactlyReproducible) {
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 8);
    ia::AlignInstance inst = random_instance(5, 5, 8, 80);
    ia::FitOptions opts;
    opts.iterations = 50;
    opts.lr = 0.01;
    opts.seed = 5;
    ia::FitResult a = ia::fit(model, {inst}, opts);
    ia::FitResult b = ia::fit(model, {inst}, opts);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i], b.trace[i]);
    EXPECT_EQ(a.model.w_v, b.model.w_v);
}

TEST(Fit, RecordsDivergenceAndStops) {
    ia::AlignModel model = ia::init_align_model(8, 2, 2, 9);
    ia::AlignInstance inst = random_instance(4, 4, 8, 90);
    ia::FitOptions opts;
    opts.iterations = 10;
    opts.lr = 1e39;  // guarantees float32 parameter overflow
    ia::FitResult res = ia::fit(model, {inst}, opts);
    EXPECT_TRUE(res.diverged);
    EXPECT_LT(res.trace.size(), 10u);
    EXPECT_TRUE(std::isnan(res.trace.back()));
}

TEST(Fit, CosineScheduleStillConverges) {
    ia::AlignModel teacher = ia::init_align_model(8, 2, 2, 110);
    ia::AlignInstance inst = random_instance(5, 5, 8, 1100);
    inst.target = ia::align(inst.current, inst.reference, inst.flow, teacher);
    ia::AlignModel student = ia::init_align_model(8, 2, 2, 111);
    ia::FitOptions opts;
    opts.iterations = 40;
    opts.lr = 0.02;
    opts.schedule = ia::LrSchedule::CosineTo1em7;
    ia::FitResult res = ia::fit(student, {inst}, opts);
    ASSERT_FALSE(res.diverged);
    EXPECT_LT(res.trace.back(), res.trace.front());
}

TEST(Fit, RejectsEmptyDataset) {
    ia::AlignModel model = ia::init_align_model(4, 1, 1, 0);
    EXPECT_THROW(ia::fit(model, {}, ia::FitOptions{}), std::invalid_argument);
}

}  // namespace
