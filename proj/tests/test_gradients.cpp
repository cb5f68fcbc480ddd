#include <doctest.h>

#include "helpers.hpp"

using namespace lifeseq;

// Central finite differences against every analytic gradient path in the
// model: embeddings (with mean-removal coupling and weight tying), time2vec,
// mix scalars, attention projections (local and FAVOR+), PFF, ReZero gates,
// ScaleNorm gains, all four decoder heads and all loss functions.
TEST_CASE("full-model gradients match central finite differences") {
    auto w = test::tiny_world(6, 91, 48);
    ModelConfig mc = test::tiny_model_config(0, 8, 2);
    mc.enc.n_heads = 2;
    mc.enc.n_local_heads = 1;
    mc.enc.local_window = 4;
    mc.enc.n_random_features = 8;
    mc.enc.pff_hidden = 10;
    Model model(mc, w.vocab.size());
    test::randomize_params(model, 101, 0.2);

    test::CompositeLoss loss{model, {w.seqs[0], w.seqs[1]}};
    loss.backward();
    const auto report = test::gradient_check(model, loss, 20, 1234);
    for (const auto& [name, err] : report.per_param) {
        INFO("parameter ", name, " rel err ", err);
        CHECK(err < 1e-4);
    }
}

// The loss functions in isolation, differentiated with respect to their
// probability inputs.
TEST_CASE("loss gradients with respect to probabilities") {
    Rng rng(7);
    auto fd_check = [&](const std::function<real(const Vec&)>& f,
                        const std::function<Vec(const Vec&)>& grad, const Vec& p0) {
        const Vec g = grad(p0);
        for (std::size_t i = 0; i < p0.size(); ++i) {
            Vec p = p0;
            const real h = 1e-7;
            p[i] = p0[i] + h;
            const real lp = f(p);
            p[i] = p0[i] - h;
            const real lm = f(p);
            const real numeric = (lp - lm) / (2 * h);
            CHECK(std::fabs(numeric - g[i]) / std::max({std::fabs(numeric), std::fabs(g[i]), 1.0}) <
                  1e-5);
        }
    };

    const Vec p{0.11, 0.19, 0.41, 0.17, 0.12};
    Vec onehot(5, 0.0);
    onehot[2] = 1.0;
    const Vec weights{1.1, 10.0, 10.0, 2.0, 0.5};

    fd_check([&](const Vec& q) { return cross_entropy(onehot, q); },
             [&](const Vec& q) { return cross_entropy_grad(onehot, q); }, p);
    fd_check([&](const Vec& q) { return ce_label_smoothing(onehot, q, weights, 0.1); },
             [&](const Vec& q) { return ce_label_smoothing_grad(onehot, q, weights, 0.1); }, p);
    fd_check([&](const Vec& q) { return cdw_ce(2, q, 1.5); },
             [&](const Vec& q) { return cdw_ce_grad(2, q, 1.5); }, p);
    fd_check([&](const Vec& q) { return focal(onehot, q, 5.0); },
             [&](const Vec& q) { return focal_grad(onehot, q, 5.0); }, p);
    PersonalityLossConfig cfg;
    fd_check([&](const Vec& q) { return combined_personality_loss(2, q, cfg); },
             [&](const Vec& q) { return combined_personality_loss_grad(2, q, cfg); }, p);
}

TEST_CASE("asymmetric CE gradient matches finite differences on logits") {
    Rng rng(17);
    Mat logits(5, 2);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
    const Mat g = asymmetric_ce_grad(logits, 2, 0.7);
    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 2; ++c) {
            Mat z = logits;
            const real h = 1e-7;
            z(i, c) = logits(i, c) + h;
            const real lp = asymmetric_ce(z, 2, 0.7);
            z(i, c) = logits(i, c) - h;
            const real lm = asymmetric_ce(z, 2, 0.7);
            const real numeric = (lp - lm) / (2 * h);
            CHECK(std::fabs(numeric - g(i, c)) < 1e-6);
        }
    }
}

TEST_CASE("sigsoftmax backward matches finite differences") {
    Rng rng(19);
    Vec z(5);
    for (real& v : z) v = rng.normal();
    Vec dp(5);
    for (real& v : dp) v = rng.normal();

    const Vec probs = sigsoftmax(z);
    const Vec dz = sigsoftmax_backward(z, probs, dp);
    for (int i = 0; i < 5; ++i) {
        Vec zp = z;
        const real h = 1e-7;
        zp[i] = z[i] + h;
        const Vec pp = sigsoftmax(zp);
        zp[i] = z[i] - h;
        const Vec pm = sigsoftmax(zp);
        real numeric = 0.0;
        for (int k = 0; k < 5; ++k) numeric += dp[k] * (pp[k] - pm[k]) / (2 * h);
        CHECK(std::fabs(numeric - dz[i]) < 1e-6);
    }
}
