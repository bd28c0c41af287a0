#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pdd/error.hpp"
#include "pdd/nn.hpp"

namespace pdd {
namespace {

// Straight-line reference: forward + mean masked cross-entropy, no caching.
double reference_masked_loss(const ParameterSet& p, const Matrix& x, const std::vector<int>& y,
                             const std::vector<std::size_t>& rows) {
    double total = 0.0;
    for (std::size_t i : rows) {
        std::vector<double> a(x.row(i).begin(), x.row(i).end());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const Layer& layer = p.layers[l];
            std::vector<double> z(layer.out());
            for (std::size_t o = 0; o < layer.out(); ++o) {
                z[o] = layer.bias[o];
                for (std::size_t j = 0; j < layer.in(); ++j) z[o] += layer.weight(o, j) * a[j];
                if (l + 1 < p.layers.size()) z[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
            a = z;
        }
        double m = a[0];
        for (double v : a) m = std::max(m, v);
        double s = 0.0;
        for (double v : a) s += std::exp(v - m);
        total += -(a[static_cast<std::size_t>(y[i])] - m - std::log(s));
    }
    return total / static_cast<double>(rows.size());
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.values()) v = d(rng);
    return m;
}

ParameterSet identity_net() {
    ParameterSet p;
    Layer l{Matrix(2, 2), {0.0, 0.0}};
    l.weight(0, 0) = 1.0;
    l.weight(1, 1) = 1.0;
    p.layers.push_back(l);
    return p;
}

TEST(Forward, IdentityLayerClosedFormSoftmax) {
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    const auto fwd = forward(identity_net(), x);
    EXPECT_DOUBLE_EQ(fwd.logits(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(fwd.logits(0, 1), 0.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(fwd.probabilities(0, 0), e / (e + 1.0), 1e-15);
    EXPECT_NEAR(fwd.probabilities(0, 1), 1.0 / (e + 1.0), 1e-15);
    EXPECT_NEAR(fwd.probabilities(0, 0), 0.7311, 1e-4);
}

TEST(Forward, ZeroLogitsGiveUniform) {
    Matrix z(3, 7, 0.0);
    const Matrix p = softmax(z);
    for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
}

TEST(Forward, RowsSumToOne) {
    std::mt19937_64 rng(5);
    const std::vector<std::size_t> widths{6, 16, 8, 5};
    const auto p = ParameterSet::init(widths, 9);
    const auto fwd = forward(p, random_matrix(4, 6, rng));
    for (std::size_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (double v : fwd.probabilities.row(r)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Forward, SoftmaxStableForExtremeLogits) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-700.0, 700.0);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix z(1, 10);
        for (double& v : z.values()) v = d(rng);
        const Matrix p = softmax(z);
        double s = 0.0;
        for (double v : p.values()) s += v;
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Forward, WidthMismatchIsConfigError) {
    EXPECT_THROW(forward(identity_net(), Matrix(1, 3)), ConfigError);
}

TEST(Init, GlorotBoundsAndChaining) {
    const std::vector<std::size_t> widths{10, 30, 20, 4};
    const auto p = ParameterSet::init(widths, 1);
    ASSERT_EQ(p.layers.size(), 3u);
    EXPECT_NO_THROW(p.check());
    for (const auto& l : p.layers) {
        const double lim = std::sqrt(6.0 / static_cast<double>(l.in() + l.out()));
        for (double w : l.weight.values()) EXPECT_LE(std::fabs(w), lim);
        for (double b : l.bias) EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(p, ParameterSet::init(widths, 1));
    EXPECT_NE(p, ParameterSet::init(widths, 2));
}

TEST(Init, BrokenChainRejected) {
    ParameterSet p;
    p.layers.push_back({Matrix(3, 2), std::vector<double>(3)});
    p.layers.push_back({Matrix(2, 4), std::vector<double>(2)});
    EXPECT_THROW(p.check(), ConfigError);
}

TEST(Loss, UniformProbabilitiesGiveLogC) {
    ParameterSet p;
    p.layers.push_back({Matrix(5, 3), std::vector<double>(5, 0.0)});
    const auto fwd = forward(p, Matrix(4, 3, 0.3));
    const std::vector<int> labels{0, 3, 4, 1};
    const auto lg = loss_and_grad(p, fwd, labels, BatchMask{{2}, MaskOrigin::confidence});
    EXPECT_NEAR(lg.loss, std::log(5.0), 1e-12);
}

TEST(Loss, FullMaskEqualsUnmaskedMean) {
    std::mt19937_64 rng(3);
    const std::vector<std::size_t> widths{4, 6, 3};
    const auto p = ParameterSet::init(widths, 4);
    const Matrix x = random_matrix(5, 4, rng);
    const std::vector<int> y{0, 1, 2, 1, 0};
    const auto fwd = forward(p, x);
    const auto per_row = per_sample_loss(fwd, y);
    double mean = 0.0;
    for (double v : per_row) mean += v;
    mean /= 5.0;
    EXPECT_NEAR(loss_and_grad(p, fwd, y, full_mask(5)).loss, mean, 1e-12);
}

TEST(Loss, MaskedLossIsMeanOfMaskedRows) {
    std::mt19937_64 rng(8);
    const std::vector<std::size_t> widths{5, 7, 4};
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = ParameterSet::init(widths, static_cast<std::uint64_t>(trial));
        const Matrix x = random_matrix(9, 5, rng);
        std::vector<int> y(9);
        for (int& v : y) v = static_cast<int>(rng() % 4);
        BatchMask mask;
        for (std::size_t i = 0; i < 9; ++i)
            if (rng() % 2) mask.indices.push_back(i);
        if (mask.empty()) mask.indices.push_back(rng() % 9);
        const auto fwd = forward(p, x);
        const auto per_row = per_sample_loss(fwd, y);
        double expect = 0.0;
        for (std::size_t i : mask.indices) expect += per_row[i];
        expect /= static_cast<double>(mask.size());
        const double got = loss_and_grad(p, fwd, y, mask).loss;
        EXPECT_NEAR(got, expect, 1e-12);
        EXPECT_NEAR(got, reference_masked_loss(p, x, y, mask.indices), 1e-12);
    }
}

TEST(Loss, EmptyMaskIsContractViolation) {
    const auto fwd = forward(identity_net(), Matrix(1, 2));
    const std::vector<int> y{0};
    EXPECT_THROW(loss_and_grad(identity_net(), fwd, y, BatchMask{}), ContractViolation);
    EXPECT_THROW(loss_and_grad(identity_net(), fwd, y, BatchMask{{1}, MaskOrigin::full}), ContractViolation);
}

// Central finite differences against the analytic gradient.
double max_relative_gradient_error(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> widths{4, 6, 5, 3};
    ParameterSet p = ParameterSet::init(widths, seed);
    for (auto& l : p.layers)
        for (double& b : l.bias) b = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    const Matrix x = random_matrix(7, 4, rng);
    std::vector<int> y(7);
    for (int& v : y) v = static_cast<int>(rng() % 3);
    BatchMask mask;
    for (std::size_t i = 0; i < 7; ++i)
        if (rng() % 3) mask.indices.push_back(i);
    if (mask.empty()) mask.indices.push_back(0);

    const auto analytic = loss_and_grad(p, forward(p, x), y, mask).grads;
    constexpr double h = 1e-5;
    double worst = 0.0;
    auto probe = [&](double& param, double grad) {
        const double saved = param;
        param = saved + h;
        const double up = reference_masked_loss(p, x, y, mask.indices);
        param = saved - h;
        const double down = reference_masked_loss(p, x, y, mask.indices);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::fabs(grad), std::fabs(numeric), 1e-6});
        worst = std::max(worst, std::fabs(grad - numeric) / denom);
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto w = p.layers[l].weight.values();
        auto gw = analytic.layers[l].weight.values();
        for (std::size_t i = 0; i < w.size(); ++i) probe(w[i], gw[i]);
        for (std::size_t i = 0; i < p.layers[l].bias.size(); ++i)
            probe(p.layers[l].bias[i], analytic.layers[l].bias[i]);
    }
    return worst;
}

TEST(Gradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) EXPECT_LT(max_relative_gradient_error(seed), 1e-4) << seed;
}

TEST(Gradient, UnmaskedRowsContributeNothing) {
    std::mt19937_64 rng(21);
    const std::vector<std::size_t> widths{3, 4, 2};
    const auto p = ParameterSet::init(widths, 2);
    Matrix x = random_matrix(4, 3, rng);
    const std::vector<int> y{0, 1, 1, 0};
    const BatchMask mask{{0, 2}, MaskOrigin::confidence};
    const auto g1 = loss_and_grad(p, forward(p, x), y, mask).grads;
    for (double& v : x.row(1)) v = 100.0;
    for (double& v : x.row(3)) v = -42.0;
    const auto g2 = loss_and_grad(p, forward(p, x), y, mask).grads;
    EXPECT_EQ(g1, g2);
}

TEST(Optimizer, PlainSgdStep) {
    ParameterSet p = identity_net();
    ParameterSet g = p.zeros_like();
    g.layers[0].weight(0, 0) = 0.5;
    g.layers[0].bias[1] = -2.0;
    OptimizerSettings s;
    s.kind = OptimizerKind::sgd_momentum;
    s.momentum = 0.0;
    s.learning_rate = 0.1;
    s.weight_decay = 0.0;
    Optimizer opt(s, p);
    opt.step(p, g);
    EXPECT_DOUBLE_EQ(p.layers[0].weight(0, 0), 1.0 - 0.1 * 0.5);
    EXPECT_DOUBLE_EQ(p.layers[0].bias[1], 0.2);
    EXPECT_DOUBLE_EQ(p.layers[0].weight(1, 1), 1.0);
    EXPECT_EQ(opt.step_count(), 1u);
}

TEST(Optimizer, MomentumAccumulates) {
    ParameterSet p;
    p.layers.push_back({Matrix(1, 1, 1.0), {0.0}});
    ParameterSet g = p.zeros_like();
    g.layers[0].weight(0, 0) = 1.0;
    OptimizerSettings s;
    s.kind = OptimizerKind::sgd_momentum;
    s.momentum = 0.9;
    s.learning_rate = 0.1;
    s.weight_decay = 0.0;
    Optimizer opt(s, p);
    opt.step(p, g);  // buf = 1
    opt.step(p, g);  // buf = 1.9
    EXPECT_NEAR(p.layers[0].weight(0, 0), 1.0 - 0.1 - 0.19, 1e-15);
}

TEST(Optimizer, ZeroGradientIsFixedPoint) {
    for (auto kind : {OptimizerKind::sgd_momentum, OptimizerKind::adamw}) {
        const std::vector<std::size_t> widths{3, 4, 2};
        ParameterSet p = ParameterSet::init(widths, 3);
        const ParameterSet before = p;
        OptimizerSettings s;
        s.kind = kind;
        s.weight_decay = 0.0;
        Optimizer opt(s, p);
        for (int i = 0; i < 3; ++i) opt.step(p, p.zeros_like());
        EXPECT_EQ(p, before);
    }
}

TEST(Optimizer, AdamwFirstStepHandComputed) {
    ParameterSet p;
    p.layers.push_back({Matrix(1, 2), {0.0}});
    p.layers[0].weight(0, 0) = 0.5;
    p.layers[0].weight(0, 1) = -0.3;
    ParameterSet g = p.zeros_like();
    g.layers[0].weight(0, 0) = 0.2;
    g.layers[0].weight(0, 1) = -4.0;
    OptimizerSettings s;
    s.kind = OptimizerKind::adamw;
    s.learning_rate = 0.1;
    s.weight_decay = 0.01;
    Optimizer opt(s, p);
    opt.step(p, g);
    // m = 0.1 g, v = 0.001 g^2; bias corrections give m_hat = g, v_hat = g^2,
    // so the step is lr * g / (|g| + eps) after the decoupled decay.
    EXPECT_NEAR(p.layers[0].weight(0, 0), 0.5 * (1.0 - 0.001) - 0.1 * 0.2 / (0.2 + 1e-8), 1e-15);
    EXPECT_NEAR(p.layers[0].weight(0, 1), -0.3 * (1.0 - 0.001) + 0.1 * 4.0 / (4.0 + 1e-8), 1e-15);
    EXPECT_NEAR(p.layers[0].weight(0, 0), 0.3995, 1e-7);
    EXPECT_EQ(p.layers[0].bias[0], 0.0);
}

TEST(Optimizer, LearningRateStepDecay) {
    OptimizerSettings s;
    s.learning_rate = 0.01;
    s.decay_factor = 0.97;
    Optimizer opt(s, identity_net());
    for (int e = 0; e < 5; ++e) opt.end_epoch();
    EXPECT_NEAR(opt.learning_rate(), 0.01 * std::pow(0.97, 5), 1e-15);
}

TEST(Optimizer, NonFiniteGradientAborts) {
    ParameterSet p = identity_net();
    ParameterSet g = p.zeros_like();
    g.layers[0].bias[0] = std::nan("");
    Optimizer opt(OptimizerSettings{}, p);
    EXPECT_THROW(opt.step(p, g), NumericalError);
    EXPECT_EQ(p, identity_net());
}

TEST(Optimizer, ShapeMismatchRejected) {
    ParameterSet p = identity_net();
    const std::vector<std::size_t> widths{3, 2};
    Optimizer opt(OptimizerSettings{}, p);
    EXPECT_THROW(opt.step(p, ParameterSet::init(widths, 1)), ContractViolation);
}

TEST(Determinism, IdenticalSequencesAreBitwiseEqual) {
    auto run = [] {
        std::mt19937_64 rng(99);
        const std::vector<std::size_t> widths{5, 8, 4};
        ParameterSet p = ParameterSet::init(widths, 12);
        Optimizer opt(OptimizerSettings{}, p);
        for (int step = 0; step < 20; ++step) {
            const Matrix x = random_matrix(6, 5, rng);
            std::vector<int> y(6);
            for (int& v : y) v = static_cast<int>(rng() % 4);
            const auto lg = loss_and_grad(p, forward(p, x), y, full_mask(6));
            opt.step(p, lg.grads);
        }
        return p;
    };
    EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace pdd
