#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pdd/error.hpp"
#include "pdd/policy.hpp"
#include "test_util.hpp"

namespace pdd {
namespace {

// I_x(a, b) for integer a, b is P(Binomial(a+b-1, x) >= a).
double binomial_tail_oracle(double x, int a, int b) {
    const int n = a + b - 1;
    double sum = 0.0;
    for (int j = a; j <= n; ++j) {
        const double log_choose = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
        sum += std::exp(log_choose + j * std::log(x) + (n - j) * std::log1p(-x));
    }
    return sum;
}

// Composite Simpson rule over the Beta density.
double simpson_oracle(double x, double a, double b) {
    const int steps = 20000;
    const double h = x / steps;
    const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    auto density = [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp(log_norm + (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t));
    };
    double sum = density(0.0) + density(x);
    for (int i = 1; i < steps; ++i) sum += density(i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

TEST(SrdFraction, Examples) {
    EXPECT_DOUBLE_EQ(srd_fraction(0.95, 1, 30, 1), 1.0);
    EXPECT_NEAR(srd_fraction(0.95, 3, 30, 1), 0.9025, 1e-15);
    EXPECT_DOUBLE_EQ(srd_fraction(0.5, 30, 30, 1), 1.0);
    EXPECT_DOUBLE_EQ(srd_fraction(0.5, 28, 30, 3), 1.0);
    EXPECT_THROW(srd_fraction(0.5, 0, 30, 1), ContractViolation);
    EXPECT_THROW(srd_fraction(0.5, 31, 30, 1), ContractViolation);
}

TEST(SrdFraction, AgreesWithEpochLoopScan) {
    for (double gamma : {0.5, 0.9, 0.95, 0.98}) {
        const std::size_t epochs = 40;
        const std::size_t rev_start = epochs - 1;  // dropout while epoch <= E_rev
        double r = 1.0;
        for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
            const double expected = epoch <= rev_start ? r : 1.0;
            EXPECT_NEAR(srd_fraction(gamma, epoch, epochs, 1), expected, 1e-13) << gamma << " " << epoch;
            r *= gamma;
        }
    }
}

TEST(SrdClosedForm, GeometricSum) {
    // 1 + sum_{e=1}^{29} 0.95^(e-1)
    EXPECT_NEAR(srd_effective_epochs_closed_form(0.95, 30, 1), 1.0 + (1.0 - std::pow(0.95, 29)) / 0.05, 1e-12);
    EXPECT_NEAR(srd_effective_epochs_closed_form(0.98, 800, 0), 49.95, 0.6);
    EXPECT_NEAR(srd_effective_epochs_closed_form(1.0 - 1e-12, 25, 1), 25.0, 1e-6);
    EXPECT_DOUBLE_EQ(srd_effective_epochs_closed_form(1.0, 25, 1), 25.0);
}

TEST(DecayCount, Examples) {
    for (auto kind : {DecayKind::power_law, DecayKind::exponential, DecayKind::logarithmic,
                      DecayKind::inverse_linear, DecayKind::sigmoid_complement}) {
        EXPECT_EQ(decay_count(kind, 0.7, 1, 50000, 200), 50000u) << to_string(kind);
        EXPECT_EQ(decay_count(kind, 0.7, 200, 50000, 200), 50000u) << to_string(kind);
    }
    EXPECT_EQ(decay_count(DecayKind::power_law, 1.0, 2, 50000, 200), 25000u);
    EXPECT_EQ(decay_count(DecayKind::power_law, 1.0, 3, 100, 4), 33u);
    // exp(-a(x-1)) normalization.
    EXPECT_EQ(decay_count(DecayKind::exponential, 0.5, 3, 10000, 10), 3679u);
    EXPECT_EQ(decay_count(DecayKind::inverse_linear, 1.0, 3, 1000, 10), 500u);
}

TEST(DecayCount, LogarithmicDomainError) {
    EXPECT_THROW(decay_value(DecayKind::logarithmic, 0.5, 0.5), ConfigError);
    EXPECT_NO_THROW(decay_value(DecayKind::logarithmic, 0.5, 1.0));
}

TEST(DecayCount, NonincreasingForAllKinds) {
    const std::size_t n = 50000;
    const std::size_t epochs = 200;
    for (auto kind : {DecayKind::power_law, DecayKind::exponential, DecayKind::logarithmic,
                      DecayKind::inverse_linear, DecayKind::sigmoid_complement}) {
        for (double alpha : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
            std::size_t prev = decay_count(kind, alpha, 1, n, epochs);
            const double h_prev0 = decay_value(kind, alpha, 1.0);
            double h_prev = h_prev0;
            for (std::size_t x = 2; x < epochs; ++x) {
                const std::size_t cur = decay_count(kind, alpha, x, n, epochs);
                EXPECT_LE(cur, prev) << to_string(kind) << " alpha=" << alpha << " x=" << x;
                const double h = decay_value(kind, alpha, static_cast<double>(x));
                // Strict until the value underflows.
                if ((kind == DecayKind::sigmoid_complement || kind == DecayKind::inverse_linear) && h_prev > 1e-300)
                    EXPECT_LT(h, h_prev) << to_string(kind);
                EXPECT_LE(h, h_prev) << to_string(kind);
                prev = cur;
                h_prev = h;
            }
        }
    }
}

TEST(AnalyticSchedule, RevisionWindow) {
    const auto rec = analytic_schedule(DecayKind::power_law, 1.0, 100, 4, 1);
    ASSERT_EQ(rec.entries.size(), 4u);
    EXPECT_EQ(rec.entries[0].retained, 100u);
    EXPECT_EQ(rec.entries[1].retained, 50u);
    EXPECT_EQ(rec.entries[2].retained, 33u);
    EXPECT_EQ(rec.entries[3].retained, 100u);
    EXPECT_NEAR(rec.effective_epochs(), 2.83, 1e-12);
    const auto two = analytic_schedule(DecayKind::power_law, 1.0, 100, 5, 2);
    EXPECT_EQ(two.entries[3].retained, 100u);
    EXPECT_EQ(two.entries[2].retained, 33u);
}

TEST(BetaCdf, Examples) {
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) EXPECT_NEAR(beta_cdf(x, 1.0, 1.0), x, 1e-14);
    for (double a : {0.3, 1.0, 2.5, 7.0, 40.0}) EXPECT_NEAR(beta_cdf(0.5, a, a), 0.5, 1e-12);
    EXPECT_NEAR(beta_cdf(0.3, 2.0, 5.0), 0.579825, 1e-6);
    EXPECT_NEAR(beta_cdf(0.3, 2.0, 5.0), 1.0 - std::pow(0.7, 6) - 6 * 0.3 * std::pow(0.7, 5), 1e-14);
}

TEST(BetaCdf, BinomialOracleIntegerShapes) {
    for (int a = 1; a <= 8; ++a)
        for (int b = 1; b <= 8; ++b)
            for (int k = 1; k <= 19; ++k) {
                const double x = 0.05 * k;
                EXPECT_NEAR(beta_cdf(x, a, b), binomial_tail_oracle(x, a, b), 1e-9) << a << "," << b << "," << x;
            }
}

TEST(BetaCdf, SimpsonOracleFractionalShapes) {
    for (double a : {2.5, 3.3, 4.7, 7.1})
        for (double b : {2.2, 3.9, 5.5})
            for (double x : {0.1, 0.35, 0.6, 0.85})
                EXPECT_NEAR(beta_cdf(x, a, b), simpson_oracle(x, a, b), 1e-8) << a << "," << b << "," << x;
}

TEST(BetaCdf, SymmetryAndPreconditions) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double x = u(rng);
        const double a = 0.2 + 20.0 * u(rng);
        const double b = 0.2 + 20.0 * u(rng);
        EXPECT_NEAR(beta_cdf(x, a, b), 1.0 - beta_cdf(1.0 - x, b, a), 1e-12);
    }
    EXPECT_THROW(beta_cdf(1.5, 1.0, 1.0), ContractViolation);
    EXPECT_THROW(beta_cdf(0.5, 0.0, 1.0), ContractViolation);
}

TEST(SmrdCountModel, Examples) {
    EXPECT_EQ(smrd_count_model(1.0, 2.0, 5.0, 50000), 50000u);
    EXPECT_EQ(smrd_count_model(0.0, 2.0, 5.0, 50000), 0u);
    EXPECT_EQ(smrd_count_model(0.3, 2.0, 5.0, 50000), 28991u);
}

ScheduleRecord three_epochs() { return {100, 3, {{1, 100}, {2, 40}, {3, 100}}}; }

TEST(ScheduleFile, RoundTrip) {
    const auto dir = test::scratch_dir();
    write_schedule(three_epochs(), dir / "s.csv");
    EXPECT_EQ(test::slurp(dir / "s.csv"), "epoch,retained\n1,100\n2,40\n3,100\n");
    EXPECT_EQ(read_schedule(dir / "s.csv"), three_epochs());
    EXPECT_EQ(read_schedule(dir / "s.csv", 100), three_epochs());
}

TEST(ScheduleFile, RoundTripRandomRecords) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 100000;
        const std::size_t e = 2 + rng() % 50;
        ScheduleRecord rec{n, e, {}};
        for (std::size_t i = 1; i < e; ++i) rec.entries.push_back({i, rng() % (n + 1)});
        rec.entries.push_back({e, n});
        EXPECT_EQ(parse_schedule(format_schedule(rec), n), rec);
        EXPECT_EQ(format_schedule(parse_schedule(format_schedule(rec), n)), format_schedule(rec));
    }
}

TEST(ScheduleFile, RetainedAboveNRejected) {
    try {
        parse_schedule("epoch,retained\n1,100\n2,140\n3,100\n", 100);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    ScheduleRecord bad = three_epochs();
    bad.entries[1].retained = 101;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ScheduleFile, MissingRevisionEpochRejected) {
    try {
        parse_schedule("epoch,retained\n1,100\n2,40\n3,50\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("missing revision epoch"), std::string::npos);
    }
    ScheduleRecord bad = three_epochs();
    bad.entries[2].retained = 99;
    try {
        bad.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("missing revision epoch"), std::string::npos);
    }
}

TEST(ScheduleFile, MalformedLinesReportLineNumbers) {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_schedule(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of("epoch;retained\n1,1\n"), 1u);
    EXPECT_EQ(line_of("epoch,retained\n1,5\n3,5\n"), 3u);
    EXPECT_EQ(line_of("epoch,retained\n1,5\n2,x\n"), 3u);
    EXPECT_EQ(line_of("epoch,retained\n1,5,6\n"), 2u);
    EXPECT_EQ(line_of("epoch,retained\n1,-5\n"), 2u);
    EXPECT_EQ(line_of("epoch,retained\n1,5\n\n2,5\n"), 3u);
    EXPECT_EQ(line_of("epoch,retained\n"), 1u);
    EXPECT_EQ(line_of("epoch,retained\n1,5\n2,5"), 0u);  // final newline optional
}

TEST(PolicyValidation, FieldsMatchVariant) {
    DropoutPolicy p;
    p.epochs = 10;
    p.variant = Variant::dbpd;
    EXPECT_THROW(p.validate(), ConfigError);  // tau missing
    p.tau = 0.3;
    EXPECT_NO_THROW(p.validate());
    p.gamma = 0.9;
    EXPECT_THROW(p.validate(), ConfigError);  // foreign field
    p.gamma.reset();
    p.loss_threshold = 0.05;
    EXPECT_THROW(p.validate(), ConfigError);  // both tau and theta
    p.tau.reset();
    EXPECT_NO_THROW(p.validate());

    DropoutPolicy s;
    s.variant = Variant::srd;
    s.epochs = 10;
    s.gamma = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s.gamma = 1.0;
    EXPECT_NO_THROW(s.validate());
    s.revision_epochs = 10;
    EXPECT_THROW(s.validate(), ConfigError);

    DropoutPolicy a;
    a.variant = Variant::analytic;
    a.epochs = 10;
    a.decay = DecayKind::exponential;
    a.alpha = -1.0;
    EXPECT_THROW(a.validate(), ConfigError);

    DropoutPolicy r;
    r.variant = Variant::smrd_replay;
    r.epochs = 4;
    r.replay = three_epochs();
    EXPECT_THROW(r.validate(), ConfigError);  // epoch count mismatch
    r.epochs = 3;
    EXPECT_NO_THROW(r.validate());
}

TEST(PolicyNames, ParseRoundTrip) {
    for (auto v : {Variant::baseline, Variant::dbpd, Variant::srd, Variant::smrd_inline, Variant::smrd_replay,
                   Variant::analytic})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_EQ(parse_decay_kind("sigmoid-complement"), DecayKind::sigmoid_complement);
    EXPECT_THROW(parse_variant("smrd"), ConfigError);
}

}  // namespace
}  // namespace pdd
