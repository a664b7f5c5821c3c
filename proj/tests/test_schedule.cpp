#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfa/schedule.hpp"

#include <cmath>

using namespace sfa;

TEST_CASE("cosine schedule endpoints and reference value") {
    const Schedule s = make_schedule(1000);
    CHECK(s.at(0) == 0.0);
    CHECK(s.at(1000) == 10.0); // cosine vanishes at the endpoint -> clamp
    // frozen from an independent 40-digit evaluation of
    // -1/2 log(cos(((k/T+offset)/(1+offset)) pi/2) / cos((offset/(1+offset)) pi/2))
    CHECK(s.at(500) == doctest::Approx(0.17638410761741666).epsilon(1e-12));
    CHECK(s.at(1) == doctest::Approx(1.0321269259710716e-05).epsilon(1e-10));
    CHECK(s.at(999) == doctest::Approx(3.2320317187676922).epsilon(1e-12));
}

TEST_CASE("cosine schedule is strictly increasing and finite") {
    const Schedule s = make_schedule(1000);
    for (int k = 0; k < 1000; ++k) {
        CHECK(s.at(k + 1) > s.at(k));
        CHECK(std::isfinite(s.at(k)));
    }
    CHECK(std::isfinite(s.at(1000)));
}

TEST_CASE("schedule rejects bad arguments") {
    const Schedule s = make_schedule(10);
    CHECK_THROWS_AS((void)cosine_time(-1, s), std::invalid_argument);
    CHECK_THROWS_AS((void)cosine_time(11, s), std::invalid_argument);
    CHECK_THROWS_AS((void)make_schedule(0), std::invalid_argument);
}

TEST_CASE("clamp keeps late times finite") {
    const Schedule s = make_schedule(1000, 0.008, 4.0);
    for (int k = 0; k <= 1000; ++k) CHECK(s.at(k) <= 4.0);
    CHECK(s.at(1000) == 4.0);
}

TEST_CASE("forward sample holds the corruption identity bitwise") {
    Rng rng(7, "test.forward");
    const Vec x0 = {1.5, -2.0, 0.25};
    const double t = 0.7;
    const ForwardSample fs = forward_sample(x0, t, rng);
    const double a = std::exp(-t);
    const double b = std::sqrt(-std::expm1(-2.0 * t));
    for (int i = 0; i < 3; ++i) CHECK(fs.xt[i] == x0[i] * a + b * fs.eps[i]);
}

TEST_CASE("forward sample at t=0 returns x0") {
    Rng rng(3, "test.t0");
    const Vec x0 = {0.5, -1.0};
    const ForwardSample fs = forward_sample(x0, 0.0, rng);
    CHECK(fs.xt[0] == x0[0]);
    CHECK(fs.xt[1] == x0[1]);
}

TEST_CASE("forward sample is reproducible per stream") {
    const Vec x0 = {1.0, 2.0, 3.0, 4.0};
    Rng a(42, "stream");
    Rng b(42, "stream");
    const ForwardSample fa = forward_sample(x0, 1.3, a);
    const ForwardSample fb = forward_sample(x0, 1.3, b);
    CHECK(fa.xt == fb.xt);
    Rng c(42, "other");
    const ForwardSample fc = forward_sample(x0, 1.3, c);
    CHECK(fa.xt != fc.xt);
}

TEST_CASE("forward marginals match OU transition statistics") {
    // Monte Carlo over 1e5 draws; tolerances sized to ~3 standard errors
    const int n = 100000;
    struct Case {
        double x0, t;
    };
    for (const Case c : {Case{0.0, 3.0}, Case{1.0, std::log(2.0)}, Case{2.0, 0.01},
                         Case{-1.0, 0.5}}) {
        Rng rng(11, "test.moments");
        const double mean_true = c.x0 * std::exp(-c.t);
        const double var_true = -std::expm1(-2.0 * c.t);
        double m = 0.0, m2 = 0.0;
        const Vec x0 = {c.x0};
        for (int i = 0; i < n; ++i) {
            const ForwardSample fs = forward_sample(x0, c.t, rng);
            m += fs.xt[0];
            m2 += fs.xt[0] * fs.xt[0];
        }
        m /= n;
        m2 = m2 / n - m * m;
        const double se_mean = std::sqrt(var_true / n);
        CHECK(std::abs(m - mean_true) < 3.5 * se_mean + 1e-12);
        CHECK(std::abs(m2 - var_true) < 0.02 + 3.5 * var_true * std::sqrt(2.0 / n));
    }
}

TEST_CASE("large-t marginal approaches the standard normal") {
    Rng rng(5, "test.stationary");
    const Vec x0 = {0.0, 0.0};
    double mean = 0.0, var = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const ForwardSample fs = forward_sample(x0, 8.0, rng);
        mean += fs.xt[0];
        var += fs.xt[0] * fs.xt[0];
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("conditional score closed-form cases") {
    SUBCASE("zero at the kernel mean") {
        const Vec x0 = {2.0, -3.0};
        const double t = 0.4;
        Vec xt(2);
        for (int i = 0; i < 2; ++i) xt[i] = x0[i] * std::exp(-t);
        const Vec s = conditional_score(xt, x0, t);
        CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("hand-evaluated point") {
        // x0=(1,0), xt=(1,1), t=ln2: -((1,1)-(0.5,0))/0.75 = (-2/3, -4/3)
        const Vec s = conditional_score({1.0, 1.0}, {1.0, 0.0}, std::log(2.0));
        CHECK(s[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
        CHECK(s[1] == doctest::Approx(-4.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("rejects degenerate kernel") {
        CHECK_THROWS_AS((void)conditional_score({1.0}, {1.0}, 0.0), std::domain_error);
    }
}

TEST_CASE("conditional score equals the transition log-density gradient") {
    // central differences of log N(xt | x0 e^{-t}, (1-e^{-2t}) I)
    Rng rng(23, "test.condscore");
    const int d = 4;
    auto log_kernel = [](const Vec& xt, const Vec& x0, double t) {
        const double a = std::exp(-t);
        const double v = -std::expm1(-2.0 * t);
        double s = 0.0;
        for (size_t i = 0; i < xt.size(); ++i) {
            const double z = xt[i] - x0[i] * a;
            s += z * z;
        }
        return -0.5 * s / v;
    };
    for (int rep = 0; rep < 10; ++rep) {
        Vec x0(d), xt(d);
        rng.fill_normal(x0.data(), d);
        rng.fill_normal(xt.data(), d);
        const double t = 0.05 + rep * 0.3;
        const Vec s = conditional_score(xt, x0, t);
        const double h = 1e-6;
        for (int i = 0; i < d; ++i) {
            Vec xp = xt, xm = xt;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (log_kernel(xp, x0, t) - log_kernel(xm, x0, t)) / (2.0 * h);
            CHECK(s[i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("conditional score recovers the scaled noise of a forward sample") {
    Rng rng(29, "test.eps");
    const Vec x0 = {0.3, -0.7, 1.1};
    const double t = 0.9;
    const ForwardSample fs = forward_sample(x0, t, rng);
    const Vec s = conditional_score(fs.xt, x0, t);
    const double b = std::sqrt(-std::expm1(-2.0 * t));
    for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(-fs.eps[i] / b).epsilon(1e-12));
}
