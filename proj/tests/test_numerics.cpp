#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "motper/numerics.hpp"

using namespace motper;

TEST_CASE("context invariants") {
    PrecisionContext ctx(256);
    CHECK(ctx.tolerance_exp() == 32 - 256);
    CHECK(ctx.tolerance() > Real(64, 0L));
    CHECK(ctx.tolerance() < Real(64, 1L).mul_2exp(-32));
    CHECK_THROWS_AS(PrecisionContext(32), Error);
    CHECK_THROWS_AS(PrecisionContext(64, 40), Error);  // tolerance 2^-24 too loose
    CHECK_THROWS_AS(PrecisionContext(128, 32, 1), Error);
}

TEST_CASE("principal log and sqrt") {
    const long p = 128;
    Complex m1(p, -1.0, 0.0);
    Complex l = log(m1);
    CHECK(abs(l.im - Real::pi(p)).exponent() < -120);
    Complex m1neg(Real(p, -1L), -Real(p, 0L));  // -1 - 0i still maps to +pi
    CHECK(log(m1neg).im > Real(p, 0L));
    Complex s = sqrt(Complex(p, -4.0, 0.0));
    CHECK(abs(s - Complex(p, 0.0, 2.0)).exponent() < -120);
    Complex z(p, 0.3, -1.7);
    Complex r = sqrt(z);
    CHECK(r.re.sign() >= 0);
    CHECK(abs(r * r - z).exponent() < -120);
    CHECK(abs(exp(log(z)) - z).exponent() < -120);
}

TEST_CASE("determinism") {
    PrecisionContext ctx(192);
    Complex a(ctx.bits(), 1.0, 0.25), b(ctx.bits(), 0.5, -0.75);
    Complex x = agm(a, b, ctx), y = agm(a, b, ctx);
    CHECK(x.re == y.re);
    CHECK(x.im == y.im);
}

TEST_CASE("agm") {
    PrecisionContext ctx(256);
    long p = ctx.bits();
    Complex x(p, 0.7, 0.2);
    CHECK(abs(agm(x, x, ctx) - x).exponent() < -250);

    // naive real iteration with long double as an independent oracle for the leading digits,
    // then the same recurrence at high precision
    long double a = 1.0L, b = 0.5L;
    for (int i = 0; i < 10; ++i) {
        long double an = (a + b) / 2, bn = std::sqrt(a * b);
        a = an;
        b = bn;
    }
    Complex m = agm(Complex(p, 1.0), Complex(p, 0.5), ctx);
    CHECK(std::abs(m.re.to_double() - static_cast<double>(a)) < 1e-15);
    Real ra(p, 1L), rb(p, 0.5);
    for (int i = 0; i < 12; ++i) {
        Real an = (ra + rb).div_si(2), bn = sqrt(ra * rb);
        ra = an;
        rb = bn;
    }
    // |diff| < 1e-60 ~ 2^-199
    CHECK(abs(m.re - ra).exponent() < -199);

    Complex c(p, 0.3, 1.1), d(p, -0.2, 0.4);
    CHECK(abs(agm(c, d, ctx) - agm(d, c, ctx)).exponent() < -250);
}

TEST_CASE("certify_zero") {
    PrecisionContext ctx(256);
    long p = ctx.bits();
    Real one(64, 1L);
    Complex zero(p);
    auto r0 = certify_zero(zero, one, ctx, [](const PrecisionContext& c) { return Scaled{Complex(c.bits()), Real(64, 1L)}; });
    CHECK(r0.status == ZeroStatus::Zero);

    Complex small(Real(p, 1L).mul_2exp(-10), Real(p, 0L));
    auto r1 = certify_zero(small, one, ctx, nullptr);
    CHECK(r1.status == ZeroStatus::NonZero);
    CHECK(r1.lower_bound.exponent() == -10);

    // x = 1 - (sqrt 2)^2 / 2: zero at every precision
    auto eval = [](const PrecisionContext& c) {
        Real s = sqrt(Real(c.bits(), 2L));
        Complex v(Real(c.bits(), 1L) - s * s / Real(c.bits(), 2L));
        return Scaled{v, Real(64, 1L)};
    };
    CHECK(certify_zero(eval, ctx).status == ZeroStatus::Zero);

    // 2^-300: below working tolerance, but visible at doubled precision
    auto tiny = [](const PrecisionContext& c) {
        return Scaled{Complex(Real(c.bits(), 1L).mul_2exp(-300)), Real(64, 1L)};
    };
    CHECK(certify_zero(tiny, ctx).status == ZeroStatus::Inconclusive);

    // monotone refinement
    CHECK(certify_zero(eval, PrecisionContext(512)).status == ZeroStatus::Zero);
}
