#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpfr.h>

#include "fixtures.hpp"
#include "motper/relations.hpp"

using namespace motper;
using fx::tiny;

static const PrecisionContext ctx(256);
static const long TOL = -200;

TEST_CASE("square lattice from (4, 0)") {
    auto L = fx::square().lattice(ctx);
    Complex t = L->tau();
    CHECK(tiny(t + Complex::i(L->bits), TOL));  // tau = -i in this orientation
    // lemniscate constant Gamma(1/4)^2 / (2 sqrt(2 pi)) from MPFR's gamma
    long b = L->bits;
    Real g(b);
    mpfr_gamma(g.raw(), Real(b, 0.25).raw(), MPFR_RNDN);
    Real varpi = g * g / (sqrt(Real::pi(b).mul_si(2)).mul_si(2));
    CHECK(abs(abs(L->omega1) - varpi).exponent() < TOL);
    CHECK(abs(abs(L->omega2) - varpi).exponent() < TOL);
    CHECK(tiny(L->g3, TOL));
    CHECK(tiny(L->g2 - Complex(b, 4.0), TOL));
}

TEST_CASE("hexagonal lattice from (0, 4)") {
    auto L = fx::hexagonal().lattice(ctx);
    Complex t = L->tau();
    long b = L->bits;
    // tau = e^{-i pi/3}: tau^2 - tau + 1 = 0
    CHECK(tiny(t * t - t + Complex(b, 1.0), TOL));
    CHECK(t.re.to_double() == doctest::Approx(0.5));
    CHECK(tiny(L->g2, TOL));
}

TEST_CASE("invariants round trip and Legendre") {
    for (auto c : {fx::square(), fx::hexagonal(), fx::cm7(), fx::noncm(), fx::generic_lattice()}) {
        auto L = c.lattice(ctx);
        auto [g2, g3] = invariants_from_lattice(L->omega1, L->omega2, ctx);
        Real s = max(abs(g2), abs(g3));
        CHECK(tiny(g2 - L->g2, TOL, s));
        CHECK(tiny(g3 - L->g3, TOL, s));
        CHECK(L->tau().im.sign() < 0);
        Complex leg = L->omega1 * L->eta2 - L->omega2 * L->eta1 - L->two_pi_i();
        CHECK(tiny(leg, TOL, abs(L->omega1 * L->eta2)));
        // eta_i = 2 zeta(omega_i / 2)
        CHECK(tiny(wp_zeta(L->omega1.div_si(2), *L, ctx).mul_si(2) - L->eta1, TOL, abs(L->eta1)));
        CHECK(tiny(wp_zeta(L->omega2.div_si(2), *L, ctx).mul_si(2) - L->eta2, TOL, abs(L->eta2)));
    }
}

TEST_CASE("singular and degenerate inputs") {
    CHECK_THROWS_AS(periods_from_invariants(Complex(288, 3.0), Complex(288, 1.0), ctx), Error);  // 27 = 27
    try {
        periods_from_invariants(Complex(288, 3.0), Complex(288, 1.0), ctx);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularCurve);
    }
    try {
        lattice_from_periods(Complex(288, 1.0), Complex(288, 2.0), ctx);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateLattice);
    }
}

TEST_CASE("Weierstrass functions: differential equation, parity, derivatives") {
    std::mt19937_64 rng(7);
    for (auto c : {fx::square(), fx::cm7(), fx::noncm(), fx::generic_lattice()}) {
        auto L = c.lattice(ctx);
        long b = L->bits;
        for (int k = 0; k < 4; ++k) {
            // also far from the fundamental cell
            Complex z = fx::random_point(*L, rng) + L->omega1.mul_si(3 * k) - L->omega2.mul_si(2 * k);
            auto w = weierstrass(z, *L, ctx);
            Complex de = w.p_prime * w.p_prime - w.p * w.p * w.p.mul_si(4) + L->g2 * w.p + L->g3;
            CHECK(tiny(de, TOL, abs(w.p * w.p * w.p.mul_si(4))));
            auto wm = weierstrass(-z, *L, ctx);
            CHECK(tiny(wm.sigma + w.sigma, TOL, abs(w.sigma)));
            CHECK(tiny(wm.p - w.p, TOL, abs(w.p)));
            // zeta(z + omega_i) - zeta(z) = eta_i
            CHECK(tiny(wp_zeta(z + L->omega1, *L, ctx) - w.zeta - L->eta1, TOL, abs(w.zeta)));
            CHECK(tiny(wp_zeta(z + L->omega2, *L, ctx) - w.zeta - L->eta2, TOL, abs(w.zeta)));
            // central differences: zeta' = -p, sigma'/sigma = zeta
            Real h = Real(b, 1L).mul_2exp(-90);
            Complex hz(h, Real(b, 0L));
            auto wp_ = weierstrass(z + hz, *L, ctx), wm_ = weierstrass(z - hz, *L, ctx);
            Complex dzeta = (wp_.zeta - wm_.zeta) / h.mul_si(2);
            CHECK(tiny(dzeta + w.p, -150, abs(w.p)));
            Complex dsig = (wp_.sigma - wm_.sigma) / h.mul_si(2);
            CHECK(tiny(dsig / w.sigma - w.zeta, -150, abs(w.zeta)));
        }
    }
}

TEST_CASE("p at half periods are roots of the cubic; poles") {
    auto L = fx::noncm().lattice(ctx);
    Complex e1 = weierstrass(L->omega1.div_si(2), *L, ctx).p;
    CHECK(tiny(e1 * e1 * e1.mul_si(4) - L->g2 * e1 - L->g3, TOL, abs(L->g2 * e1)));
    CHECK(tiny(wp_zeta(L->omega1.div_si(2), *L, ctx) - L->eta1.div_si(2), TOL, abs(L->eta1)));
    try {
        weierstrass(L->omega1 + L->omega2, *L, ctx);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoleAtLatticePoint);
    }
    CHECK(wp_sigma(L->omega1.mul_si(2), *L, ctx).is_zero());
}

TEST_CASE("Serre's function identities") {
    std::mt19937_64 rng(11);
    for (auto c : {fx::square(), fx::noncm(), fx::generic_lattice()}) {
        auto L = c.lattice(ctx);
        for (int k = 0; k < 3; ++k) {
            Complex q = fx::random_point(*L, rng), z = fx::random_point(*L, rng), z2 = fx::random_point(*L, rng);
            Complex f = serre_f(q, z, *L, ctx);
            Complex zq = wp_zeta(q, *L, ctx);
            for (int i = 1; i <= 2; ++i) {
                const Complex& om = i == 1 ? L->omega1 : L->omega2;
                const Complex& et = i == 1 ? L->eta1 : L->eta2;
                Complex shifted = serre_f(q, z + om, *L, ctx);
                Complex expect = f * exp(et * q - om * zq);
                CHECK(tiny(shifted - expect, TOL, abs(expect)));
            }
            // f_q(p)/f_p(q) = e^{zeta(p) q - zeta(q) p}
            Complex fp = serre_f(z, q, *L, ctx);
            Complex zz = wp_zeta(z, *L, ctx);
            CHECK(tiny(f / fp - exp(zz * q - zq * z), TOL, abs(f / fp)));
            // cocycle
            auto s = [&](const Complex& x) { return wp_sigma(x, *L, ctx); };
            Complex lhs = serre_f(q, z + z2, *L, ctx) / (f * serre_f(q, z2, *L, ctx));
            Complex rhs = s(q + z + z2) * s(q) * s(z) * s(z2) / (s(q + z) * s(q + z2) * s(z + z2));
            CHECK(tiny(lhs - rhs, TOL, abs(rhs)));
        }
    }
}

TEST_CASE("elliptic logarithm") {
    std::mt19937_64 rng(3);
    for (auto c : {fx::square(), fx::hexagonal(), fx::cm7(), fx::noncm()}) {
        auto L = c.lattice(ctx);
        for (int k = 0; k < 4; ++k) {
            Complex z = fx::random_point(*L, rng);
            auto w = weierstrass(z, *L, ctx);
            Complex zl = elliptic_log(w.p, w.p_prime, *L, ctx);
            // same point mod lattice, inside the fundamental cell
            CHECK(is_lattice_point(zl - z, *L, ctx));
            auto [x1, x2] = lattice_coords(zl, *L);
            CHECK(x1.sign() >= 0);
            CHECK(x1 < Real(64, 1L));
            CHECK(x2.sign() >= 0);
            CHECK(x2 < Real(64, 1L));
        }
        Complex e1 = weierstrass(L->omega1.div_si(2), *L, ctx).p;
        Complex h = elliptic_log(e1, Complex(L->bits), *L, ctx);
        CHECK(tiny(h - L->omega1.div_si(2), TOL, abs(L->omega1)));
    }
    auto L = fx::noncm().lattice(ctx);
    try {
        elliptic_log(Complex(L->bits, 1.0), Complex(L->bits, 1.0), *L, ctx);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotOnCurve);
    }
}

TEST_CASE("third-kind periods") {
    std::mt19937_64 rng(5);
    auto L = fx::cm7().lattice(ctx);
    Complex q = fx::random_point(*L, rng);
    const Complex* om[2] = {&L->omega1, &L->omega2};
    const Complex* et[2] = {&L->eta1, &L->eta2};
    for (int i = 1; i <= 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Complex d = third_kind_period(q + *om[j], i, *L, ctx) - third_kind_period(q, i, *L, ctx);
            Complex expect = *et[i - 1] * *om[j] - *om[i - 1] * *et[j];
            CHECK(tiny(d - expect, TOL, abs(expect) + Real(64, 1L)));
        }
    CHECK_THROWS_AS(third_kind_period(L->omega1, 1, *L, ctx), Error);

    // quadrature oracle: the integrand zeta(z+q) - zeta(z) - zeta(q) is omega1-periodic, so the
    // trapezoidal rule over one period converges geometrically
    PrecisionContext lo(128);
    auto Ll = fx::cm7().lattice(lo);
    Complex ql = q.rounded(Ll->bits);
    // keep the sample line midway between the pole rows z = 0 and z = -q
    double x2 = 1.0 - lattice_coords(ql, *Ll).second.to_double();
    double mid = x2 > 0.5 ? x2 / 2 : (x2 + 1) / 2;
    Complex z0 = Ll->omega2 * Real(Ll->bits, mid) + Ll->omega1 * Real(Ll->bits, 0.11);
    Complex zq = wp_zeta(ql, *Ll, lo);
    const int N = 400;
    Complex sum(Ll->bits);
    for (int k = 0; k < N; ++k) {
        Complex z = z0 + Ll->omega1 * Real(Ll->bits, static_cast<long>(k)).div_si(N);
        sum += wp_zeta(z + ql, *Ll, lo) - wp_zeta(z, *Ll, lo) - zq;
    }
    Complex integral = sum * Ll->omega1 / Real(Ll->bits, static_cast<long>(N));
    Complex U1 = third_kind_period(ql, 1, *Ll, lo);
    Complex k = (integral - U1) / Ll->two_pi_i();
    Complex kr(Real(Ll->bits, k.re.round_to_z()), Real(Ll->bits, 0L));
    CHECK(tiny(k - kr, -80));
}

TEST_CASE("CM detection") {
    mpz_class H("1000000");
    auto sq = detect_cm(fx::square(), ctx, H);
    REQUIRE(sq);
    CHECK(sq->a == 1);
    CHECK(sq->b == 0);
    CHECK(sq->c == 1);
    CHECK(sq->field_disc == -4);
    REQUIRE(sq->kappa_exact);
    CHECK(sq->kappa_exact->is_zero());
    auto hx = detect_cm(fx::hexagonal(), ctx, H);
    REQUIRE(hx);
    CHECK(hx->a == 1);
    CHECK(hx->b == -1);
    CHECK(hx->c == 1);
    CHECK(hx->field_disc == -3);
    auto c7 = detect_cm(fx::cm7(), ctx, H);
    REQUIRE(c7);
    CHECK(c7->field_disc == -7);
    REQUIRE(c7->kappa_exact);
    auto L = fx::cm7().lattice(ctx);
    Complex t = L->tau();
    Complex rel = L->eta1 * norm(t) - t * L->eta2 - qt_value(*c7->kappa_exact, *L) * L->omega1;
    CHECK(tiny(rel, TOL, abs(L->eta1)));
    CHECK_FALSE(detect_cm(fx::generic_lattice(), ctx, H));
    CHECK_FALSE(detect_cm(fx::noncm(), ctx, H));
}

TEST_CASE("endomorphism matrices") {
    mpz_class H("1000000");
    auto cm = detect_cm(fx::square(), ctx, H);
    auto one = endo_matrix(1, 0, cm, fx::square(), ctx, H);
    CHECK(one.M_phi == QMat::identity(2));
    // i = -tau here
    auto ei = endo_matrix(0, -1, cm, fx::square(), ctx, H);
    CHECK(ei.M_phi == QMat(2, 2, {0, -1, 1, 0}));
    CHECK(ei.antisymmetric);
    auto L = fx::square().lattice(ctx);
    Complex iom1 = L->omega1.mul_i();
    CHECK(tiny(iom1 + L->omega2, TOL, abs(L->omega1)));

    auto c7 = detect_cm(fx::cm7(), ctx, H);
    auto et = endo_matrix(0, 1, c7, fx::cm7(), ctx, H);
    auto et2 = endo_matrix(0, 1, c7, fx::cm7(), PrecisionContext(512), H);
    CHECK(et.M_phi == et2.M_phi);
    // M (omega1, omega2)^t = tau (omega1, omega2)^t
    auto L7 = fx::cm7().lattice(ctx);
    long b = L7->bits;
    Complex r0 = L7->omega1 * Real(b, et.M_phi(0, 0)) + L7->omega2 * Real(b, et.M_phi(0, 1)) - L7->tau() * L7->omega1;
    CHECK(tiny(r0, TOL, abs(L7->omega1)));
    CHECK_FALSE(et.antisymmetric);
    // tau - (tau + conj tau)/2 is purely imaginary
    CHECK(is_antisymmetric(-c7->field().trace_tau() / 2, 1, c7));
    CHECK_FALSE(is_antisymmetric(2, 0, c7));
}
