#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "motper/relations.hpp"

using namespace motper;

static const PrecisionContext ctx(256);
static const mpz_class H6("1000000");
static const mpz_class H4("10000");

static Complex re(const Real& x) { return Complex(x, Real(x.prec(), 0L)); }

TEST_CASE("integer relations: small known cases") {
    ValueSource logs = [](const PrecisionContext& c) {
        return std::vector<Complex>{re(log(Real(c.bits(), 2L))), re(log(Real(c.bits(), 4L)))};
    };
    auto v = find_integer_relation(logs, H6, ctx);
    REQUIRE(v.found());
    CHECK(v.relation.coeffs == std::vector<mpz_class>{2, -1});  // sign normalised: first nonzero positive

    ValueSource roots = [](const PrecisionContext& c) {
        return std::vector<Complex>{re(Real(c.bits(), 1L)), re(sqrt(Real(c.bits(), 2L))), re(sqrt(Real(c.bits(), 8L)))};
    };
    v = find_integer_relation(roots, H6, ctx);
    REQUIRE(v.found());
    CHECK(v.relation.coeffs == std::vector<mpz_class>{0, 2, -1});

    ValueSource onepi = [](const PrecisionContext& c) { return std::vector<Complex>{re(Real(c.bits(), 1L)), re(Real::pi(c.bits()))}; };
    v = find_integer_relation(onepi, H6, ctx);
    CHECK(v.heuristic());
    CHECK(v.height_bound == H6);
}

TEST_CASE("(1, pi) agrees with exhaustive search at small height") {
    // brute force: no a + b pi = 0 with |a|,|b| <= 30, and the engine agrees at that bound
    Real pi = Real::pi(128);
    bool any = false;
    for (long a = -30; a <= 30; ++a)
        for (long b = -30; b <= 30; ++b)
            if ((a || b) && abs(Real(128, a) + pi.mul_si(b)).exponent() < -100) any = true;
    CHECK_FALSE(any);
    ValueSource onepi = [](const PrecisionContext& c) { return std::vector<Complex>{re(Real(c.bits(), 1L)), re(Real::pi(c.bits()))}; };
    CHECK(find_integer_relation(onepi, mpz_class(30), ctx).heuristic());
}

TEST_CASE("precision precondition") {
    ValueSource xs = [](const PrecisionContext& c) {
        return std::vector<Complex>(6, re(Real(c.bits(), 1L)));
    };
    mpz_class big = mpz_class(1) << 100;
    try {
        find_integer_relation(xs, big, PrecisionContext(256));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientPrecision);
    }
    CHECK(required_bits(6, big) > 256);
    CHECK_NOTHROW(find_integer_relation_escalating(xs, big, PrecisionContext(256)));
    CHECK_THROWS_AS(find_integer_relation(std::vector<Complex>{Complex(64)}, H6, ctx), Error);
}

TEST_CASE("scale invariance") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int t = 0; t < 5; ++t) {
        double cr = d(rng), ci = d(rng);
        ValueSource xs = [cr, ci](const PrecisionContext& c) {
            long b = c.bits();
            Complex k(b, cr, ci);
            Real s3 = sqrt(Real(b, 3L));
            std::vector<Complex> v{re(Real(b, 1L)), re(s3), re(s3 * Real(b, 5L) - Real(b, 7L))};
            for (auto& x : v) x = x * k;
            return v;
        };
        auto v = find_integer_relation(xs, H6, ctx);
        REQUIRE(v.found());
        CHECK(v.relation.coeffs == std::vector<mpz_class>{7, -5, 1});
    }
}

TEST_CASE("LLL reduces a textbook basis") {
    std::vector<std::vector<mpz_class>> b{{1, 1, 1}, {-1, 0, 2}, {3, 5, 6}};
    auto r = lll_reduce(b);
    // reduced basis of this lattice: (0,1,0), (1,0,1), (-1,0,2) up to sign and order
    mpz_class first = 0;
    for (auto& x : r[0]) first += x * x;
    CHECK(first == 1);
    // same lattice: |det| preserved
    QMat A(3, 3), B(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            A(i, j) = Q(b[i][j]);
            B(i, j) = Q(r[i][j]);
        }
    CHECK(abs(A.det()) == abs(B.det()));
}

TEST_CASE("rational reconstruction") {
    auto half = rational_reconstruct(Complex(256, 0.5), H6, ctx);
    REQUIRE(half);
    CHECK(*half == Q(1, 2));
    auto x37 = rational_reconstruct([](const PrecisionContext& c) { return from_mpq(c.bits(), Q(3, 7)); }, H6, ctx);
    REQUIRE(x37);
    CHECK(*x37 == Q(3, 7));
    CHECK_FALSE(rational_reconstruct([](const PrecisionContext& c) { return re(Real::pi(c.bits()).div_si(4)); }, H6, ctx));
    // nonreal input is not rational
    CHECK_FALSE(rational_reconstruct(Complex(256, 0.5, 0.25), H6, ctx));
}

TEST_CASE("algebraic reconstruction") {
    auto i = algebraic_reconstruct([](const PrecisionContext& c) { return Complex::i(c.bits()); }, 4, H6, ctx);
    REQUIRE(i);
    CHECK(i->poly == std::vector<mpz_class>{1, 0, 1});
    auto rho = algebraic_reconstruct(
        [](const PrecisionContext& c) {
            long b = c.bits();
            return Complex(Real(b, 0.5), sqrt(Real(b, 3L)).div_si(2));
        },
        4, H6, ctx);
    REQUIRE(rho);
    CHECK(rho->poly == std::vector<mpz_class>{1, -1, 1});
    CHECK(poly_str(rho->poly) == "x^2 - x + 1");
    CHECK_FALSE(algebraic_reconstruct([](const PrecisionContext& c) { return re(Real::pi(c.bits())); }, 3, H4, ctx));
}

TEST_CASE("lattice membership") {
    auto c = fx::noncm();
    auto half = lattice_membership([&](const PrecisionContext& p) { return c.lattice(p)->omega1.div_si(2); }, c, H4, ctx);
    REQUIRE(half);
    CHECK(half->a == Q(1, 2));
    CHECK(half->b == 0);
    CHECK(half->order == 2);
    auto third = lattice_membership(
        [&](const PrecisionContext& p) {
            auto L = c.lattice(p);
            return (L->omega1 + L->omega2).div_si(3);
        },
        c, H4, ctx);
    REQUIRE(third);
    CHECK(third->a == Q(1, 3));
    CHECK(third->b == Q(1, 3));
    CHECK(third->order == 3);
    auto generic = lattice_membership(
        [&](const PrecisionContext& p) {
            auto L = c.lattice(p);
            return L->omega1 * sqrt(Real(p.bits(), 2L)).div_si(7) + L->omega2 * log(Real(p.bits(), 3L)).div_si(5);
        },
        c, H4, ctx);
    CHECK_FALSE(generic);
}

TEST_CASE("endomorphism dependence") {
    auto c = fx::noncm();
    auto P = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return L->omega1 * sqrt(Real(p.bits(), 2L)).div_si(7) + L->omega2 * log(Real(p.bits(), 3L)).div_si(5);
    };
    auto twoP = [&](const PrecisionContext& p) { return P(p).mul_si(2); };
    auto d = endo_dependence(P, twoP, c, std::nullopt, H4, ctx);
    REQUIRE(d);
    CHECK(d->phi1 == 2);
    CHECK(d->phi2 == 0);
    CHECK(d->delta1 == 0);
    CHECK(d->delta2 == 0);

    // with a lattice correction
    auto shifted = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return P(p).mul_si(-3) + L->omega2.div_si(4);
    };
    d = endo_dependence(P, shifted, c, std::nullopt, H4, ctx);
    REQUIRE(d);
    CHECK(d->phi1 == -3);
    CHECK(d->delta2 == Q(1, 4));

    auto Qp = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return L->omega1 * Real::pi(p.bits()).div_si(9) + L->omega2 * sqrt(Real(p.bits(), 5L)).div_si(3);
    };
    CHECK_FALSE(endo_dependence(P, Qp, c, std::nullopt, H4, ctx));

    // square lattice: i = -tau in this orientation
    auto sq = fx::square();
    auto cm = detect_cm(sq, ctx, H6);
    REQUIRE(cm);
    auto Ps = [&](const PrecisionContext& p) {
        auto L = sq.lattice(p);
        return L->omega1 * sqrt(Real(p.bits(), 2L)).div_si(7) + L->omega2 * log(Real(p.bits(), 3L)).div_si(5);
    };
    auto iP = [&](const PrecisionContext& p) { return Ps(p).mul_i(); };
    d = endo_dependence(Ps, iP, sq, cm, H4, ctx);
    REQUIRE(d);
    CHECK(d->phi1 == 0);
    CHECK(d->phi2 == -1);
}

TEST_CASE("F-rank") {
    auto c = fx::noncm();
    ValueSource periods = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return std::vector<Complex>{L->omega1, L->omega2};
    };
    ValueSource om1 = [&](const PrecisionContext& p) { return std::vector<Complex>{c.lattice(p)->omega1}; };
    auto r = f_rank(om1, std::nullopt, periods, H4, ctx);
    CHECK(r.rank == 0);
    CHECK_FALSE(r.heuristic);

    auto P = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return L->omega1 * sqrt(Real(p.bits(), 2L)).div_si(7) + L->omega2 * log(Real(p.bits(), 3L)).div_si(5);
    };
    auto Qp = [&](const PrecisionContext& p) {
        auto L = c.lattice(p);
        return L->omega1 * Real::pi(p.bits()).div_si(9) + L->omega2 * sqrt(Real(p.bits(), 5L)).div_si(3);
    };
    ValueSource p2p = [&](const PrecisionContext& p) { return std::vector<Complex>{P(p), P(p).mul_si(2)}; };
    r = f_rank(p2p, std::nullopt, periods, H4, ctx);
    CHECK(r.rank == 1);
    REQUIRE(r.coords[1].size() == 1);
    CHECK(r.coords[1][0].x == 2);

    ValueSource pq = [&](const PrecisionContext& p) { return std::vector<Complex>{P(p), Qp(p)}; };
    r = f_rank(pq, std::nullopt, periods, H4, ctx);
    CHECK(r.rank == 2);
    CHECK(r.heuristic);

    // over Q(tau) on the square lattice, p and i p span one dimension
    auto sq = fx::square();
    auto cm = detect_cm(sq, ctx, H6);
    ValueSource speriods = [&](const PrecisionContext& p) {
        auto L = sq.lattice(p);
        return std::vector<Complex>{L->omega1, L->omega2};
    };
    auto Ps = [&](const PrecisionContext& p) {
        auto L = sq.lattice(p);
        return L->omega1 * sqrt(Real(p.bits(), 2L)).div_si(7) + L->omega2 * log(Real(p.bits(), 3L)).div_si(5);
    };
    ValueSource pip = [&](const PrecisionContext& p) { return std::vector<Complex>{Ps(p), Ps(p).mul_i()}; };
    r = f_rank(pip, cm, speriods, H4, ctx);
    CHECK(r.rank == 1);
    REQUIRE(r.coords[1].size() == 1);
    CHECK(r.coords[1][0].x == 0);
    CHECK(r.coords[1][0].y == -1);
    CHECK(f_rank(pip, std::nullopt, speriods, H4, ctx).rank == 2);
}
