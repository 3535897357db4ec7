#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "case_fixtures.hpp"

using namespace motper;

static const PrecisionContext ctx(256);
static const mpz_class H6("1000000");

static void check_case(CaseId c, bool cm) {
    OneMotive M = fx::case_fixture(c, cm);
    ClassificationReport r = classify(M, ctx, H6);
    const std::string label = std::string(case_name(c)) + (cm ? " (CM)" : " (non-CM)");
    INFO(label);
    CHECK(r.id == c);
    CHECK(r.cm == cm);
    CaseDims e = expected_dims(c);
    CHECK(r.dims.dim_B == e.dim_B);
    CHECK(r.dims.dim_Zprime == e.dim_Zprime);
    CHECK(r.dims.dim_ZmodZprime == e.dim_ZmodZprime);
    CHECK(r.dims.dim_UR == e.dim_UR);
    CHECK(r.dims.dim_UR == 2 * r.dims.dim_B + r.dims.dim_Zprime + r.dims.dim_ZmodZprime);
    CHECK(r.dim_MT_E == (cm ? 2 : 4));
    CHECK(r.dim_MT_M == r.dim_MT_E + e.dim_UR);
    CHECK(r.verification.jacobian_rank == expected_ideal_rank(c, cm));
    // numbers of periods minus the rank of the ideal
    CHECK(10 - r.verification.jacobian_rank == r.dim_MT_M);
    CHECK(static_cast<int>(r.basis.size()) == r.dim_MT_M);
    CHECK_FALSE(r.verification.any_violated());
    for (auto& ch : r.verification.checks) {
        INFO(ch.name);
        CHECK(ch.status == RelationStatus::Certified);
        if (ch.kind == RelationPolynomial::Kind::Vanishes) CHECK(ch.residual_exp - std::max(0L, ch.scale_exp) <= -224);
    }
}

TEST_CASE("ten cases on a CM curve") {
    for (int i = 0; i < kNumCases; ++i) check_case(static_cast<CaseId>(i), true);
}

TEST_CASE("non-CM cases") {
    for (int i = 0; i < kNumCases; ++i) {
        CaseId c = static_cast<CaseId>(i);
        if (!fx::case_needs_cm(c)) check_case(c, false);
    }
}

TEST_CASE("heuristic flags") {
    auto r = classify(fx::case_fixture(CaseId::GENERIC, false), ctx, H6);
    CHECK(r.heuristic());
    r = classify(fx::case_fixture(CaseId::BOTH_TORSION_R_TORSION, true), ctx, H6);
    CHECK_FALSE(r.heuristic());
    CHECK(r.dims.dim_UR == 0);
    CHECK(r.dim_MT_M == 2);
}

TEST_CASE("relation lists") {
    CaseData d;
    auto g = case_relations(CaseId::GENERIC, d, false);
    REQUIRE(g.size() == 1);
    CHECK(g[0].name == "legendre");
    CHECK(g[0].expression() == "two_pi_i - omega1*eta2 + eta1*omega2 = 0");
    // missing constants
    CHECK_THROWS_AS(case_relations(CaseId::P_TORSION_R_FREE, d, false), Error);
    CHECK_THROWS_AS(case_relations(CaseId::GENERIC, d, true), Error);
    d.has_alpha = d.has_beta = true;
    d.a1 = Q(1, 2);
    d.b2 = Q(1, 2);
    d.gamma_tilde = Q(0);
    d.kappa = QT(0);
    d.field = QuadField{1, 0, 1};
    CHECK(case_relations(CaseId::BOTH_TORSION_R_TORSION, d, true).size() == 8);
    CHECK(case_relations(CaseId::BOTH_TORSION_R_FREE, d, false).size() == 5);
}

TEST_CASE("dimension formulas") {
    auto sq = fx::square();
    auto cm = detect_cm(sq, ctx, H6);
    REQUIRE(cm);
    // phi = tau is antisymmetric, phi = 2 is not
    OneMotive anti = fx::case_fixture(CaseId::DEP_ANTISYM_R_FREE, true);
    auto sub = dim_B(anti, cm, ctx, H6);
    CHECK(sub.N == 1);
    CHECK(dim_Zprime(sub).dim == 0);
    OneMotive two = anti;
    two.q = {PointSpec::endo(2, 0, 0)};
    sub = dim_B(two, cm, ctx, H6);
    CHECK(sub.N == 1);
    CHECK(dim_Zprime(sub).dim == 1);
    CHECK(dim_Zprime(sub).kernel.empty());

    // full B with n = s = 2 gives 2 (n + s) + n s
    OneMotive big{fx::noncm()};
    big.n = big.s = 2;
    big.p = {fx::log_point(0), fx::log_point(1)};
    big.q = {fx::log_point(2), fx::log_point(3)};
    big.ell = {{EllSpec::literal({"0.5", "0"}), EllSpec::literal({"0.25", "0"})}, {EllSpec::literal({"0", "0.5"}), EllSpec::literal({"1", "1"})}};
    auto dims = unipotent_dims(big, std::nullopt, ctx, mpz_class(10000));
    CHECK(dims.dim_B == 4);
    CHECK(dims.dim_Zprime == 4);
    CHECK(dims.dim_ZmodZprime == 0);
    CHECK(dims.dim_UR == 12);
    CHECK_FALSE(dims.heuristic_flags.empty());

    // torsion pairs: gamma = 0 and gamma = 3/7 give Z/Z' = 0, a generic l gives 1
    OneMotive t{fx::noncm()};
    t.p = {PointSpec::lattice(Q(1, 2), 0)};
    t.q = {PointSpec::lattice(0, Q(1, 2))};
    for (auto [ell, expect] : {std::pair{EllSpec::of_gamma(0), 0}, std::pair{EllSpec::of_gamma(Q(3, 7)), 0},
                               std::pair{EllSpec::literal({"0", "0"}), 1}}) {
        t.ell = {{ell}};
        auto s2 = dim_B(t, std::nullopt, ctx, H6);
        CHECK(s2.N == 0);
        auto z = dim_Zprime(s2);
        CHECK(z.dim == 0);
        CHECK(dim_ZmodZprime(t, s2, z.kernel, ctx, H6).dim == expect);
    }
}

TEST_CASE("tampered toric logarithm is a violation") {
    OneMotive M = fx::case_fixture(CaseId::BOTH_TORSION_R_TORSION, true);
    auto r = classify(M, ctx, H6);
    REQUIRE(r.id == CaseId::BOTH_TORSION_R_TORSION);
    Complex eps(ctx.bits(), 1e-3);
    PeriodSource tampered = [&](const PrecisionContext& c) {
        PeriodMatrix pm = build_period_matrix(M, c, r.cm_data);
        pm.m[0][0] -= eps.rounded(c.bits());
        return pm;
    };
    PeriodMatrix pm = tampered(ctx);
    auto v = verify_relations(pm, r.relations, ctx, H6, r.cm_data, &tampered);
    CHECK(v.any_violated());
    int violated = 0;
    for (auto& ch : v.checks)
        if (ch.status == RelationStatus::Violated) {
            ++violated;
            CHECK(ch.name == "toric_torsion");
        }
    CHECK(violated == 1);
}

TEST_CASE("classification is unchanged by path changes") {
    for (CaseId c : {CaseId::P_TORSION_R_TORSION, CaseId::DEP_ANTISYM_R_TORSION, CaseId::Q_TORSION_R_FREE}) {
        OneMotive M = fx::case_fixture(c, true);
        PathOffsets o;
        o.alpha = {{1, -1}};
        o.alpha_star = {{2, 1}};
        o.sigma = {{-3}};
        OneMotive M2 = shift_paths(M, o, ctx);
        auto r = classify(M2, ctx, H6);
        CHECK(r.id == c);
        CHECK_FALSE(r.verification.any_violated());
    }
}

TEST_CASE("hints are checked") {
    OneMotive M = fx::case_fixture(CaseId::P_TORSION_R_FREE, true);
    M.hints.p_torsion = 2;
    CHECK(classify(M, ctx, H6).id == CaseId::P_TORSION_R_FREE);
    M.hints.p_torsion = 3;
    try {
        classify(M, ctx, H6);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AmbiguousClassification);
    }
    OneMotive N = fx::case_fixture(CaseId::Q_TORSION_R_TORSION, true);
    N.hints.r_torsion = false;
    CHECK_THROWS_AS(classify(N, ctx, H6), Error);
}
