#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <memory>
#include <random>

#include "case_fixtures.hpp"
#include "motper/mt.hpp"
#include "motper/weil.hpp"

using namespace motper;

static const PrecisionContext ctx(256);
static const mpz_class H6("1000000");

static QMat rand_qmat(int r, int c, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-20, 20), den(1, 9);
    QMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            m(i, j) = Q(num(rng), den(rng));
            m(i, j).canonicalize();
        }
    return m;
}

static MTElement rand_element(int n, int s, std::mt19937_64& rng) {
    QMat a;
    do a = rand_qmat(2, 2, rng);
    while (a.det() == 0);
    return mt_make(a, rand_qmat(n, 2, rng), rand_qmat(2, s, rng), rand_qmat(n, s, rng));
}

// period matrices memoized per precision so reruns are shared between samples
static PeriodSource memo_source(const OneMotive& M, const std::optional<CMData>& cm) {
    auto cache = std::make_shared<std::map<long, PeriodMatrix>>();
    return [M, cm, cache](const PrecisionContext& c) {
        auto it = cache->find(c.bits());
        if (it == cache->end()) it = cache->emplace(c.bits(), build_period_matrix(M, c, cm)).first;
        return it->second;
    };
}

TEST_CASE("group law") {
    std::mt19937_64 rng(11);
    MTElement r = rand_element(2, 3, rng);
    CHECK(compose(mt_identity(2, 3), r) == r);
    CHECK(compose(r, mt_identity(2, 3)) == r);

    // the sigma block of a product of unipotents is u v*
    QMat u = rand_qmat(2, 2, rng), vs = rand_qmat(2, 3, rng);
    MTElement g = mt_make(QMat::identity(2), u, QMat(2, 3), QMat(2, 3));
    MTElement h = mt_make(QMat::identity(2), QMat(2, 2), vs, QMat(2, 3));
    CHECK(compose(g, h).sigma == u * vs);

    for (int t = 0; t < 200; ++t) {
        int n = 1 + t % 3, s = 1 + (t / 3) % 3;
        MTElement x = rand_element(n, s, rng), y = rand_element(n, s, rng), z = rand_element(n, s, rng);
        CHECK(compose(compose(x, y), z) == compose(x, compose(y, z)));
        CHECK(compose(x, invert(x)) == mt_identity(n, s));
        CHECK(compose(invert(x), x) == mt_identity(n, s));
        // the block law is the matrix product
        CHECK(compose(x, y).matrix() == x.matrix() * y.matrix());
    }
    CHECK(invert(mt_identity(1, 1)) == mt_identity(1, 1));
    QMat u1 = rand_qmat(1, 2, rng);
    CHECK(invert(mt_make(QMat::identity(2), u1, QMat(2, 1), QMat(1, 1))) == mt_make(QMat::identity(2), -u1, QMat(2, 1), QMat(1, 1)));

    CHECK_THROWS_AS(mt_make(QMat(2, 2), QMat(1, 2), QMat(2, 1), QMat(1, 1)), Error);
    CHECK_THROWS_AS(compose(mt_identity(1, 1), mt_identity(2, 1)), Error);
    CHECK_THROWS_AS(mt_make(QMat::identity(2), QMat(1, 2), QMat(2, 2), QMat(1, 1)), Error);
}

TEST_CASE("commutators and the factor system") {
    std::mt19937_64 rng(5);
    auto L = fx::noncm().lattice(ctx);
    for (int t = 0; t < 20; ++t) {
        int n = 1 + t % 3, s = 1 + (t / 3) % 3;
        QMat u = rand_qmat(n, 2, rng), us = rand_qmat(2, s, rng), v = rand_qmat(n, 2, rng), vs = rand_qmat(2, s, rng);
        MTElement g = mt_make(QMat::identity(2), u, us, QMat(n, s));
        MTElement h = mt_make(QMat::identity(2), v, vs, QMat(n, s));
        MTElement c = commutator(g, h);
        CHECK(c.a == QMat::identity(2));
        CHECK(c.u.is_zero());
        CHECK(c.u_star.is_zero());
        CHECK(c.sigma == u * vs - v * us);

        // 2 pi i (u v*) is the factor system on the points u.omega and the dual points with coordinates v*
        std::vector<Complex> z1, z1s, z2, z2s;
        for (int i = 0; i < n; ++i) z1.push_back(L->omega1 * Real(ctx.bits(), u(i, 0)) + L->omega2 * Real(ctx.bits(), u(i, 1)));
        for (int k = 0; k < s; ++k) {
            // dual coordinates are (-x2, x1) of the source
            z2s.push_back(L->omega1 * Real(ctx.bits(), vs(1, k)) - L->omega2 * Real(ctx.bits(), vs(0, k)));
            z1s.push_back(Complex(ctx.bits()));
        }
        for (int i = 0; i < n; ++i) z2.push_back(Complex(ctx.bits()));
        CMatrix fs = factor_system(z1, z1s, z2, z2s, *L, ctx);
        QMat uv = u * vs;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < s; ++k) CHECK(fx::tiny(fs[i][k] - L->two_pi_i() * Real(ctx.bits(), uv(i, k)), -230, abs(fs[i][k])));
    }
}

TEST_CASE("action on period matrices") {
    OneMotive M = fx::case_fixture(CaseId::GENERIC, false);
    PeriodMatrix pm = build_period_matrix(M, ctx);
    auto same = [](const PeriodMatrix& x, const PeriodMatrix& y) {
        for (int i = 0; i < x.size(); ++i)
            for (int j = 0; j < x.size(); ++j)
                if (!fx::tiny(x.m[i][j] - y.m[i][j], -236, max(abs(x.m[i][j]), abs(y.m[i][j])))) return false;
        return true;
    };
    CHECK(same(act(mt_identity(1, 1), pm), pm));

    // u moves p along the lattice
    PeriodMatrix t = act(mt_make(QMat::identity(2), QMat(1, 2, {Q(3), Q(-2)}), QMat(2, 1), QMat(1, 1)), pm);
    Complex expect = pm.logP(0, 0) + pm.PiA(0, 0).mul_si(3) - pm.PiA(1, 0).mul_si(2);
    CHECK(fx::tiny(t.logP(0, 0) - expect, -240, abs(expect)));

    // blocks against the closed forms
    std::mt19937_64 rng(3);
    MTElement r = rand_element(1, 1, rng);
    PeriodMatrix a = act(r, pm);
    const long b = pm.bits;
    Complex T = pm.m[3][0];
    Complex xi = pm.Xi(0, 0) + pm.UpsQ(0, 0) * Real(b, r.u(0, 0)) + pm.UpsQ(1, 0) * Real(b, r.u(0, 1)) + T * Real(b, r.sigma(0, 0));
    CHECK(fx::tiny(a.Xi(0, 0) - xi, -236, abs(xi)));
    for (int j = 0; j < 2; ++j) {
        Complex ups = pm.UpsQ(0, 0) * Real(b, r.a(j, 0)) + pm.UpsQ(1, 0) * Real(b, r.a(j, 1)) + T * Real(b, r.u_star(j, 0));
        CHECK(fx::tiny(a.UpsQ(j, 0) - ups, -236, abs(ups)));
        for (int l = 0; l < 2; ++l) {
            Complex pa = pm.PiA(0, l) * Real(b, r.a(j, 0)) + pm.PiA(1, l) * Real(b, r.a(j, 1));
            CHECK(fx::tiny(a.PiA(j, l) - pa, -236, abs(pa)));
        }
    }
    CHECK(fx::tiny(a.m[3][0] - T * Real(b, r.a.det()), -240, abs(T)));

    // integer elements reproduce path changes
    PathOffsets o;
    o.alpha = {{2, -1}};
    o.alpha_star = {{0, 0}};
    o.sigma = {{5}};
    PeriodMatrix shifted = build_period_matrix(shift_paths(M, o, ctx), ctx);
    CHECK(same(act(mt_make(QMat::identity(2), QMat(1, 2, {Q(2), Q(-1)}), QMat(2, 1), QMat(1, 1, {Q(5)})), pm), shifted));
    // a q shift (a, b) moves Upsilon_Q by -2 pi i (a, b)
    o.alpha = {{0, 0}};
    o.alpha_star = {{1, 3}};
    o.sigma = {{0}};
    shifted = build_period_matrix(shift_paths(M, o, ctx), ctx);
    PeriodMatrix moved = act(mt_make(QMat::identity(2), QMat(1, 2), QMat(2, 1, {Q(-1), Q(-3)}), QMat(1, 1)), pm);
    for (int j = 0; j < 2; ++j) CHECK(fx::tiny(moved.UpsQ(j, 0) - shifted.UpsQ(j, 0), -236, abs(moved.UpsQ(j, 0))));

    CHECK_THROWS_AS(act(mt_identity(2, 1), pm), Error);
}

TEST_CASE("reductive part") {
    auto cm = detect_cm(fx::square(), ctx, H6);
    REQUIRE(cm);
    CHECK(cm_reductive(1, 0, cm->field()) == QMat::identity(2));
    OneMotive M = fx::case_fixture(CaseId::GENERIC, true);
    PeriodMatrix pm = build_period_matrix(M, ctx, cm);
    CaseData d;
    d.field = cm->field();
    d.kappa = cm->kappa_exact;
    auto rels = case_relations(CaseId::GENERIC, d, true);
    PeriodSource src = memo_source(M, cm);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        QMat a = sample_reductive(cm, seed);
        CHECK(a.det() != 0);
        // commutes with tau, hence keeps omega2 - tau omega1 and the eta relation
        QMat Mt = cm_reductive(0, 1, cm->field());
        CHECK(a * Mt == Mt * a);
        MTElement r = mt_make(a, QMat(1, 2), QMat(2, 1), QMat(1, 1));
        auto st = stabilizes(r, rels, pm, ctx, cm, &src);
        CHECK(st.stabilizes);
        QMat b = sample_reductive(std::nullopt, seed);
        CHECK(b.det() != 0);
    }
    // same seed, same sample
    CHECK(sample_reductive(cm, 42) == sample_reductive(cm, 42));
    // a generic rational matrix breaks the CM relations
    MTElement bad = mt_make(QMat(2, 2, {Q(1), Q(1), Q(0), Q(1)}), QMat(1, 2), QMat(2, 1), QMat(1, 1));
    auto st = stabilizes(bad, rels, pm, ctx, cm, &src);
    CHECK(st.violated);
}

static void stabilizer_case(CaseId c, bool cm_curve, int samples) {
    OneMotive M = fx::case_fixture(c, cm_curve);
    auto rep = classify(M, ctx, H6);
    const std::string label = case_name(c);
    INFO(label);
    REQUIRE(rep.id == c);
    auto par = case_parameterization(c, rep.cm);
    CHECK(par.free_count() + rep.dim_MT_E == rep.dim_MT_M);
    PeriodMatrix pm = build_period_matrix(M, ctx, rep.cm_data);
    PeriodSource src = memo_source(M, rep.cm_data);
    int ok = 0, caught = 0, perturbed = 0;
    for (int t = 0; t < samples; ++t) {
        MTElement r = random_case_element(par, rep.data, rep.cm_data, 1000 + t);
        auto st = stabilizes(r, rep.relations, pm, ctx, rep.cm_data, &src);
        if (st.stabilizes) ++ok;
        auto p = perturb_bound_entry(r, par, 5000 + t);
        if (!p) continue;
        ++perturbed;
        auto sp = stabilizes(p->element, rep.relations, pm, ctx, rep.cm_data, &src);
        if (sp.violated && !sp.stabilizes) ++caught;
    }
    CHECK(ok == samples);
    CHECK(caught == perturbed);
    if (rep.cm || c != CaseId::GENERIC) CHECK(perturbed == samples);
}

TEST_CASE("case elements stabilize the relations, perturbed ones do not") {
    for (int i = 0; i < kNumCases; ++i) stabilizer_case(static_cast<CaseId>(i), true, 12);
    for (int i = 0; i < kNumCases; ++i)
        if (!fx::case_needs_cm(static_cast<CaseId>(i))) stabilizer_case(static_cast<CaseId>(i), false, 6);
}

TEST_CASE("case element examples") {
    OneMotive M = fx::case_fixture(CaseId::P_TORSION_R_FREE, true);
    auto rep = classify(M, ctx, H6);
    auto par = case_parameterization(rep.id, true);
    CHECK(sample_case_element(par, QMat::identity(2), {0, 0, 0}, rep.data, true) == mt_identity(1, 1));
    PeriodMatrix pm = build_period_matrix(M, ctx, rep.cm_data);
    PeriodSource src = memo_source(M, rep.cm_data);
    QMat a = sample_reductive(rep.cm_data, 9);
    MTElement r = sample_case_element(par, a, {Q(1, 2), Q(-3), Q(2, 7)}, rep.data, true);
    CHECK(r.u == QMat(1, 2, {rep.data.a1, rep.data.a2}) * (a - QMat::identity(2)));
    CHECK(stabilizes(r, rep.relations, pm, ctx, rep.cm_data, &src).stabilizes);
    // u = alpha (a - Id) + (1, 0)
    MTElement off = r;
    off.u(0, 0) += 1;
    auto st = stabilizes(off, rep.relations, pm, ctx, rep.cm_data, &src);
    CHECK(st.violated);
    bool torsion_rel_violated = false;
    for (auto& ch : st.checks)
        if (ch.status == RelationStatus::Violated && ch.name == "p_torsion") torsion_rel_violated = true;
    CHECK(torsion_rel_violated);

    // BOTH_TORSION_R_FREE: sigma is the only free parameter
    auto pb = case_parameterization(CaseId::BOTH_TORSION_R_FREE, true);
    REQUIRE(pb.free_count() == 1);
    CHECK(pb.free_names[0] == "sigma");
    CHECK(case_parameterization(CaseId::GENERIC, false).free_count() == 5);
    CHECK(case_parameterization(CaseId::BOTH_TORSION_R_TORSION, true).free_count() == 0);

    // missing constants
    CaseData empty;
    empty.field = rep.data.field;
    CHECK_THROWS_AS(sample_case_element(par, QMat::identity(2), {0, 0, 0}, empty, true), Error);
    // a outside MT(E)
    CHECK_THROWS_AS(sample_case_element(par, QMat(2, 2, {Q(1), Q(1), Q(0), Q(1)}), {0, 0, 0}, rep.data, true), Error);
}

TEST_CASE("sign of the dependent parameterization") {
    OneMotive M = fx::case_fixture(CaseId::DEP_ANTISYM_R_FREE, true);
    auto rep = classify(M, ctx, H6);
    REQUIRE(rep.id == CaseId::DEP_ANTISYM_R_FREE);
    auto par = case_parameterization(rep.id, true);
    PeriodMatrix pm = build_period_matrix(M, ctx, rep.cm_data);
    PeriodSource src = memo_source(M, rep.cm_data);
    QMat a = sample_reductive(rep.cm_data, 17);
    MTElement r = sample_case_element(par, a, {Q(2, 3), Q(-1, 5), Q(1)}, rep.data, true);
    CHECK(stabilizes(r, rep.relations, pm, ctx, rep.cm_data, &src).stabilizes);
    // u with the opposite sign convention for J is rejected
    MTElement flipped = r;
    flipped.u = -r.u;
    CHECK(stabilizes(flipped, rep.relations, pm, ctx, rep.cm_data, &src).violated);
}
