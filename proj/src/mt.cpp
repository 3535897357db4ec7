#include "motper/mt.hpp"

#include <map>
#include <random>

namespace motper {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

Q small_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 6);
    Q q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

QMat col2(const Q& x, const Q& y) { return QMat(2, 1, {x, y}); }
QMat row2(const Q& x, const Q& y) { return QMat(1, 2, {x, y}); }

const QMat J2() {
    static const QMat j(2, 2, {Q(0), Q(1), Q(-1), Q(0)});
    return j;
}

Complex fixed_tau(const PeriodMatrix& pm, const std::optional<CMData>& cm) {
    return exact_tau(cm, pm.PiA(1, 0) / pm.PiA(0, 0));
}

}  // namespace

QMat MTElement::matrix() const {
    const int nn = n(), ss = s(), N = nn + 2 + ss;
    QMat m(N, N);
    for (int i = 0; i < nn; ++i) m(i, i) = 1;
    for (int i = 0; i < nn; ++i)
        for (int j = 0; j < 2; ++j) m(i, nn + j) = u(i, j);
    for (int i = 0; i < nn; ++i)
        for (int k = 0; k < ss; ++k) m(i, nn + 2 + k) = sigma(i, k);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(nn + i, nn + j) = a(i, j);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < ss; ++k) m(nn + i, nn + 2 + k) = u_star(i, k);
    Q d = a.det();
    for (int k = 0; k < ss; ++k) m(nn + 2 + k, nn + 2 + k) = d;
    return m;
}

MTElement mt_identity(int n, int s) { return MTElement{QMat::identity(2), QMat(n, 2), QMat(2, s), QMat(n, s)}; }

MTElement mt_make(QMat a, QMat u, QMat u_star, QMat sigma) {
    require(a.rows() == 2 && a.cols() == 2, "a must be 2x2");
    require(u.cols() == 2 && u_star.rows() == 2, "u is n x 2 and u* is 2 x s");
    require(sigma.rows() == u.rows() && sigma.cols() == u_star.cols(), "sigma must be n x s");
    if (a.det() == 0) throw Error(ErrorCode::Singular, "a is singular");
    return MTElement{std::move(a), std::move(u), std::move(u_star), std::move(sigma)};
}

MTElement compose(const MTElement& r1, const MTElement& r2) {
    require(r1.n() == r2.n() && r1.s() == r2.s(), "compose: shapes differ");
    Q db = r2.a.det();
    return MTElement{r1.a * r2.a, r2.u + r1.u * r2.a, r1.a * r2.u_star + r1.u_star * db, r2.sigma + r1.u * r2.u_star + r1.sigma * db};
}

MTElement invert(const MTElement& r) {
    Q d = r.a.det();
    if (d == 0) throw Error(ErrorCode::Singular, "a is singular");
    QMat ai = r.a.inverse();
    QMat v = -(r.u * ai);
    QMat vs = -(ai * r.u_star) * Q(1 / d);
    QMat t = -(r.u * vs) - r.sigma * Q(1 / d);
    return MTElement{ai, v, vs, t};
}

MTElement commutator(const MTElement& r1, const MTElement& r2) { return compose(compose(r1, r2), compose(invert(r1), invert(r2))); }

PeriodMatrix act(const MTElement& r, const PeriodMatrix& pm) {
    if (pm.dual) throw Error(ErrorCode::InvalidArgument, "act expects the period matrix of M, not of M*");
    require(r.n() == pm.n && r.s() == pm.s, "act: element and period matrix have different n, s");
    const int N = pm.size();
    QMat rho = r.matrix();
    const long b = pm.bits;
    PeriodMatrix out;
    out.n = pm.n;
    out.s = pm.s;
    out.bits = pm.bits;
    out.m.assign(N, std::vector<Complex>(N, Complex(b)));
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            if (rho(i, k) == 0) continue;
            Real c(b, rho(i, k));
            for (int j = 0; j < N; ++j) out.m[i][j] += pm.m[k][j] * c;
        }
    return out;
}

QMat cm_reductive(const Q& b1, const Q& b2, const QuadField& F) {
    return QMat(2, 2, {b1, b2, -b2 * F.norm_tau(), b1 + b2 * F.trace_tau()});
}

QMat endo_qmatrix(const QT& phi, const QuadField& F) { return cm_reductive(phi.x, phi.y, F); }

QMat sample_reductive(const std::optional<CMData>& cm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (;;) {
        QMat a;
        if (cm) {
            a = cm_reductive(small_rational(rng), small_rational(rng), cm->field());
        } else {
            a = QMat(2, 2, {small_rational(rng), small_rational(rng), small_rational(rng), small_rational(rng)});
        }
        if (a.det() != 0) return a;
    }
}

CaseParameterization case_parameterization(CaseId c, bool cm) {
    CaseParameterization p;
    p.id = c;
    if (cm) {
        p.bound.push_back(Block::A);
        p.formulas.push_back("a = b1 Id + b2 M_tau (commutes with End(E))");
    }
    const std::vector<std::string> U = {"u1", "u2"}, US = {"us1", "us2"};
    auto add = [&](const std::vector<std::string>& v) { p.free_names.insert(p.free_names.end(), v.begin(), v.end()); };
    const std::string s_q = "sigma = (det a - 1) gamma + beta2 u1 - beta1 u2";
    const std::string u_q = "u* = (a - det(a) Id) (beta2, -beta1)^t";
    const std::string u_p = "u = alpha (a - Id)";
    const std::string u_d = "u = (J a^-1 u* - (a^t - Id) delta^t)^t M_phi^-1";
    switch (c) {
        case CaseId::GENERIC:
            add(U);
            add(US);
            p.free_names.push_back("sigma");
            break;
        case CaseId::DEP_NONANTISYM:
        case CaseId::DEP_ANTISYM_R_FREE:
            add(US);
            p.free_names.push_back("sigma");
            p.bound.push_back(Block::U);
            p.formulas.push_back(u_d);
            break;
        case CaseId::DEP_ANTISYM_R_TORSION:
            add(US);
            p.bound.push_back(Block::U);
            p.bound.push_back(Block::Sigma);
            p.formulas.push_back(u_d);
            p.formulas.push_back("sigma = (det a - 1) gamma - (u2 delta1 - u1 delta2) - 1/2 (u1 v2 - u2 v1), v = u M_phi");
            break;
        case CaseId::P_TORSION_R_FREE:
            add(US);
            p.free_names.push_back("sigma");
            p.bound.push_back(Block::U);
            p.formulas.push_back(u_p);
            break;
        case CaseId::P_TORSION_R_TORSION:
            add(US);
            p.bound.push_back(Block::U);
            p.bound.push_back(Block::Sigma);
            p.formulas.push_back(u_p);
            p.formulas.push_back("sigma = (det a - 1) gamma + alpha u*");
            break;
        case CaseId::Q_TORSION_R_FREE:
            add(U);
            p.free_names.push_back("sigma");
            p.bound.push_back(Block::UStar);
            p.formulas.push_back(u_q);
            break;
        case CaseId::Q_TORSION_R_TORSION:
            add(U);
            p.bound.push_back(Block::UStar);
            p.bound.push_back(Block::Sigma);
            p.formulas.push_back(u_q);
            p.formulas.push_back(s_q);
            break;
        case CaseId::BOTH_TORSION_R_FREE:
            p.free_names.push_back("sigma");
            p.bound.push_back(Block::U);
            p.bound.push_back(Block::UStar);
            p.formulas.push_back(u_p);
            p.formulas.push_back(u_q);
            break;
        case CaseId::BOTH_TORSION_R_TORSION:
            p.bound.push_back(Block::U);
            p.bound.push_back(Block::UStar);
            p.bound.push_back(Block::Sigma);
            p.formulas.push_back(u_p);
            p.formulas.push_back(u_q);
            p.formulas.push_back(s_q);
            break;
    }
    return p;
}

MTElement sample_case_element(const CaseParameterization& par, const QMat& a, const std::vector<Q>& free, const CaseData& d, bool cm) {
    if (static_cast<int>(free.size()) != par.free_count()) throw Error(ErrorCode::ShapeMismatch, "wrong number of free parameters");
    if (a.rows() != 2 || a.cols() != 2) throw Error(ErrorCode::ShapeMismatch, "a must be 2x2");
    const Q det = a.det();
    if (det == 0) throw Error(ErrorCode::Singular, "a is singular");
    if (cm) {
        // a must commute with tau
        QMat Mt = cm_reductive(0, 1, d.field);
        if (a * Mt != Mt * a) throw Error(ErrorCode::InvalidArgument, "a is not in MT(E) for this CM field");
    }
    std::map<std::string, Q> f;
    for (size_t i = 0; i < free.size(); ++i) f[par.free_names[i]] = free[i];
    auto has = [&](const char* k) { return f.count(k) > 0; };

    MTElement r = mt_identity(1, 1);
    r.a = a;
    if (has("u1")) r.u = row2(f["u1"], f["u2"]);
    if (has("us1")) r.u_star = col2(f["us1"], f["us2"]);
    if (has("sigma")) r.sigma = QMat(1, 1, {f["sigma"]});

    const QMat I = QMat::identity(2);
    auto bound = [&](Block b) {
        for (Block x : par.bound)
            if (x == b) return true;
        return false;
    };
    const CaseId c = par.id;
    const bool dep = c == CaseId::DEP_NONANTISYM || c == CaseId::DEP_ANTISYM_R_FREE || c == CaseId::DEP_ANTISYM_R_TORSION;
    const bool pt = c == CaseId::P_TORSION_R_FREE || c == CaseId::P_TORSION_R_TORSION || c == CaseId::BOTH_TORSION_R_FREE ||
                    c == CaseId::BOTH_TORSION_R_TORSION;
    const bool qt = c == CaseId::Q_TORSION_R_FREE || c == CaseId::Q_TORSION_R_TORSION || c == CaseId::BOTH_TORSION_R_FREE ||
                    c == CaseId::BOTH_TORSION_R_TORSION;

    if (pt) {
        if (!d.has_alpha) throw Error(ErrorCode::MissingConstant, "alpha is needed for a torsion p");
        r.u = row2(d.a1, d.a2) * (a - I);
    }
    if (qt) {
        if (!d.has_beta) throw Error(ErrorCode::MissingConstant, "beta is needed for a torsion q");
        r.u_star = (a - I * det) * col2(d.b2, -d.b1);
    }
    QMat Mphi;
    if (dep) {
        if (!d.has_phi) throw Error(ErrorCode::MissingConstant, "the endomorphism phi is needed for a dependent pair");
        Mphi = endo_qmatrix(d.phi, d.field);
        if (Mphi.det() == 0) throw Error(ErrorCode::Singular, "phi is zero");
        QMat delta = row2(d.d1, d.d2);
        QMat ut = J2() * a.inverse() * r.u_star - (a.transpose() - I) * delta.transpose();
        r.u = ut.transpose() * Mphi.inverse();
    }
    if (bound(Block::Sigma)) {
        if (!d.gamma_tilde) throw Error(ErrorCode::MissingConstant, "gamma is needed for a torsion R");
        Q g = (det - 1) * *d.gamma_tilde;
        if (qt) {
            g += d.b2 * r.u(0, 0) - d.b1 * r.u(0, 1);
        } else if (pt) {
            g += d.a1 * r.u_star(0, 0) + d.a2 * r.u_star(1, 0);
        } else {
            QMat v = r.u * Mphi;
            g -= r.u(0, 1) * d.d1 - r.u(0, 0) * d.d2;
            g -= (r.u(0, 0) * v(0, 1) - r.u(0, 1) * v(0, 0)) / 2;
        }
        r.sigma = QMat(1, 1, {g});
    }
    return r;
}

MTElement random_case_element(const CaseParameterization& par, const CaseData& d, const std::optional<CMData>& cm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    QMat a = sample_reductive(cm, rng());
    std::vector<Q> free;
    for (int i = 0; i < par.free_count(); ++i) free.push_back(small_rational(rng));
    return sample_case_element(par, a, free, d, cm.has_value());
}

std::optional<Perturbation> perturb_bound_entry(const MTElement& r, const CaseParameterization& par, std::uint64_t seed) {
    struct Slot {
        Block b;
        int i, j;
    };
    std::vector<Slot> slots;
    for (Block b : par.bound) {
        const QMat& m = b == Block::A ? r.a : b == Block::U ? r.u : b == Block::UStar ? r.u_star : r.sigma;
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) slots.push_back({b, i, j});
    }
    if (slots.empty()) return std::nullopt;
    std::mt19937_64 rng(seed);
    size_t start = std::uniform_int_distribution<size_t>(0, slots.size() - 1)(rng);
    for (size_t t = 0; t < slots.size(); ++t) {
        const Slot& sl = slots[(start + t) % slots.size()];
        MTElement e = r;
        QMat& m = sl.b == Block::A ? e.a : sl.b == Block::U ? e.u : sl.b == Block::UStar ? e.u_star : e.sigma;
        m(sl.i, sl.j) += 1;
        if (e.a.det() == 0) continue;
        return Perturbation{e, sl.b, sl.i, sl.j};
    }
    return std::nullopt;
}

StabilizerResult stabilizes(const MTElement& r, const std::vector<RelationPolynomial>& rels, const PeriodMatrix& pm,
                            const PrecisionContext& ctx, const std::optional<CMData>& cm, const PeriodSource* rerun) {
    StabilizerResult out;
    // coefficients stay those of the original point, tau included
    const Complex tau = fixed_tau(pm, cm);
    PeriodMatrix moved = act(r, pm);
    const auto v0 = period_vars(pm), v1 = period_vars(moved);

    std::map<long, std::pair<PeriodMatrix, PeriodMatrix>> cache;
    auto at = [&](const PrecisionContext& c) -> const std::pair<PeriodMatrix, PeriodMatrix>& {
        auto it = cache.find(c.bits());
        if (it == cache.end()) {
            PeriodMatrix hi = (*rerun)(c);
            PeriodMatrix hm = act(r, hi);
            it = cache.emplace(c.bits(), std::make_pair(std::move(hi), std::move(hm))).first;
        }
        return it->second;
    };
    // Vanishes: value on the moved point. AlgebraicValue: moved value minus original value, both divided by T^w.
    auto residual = [&](const RelationPolynomial& rel, const std::array<Complex, kNumVars>& a, const std::array<Complex, kNumVars>& b,
                        const Complex& t) -> Scaled {
        Real sc(64);
        Complex x = evaluate(rel, b, t, &sc);
        if (rel.kind == RelationPolynomial::Kind::Vanishes) return Scaled{x, sc};
        Real s0(64);
        Complex base = evaluate(rel, a, t, &s0);
        Complex tw0 = pow(a[pv::T], rel.weight), tw1 = pow(b[pv::T], rel.weight);
        Complex d = x / tw1 - base / tw0;
        Real scale = max(sc / abs(tw1).rounded(64), s0 / abs(tw0).rounded(64));
        return Scaled{d, scale};
    };

    out.stabilizes = true;
    for (const auto& rel : rels) {
        RelationCheck ch;
        ch.name = rel.name;
        ch.kind = rel.kind;
        Scaled s = residual(rel, v0, v1, tau);
        CertifiedBool cb;
        if (rerun) {
            cb = certify_zero(s.value, s.scale, ctx, [&](const PrecisionContext& c) {
                const auto& [hi, hm] = at(c);
                return residual(rel, period_vars(hi), period_vars(hm), fixed_tau(hi, cm));
            });
        } else {
            cb = check_zero(s.value, s.scale, ctx);
        }
        ch.residual_exp = cb.residual_exp;
        ch.scale_exp = cb.scale_exp;
        ch.status = cb.is_zero() ? RelationStatus::Certified : cb.is_nonzero() ? RelationStatus::Violated : RelationStatus::Unverified;
        if (ch.status != RelationStatus::Certified) out.stabilizes = false;
        if (ch.status == RelationStatus::Violated) out.violated = true;
        out.checks.push_back(ch);
    }
    return out;
}

std::string mt_str(const MTElement& r) {
    return "a = " + r.a.str() + ", u = " + r.u.str() + ", u* = " + r.u_star.str() + ", sigma = " + r.sigma.str();
}

}  // namespace motper
