#include "motper/galois.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <sstream>

namespace motper {

namespace {

QuadField field_of(const std::optional<CMData>& cm) { return cm ? cm->field() : QuadField{1, 0, 1}; }

QT qt_scale(const QT& u, const Q& s) { return QT(u.x * s, u.y * s); }

std::vector<std::vector<QT>> pad_rows(std::vector<std::vector<QT>> rows, int N) {
    for (auto& r : rows) r.resize(static_cast<size_t>(N), QT(0));
    return rows;
}

}  // namespace

// ---------------------------------------------------------------- dimensions

SubvarietyData dim_B(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx, const mpz_class& max_height) {
    M.validate();
    SubvarietyData sub;
    sub.over_qtau = cm.has_value();
    sub.cm = cm;
    sub.n = M.n;
    sub.s = M.s;
    ValueSource vecs = [&M](const PrecisionContext& c) {
        MotivePoints pts = motive_points(M, c);
        std::vector<Complex> out = pts.p;
        out.insert(out.end(), pts.q.begin(), pts.q.end());
        return out;
    };
    ValueSource periods = [&M](const PrecisionContext& c) {
        auto L = M.curve.lattice(c);
        return std::vector<Complex>{L->omega1, L->omega2};
    };
    FRankResult r = f_rank(vecs, cm, periods, max_height, ctx);
    sub.N = r.rank;
    sub.retained = r.retained;
    sub.gamma_rows = pad_rows(r.coords, r.rank);
    sub.heuristic = r.heuristic;
    return sub;
}

ZprimeData dim_Zprime(const SubvarietyData& sub) {
    const int n = sub.n, s = sub.s, N = sub.N;
    const QuadField F = field_of(sub.cm);
    ZprimeData out;
    // columns: pairs (i, k); rows: Q-coordinates of the N x N matrix gamma_i^t gamma*_k + its Rosati transpose
    QMat A(std::max(1, 2 * N * N), n * s);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < s; ++k) {
            const auto& g = sub.gamma_rows[static_cast<size_t>(i)];
            const auto& h = sub.gamma_rows[static_cast<size_t>(n + k)];
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                    QT e = qt_add(qt_mul(g[a], h[b], F), qt_mul(qt_conj(g[b], F), qt_conj(h[a], F), F));
                    A(2 * (a * N + b), i * s + k) = e.x;
                    A(2 * (a * N + b) + 1, i * s + k) = e.y;
                }
        }
    out.dim = A.rank();
    for (auto& v : A.kernel()) {
        mpz_class l = 1;
        for (auto& x : v) l = lcm(l, x.get_den());
        std::vector<mpz_class> iv;
        for (auto& x : v) {
            Q y = x * l;
            iv.push_back(y.get_num());
        }
        out.kernel.push_back(iv);
    }
    return out;
}

PairStructure detect_pair_structure(const OneMotive& M, int i, int k, const std::optional<CMData>& cm, const PrecisionContext& ctx,
                                    const mpz_class& max_height) {
    PairStructure st;
    auto pfn = [&M, i](const PrecisionContext& c) { return motive_points(M, c).p[static_cast<size_t>(i)]; };
    auto qfn = [&M, k](const PrecisionContext& c) { return motive_points(M, c).q[static_cast<size_t>(k)]; };
    if (auto lq = lattice_membership(qfn, M.curve, max_height, ctx)) {
        st.kind = PairStructure::Kind::QTorsion;
        st.b1 = lq->a;
        st.b2 = lq->b;
        return st;
    }
    if (auto lp = lattice_membership(pfn, M.curve, max_height, ctx)) {
        st.kind = PairStructure::Kind::PTorsion;
        st.a1 = lp->a;
        st.a2 = lp->b;
        return st;
    }
    if (auto d = endo_dependence(pfn, qfn, M.curve, cm, max_height, ctx)) {
        if (is_antisymmetric(d->phi1, d->phi2, cm)) {
            st.kind = PairStructure::Kind::Dependent;
            st.phi1 = d->phi1;
            st.phi2 = d->phi2;
            st.d1 = d->delta1;
            st.d2 = d->delta2;
        }
    }
    return st;
}

Complex reduced_gamma(const OneMotive& M, int i, int k, const PairStructure& st, const std::optional<CMData>& cm, const PrecisionContext& ctx) {
    MotiveValues v = motive_values(M, cm, ctx);
    Complex D = v.X[i][k];
    if (st.kind != PairStructure::Kind::None) D += reduced_correction(v, i, k, st, cm, ctx);
    return D / v.L->two_pi_i();
}

ZmodZprimeData dim_ZmodZprime(const OneMotive& M, const SubvarietyData& sub, const std::vector<std::vector<mpz_class>>& zperp_basis,
                              const PrecisionContext& ctx, const mpz_class& max_height) {
    ZmodZprimeData out;
    const int n = M.n, s = M.s;
    out.structure.assign(n, std::vector<PairStructure>(s));
    if (zperp_basis.empty()) return out;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < s; ++k) {
            bool used = false;
            for (auto& c : zperp_basis) used = used || c[static_cast<size_t>(i * s + k)] != 0;
            if (used) out.structure[i][k] = detect_pair_structure(M, i, k, sub.cm, ctx, max_height);
        }
    const auto& cm = sub.cm;
    const auto& st = out.structure;
    ValueSource vals = [&](const PrecisionContext& c) {
        MotiveValues v = motive_values(M, cm, c);
        std::vector<Complex> res;
        for (auto& cv : zperp_basis) {
            Complex acc(v.L->bits);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < s; ++k) {
                    const mpz_class& w = cv[static_cast<size_t>(i * s + k)];
                    if (w == 0) continue;
                    Complex D = v.X[i][k];
                    if (st[i][k].kind != PairStructure::Kind::None) D += reduced_correction(v, i, k, st[i][k], cm, c);
                    acc += D * Real(v.L->bits, w);
                }
            res.push_back(acc);
        }
        return res;
    };
    ValueSource mod = [&M](const PrecisionContext& c) { return std::vector<Complex>{M.curve.lattice(c)->two_pi_i()}; };
    FRankResult r = f_rank(vals, std::nullopt, mod, max_height, ctx);
    out.dim = r.rank;
    out.heuristic = r.heuristic;
    return out;
}

UnipotentDims unipotent_dims(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx, const mpz_class& max_height) {
    UnipotentDims d;
    SubvarietyData sub = dim_B(M, cm, ctx, max_height);
    d.dim_B = sub.N;
    if (sub.heuristic) d.heuristic_flags.push_back("dim_B: independence assumed up to the height bound");
    ZprimeData zp = dim_Zprime(sub);
    d.dim_Zprime = zp.dim;
    ZmodZprimeData zz = dim_ZmodZprime(M, sub, zp.kernel, ctx, max_height);
    d.dim_ZmodZprime = zz.dim;
    if (zz.heuristic) d.heuristic_flags.push_back("dim_ZmodZprime: non-torsion assumed up to the height bound");
    d.dim_UR = 2 * d.dim_B + d.dim_Zprime + d.dim_ZmodZprime;
    return d;
}

// ---------------------------------------------------------------- cases

const char* case_name(CaseId c) {
    switch (c) {
        case CaseId::GENERIC: return "GENERIC";
        case CaseId::DEP_NONANTISYM: return "DEP_NONANTISYM";
        case CaseId::DEP_ANTISYM_R_FREE: return "DEP_ANTISYM_R_FREE";
        case CaseId::DEP_ANTISYM_R_TORSION: return "DEP_ANTISYM_R_TORSION";
        case CaseId::P_TORSION_R_FREE: return "P_TORSION_R_FREE";
        case CaseId::P_TORSION_R_TORSION: return "P_TORSION_R_TORSION";
        case CaseId::Q_TORSION_R_FREE: return "Q_TORSION_R_FREE";
        case CaseId::Q_TORSION_R_TORSION: return "Q_TORSION_R_TORSION";
        case CaseId::BOTH_TORSION_R_FREE: return "BOTH_TORSION_R_FREE";
        case CaseId::BOTH_TORSION_R_TORSION: return "BOTH_TORSION_R_TORSION";
    }
    return "?";
}

std::optional<CaseId> case_from_name(const std::string& s) {
    for (int i = 0; i < kNumCases; ++i)
        if (s == case_name(static_cast<CaseId>(i))) return static_cast<CaseId>(i);
    return std::nullopt;
}

CaseDims expected_dims(CaseId c) {
    static const CaseDims table[kNumCases] = {{2, 1, 0, 5}, {1, 1, 0, 3}, {1, 0, 1, 3}, {1, 0, 0, 2}, {1, 0, 1, 3},
                                              {1, 0, 0, 2}, {1, 0, 1, 3}, {1, 0, 0, 2}, {0, 0, 1, 1}, {0, 0, 0, 0}};
    return table[static_cast<int>(c)];
}

int expected_ideal_rank(CaseId c, bool cm) {
    static const int table[kNumCases] = {3, 5, 5, 6, 5, 6, 5, 6, 7, 8};
    return table[static_cast<int>(c)] - (cm ? 0 : 2);
}

const char* var_name(int v) {
    static const char* names[kNumVars] = {"Xi", "p", "zeta_p", "ups1", "ups2", "omega1", "eta1", "omega2", "eta2", "two_pi_i"};
    return v >= 0 && v < kNumVars ? names[v] : "?";
}

std::string RelationPolynomial::expression() const {
    std::ostringstream os;
    bool first = true;
    for (auto& t : terms) {
        if (t.coeff.is_zero()) continue;
        std::string c = qt_str(t.coeff);
        bool neg = t.coeff.y == 0 && t.coeff.x < 0;
        if (neg) c = qt_str(QT(-t.coeff.x));
        if (!first) os << (neg ? " - " : " + ");
        else if (neg) os << "-";
        first = false;
        bool unit = t.coeff.y == 0 && abs(t.coeff.x) == 1;
        bool any = false;
        std::ostringstream mono;
        for (int v = 0; v < kNumVars; ++v)
            for (int e = 0; e < t.exp[v]; ++e) {
                if (any) mono << "*";
                mono << var_name(v);
                any = true;
            }
        if (!unit || !any) os << (t.coeff.y != 0 ? "(" + c + ")" : c) << (any ? "*" : "");
        os << mono.str();
    }
    if (first) os << "0";
    if (kind == Kind::Vanishes) {
        os << " = 0";
    } else {
        os << (weight ? " divided by two_pi_i" + (weight > 1 ? "^" + std::to_string(weight) : std::string()) : std::string()) << " is algebraic";
    }
    return os.str();
}

namespace {

struct Builder {
    RelationPolynomial r;
    QuadField F;
    Builder(std::string name, RelationPolynomial::Kind k, int w, QuadField f) : F(std::move(f)) {
        r.name = std::move(name);
        r.kind = k;
        r.weight = w;
    }
    Builder& add(const QT& c, std::initializer_list<int> vars) {
        if (c.is_zero()) return *this;
        std::array<int, kNumVars> e{};
        for (int v : vars) ++e[v];
        for (auto& t : r.terms)
            if (t.exp == e) {
                t.coeff = qt_add(t.coeff, c);
                return *this;
            }
        r.terms.push_back(Term{c, e});
        return *this;
    }
    Builder& add(long c, std::initializer_list<int> vars) { return add(QT(Q(c)), vars); }
    // omega ^ Upsilon = -omega2 ups1 + omega1 ups2, times the extra variables
    Builder& omega_wedge(const QT& c, std::initializer_list<int> extra = {}) {
        return add_v(qt_scale(c, -1), {pv::W2, pv::U1}, extra).add_v(c, {pv::W1, pv::U2}, extra);
    }
    Builder& eta_wedge(const QT& c, std::initializer_list<int> extra = {}) {
        return add_v(qt_scale(c, -1), {pv::E2, pv::U1}, extra).add_v(c, {pv::E1, pv::U2}, extra);
    }
    Builder& add_v(const QT& c, std::initializer_list<int> vars, std::initializer_list<int> extra) {
        if (c.is_zero()) return *this;
        std::array<int, kNumVars> e{};
        for (int v : vars) ++e[v];
        for (int v : extra) ++e[v];
        for (auto& t : r.terms)
            if (t.exp == e) {
                t.coeff = qt_add(t.coeff, c);
                return *this;
            }
        r.terms.push_back(Term{c, e});
        return *this;
    }
    RelationPolynomial done() {
        r.terms.erase(std::remove_if(r.terms.begin(), r.terms.end(), [](const Term& t) { return t.coeff.is_zero(); }), r.terms.end());
        return r;
    }
};

using K = RelationPolynomial::Kind;

}  // namespace

std::vector<RelationPolynomial> case_relations(CaseId c, const CaseData& d, bool cm) {
    using namespace pv;
    const QuadField F = cm ? d.field : QuadField{1, 0, 1};
    std::vector<RelationPolynomial> out;
    out.push_back(Builder("legendre", K::Vanishes, 0, F).add(1, {T}).add(-1, {W1, E2}).add(1, {W2, E1}).done());
    QT kt;
    if (cm) {
        if (!d.kappa) throw Error(ErrorCode::MissingConstant, "CM relations need kappa in Q(tau)");
        kt = qt_mul(*d.kappa, qt_inv(QT(0, 1), F), F);
        QT tau(0, 1), taub = qt_conj(QT(0, 1), F);
        out.push_back(Builder("cm_periods", K::Vanishes, 0, F).add(1, {W2}).add(qt_scale(tau, -1), {W1}).done());
        out.push_back(Builder("cm_quasi_periods", K::Vanishes, 0, F).add(taub, {E1}).add(-1, {E2}).add(qt_scale(kt, -1), {W1}).done());
    }
    auto need = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorCode::MissingConstant, std::string("case relations need ") + what);
    };
    const bool dep = c == CaseId::DEP_NONANTISYM || c == CaseId::DEP_ANTISYM_R_FREE || c == CaseId::DEP_ANTISYM_R_TORSION;
    const bool pt = c == CaseId::P_TORSION_R_FREE || c == CaseId::P_TORSION_R_TORSION || c == CaseId::BOTH_TORSION_R_FREE ||
                    c == CaseId::BOTH_TORSION_R_TORSION;
    const bool qt = c == CaseId::Q_TORSION_R_FREE || c == CaseId::Q_TORSION_R_TORSION || c == CaseId::BOTH_TORSION_R_FREE ||
                    c == CaseId::BOTH_TORSION_R_TORSION;
    const bool rt = c == CaseId::DEP_ANTISYM_R_TORSION || c == CaseId::P_TORSION_R_TORSION || c == CaseId::Q_TORSION_R_TORSION ||
                    c == CaseId::BOTH_TORSION_R_TORSION;
    QT phib;
    if (dep) {
        need(d.has_phi, "the endomorphism phi");
        if (d.phi.y != 0) need(cm, "CM for phi outside Q");
        phib = qt_conj(d.phi, F);
        out.push_back(Builder("dependence_periods", K::Vanishes, 0, F)
                          .omega_wedge(QT(1))
                          .add(qt_scale(d.phi, -1), {T, P})
                          .add(QT(-d.d1), {T, W1})
                          .add(QT(-d.d2), {T, W2})
                          .done());
        Builder b("dependence_quasi_periods", K::AlgebraicValue, 1, F);
        b.eta_wedge(QT(1)).add(qt_scale(phib, -1), {T, ZP}).add(QT(-d.d1), {T, E1}).add(QT(-d.d2), {T, E2});
        if (d.phi.y != 0) b.add(qt_scale(kt, d.phi.y), {T, P});
        out.push_back(b.done());
    }
    if (pt) {
        need(d.has_alpha, "the torsion coordinates of p");
        out.push_back(Builder("p_torsion", K::Vanishes, 0, F).add(1, {P}).add(QT(-d.a1), {W1}).add(QT(-d.a2), {W2}).done());
        out.push_back(Builder("p_torsion_zeta", K::AlgebraicValue, 0, F).add(1, {ZP}).add(QT(-d.a1), {E1}).add(QT(-d.a2), {E2}).done());
    }
    if (qt) {
        need(d.has_beta, "the torsion coordinates of q");
        out.push_back(Builder("q_torsion", K::Vanishes, 0, F).omega_wedge(QT(1)).add(QT(-d.b1), {T, W1}).add(QT(-d.b2), {T, W2}).done());
        out.push_back(
            Builder("q_torsion_zeta", K::AlgebraicValue, 1, F).eta_wedge(QT(1)).add(QT(-d.b1), {T, E1}).add(QT(-d.b2), {T, E2}).done());
    }
    if (rt) {
        need(d.gamma_tilde.has_value(), "the rational reduced invariant");
        const Q& g = *d.gamma_tilde;
        Builder b("toric_torsion", K::Vanishes, 0, F);
        if (qt) {
            // T*X + p*(eta ^ Upsilon - T*beta.eta) - g*T^2, the algebraic constant of q eliminated
            b.add(1, {T, X}).eta_wedge(QT(1), {P}).add(QT(-d.b1), {T, P, E1}).add(QT(-d.b2), {T, P, E2}).add(QT(-g), {T, T});
        } else if (pt) {
            b.add(1, {X}).add(QT(-d.a1), {U1}).add(QT(-d.a2), {U2}).add(QT(-g), {T});
        } else {
            // T*X - T*phi*p*zeta_p - (1/2) T (kappa/tau) phi2 p^2 + p*(eta ^ Upsilon - T(phib zeta_p - (kappa/tau) phi2 p + delta.eta)) - g T^2
            QT half_kt = qt_scale(kt, d.phi.y / 2);
            b.add(1, {T, X})
                .add(qt_scale(d.phi, -1), {T, P, ZP})
                .add(qt_scale(half_kt, -1), {T, P, P})
                .eta_wedge(QT(1), {P})
                .add(qt_scale(phib, -1), {T, P, ZP})
                .add(qt_scale(kt, d.phi.y), {T, P, P})
                .add(QT(-d.d1), {T, P, E1})
                .add(QT(-d.d2), {T, P, E2})
                .add(QT(-g), {T, T});
        }
        out.push_back(b.done());
    }
    return out;
}

const char* relation_status_name(RelationStatus s) {
    switch (s) {
        case RelationStatus::Certified: return "certified";
        case RelationStatus::Violated: return "violated";
        case RelationStatus::Unverified: return "unverified";
    }
    return "?";
}

bool VerificationReport::all_certified() const {
    for (auto& c : checks)
        if (c.status != RelationStatus::Certified) return false;
    return true;
}

bool VerificationReport::any_violated() const {
    for (auto& c : checks)
        if (c.status == RelationStatus::Violated) return true;
    return false;
}

std::array<Complex, kNumVars> period_vars(const PeriodMatrix& pm) {
    if (pm.dual || pm.n != 1 || pm.s != 1) throw Error(ErrorCode::ShapeMismatch, "polynomial relations are stated for Pi_M with n = s = 1");
    return {pm.m[0][0], pm.m[0][1], pm.m[0][2], pm.m[1][0], pm.m[2][0], pm.m[1][1], pm.m[1][2], pm.m[2][1], pm.m[2][2], pm.m[3][0]};
}

Complex exact_tau(const std::optional<CMData>& cm, const Complex& approx) {
    if (!cm) return approx;
    const long b = approx.prec();
    Complex A = from_mpq(b, Q(cm->a)), B = from_mpq(b, Q(cm->b)), C = from_mpq(b, Q(cm->c));
    Complex disc = sqrt(B * B - A * C.mul_si(4));
    Complex r1 = (-B + disc) / A.mul_si(2), r2 = (-B - disc) / A.mul_si(2);
    return abs(r1 - approx) < abs(r2 - approx) ? r1 : r2;
}

Complex evaluate(const RelationPolynomial& r, const std::array<Complex, kNumVars>& v, const Complex& tau, Real* scale) {
    const long b = v[0].prec();
    Complex acc(b);
    Real sc(64, 0L);
    for (auto& t : r.terms) {
        Complex term = from_mpq(b, t.coeff.x) + tau.mul_q(t.coeff.y);
        for (int j = 0; j < kNumVars; ++j)
            for (int e = 0; e < t.exp[j]; ++e) term *= v[j];
        sc = max(sc, abs(term).rounded(64));
        acc += term;
    }
    if (scale) *scale = sc;
    return acc;
}

namespace {

Complex tau_of(const PeriodMatrix& pm, const std::optional<CMData>& cm) { return exact_tau(cm, pm.m[2][1] / pm.m[1][1]); }

}  // namespace

Complex algebraic_value(const RelationPolynomial& r, const PeriodMatrix& pm, const std::optional<CMData>& cm) {
    auto v = period_vars(pm);
    return evaluate(r, v, tau_of(pm, cm)) / pow(v[pv::T], r.weight);
}

Complex evaluate_on(const RelationPolynomial& r, const PeriodMatrix& pm, const std::optional<CMData>& cm, Real* scale) {
    return evaluate(r, period_vars(pm), tau_of(pm, cm), scale);
}

int jacobian_rank(const PeriodMatrix& pm, const std::vector<RelationPolynomial>& rels, const std::optional<CMData>& cm) {
    auto v = period_vars(pm);
    const long b = v[0].prec();
    Complex tau = tau_of(pm, cm);
    std::vector<std::vector<Complex>> J;
    for (auto& r : rels) {
        std::vector<Complex> row(kNumVars, Complex(b));
        for (auto& t : r.terms) {
            Complex c = from_mpq(b, t.coeff.x) + tau.mul_q(t.coeff.y);
            for (int j = 0; j < kNumVars; ++j) {
                if (t.exp[j] == 0) continue;
                Complex d = c.mul_si(t.exp[j]);
                for (int l = 0; l < kNumVars; ++l) {
                    int e = t.exp[l] - (l == j ? 1 : 0);
                    for (int x = 0; x < e; ++x) d *= v[l];
                }
                row[j] += d;
            }
        }
        if (r.kind == RelationPolynomial::Kind::AlgebraicValue && r.weight > 0) {
            // polynomial - c*T^w with c the algebraic value
            Complex c = algebraic_value(r, pm, cm);
            row[pv::T] -= c.mul_si(r.weight) * pow(v[pv::T], r.weight - 1);
        }
        J.push_back(row);
    }
    // row-normalized elimination with a relative threshold of half the precision
    for (auto& row : J) {
        Real m(64, 0L);
        for (auto& x : row) m = max(m, abs(x).rounded(64));
        if (!m.is_zero())
            for (auto& x : row) x /= m;
    }
    const long thr = -(b / 2);
    int rank = 0;
    std::vector<bool> used(J.size(), false);
    for (int col = 0; col < kNumVars; ++col) {
        int piv = -1;
        Real best(64, 0L);
        for (size_t r = 0; r < J.size(); ++r) {
            if (used[r]) continue;
            Real a = abs(J[r][col]).rounded(64);
            if (a > best) {
                best = a;
                piv = static_cast<int>(r);
            }
        }
        if (piv < 0 || best.is_zero() || best.exponent() < thr) continue;
        used[piv] = true;
        ++rank;
        for (size_t r = 0; r < J.size(); ++r) {
            if (used[r]) continue;
            Complex f = J[r][col] / J[piv][col];
            for (int j = col; j < kNumVars; ++j) J[r][j] -= f * J[piv][j];
        }
    }
    return rank;
}

VerificationReport verify_relations(const PeriodMatrix& pm, const std::vector<RelationPolynomial>& rels, const PrecisionContext& ctx,
                                    const mpz_class& max_height, const std::optional<CMData>& cm, const PeriodSource* rerun) {
    VerificationReport out;
    auto v = period_vars(pm);
    Complex tau = tau_of(pm, cm);
    std::map<long, PeriodMatrix> cache;
    auto at = [&](const PrecisionContext& c) -> const PeriodMatrix& {
        auto it = cache.find(c.bits());
        if (it == cache.end()) it = cache.emplace(c.bits(), (*rerun)(c)).first;
        return it->second;
    };
    for (auto& r : rels) {
        RelationCheck ch;
        ch.name = r.name;
        ch.kind = r.kind;
        if (r.kind == RelationPolynomial::Kind::Vanishes) {
            Real sc(64);
            Complex val = evaluate(r, v, tau, &sc);
            CertifiedBool cb;
            if (rerun) {
                cb = certify_zero(val, sc, ctx, [&](const PrecisionContext& c) {
                    const PeriodMatrix& hi = at(c);
                    Real s2(64);
                    Complex x = evaluate(r, period_vars(hi), tau_of(hi, cm), &s2);
                    return Scaled{x, s2};
                });
            } else {
                cb = check_zero(val, sc, ctx);
            }
            ch.residual_exp = cb.residual_exp;
            ch.scale_exp = cb.scale_exp;
            ch.status = cb.is_zero() ? RelationStatus::Certified : cb.is_nonzero() ? RelationStatus::Violated : RelationStatus::Unverified;
        } else {
            Complex val = algebraic_value(r, pm, cm);
            ch.scale_exp = val.is_zero() ? 0 : abs(val).exponent();
            if (rerun) {
                auto rec = algebraic_reconstruct(
                    [&](const PrecisionContext& c) {
                        if (c.bits() == pm.bits) return algebraic_value(r, pm, cm);
                        return algebraic_value(r, at(c), cm);
                    },
                    4, max_height, ctx);
                if (rec) {
                    ch.status = RelationStatus::Certified;
                    ch.residual_exp = rec->residual_exp;
                    ch.value = rec;
                }
            }
        }
        out.checks.push_back(ch);
    }
    out.jacobian_rank = jacobian_rank(pm, rels, cm);
    return out;
}

// ---------------------------------------------------------------- classification

namespace {

std::vector<std::string> basis_names(CaseId c, bool cm) {
    std::vector<std::string> b{"omega1", "eta1"};
    if (!cm) {
        b.push_back("omega2");
        b.push_back("eta2");
    }
    const std::string X = "log f_q(p) - l";
    switch (c) {
        case CaseId::GENERIC:
            for (auto s : {"p", "zeta(p)", "q", "zeta(q)"}) b.push_back(s);
            b.push_back(X);
            break;
        case CaseId::DEP_NONANTISYM:
        case CaseId::DEP_ANTISYM_R_FREE:
        case CaseId::Q_TORSION_R_FREE:
            b.push_back("p");
            b.push_back("zeta(p)");
            b.push_back(X);
            break;
        case CaseId::DEP_ANTISYM_R_TORSION:
        case CaseId::Q_TORSION_R_TORSION:
            b.push_back("p");
            b.push_back("zeta(p)");
            break;
        case CaseId::P_TORSION_R_FREE:
            b.push_back("q");
            b.push_back("zeta(q)");
            b.push_back(X);
            break;
        case CaseId::P_TORSION_R_TORSION:
            b.push_back("q");
            b.push_back("zeta(q)");
            break;
        case CaseId::BOTH_TORSION_R_FREE:
            b.push_back(X);
            break;
        case CaseId::BOTH_TORSION_R_TORSION:
            break;
    }
    return b;
}

}  // namespace

ClassificationReport classify(const OneMotive& M, const PrecisionContext& ctx, const mpz_class& max_height) {
    M.validate();
    if (M.n != 1 || M.s != 1) throw Error(ErrorCode::InvalidArgument, "classification is defined for n = s = 1");
    ClassificationReport rep;
    rep.cm_data = detect_cm(M.curve, ctx, max_height);
    const auto& cm = rep.cm_data;
    rep.cm = cm.has_value();
    rep.dim_MT_E = rep.cm ? 2 : 4;
    if (!rep.cm) rep.heuristic_flags.push_back("cm: none found up to the height bound");

    auto pfn = [&M](const PrecisionContext& c) { return motive_points(M, c).p[0]; };
    auto qfn = [&M](const PrecisionContext& c) { return motive_points(M, c).q[0]; };
    auto ambiguous = [](const std::string& w) { throw Error(ErrorCode::AmbiguousClassification, w); };

    // torsion: a declared order bounds the denominators; otherwise the height bound does
    mpz_class hp = M.hints.p_torsion ? mpz_class(*M.hints.p_torsion) : max_height;
    mpz_class hq = M.hints.q_torsion ? mpz_class(*M.hints.q_torsion) : max_height;
    rep.p_torsion = lattice_membership(pfn, M.curve, hp, ctx);
    rep.q_torsion = lattice_membership(qfn, M.curve, hq, ctx);
    if (M.hints.p_torsion && (!rep.p_torsion || mpz_class(*M.hints.p_torsion) % rep.p_torsion->order != 0))
        ambiguous("hint p_torsion is not confirmed by the numbers");
    if (M.hints.q_torsion && (!rep.q_torsion || mpz_class(*M.hints.q_torsion) % rep.q_torsion->order != 0))
        ambiguous("hint q_torsion is not confirmed by the numbers");
    if (!rep.p_torsion) rep.heuristic_flags.push_back("p: not torsion up to the height bound");
    if (!rep.q_torsion) rep.heuristic_flags.push_back("q: not torsion up to the height bound");

    CaseData& d = rep.data;
    d.field = cm ? cm->field() : QuadField{1, 0, 1};
    if (cm) d.kappa = cm->kappa_exact;
    if (rep.p_torsion) {
        d.has_alpha = true;
        d.a1 = rep.p_torsion->a;
        d.a2 = rep.p_torsion->b;
    }
    if (rep.q_torsion) {
        d.has_beta = true;
        d.b1 = rep.q_torsion->a;
        d.b2 = rep.q_torsion->b;
    }
    PairStructure& st = rep.structure;
    bool r_applies = true;
    enum { Gen, Dep, PT, QT_, Both } family = Gen;
    if (rep.p_torsion && rep.q_torsion) {
        family = Both;
        st.kind = PairStructure::Kind::QTorsion;
        st.b1 = d.b1;
        st.b2 = d.b2;
    } else if (rep.q_torsion) {
        family = QT_;
        st.kind = PairStructure::Kind::QTorsion;
        st.b1 = d.b1;
        st.b2 = d.b2;
    } else if (rep.p_torsion) {
        family = PT;
        st.kind = PairStructure::Kind::PTorsion;
        st.a1 = d.a1;
        st.a2 = d.a2;
    } else {
        rep.dependence = endo_dependence(pfn, qfn, M.curve, cm, max_height, ctx);
        if (rep.dependence) {
            family = Dep;
            d.has_phi = true;
            d.phi = QT(rep.dependence->phi1, rep.dependence->phi2);
            d.d1 = rep.dependence->delta1;
            d.d2 = rep.dependence->delta2;
            rep.antisymmetric = is_antisymmetric(d.phi.x, d.phi.y, cm);
            if (rep.antisymmetric) {
                st.kind = PairStructure::Kind::Dependent;
                st.phi1 = d.phi.x;
                st.phi2 = d.phi.y;
                st.d1 = d.d1;
                st.d2 = d.d2;
            } else {
                r_applies = false;
            }
        } else {
            rep.heuristic_flags.push_back("p, q: independent over End(E) up to the height bound");
            r_applies = false;
        }
    }
    if (M.hints.q_equals_phi_p) {
        const auto& [h1, h2] = *M.hints.q_equals_phi_p;
        auto resid = lattice_membership(
            [&](const PrecisionContext& c) {
                auto L = M.curve.lattice(c);
                Complex tau = exact_tau(cm, L->tau());
                return qfn(c) - (from_mpq(L->bits, h1) + tau.mul_q(h2)) * pfn(c);
            },
            M.curve, max_height, ctx);
        if (!resid) ambiguous("hint q_equals_phi_p is not confirmed by the numbers");
    }

    bool r_torsion = false;
    if (r_applies) {
        if (st.kind == PairStructure::Kind::Dependent && (!cm || !cm->kappa_exact))
            throw Error(ErrorCode::MissingConstant, "antisymmetric dependence needs kappa in Q(tau)");
        d.gamma_tilde = rational_reconstruct([&](const PrecisionContext& c) { return reduced_gamma(M, 0, 0, st, cm, c); }, max_height, ctx);
        r_torsion = d.gamma_tilde.has_value();
        if (!r_torsion) rep.heuristic_flags.push_back("R: not torsion up to the height bound");
    }
    if (M.hints.r_torsion && *M.hints.r_torsion != r_torsion) {
        if (!r_applies) ambiguous("hint r_torsion does not apply to this configuration");
        ambiguous("hint r_torsion is not confirmed by the numbers");
    }
    switch (family) {
        case Gen: rep.id = CaseId::GENERIC; break;
        case Dep:
            rep.id = !rep.antisymmetric ? CaseId::DEP_NONANTISYM : r_torsion ? CaseId::DEP_ANTISYM_R_TORSION : CaseId::DEP_ANTISYM_R_FREE;
            break;
        case PT: rep.id = r_torsion ? CaseId::P_TORSION_R_TORSION : CaseId::P_TORSION_R_FREE; break;
        case QT_: rep.id = r_torsion ? CaseId::Q_TORSION_R_TORSION : CaseId::Q_TORSION_R_FREE; break;
        case Both: rep.id = r_torsion ? CaseId::BOTH_TORSION_R_TORSION : CaseId::BOTH_TORSION_R_FREE; break;
    }

    // the dimension formulas computed independently must land on the case's values
    rep.dims = unipotent_dims(M, cm, ctx, max_height);
    for (auto& f : rep.dims.heuristic_flags) rep.heuristic_flags.push_back(f);
    CaseDims e = expected_dims(rep.id);
    if (rep.dims.dim_B != e.dim_B || rep.dims.dim_Zprime != e.dim_Zprime || rep.dims.dim_ZmodZprime != e.dim_ZmodZprime)
        ambiguous(std::string("dimension formulas disagree with case ") + case_name(rep.id) + ": got (" + std::to_string(rep.dims.dim_B) +
                  "," + std::to_string(rep.dims.dim_Zprime) + "," + std::to_string(rep.dims.dim_ZmodZprime) + ")");
    rep.dim_MT_M = rep.dim_MT_E + rep.dims.dim_UR;

    rep.relations = case_relations(rep.id, d, rep.cm);
    PeriodMatrix pm = build_period_matrix(M, ctx, cm);
    PeriodSource src = [&M, &cm](const PrecisionContext& c) { return build_period_matrix(M, c, cm); };
    rep.verification = verify_relations(pm, rep.relations, ctx, max_height, cm, &src);
    rep.basis = basis_names(rep.id, rep.cm);
    std::sort(rep.heuristic_flags.begin(), rep.heuristic_flags.end());
    rep.heuristic_flags.erase(std::unique(rep.heuristic_flags.begin(), rep.heuristic_flags.end()), rep.heuristic_flags.end());
    return rep;
}

}  // namespace motper
