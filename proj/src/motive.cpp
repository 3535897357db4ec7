#include "motper/motive.hpp"

#include <climits>
#include <mutex>

namespace motper {

PointSpec PointSpec::log(CStr z) {
    PointSpec p;
    p.kind = Kind::Log;
    p.z = std::move(z);
    return p;
}
PointSpec PointSpec::curve(CStr x, CStr y) {
    PointSpec p;
    p.kind = Kind::Curve;
    p.x = std::move(x);
    p.y = std::move(y);
    return p;
}
PointSpec PointSpec::lattice(Q a, Q b) {
    PointSpec p;
    p.kind = Kind::Lattice;
    p.a = std::move(a);
    p.b = std::move(b);
    return p;
}
PointSpec PointSpec::endo(Q phi1, Q phi2, int base, Q a, Q b) {
    PointSpec p;
    p.kind = Kind::Endo;
    p.phi1 = std::move(phi1);
    p.phi2 = std::move(phi2);
    p.base = base;
    p.a = std::move(a);
    p.b = std::move(b);
    return p;
}

EllSpec EllSpec::literal(CStr v) {
    EllSpec e;
    e.kind = Kind::Literal;
    e.value = std::move(v);
    return e;
}
EllSpec EllSpec::of_gamma(Q g) {
    EllSpec e;
    e.kind = Kind::Gamma;
    e.gamma = std::move(g);
    return e;
}
EllSpec EllSpec::reduced(Q g) {
    EllSpec e;
    e.kind = Kind::Reduced;
    e.gamma = std::move(g);
    return e;
}

void OneMotive::validate() const {
    if (n < 1 || s < 1) throw Error(ErrorCode::InvalidArgument, "n and s must be positive");
    if (static_cast<int>(p.size()) != n || static_cast<int>(q.size()) != s) throw Error(ErrorCode::ShapeMismatch, "point counts differ from (n, s)");
    if (static_cast<int>(ell.size()) != n) throw Error(ErrorCode::ShapeMismatch, "ell must have n rows");
    for (auto& r : ell)
        if (static_cast<int>(r.size()) != s) throw Error(ErrorCode::ShapeMismatch, "ell must have s columns");
    if (!p_shift.empty() && static_cast<int>(p_shift.size()) != n) throw Error(ErrorCode::ShapeMismatch, "p_shift size");
    if (!q_shift.empty() && static_cast<int>(q_shift.size()) != s) throw Error(ErrorCode::ShapeMismatch, "q_shift size");
    if (!branch.empty()) {
        if (static_cast<int>(branch.size()) != n) throw Error(ErrorCode::ShapeMismatch, "branch rows");
        for (auto& r : branch)
            if (static_cast<int>(r.size()) != s) throw Error(ErrorCode::ShapeMismatch, "branch columns");
    }
    for (int i = 0; i < n; ++i)
        if (p[i].kind == PointSpec::Kind::Endo && (p[i].base < 0 || p[i].base >= i))
            throw Error(ErrorCode::InvalidArgument, "endomorphic p_i must refer to an earlier p");
    for (auto& x : q)
        if (x.kind == PointSpec::Kind::Endo && (x.base < 0 || x.base >= n)) throw Error(ErrorCode::InvalidArgument, "endomorphic q refers to a missing p");
    if (hints.p_torsion && *hints.p_torsion < 1) throw Error(ErrorCode::InvalidArgument, "p_torsion must be positive");
    if (hints.q_torsion && *hints.q_torsion < 1) throw Error(ErrorCode::InvalidArgument, "q_torsion must be positive");
}

namespace {

// decimal places written in a numeric string (0 for integers, 1000 for forms with an exponent)
int written_places(const std::string& s) {
    if (s.find_first_of("eE") != std::string::npos) return 1000;
    auto dot = s.find('.');
    return dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1);
}

// x is exact; the given y picks the sign of sqrt(4x^3 - g2 x - g3) and must agree to the digits written
Complex curve_y(const CStr& xs, const CStr& ys, const QuasiPeriodLattice& L) {
    const long bits = L.bits;
    Complex x = Complex::parse(bits, xs.re, xs.im), y = Complex::parse(bits, ys.re, ys.im);
    Complex r = sqrt(x * x * x.mul_si(4) - L.g2 * x - L.g3);
    if (abs(y + r) < abs(y - r)) r = -r;
    int places = std::min(written_places(ys.re), written_places(ys.im));
    if (places >= 1000) places = static_cast<int>(bits * 0.30103) - 4;
    // one unit in the last written place, with slack
    Real tol = Real::parse(64, "1e-" + std::to_string(std::max(0, places - 1))) * max(Real(64, 1L), abs(r).rounded(64));
    if (places * 3.33 >= bits) tol = max(tol, abs(r).rounded(64).mul_2exp(-bits + 8));
    if (abs(y - r).rounded(64) > tol) throw Error(ErrorCode::NotOnCurve, "point does not satisfy y^2 = 4x^3 - g2 x - g3");
    return r;
}

Complex zmul(const Complex& z, const mpz_class& k) { return z * Real(z.prec(), k); }

Complex lattice_point(const Q& a, const Q& b, const QuasiPeriodLattice& L) {
    return L.omega1.mul_q(a) + L.omega2.mul_q(b);
}

const mpz_class& shift_at(const std::vector<std::array<mpz_class, 2>>& v, int i, int j) {
    static const mpz_class zero = 0;
    return v.empty() ? zero : v[i][j];
}

const mpz_class& branch_at(const std::vector<std::vector<mpz_class>>& v, int i, int k) {
    static const mpz_class zero = 0;
    return v.empty() ? zero : v[i][k];
}

// arg in (-pi, pi]; values numerically on the negative axis get +pi whatever the sign of the rounding noise
Complex stable_log(const Complex& v) {
    Complex l = log(v);
    if (v.re.sign() < 0) {
        Real r = abs(v).rounded(64);
        if (abs(v.im).rounded(64) <= r.mul_2exp(-60)) l.im = Real::pi(v.prec());
    }
    return l;
}

std::array<mpz_class, 2> cell_of(const Complex& z, const QuasiPeriodLattice& L) {
    auto [x1, x2] = lattice_coords(z, L);
    Real eps(64, 1L);
    eps = eps.mul_2exp(-64);
    return {(x1 + eps).floor_to_z(), (x2 + eps).floor_to_z()};
}

struct Points {
    std::shared_ptr<const QuasiPeriodLattice> L;
    std::vector<Complex> p0, q0;  // without path shifts
    std::vector<Complex> p, q;
};

Points points_of(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx) {
    Points out;
    out.L = M.curve.lattice(ctx);
    const auto& L = *out.L;
    for (int i = 0; i < M.n; ++i) {
        if (M.p[i].kind == PointSpec::Kind::Endo) {
            const PointSpec& e = M.p[i];
            Complex phi = from_mpq(L.bits, e.phi1) + L.tau().mul_q(e.phi2);
            out.p0.push_back(phi * out.p0[e.base] + lattice_point(e.a, e.b, L));
        } else {
            out.p0.push_back(point_value(M, M.p[i], false, L, cm, ctx));
        }
    }
    for (int k = 0; k < M.s; ++k) {
        if (M.q[k].kind == PointSpec::Kind::Endo) {
            const PointSpec& e = M.q[k];
            Complex phi = from_mpq(L.bits, e.phi1) + L.tau().mul_q(e.phi2);
            out.q0.push_back(phi * out.p0[e.base] + lattice_point(e.a, e.b, L));
        } else {
            out.q0.push_back(point_value(M, M.q[k], true, L, cm, ctx));
        }
    }
    for (int i = 0; i < M.n; ++i)
        out.p.push_back(out.p0[i] + zmul(L.omega1, shift_at(M.p_shift, i, 0)) + zmul(L.omega2, shift_at(M.p_shift, i, 1)));
    for (int k = 0; k < M.s; ++k)
        out.q.push_back(out.q0[k] + zmul(L.omega2, shift_at(M.q_shift, k, 0)) - zmul(L.omega1, shift_at(M.q_shift, k, 1)));
    return out;
}

Complex log_f_or_pole(const Complex& q, const Complex& p, const QuasiPeriodLattice& L, const PrecisionContext& ctx,
                      std::array<mpz_class, 2>* cell) {
    try {
        return canonical_log_f(q, p, L, ctx, cell);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::PoleOrZero || e.code() == ErrorCode::PoleAtLatticePoint)
            throw Error(ErrorCode::PoleConfiguration, "log f_q(p) at a pole: p, q or p + q is a lattice point, no path change helps");
        throw;
    }
}

Complex zeta_or_pole(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    try {
        return wp_zeta(z, L, ctx);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::PoleOrZero || e.code() == ErrorCode::PoleAtLatticePoint)
            throw Error(ErrorCode::PoleConfiguration, "a point of the motive is a lattice point");
        throw;
    }
}

}  // namespace

Complex point_value(const OneMotive& M, const PointSpec& ps, bool is_q, const QuasiPeriodLattice& L, const std::optional<CMData>&,
                    const PrecisionContext& ctx) {
    (void)M;
    (void)is_q;
    switch (ps.kind) {
        case PointSpec::Kind::Log: {
            Complex z = Complex::parse(L.bits, ps.z.re, ps.z.im);
            if (!z.is_finite()) throw Error(ErrorCode::InvalidArgument, "point logarithm is not finite");
            return z;
        }
        case PointSpec::Kind::Curve:
            return elliptic_log(Complex::parse(L.bits, ps.x.re, ps.x.im), curve_y(ps.x, ps.y, L), L, ctx);
        case PointSpec::Kind::Lattice:
            return lattice_point(ps.a, ps.b, L);
        case PointSpec::Kind::Endo:
            break;
    }
    throw Error(ErrorCode::InvalidArgument, "endomorphic point needs its base; use motive_values");
}

MotivePoints motive_points(const OneMotive& M, const PrecisionContext& ctx) {
    M.validate();
    Points pts = points_of(M, std::nullopt, ctx);
    return MotivePoints{pts.L, pts.p, pts.q};
}

Complex canonical_log_f(const Complex& q, const Complex& p, const QuasiPeriodLattice& L, const PrecisionContext& ctx,
                        std::array<mpz_class, 2>* cell_out) {
    auto cell = cell_of(p, L);
    Complex p0 = p - zmul(L.omega1, cell[0]) - zmul(L.omega2, cell[1]);
    Complex base = stable_log(serre_f(q, p0, L, ctx));
    Complex zq = wp_zeta(q, L, ctx);
    Complex u1 = L.eta1 * q - L.omega1 * zq, u2 = L.eta2 * q - L.omega2 * zq;
    if (cell_out) *cell_out = cell;
    return base + zmul(u1, cell[0]) + zmul(u2, cell[1]);
}

MotiveValues motive_values(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx) {
    M.validate();
    Points pts = points_of(M, cm, ctx);
    const auto& L = *pts.L;
    const Complex T = L.two_pi_i();
    MotiveValues v;
    v.L = pts.L;
    v.p = pts.p;
    v.q = pts.q;
    for (auto& z : v.p) v.zp.push_back(zeta_or_pole(z, L, ctx));
    for (auto& z : v.q) v.zq.push_back(zeta_or_pole(z, L, ctx));
    for (int k = 0; k < M.s; ++k)
        v.ups_q.push_back({third_kind_period(v.q[k], 1, L, ctx), third_kind_period(v.q[k], 2, L, ctx)});
    v.cell.resize(M.n);
    v.logf.assign(M.n, std::vector<Complex>(M.s));
    for (int i = 0; i < M.n; ++i)
        for (int k = 0; k < M.s; ++k)
            v.logf[i][k] = log_f_or_pole(v.q[k], v.p[i], L, ctx, &v.cell[i]) + zmul(T, branch_at(M.branch, i, k));

    // toric logs are defined against the unshifted motive
    bool need_base = false;
    for (auto& r : M.ell)
        for (auto& e : r)
            if (e.kind != EllSpec::Kind::Literal) need_base = true;
    std::optional<MotiveValues> base;
    if (need_base) {
        MotiveValues b;
        b.L = pts.L;
        b.p = pts.p0;
        b.q = pts.q0;
        for (auto& z : b.p) b.zp.push_back(zeta_or_pole(z, L, ctx));
        for (auto& z : b.q) b.zq.push_back(zeta_or_pole(z, L, ctx));
        for (int k = 0; k < M.s; ++k)
            b.ups_q.push_back({third_kind_period(b.q[k], 1, L, ctx), third_kind_period(b.q[k], 2, L, ctx)});
        b.logf.assign(M.n, std::vector<Complex>(M.s));
        b.cell.resize(M.n);
        for (int i = 0; i < M.n; ++i)
            for (int k = 0; k < M.s; ++k) b.logf[i][k] = log_f_or_pole(b.q[k], b.p[i], L, ctx, &b.cell[i]);
        base = std::move(b);
    }
    v.ell.assign(M.n, std::vector<Complex>(M.s));
    v.X.assign(M.n, std::vector<Complex>(M.s));
    for (int i = 0; i < M.n; ++i)
        for (int k = 0; k < M.s; ++k) {
            const EllSpec& e = M.ell[i][k];
            switch (e.kind) {
                case EllSpec::Kind::Literal:
                    v.ell[i][k] = Complex::parse(L.bits, e.value.re, e.value.im);
                    if (!v.ell[i][k].is_finite()) throw Error(ErrorCode::InvalidArgument, "toric logarithm is not finite");
                    break;
                case EllSpec::Kind::Gamma:
                    v.ell[i][k] = base->logf[i][k] - T.mul_q(e.gamma);
                    break;
                case EllSpec::Kind::Reduced: {
                    PairStructure st = spec_structure(M, i, k, cm);
                    v.ell[i][k] = base->logf[i][k] + reduced_correction(*base, i, k, st, cm, ctx) - T.mul_q(e.gamma);
                    break;
                }
            }
            v.X[i][k] = v.logf[i][k] - v.ell[i][k];
        }
    return v;
}

PairStructure spec_structure(const OneMotive& M, int i, int k, const std::optional<CMData>& cm) {
    PairStructure st;
    const PointSpec& P = M.p[i];
    const PointSpec& Qs = M.q[k];
    if (Qs.kind == PointSpec::Kind::Lattice) {
        st.kind = PairStructure::Kind::QTorsion;
        st.b1 = Qs.a;
        st.b2 = Qs.b;
    } else if (P.kind == PointSpec::Kind::Lattice) {
        st.kind = PairStructure::Kind::PTorsion;
        st.a1 = P.a;
        st.a2 = P.b;
    } else if (Qs.kind == PointSpec::Kind::Endo && Qs.base == i && is_antisymmetric(Qs.phi1, Qs.phi2, cm)) {
        st.kind = PairStructure::Kind::Dependent;
        st.phi1 = Qs.phi1;
        st.phi2 = Qs.phi2;
        st.d1 = Qs.a;
        st.d2 = Qs.b;
    } else {
        throw Error(ErrorCode::Unsupported, "reduced toric logarithm needs a torsion point or an antisymmetric dependence in the specs");
    }
    return st;
}

Complex reduced_correction(const MotiveValues& v, int i, int k, const PairStructure& st, const std::optional<CMData>& cm,
                           const PrecisionContext&) {
    const auto& L = *v.L;
    switch (st.kind) {
        case PairStructure::Kind::PTorsion:
            return -(v.ups_q[k][0].mul_q(st.a1) + v.ups_q[k][1].mul_q(st.a2));
        case PairStructure::Kind::QTorsion: {
            Complex cQ = v.zq[k] - L.eta1.mul_q(st.b1) - L.eta2.mul_q(st.b2);
            return cQ * v.p[i];
        }
        case PairStructure::Kind::Dependent: {
            if (!cm || !cm->kappa_exact)
                throw Error(ErrorCode::MissingConstant, "antisymmetric dependence needs kappa in Q(tau)");
            Complex tau = L.tau();
            Complex kt = qt_value(*cm->kappa_exact, L) / tau;
            Complex phi = from_mpq(L.bits, st.phi1) + tau.mul_q(st.phi2);
            Complex phib = from_mpq(L.bits, st.phi1) + conj(tau).mul_q(st.phi2);
            const Complex& p = v.p[i];
            const Complex& zp = v.zp[i];
            Complex cD = v.zq[k] - phib * zp + (kt * p).mul_q(st.phi2) - L.eta1.mul_q(st.d1) - L.eta2.mul_q(st.d2);
            return -(phi * p * zp) - (kt * p * p).mul_q(st.phi2 / 2) + cD * p;
        }
        case PairStructure::Kind::None:
            break;
    }
    throw Error(ErrorCode::Unsupported, "no reduced invariant for a pair without structure");
}

// ---------------------------------------------------------------- matrices

PeriodMatrix build_period_matrix(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    MotiveValues v = motive_values(M, cm, ctx);
    const auto& L = *v.L;
    const long b = L.bits;
    PeriodMatrix P;
    P.n = M.n;
    P.s = M.s;
    P.bits = b;
    P.p_shift = M.p_shift;
    P.q_shift = M.q_shift;
    P.branch = M.branch;
    P.cell = v.cell;
    const int N = P.size();
    P.m.assign(N, std::vector<Complex>(N, Complex(b)));
    const int n = M.n, s = M.s;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < s; ++k) P.m[i][k] = v.X[i][k];
        P.m[i][s] = v.p[i];
        P.m[i][s + 1] = v.zp[i];
        P.m[i][s + 2 + i] = Complex(Real(b, 1L));
    }
    for (int k = 0; k < s; ++k) {
        P.m[n][k] = v.ups_q[k][0];
        P.m[n + 1][k] = v.ups_q[k][1];
        P.m[n + 2 + k][k] = L.two_pi_i();
    }
    P.m[n][s] = L.omega1;
    P.m[n][s + 1] = L.eta1;
    P.m[n + 1][s] = L.omega2;
    P.m[n + 1][s + 1] = L.eta2;
    return P;
}

PeriodMatrix build_dual_period_matrix(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    MotiveValues v = motive_values(M, cm, ctx);
    const auto& L = *v.L;
    const long b = L.bits;
    const Complex T = L.two_pi_i();
    PeriodMatrix P;
    P.dual = true;
    P.n = M.n;
    P.s = M.s;
    P.bits = b;
    P.p_shift = M.p_shift;
    P.q_shift = M.q_shift;
    P.branch = M.branch;
    P.cell = v.cell;
    const int N = P.size();
    const int n = M.n, s = M.s;
    P.m.assign(N, std::vector<Complex>(N, Complex(b)));
    for (int i = 0; i < n; ++i) P.m[i][s + 2 + i] = T;
    P.m[n][s] = L.eta2;
    P.m[n][s + 1] = -L.omega2;
    P.m[n + 1][s] = -L.eta1;
    P.m[n + 1][s + 1] = L.omega1;
    for (int i = 0; i < n; ++i) {
        P.m[n][s + 2 + i] = -(L.eta2 * v.p[i]) + L.omega2 * v.zp[i];
        P.m[n + 1][s + 2 + i] = L.eta1 * v.p[i] - L.omega1 * v.zp[i];
    }
    P.dual_branch.assign(s, std::vector<mpz_class>(n));
    for (int k = 0; k < s; ++k) {
        P.m[n + 2 + k][k] = Complex(Real(b, 1L));
        P.m[n + 2 + k][s] = v.zq[k];
        P.m[n + 2 + k][s + 1] = -v.q[k];
        for (int i = 0; i < n; ++i) {
            // independent evaluation through f_p(q); only the 2 pi i multiple is matched to the identity
            Complex raw = -log_f_or_pole(v.p[i], v.q[k], L, ctx, nullptr) + v.ell[i][k];
            Complex target = -v.X[i][k] - v.zq[k] * v.p[i] + v.q[k] * v.zp[i];
            mpz_class m = ((target - raw) / T).re.round_to_z();
            P.dual_branch[k][i] = m;
            P.m[n + 2 + k][s + 2 + i] = raw + zmul(T, m);
        }
    }
    return P;
}

OneMotive shift_paths(const OneMotive& M, const PathOffsets& off, const PrecisionContext& ctx) {
    M.validate();
    const int n = M.n, s = M.s;
    if ((!off.alpha.empty() && static_cast<int>(off.alpha.size()) != n) || (!off.alpha_star.empty() && static_cast<int>(off.alpha_star.size()) != s))
        throw Error(ErrorCode::ShapeMismatch, "path offsets do not match (n, s)");
    if (!off.sigma.empty()) {
        if (static_cast<int>(off.sigma.size()) != n) throw Error(ErrorCode::ShapeMismatch, "sigma rows");
        for (auto& r : off.sigma)
            if (static_cast<int>(r.size()) != s) throw Error(ErrorCode::ShapeMismatch, "sigma columns");
    }
    OneMotive out = M;
    if (out.p_shift.empty()) out.p_shift.assign(n, {0, 0});
    if (out.q_shift.empty()) out.q_shift.assign(s, {0, 0});
    if (out.branch.empty()) out.branch.assign(n, std::vector<mpz_class>(s, 0));

    // moving q by a lattice vector leaves f_q unchanged but moves Upsilon_Q; keep log f fixed through the branch
    Points pts = points_of(M, std::nullopt, ctx);
    for (int i = 0; i < n; ++i) {
        auto cell = cell_of(pts.p[i], *pts.L);
        for (int k = 0; k < s; ++k) {
            const mpz_class& a = shift_at(off.alpha_star, k, 0);
            const mpz_class& b = shift_at(off.alpha_star, k, 1);
            out.branch[i][k] += cell[0] * a + cell[1] * b;
        }
    }
    for (int k = 0; k < s; ++k)
        for (int j = 0; j < 2; ++j) out.q_shift[k][j] += shift_at(off.alpha_star, k, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) out.p_shift[i][j] += shift_at(off.alpha, i, j);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < s; ++k) out.branch[i][k] += branch_at(off.sigma, i, k);
    return out;
}

// ---------------------------------------------------------------- checks

namespace {

using ResidualFn = std::function<std::pair<CMatrix, std::vector<std::vector<Real>>>(const PrecisionContext&)>;

MatrixCheck certify_matrix(const ResidualFn& f, const PrecisionContext& ctx, const std::string& label) {
    auto [R, S] = f(ctx);
    std::optional<std::pair<CMatrix, std::vector<std::vector<Real>>>> hi;
    MatrixCheck out;
    for (size_t i = 0; i < R.size(); ++i)
        for (size_t j = 0; j < R[i].size(); ++j) {
            Recompute rc = [&, i, j](const PrecisionContext& c) {
                if (!hi) hi = f(c);
                return Scaled{hi->first[i][j], hi->second[i][j]};
            };
            CertifiedBool cb = certify_zero(R[i][j], S[i][j], ctx, rc);
            long rel = cb.residual_exp <= LONG_MIN / 8 ? -100000 : cb.residual_exp - std::max(0L, cb.scale_exp);
            out.worst_exp = std::max(out.worst_exp, rel);
            if (!cb.is_zero()) {
                out.ok = false;
                out.failures.push_back(label + "(" + std::to_string(i) + "," + std::to_string(j) + "): " + zero_status_name(cb.status) +
                                       ", residual 2^" + std::to_string(cb.residual_exp));
            }
        }
    return out;
}

Real mag(const Complex& z) { return abs(z).rounded(64); }

// residual of a*b^t - T*Id with the natural scale
std::pair<CMatrix, std::vector<std::vector<Real>>> duality_residual(const OneMotive& M, const std::optional<CMData>& cm,
                                                                     const PrecisionContext& c) {
    PeriodMatrix A = build_period_matrix(M, c, cm);
    PeriodMatrix D = build_dual_period_matrix(M, c, cm);
    const int N = A.size();
    Complex T = Complex::two_pi_i(A.bits);
    CMatrix R(N, std::vector<Complex>(N, Complex(A.bits)));
    std::vector<std::vector<Real>> S(N, std::vector<Real>(N, Real(64, 0L)));
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            Complex acc(A.bits);
            Real sc(64, 0L);
            for (int j = 0; j < N; ++j) {
                acc += D.m[i][j] * A.m[k][j];
                sc += mag(D.m[i][j]) * mag(A.m[k][j]);
            }
            if (i == k) acc -= T;
            R[i][k] = acc;
            S[i][k] = sc;
        }
    return {R, S};
}

}  // namespace

MatrixCheck check_duality(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    return certify_matrix([&](const PrecisionContext& c) { return duality_residual(M, cm, c); }, ctx, "duality");
}

MatrixCheck check_lemma_identities(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    // one residual matrix with three row groups: Upsilon_Q (2 x s), Upsilon_P (2 x n), Xi^t + Xi* + logQ logP^t (s x n)
    auto f = [&](const PrecisionContext& c) {
        PeriodMatrix A = build_period_matrix(M, c, cm);
        PeriodMatrix D = build_dual_period_matrix(M, c, cm);
        const int n = M.n, s = M.s;
        const int W = std::max(n, s);
        CMatrix R(4 + s, std::vector<Complex>(W, Complex(A.bits)));
        std::vector<std::vector<Real>> S(4 + s, std::vector<Real>(W, Real(64, 0L)));
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < s; ++k) {
                Complex acc = A.UpsQ(j, k);
                Real sc = mag(acc);
                for (int l = 0; l < 2; ++l) {
                    Complex t = A.PiA(j, l) * D.logQ(k, l);
                    acc += t;
                    sc = max(sc, mag(t));
                }
                R[j][k] = acc;
                S[j][k] = sc;
            }
            for (int i = 0; i < n; ++i) {
                Complex acc = D.UpsP(j, i);
                Real sc = mag(acc);
                for (int l = 0; l < 2; ++l) {
                    Complex t = D.PiAdual(j, l) * A.logP(i, l);
                    acc += t;
                    sc = max(sc, mag(t));
                }
                R[2 + j][i] = acc;
                S[2 + j][i] = sc;
            }
        }
        for (int k = 0; k < s; ++k)
            for (int i = 0; i < n; ++i) {
                Complex acc = A.Xi(i, k) + D.XiDual(k, i);
                Real sc = max(mag(A.Xi(i, k)), mag(D.XiDual(k, i)));
                for (int l = 0; l < 2; ++l) {
                    Complex t = D.logQ(k, l) * A.logP(i, l);
                    acc += t;
                    sc = max(sc, mag(t));
                }
                R[4 + k][i] = acc;
                S[4 + k][i] = sc;
            }
        return std::make_pair(R, S);
    };
    return certify_matrix(f, ctx, "lemma");
}

DetCheck check_determinants(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    DetCheck out;
    const mpz_class H = 1000;
    out.det_ratio = rational_reconstruct(
        [&](const PrecisionContext& c) {
            PeriodMatrix A = build_period_matrix(M, c, cm);
            return cmat_det(A.m) / pow(Complex::two_pi_i(A.bits), 1 + M.s);
        },
        H, ctx);
    out.dual_det_ratio = rational_reconstruct(
        [&](const PrecisionContext& c) {
            PeriodMatrix D = build_dual_period_matrix(M, c, cm);
            return cmat_det(D.m) / pow(Complex::two_pi_i(D.bits), 1 + M.n);
        },
        H, ctx);
    return out;
}

MatrixCheck check_shift(const OneMotive& M, const PathOffsets& off, const PrecisionContext& ctx, const std::optional<CMData>& cm) {
    OneMotive M2 = shift_paths(M, off, ctx);
    auto f = [&](const PrecisionContext& c) {
        PeriodMatrix A = build_period_matrix(M, c, cm);
        PeriodMatrix B = build_period_matrix(M2, c, cm);
        const int N = A.size(), n = M.n, s = M.s;
        const auto L = M.curve.lattice(c);
        Complex T = L->two_pi_i();
        CMatrix Delta(N, std::vector<Complex>(N, Complex(A.bits)));
        for (int i = 0; i < n; ++i) {
            const mpz_class& a1 = shift_at(off.alpha, i, 0);
            const mpz_class& a2 = shift_at(off.alpha, i, 1);
            Delta[i][s] = zmul(L->omega1, a1) + zmul(L->omega2, a2);
            Delta[i][s + 1] = zmul(L->eta1, a1) + zmul(L->eta2, a2);
            for (int k = 0; k < s; ++k)
                Delta[i][k] = zmul(B.UpsQ(0, k), a1) + zmul(B.UpsQ(1, k), a2) + zmul(T, branch_at(off.sigma, i, k));
        }
        for (int k = 0; k < s; ++k)
            for (int j = 0; j < 2; ++j) Delta[n + j][k] = -zmul(T, shift_at(off.alpha_star, k, j));
        CMatrix R(N, std::vector<Complex>(N, Complex(A.bits)));
        std::vector<std::vector<Real>> S(N, std::vector<Real>(N, Real(64, 0L)));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                R[i][j] = B.m[i][j] - A.m[i][j] - Delta[i][j];
                S[i][j] = max(mag(B.m[i][j]), max(mag(A.m[i][j]), mag(Delta[i][j])));
            }
        return std::make_pair(R, S);
    };
    return certify_matrix(f, ctx, "shift");
}

MotiveConstants motive_constants(const OneMotive& M, const PrecisionContext& ctx, const mpz_class& max_height, const std::optional<CMData>& cm) {
    MotiveValues v = motive_values(M, cm, ctx);
    const auto& L = *v.L;
    const Complex T = L.two_pi_i();
    MotiveConstants out;
    auto coords = [&](const Complex& z, const Complex& zz) {
        return std::array<Complex, 2>{(z * L.eta2 - zz * L.omega2) / T, (zz * L.omega1 - z * L.eta1) / T};
    };
    for (int i = 0; i < M.n; ++i) {
        out.alpha.push_back(coords(v.p[i], v.zp[i]));
        auto lm = lattice_membership([&, i](const PrecisionContext& c) { return points_of(M, cm, c).p[i]; }, M.curve, max_height, ctx);
        out.alpha_rational.push_back(lm);
        out.c_P.push_back(lm ? v.zp[i] - L.eta1.mul_q(lm->a) - L.eta2.mul_q(lm->b) : Complex(L.bits));
    }
    for (int k = 0; k < M.s; ++k) {
        out.beta.push_back(coords(v.q[k], v.zq[k]));
        auto lm = lattice_membership([&, k](const PrecisionContext& c) { return points_of(M, cm, c).q[k]; }, M.curve, max_height, ctx);
        out.beta_rational.push_back(lm);
        out.c_Q.push_back(lm ? v.zq[k] - L.eta1.mul_q(lm->a) - L.eta2.mul_q(lm->b) : Complex(L.bits));
    }
    out.gamma.assign(M.n, std::vector<Complex>(M.s));
    out.gamma_rational.assign(M.n, std::vector<std::optional<Q>>(M.s));
    for (int i = 0; i < M.n; ++i)
        for (int k = 0; k < M.s; ++k) {
            out.gamma[i][k] = v.X[i][k] / T;
            out.gamma_rational[i][k] = rational_reconstruct(
                [&, i, k](const PrecisionContext& c) {
                    MotiveValues w = motive_values(M, cm, c);
                    return w.X[i][k] / w.L->two_pi_i();
                },
                max_height, ctx);
        }
    return out;
}

// ---------------------------------------------------------------- dense helpers

CMatrix cmat_mul(const CMatrix& a, const CMatrix& b) {
    if (a.empty() || b.empty() || a[0].size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "matrix product shapes");
    const long p = a[0][0].prec();
    CMatrix c(a.size(), std::vector<Complex>(b[0].size(), Complex(p)));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t k = 0; k < b[0].size(); ++k)
            for (size_t j = 0; j < b.size(); ++j) c[i][k] += a[i][j] * b[j][k];
    return c;
}

CMatrix cmat_transpose(const CMatrix& a) {
    if (a.empty()) return {};
    CMatrix t(a[0].size(), std::vector<Complex>(a.size()));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

Complex cmat_det(CMatrix a) {
    const size_t N = a.size();
    if (N == 0) return Complex(64, 1.0);
    const long p = a[0][0].prec();
    Complex det(Real(p, 1L));
    for (size_t c = 0; c < N; ++c) {
        size_t piv = c;
        for (size_t r = c + 1; r < N; ++r)
            if (abs(a[r][c]) > abs(a[piv][c])) piv = r;
        if (a[piv][c].is_zero()) return Complex(p);
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (size_t r = c + 1; r < N; ++r) {
            Complex f = a[r][c] / a[c][c];
            for (size_t j = c; j < N; ++j) a[r][j] -= f * a[c][j];
        }
    }
    return det;
}

}  // namespace motper
