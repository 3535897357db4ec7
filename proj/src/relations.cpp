#include "motper/relations.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <sstream>

#include "motper/elliptic.hpp"

namespace motper {

// ---------------------------------------------------------------- integral LLL (Cohen 2.6.7, delta = 99/100)

std::vector<std::vector<mpz_class>> lll_reduce(std::vector<std::vector<mpz_class>> b) {
    const int n = static_cast<int>(b.size());
    if (n <= 1) return b;
    const size_t m = b[0].size();
    auto dot = [m](const std::vector<mpz_class>& x, const std::vector<mpz_class>& y) {
        mpz_class s = 0;
        for (size_t t = 0; t < m; ++t) s += x[t] * y[t];
        return s;
    };
    // 1-based: d[0] = 1, d[i] for i = 1..n, lam[k][j] for j < k
    std::vector<mpz_class> d(n + 1);
    std::vector<std::vector<mpz_class>> lam(n + 1, std::vector<mpz_class>(n + 1));
    auto B = [&b](int i) -> std::vector<mpz_class>& { return b[i - 1]; };
    d[0] = 1;
    d[1] = dot(B(1), B(1));
    if (d[1] == 0) throw Error(ErrorCode::Internal, "lll: zero basis vector");
    int k = 2, kmax = 1;

    auto red = [&](int kk, int l) {
        mpz_class two_l = 2 * abs(lam[kk][l]);
        if (two_l > d[l]) {
            // q = nearest integer to lam/d
            mpz_class num = 2 * lam[kk][l] + d[l];
            mpz_class den = 2 * d[l];
            mpz_class q;
            mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
            for (size_t t = 0; t < m; ++t) B(kk)[t] -= q * B(l)[t];
            lam[kk][l] -= q * d[l];
            for (int i = 1; i < l; ++i) lam[kk][i] -= q * lam[l][i];
        }
    };
    auto swap = [&](int kk) {
        std::swap(B(kk), B(kk - 1));
        for (int j = 1; j <= kk - 2; ++j) std::swap(lam[kk][j], lam[kk - 1][j]);
        mpz_class l = lam[kk][kk - 1];
        mpz_class Bv = (d[kk - 2] * d[kk] + l * l) / d[kk - 1];
        for (int i = kk + 1; i <= kmax; ++i) {
            mpz_class t = lam[i][kk];
            lam[i][kk] = (d[kk] * lam[i][kk - 1] - l * t) / d[kk - 1];
            lam[i][kk - 1] = (Bv * t + l * lam[i][kk]) / d[kk];
        }
        d[kk - 1] = Bv;
    };

    while (k <= n) {
        if (k > kmax) {
            kmax = k;
            for (int j = 1; j <= k; ++j) {
                mpz_class u = dot(B(k), B(j));
                for (int i = 1; i <= j - 1; ++i) u = (d[i] * u - lam[k][i] * lam[j][i]) / d[i - 1];
                if (j < k)
                    lam[k][j] = u;
                else {
                    d[k] = u;
                    if (u == 0) throw Error(ErrorCode::Internal, "lll: dependent basis");
                }
            }
        }
        red(k, k - 1);
        if (100 * d[k] * d[k - 2] < 99 * d[k - 1] * d[k - 1] - 100 * lam[k][k - 1] * lam[k][k - 1]) {
            swap(k);
            k = std::max(2, k - 1);
        } else {
            for (int l = k - 2; l >= 1; --l) red(k, l);
            ++k;
        }
    }
    return b;
}

// ---------------------------------------------------------------- integer relations

long required_bits(size_t len, const mpz_class& max_height) {
    long lh = static_cast<long>(mpz_sizeinbase(max_height.get_mpz_t(), 2));
    return kRelationPrecisionConstant * static_cast<long>(len) * std::max<long>(lh, 1);
}

namespace {

mpz_class scaled_int(const Real& x, long e) {
    return x.mul_2exp(e).round_to_z();
}

Scaled combine(const std::vector<mpz_class>& c, const std::vector<Complex>& xs, long bits) {
    Complex s(bits);
    Real scale(64, 0L);
    for (size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0) continue;
        Real ci(bits, c[i]);
        s += xs[i] * ci;
        scale = max(scale, abs(xs[i]).rounded(64) * abs(ci).rounded(64));
    }
    // inputs carry absolute error relative to the largest one
    for (auto& x : xs) scale = max(scale, abs(x).rounded(64));
    return Scaled{s, scale};
}

// pivot >= 0: only relations with a nonzero coefficient there count
DetectionVerdict search(const ValueSource& src, const mpz_class& H, const PrecisionContext& ctx, bool fixed, long pivot = -1) {
    DetectionVerdict v;
    v.height_bound = H;
    v.bits_used = ctx.working_bits;
    std::vector<Complex> xs = src(ctx);
    const size_t n = xs.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "integer relation needs at least two values");
    if (ctx.working_bits < required_bits(n, H))
        throw Error(ErrorCode::InsufficientPrecision, "integer relation search on " + std::to_string(n) + " values at height 2^" +
                                                          std::to_string(mpz_sizeinbase(H.get_mpz_t(), 2)) + " needs " +
                                                          std::to_string(required_bits(n, H)) + " bits");
    Real M(64, 0L);
    for (auto& x : xs) M = max(M, abs(x).rounded(64));
    if (M.is_zero()) {
        v.status = DetectionVerdict::Status::Found;
        v.relation.coeffs.assign(n, 0);
        v.relation.coeffs[pivot >= 0 ? static_cast<size_t>(pivot) : 0] = 1;
        v.relation.height = 1;
        v.relation.residual_exp = LONG_MIN / 4;
        return v;
    }
    bool any_im = false;
    for (auto& x : xs)
        if (!x.im.is_zero() && abs(x.im).exponent() - M.exponent() > -(ctx.bits() - 8)) any_im = true;
    // scale so the largest value has about working_bits bits
    const long e = ctx.working_bits - M.exponent();
    std::vector<std::vector<mpz_class>> basis(n, std::vector<mpz_class>(n + (any_im ? 2 : 1)));
    for (size_t i = 0; i < n; ++i) {
        basis[i][i] = 1;
        basis[i][n] = scaled_int(xs[i].re, e);
        if (any_im) basis[i][n + 1] = scaled_int(xs[i].im, e);
    }
    auto red = lll_reduce(std::move(basis));

    std::vector<std::vector<mpz_class>> cands;
    for (auto& row : red) {
        std::vector<mpz_class> c(row.begin(), row.begin() + static_cast<long>(n));
        mpz_class g = 0, h = 0;
        for (auto& x : c) {
            mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
            if (abs(x) > h) h = abs(x);
        }
        if (g == 0 || h > H * g) continue;
        if (pivot >= 0 && c[static_cast<size_t>(pivot)] == 0) continue;
        for (auto& x : c) x /= g;
        for (auto& x : c)
            if (x != 0) {
                if (x < 0)
                    for (auto& y : c) y = -y;
                break;
            }
        cands.push_back(std::move(c));
    }
    // smallest height first; ties keep LLL order
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        mpz_class ha = 0, hb = 0;
        for (auto& x : a) if (abs(x) > ha) ha = abs(x);
        for (auto& x : b) if (abs(x) > hb) hb = abs(x);
        return ha < hb;
    });
    for (auto& c : cands) {
        Scaled s = combine(c, xs, ctx.bits());
        CertifiedBool cb;
        if (fixed) {
            cb = check_zero(s.value, s.scale, ctx);
        } else {
            cb = certify_zero(s.value, s.scale, ctx, [&](const PrecisionContext& hi) { return combine(c, src(hi), hi.bits()); });
        }
        if (cb.is_zero()) {
            v.status = DetectionVerdict::Status::Found;
            v.relation.coeffs = c;
            mpz_class h = 0;
            for (auto& x : c) if (abs(x) > h) h = abs(x);
            v.relation.height = h;
            v.relation.residual_exp = cb.residual_exp;
            return v;
        }
    }
    return v;
}

}  // namespace

DetectionVerdict find_integer_relation(const ValueSource& xs, const mpz_class& max_height, const PrecisionContext& ctx) {
    return search(xs, max_height, ctx, false);
}

DetectionVerdict find_integer_relation(const std::vector<Complex>& xs, const mpz_class& max_height, const PrecisionContext& ctx) {
    return search([&xs](const PrecisionContext&) { return xs; }, max_height, ctx, true);
}

namespace {

PrecisionContext escalate(size_t n, const mpz_class& max_height, const PrecisionContext& ctx) {
    PrecisionContext c = ctx;
    while (c.working_bits < required_bits(n, max_height)) {
        if (c.working_bits * 2 > kMaxEscalationBits)
            throw Error(ErrorCode::InsufficientPrecision, "relation search exceeds the escalation cap");
        c = c.scaled(2);
    }
    return c;
}

}  // namespace

DetectionVerdict find_integer_relation_escalating(const ValueSource& xs, const mpz_class& max_height, const PrecisionContext& ctx) {
    PrecisionContext c = ctx;
    size_t n = xs(ctx).size();
    while (c.working_bits < required_bits(n, max_height)) {
        if (c.working_bits * 2 > kMaxEscalationBits)
            throw Error(ErrorCode::InsufficientPrecision, "relation search exceeds the escalation cap");
        c = c.scaled(2);
    }
    return search(xs, max_height, c, false);
}

// ---------------------------------------------------------------- rational reconstruction

namespace {

std::optional<Q> reconstruct_impl(const std::function<Complex(const PrecisionContext&)>& xf, const mpz_class& H, const PrecisionContext& ctx,
                                  bool fixed) {
    Complex x = xf(ctx);
    Real scale = max(Real(64, 1L), abs(x).rounded(64));
    // imaginary part must vanish
    {
        Complex im(Real(ctx.bits(), 0L), x.im);
        CertifiedBool cb = fixed ? check_zero(im, scale, ctx)
                                 : certify_zero(im, scale, ctx, [&](const PrecisionContext& hi) {
                                       Complex y = xf(hi);
                                       return Scaled{Complex(Real(hi.bits(), 0L), y.im), max(Real(64, 1L), abs(y).rounded(64))};
                                   });
        if (!cb.is_zero()) return std::nullopt;
    }
    mpq_class r = to_mpq(x.re);
    // continued fraction convergents
    mpz_class num = r.get_num(), den = r.get_den();
    mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 4000; ++iter) {
        if (den == 0) break;
        mpz_class a;
        mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        mpz_class p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (abs(p2) > H || q2 > H) break;
        Q cand(p2, q2);
        cand.canonicalize();
        auto diff = [&](const PrecisionContext& c) {
            Complex y = xf(c);
            Complex d(y.re - Real(c.bits(), cand), Real(c.bits(), 0L));
            return Scaled{d, max(Real(64, 1L), abs(y).rounded(64))};
        };
        Scaled s = diff(ctx);
        CertifiedBool cb = fixed ? check_zero(s.value, s.scale, ctx) : certify_zero(s.value, s.scale, ctx, diff);
        if (cb.is_zero()) return cand;
        mpz_class rem = num - a * den;
        num = den;
        den = rem;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Q> rational_reconstruct(const std::function<Complex(const PrecisionContext&)>& x, const mpz_class& max_height,
                                      const PrecisionContext& ctx) {
    return reconstruct_impl(x, max_height, ctx, false);
}

std::optional<Q> rational_reconstruct(const Complex& x, const mpz_class& max_height, const PrecisionContext& ctx) {
    return reconstruct_impl([&x](const PrecisionContext&) { return x; }, max_height, ctx, true);
}

std::optional<AlgebraicReconstruction> algebraic_reconstruct(const std::function<Complex(const PrecisionContext&)>& x, int max_degree,
                                                             const mpz_class& max_height, const PrecisionContext& ctx) {
    for (int deg = 1; deg <= max_degree; ++deg) {
        ValueSource src = [&x, deg](const PrecisionContext& c) {
            Complex v = x(c);
            std::vector<Complex> pw;
            Complex t(Real(c.bits(), 1L));
            for (int i = 0; i <= deg; ++i) {
                pw.push_back(t);
                t *= v;
            }
            return pw;
        };
        DetectionVerdict dv = find_integer_relation_escalating(src, max_height, ctx);
        if (dv.found() && dv.relation.coeffs.back() != 0) {
            AlgebraicReconstruction out;
            out.poly = dv.relation.coeffs;
            if (out.poly.back() < 0)
                for (auto& c : out.poly) c = -c;
            out.residual_exp = dv.relation.residual_exp;
            return out;
        }
    }
    return std::nullopt;
}

std::string poly_str(const std::vector<mpz_class>& poly, const std::string& var) {
    std::ostringstream os;
    bool first = true;
    for (int i = static_cast<int>(poly.size()) - 1; i >= 0; --i) {
        const mpz_class& c = poly[i];
        if (c == 0) continue;
        mpz_class a = abs(c);
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        first = false;
        if (i == 0 || a != 1) os << a.get_str();
        if (i > 0) os << (a != 1 ? "*" : "") << var << (i > 1 ? "^" + std::to_string(i) : "");
    }
    if (first) os << "0";
    return os.str();
}

// ---------------------------------------------------------------- lattice questions

std::optional<LatticeMembership> lattice_membership(const std::function<Complex(const PrecisionContext&)>& z, const Curve& curve,
                                                    const mpz_class& max_denominator, const PrecisionContext& ctx) {
    auto L = curve.lattice(ctx);
    auto [x1, x2] = lattice_coords(z(ctx), *L);
    auto a = rational_reconstruct(Complex(x1, Real(x1.prec(), 0L)), max_denominator, ctx);
    auto b = rational_reconstruct(Complex(x2, Real(x2.prec(), 0L)), max_denominator, ctx);
    if (!a || !b) return std::nullopt;
    auto resid = [&](const PrecisionContext& c) {
        auto Lc = curve.lattice(c);
        long bits = Lc->bits;
        Complex w = z(c);
        Complex d = w - Lc->omega1 * Real(bits, *a) - Lc->omega2 * Real(bits, *b);
        return Scaled{d, max(abs(w).rounded(64), max(abs(Lc->omega1).rounded(64), abs(Lc->omega2).rounded(64)))};
    };
    Scaled s = resid(ctx);
    if (!certify_zero(s.value, s.scale, ctx, resid).is_zero()) return std::nullopt;
    LatticeMembership m{*a, *b, 1};
    mpz_lcm(m.order.get_mpz_t(), a->get_den().get_mpz_t(), b->get_den().get_mpz_t());
    return m;
}

std::optional<EndoDependence> endo_dependence(const std::function<Complex(const PrecisionContext&)>& p,
                                              const std::function<Complex(const PrecisionContext&)>& q, const Curve& curve,
                                              const std::optional<CMData>& cm, const mpz_class& max_height,
                                              const PrecisionContext& ctx) {
    // tau*omega_j is already in Q.Lambda, so only tau*p is adjoined
    const bool with_tau = cm.has_value();
    ValueSource src = [&](const PrecisionContext& c) {
        auto L = curve.lattice(c);
        Complex pv = p(c);
        std::vector<Complex> v{q(c), pv};
        if (with_tau) v.push_back(L->tau() * pv);
        v.push_back(L->omega1);
        v.push_back(L->omega2);
        return v;
    };
    size_t n = with_tau ? 5 : 4;
    PrecisionContext c = escalate(n, max_height, ctx);
    DetectionVerdict dv = search(src, max_height, c, false, 0);
    if (!dv.found()) return std::nullopt;
    const auto& k = dv.relation.coeffs;
    Q d(-1, 1);
    d /= Q(k[0]);
    EndoDependence e;
    e.phi1 = d * Q(k[1]);
    e.phi2 = with_tau ? d * Q(k[2]) : Q(0);
    e.delta1 = d * Q(k[n - 2]);
    e.delta2 = d * Q(k[n - 1]);
    e.relation = dv.relation;
    return e;
}

FRankResult f_rank(const ValueSource& vectors, const std::optional<CMData>& cm, const ValueSource& mod_periods, const mpz_class& max_height,
                   const PrecisionContext& ctx) {
    FRankResult r;
    const bool with_tau = cm.has_value();
    const size_t nv = vectors(ctx).size();
    const size_t nm = mod_periods(ctx).size();
    r.coords.assign(nv, {});
    // value of tau at precision c: the period ratio the CM data was detected on
    auto tau_at = [&](const PrecisionContext& c) {
        Complex t = cm->tau;
        if (t.re.prec() >= c.bits()) return t;
        // CM tau is quadratic: recompute it from its minimal polynomial a t^2 + b t + c = 0, picking the root nearest the stored one
        Complex a = from_mpq(c.bits(), Q(cm->a)), b = from_mpq(c.bits(), Q(cm->b)), cc = from_mpq(c.bits(), Q(cm->c));
        Complex disc = sqrt(b * b - a * cc.mul_si(4));
        Complex r1 = (-b + disc) / a.mul_si(2), r2 = (-b - disc) / a.mul_si(2);
        return abs(r1 - t) < abs(r2 - t) ? r1 : r2;
    };
    for (size_t j = 0; j < nv; ++j) {
        std::vector<int> basis = r.retained;
        const size_t m = with_tau ? 2 : 1;
        ValueSource src = [&, j, basis](const PrecisionContext& c) {
            auto vs = vectors(c);
            auto ps = mod_periods(c);
            Complex t = with_tau ? tau_at(c) : Complex(c.bits());
            std::vector<Complex> out;
            auto push = [&](const Complex& x) {
                out.push_back(x);
                if (with_tau) out.push_back(t * x);
            };
            out.push_back(vs[j]);
            if (with_tau) out.push_back(t * vs[j]);
            for (int b : basis) push(vs[static_cast<size_t>(b)]);
            for (auto& x : ps) push(x);
            return out;
        };
        size_t n = m * (1 + basis.size() + nm);
        PrecisionContext c = escalate(n, max_height, ctx);
        // the relation must involve v_j; with F = Q(tau) a relation (x + y tau) v_j + ... also counts,
        // and any such relation has a nonzero coefficient on v_j or tau v_j
        DetectionVerdict dv = search(src, max_height, c, false, 0);
        if (!dv.found() && with_tau) dv = search(src, max_height, c, false, 1);
        if (!dv.found()) {
            r.retained.push_back(static_cast<int>(j));
            r.heuristic = true;
            continue;
        }
        const auto& k = dv.relation.coeffs;
        // (k0 + k1 tau) v_j = -sum (kx + ky tau) b
        QT lead = with_tau ? QT(Q(k[0]), Q(k[1])) : QT(Q(k[0]));
        QuadField F = with_tau ? cm->field() : QuadField{1, 0, 1};
        QT inv = qt_inv(lead, F);
        std::vector<QT> co;
        for (size_t i = 0; i < basis.size(); ++i) {
            QT cf = with_tau ? QT(Q(-k[m * (1 + i)]), Q(-k[m * (1 + i) + 1])) : QT(Q(-k[1 + i]));
            co.push_back(qt_mul(cf, inv, F));
        }
        r.coords[j] = std::move(co);
    }
    for (int b : r.retained) {
        std::vector<QT> co(r.retained.size(), QT(0));
        co[static_cast<size_t>(std::find(r.retained.begin(), r.retained.end(), b) - r.retained.begin())] = QT(1);
        r.coords[static_cast<size_t>(b)] = std::move(co);
    }
    r.rank = static_cast<int>(r.retained.size());
    return r;
}

}  // namespace motper
