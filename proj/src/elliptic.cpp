#include "motper/elliptic.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <complex>

#include "motper/relations.hpp"

namespace motper {

namespace {

Complex cz(long bits) { return Complex(bits); }
Complex cone(long bits) { return Complex(Real(bits, 1L)); }

// |z| as a log2 estimate that survives huge exponents
double lg(const Complex& z) {
    if (z.is_zero()) return -1e300;
    Real a = abs(z);
    long e = a.exponent();
    Real m = a.mul_2exp(-e);
    return static_cast<double>(e) + std::log2(m.to_double());
}

struct ThetaVals {
    Complex t0, t1, t2, t3;  // theta1 and its first three v-derivatives
};

// theta1(v | q) with q = nome = e^{i pi tr}, q14 = e^{i pi tr / 4}
ThetaVals theta1_all(const Complex& v, const QuasiPeriodLattice& L, long bits) {
    ThetaVals out{cz(bits), cz(bits), cz(bits), cz(bits)};
    const double lq = lg(L.nome);  // negative
    const double imv = std::fabs(v.im.to_double());
    const double lv = std::min(0.0, lg(v));
    Complex qpow = cone(bits);  // q^{n(n+1)}
    Complex q2n = L.nome * L.nome;  // q^{2(n+1)} step multiplier
    for (long n = 0; n < 100000; ++n) {
        long k = 2 * n + 1;
        Complex arg = v.mul_si(k);
        Complex s = sin(arg), c = cos(arg);
        Complex term = (n % 2 == 0) ? qpow : -qpow;
        Real kk(bits, k);
        out.t0 += term * s;
        out.t1 += term * c * kk;
        out.t2 -= term * s * (kk * kk);
        out.t3 -= term * c * (kk * kk * kk);
        // bound on the next term of the worst series
        long kn = k + 2;
        double lb = static_cast<double>((n + 1) * (n + 2)) * lq + static_cast<double>(kn) * imv / std::log(2.0) + 3.0 * std::log2(kn);
        if (lb < -(static_cast<double>(bits) + 16.0) + lv) break;
        qpow *= q2n;
        q2n *= L.nome * L.nome;
    }
    Complex f = L.nome14.mul_si(2);
    out.t0 *= f;
    out.t1 *= f;
    out.t2 *= f;
    out.t3 *= f;
    return out;
}

// Eisenstein E4, E6 at Q = e^{2 pi i tr}
std::pair<Complex, Complex> eisenstein46(const Complex& Q, long bits) {
    Complex s3 = cz(bits), s5 = cz(bits);
    const double lQ = lg(Q);
    Complex Qn = Q;
    for (long n = 1; n < 1000000; ++n) {
        Complex d = cone(bits) - Qn;
        Complex t = Qn / d;
        Real n3(bits, n * n * n);
        s3 += t * n3;
        s5 += t * (n3 * Real(bits, n * n));
        double ratio = 5.0 * std::log2(static_cast<double>(n + 1) / n) + lQ;
        double lb = 5.0 * std::log2(static_cast<double>(n + 1)) + static_cast<double>(n + 1) * lQ + 1.0;
        if (ratio < -1.0 && lb < -(static_cast<double>(bits) + 16.0)) break;
        Qn *= Q;
    }
    Complex E4 = cone(bits) + s3.mul_si(240);
    Complex E6 = cone(bits) - s5.mul_si(504);
    return {E4, E6};
}

// reduce tr = V2/V1 into the standard fundamental domain, tracking the integer matrix
void reduce_basis(QuasiPeriodLattice& L, const Complex& W1, const Complex& W2, long bits) {
    Complex V1 = W1, V2 = W2;
    long M[2][2] = {{1, 0}, {0, 1}};
    Real eps = Real(bits, 1L).mul_2exp(-bits / 2);
    Real half(bits, 0.5);
    Real one(bits, 1L);
    for (int it = 0; it < 10000; ++it) {
        Complex t = V2 / V1;
        mpz_class n = t.re.round_to_z();
        if (n != 0) {
            long nl = n.get_si();
            V2 -= V1.mul_si(nl);
            M[1][0] -= nl * M[0][0];
            M[1][1] -= nl * M[0][1];
            t = V2 / V1;
        }
        if (norm(t) < one - eps) {
            Complex nv2 = -V1;
            V1 = V2;
            V2 = nv2;
            long r0[2] = {M[0][0], M[0][1]};
            M[0][0] = M[1][0];
            M[0][1] = M[1][1];
            M[1][0] = -r0[0];
            M[1][1] = -r0[1];
            continue;
        }
        // boundary conventions: Re tr in (-1/2, 1/2], and Re tr >= 0 on the unit circle
        if (t.re < -half + eps) {
            V2 += V1;
            M[1][0] += M[0][0];
            M[1][1] += M[0][1];
            t = V2 / V1;
        }
        if (norm(t) < one + eps && t.re < -eps) {
            Complex nv2 = -V1;
            V1 = V2;
            V2 = nv2;
            long r0[2] = {M[0][0], M[0][1]};
            M[0][0] = M[1][0];
            M[0][1] = M[1][1];
            M[1][0] = -r0[0];
            M[1][1] = -r0[1];
        }
        break;
    }
    L.V1 = V1;
    L.V2 = V2;
    L.tr = V2 / V1;
    // inverse of M (det 1): (W1, W2)^t = M^{-1} (V1, V2)^t
    L.basis_change[0][0] = M[1][1];
    L.basis_change[0][1] = -M[0][1];
    L.basis_change[1][0] = -M[1][0];
    L.basis_change[1][1] = M[0][0];
}

void fill_theta_data(QuasiPeriodLattice& L, long bits) {
    Real pi = Real::pi(bits);
    Complex ipi_tr = L.tr.mul_i() * pi;
    L.nome = exp(ipi_tr);
    L.nome14 = exp(ipi_tr.div_si(4));
    // theta1'(0) and theta1'''(0)
    Complex s1 = cz(bits), s3 = cz(bits);
    Complex qpow = cone(bits), q2n = L.nome * L.nome;
    const double lq = lg(L.nome);
    for (long n = 0; n < 100000; ++n) {
        long k = 2 * n + 1;
        Complex term = (n % 2 == 0) ? qpow : -qpow;
        s1 += term.mul_si(k);
        s3 += term.mul_si(k * k * k);
        long kn = k + 2;
        if (static_cast<double>((n + 1) * (n + 2)) * lq + 3.0 * std::log2(kn) < -(static_cast<double>(bits) + 16.0)) break;
        qpow *= q2n;
        q2n *= L.nome * L.nome;
    }
    L.theta1p0 = L.nome14.mul_si(2) * s1;
    // H1 = -(pi^2 / (3 V1)) * theta'''(0)/theta'(0); theta'''(0) = -2 q14 s3
    Complex ratio = -s3 / s1;
    L.H1 = -(ratio * (pi * pi)) / L.V1.mul_si(3);
    L.H2 = (L.H1 * L.V2 - Complex::two_pi_i(bits)) / L.V1;
}

}  // namespace

QuasiPeriodLattice lattice_from_periods(const Complex& omega1_in, const Complex& omega2_in, const PrecisionContext& ctx) {
    const long bits = ctx.bits();
    QuasiPeriodLattice L;
    L.bits = bits;
    Complex o1 = omega1_in.rounded(bits), o2 = omega2_in.rounded(bits);
    if (o1.is_zero() || o2.is_zero()) throw Error(ErrorCode::DegenerateLattice, "zero period");
    Complex t = o2 / o1;
    Real scale = Real(64, 1L).mul_2exp(ctx.tolerance_exp());
    if (abs(t.im).rounded(64) <= scale * abs(t).rounded(64)) throw Error(ErrorCode::DegenerateLattice, "periods are R-linearly dependent");
    if (t.im.sign() > 0) o2 = -o2;  // orientation: Im(omega2/omega1) < 0
    L.omega1 = o1;
    L.omega2 = o2;
    // standard basis for theta series: W1 = omega2, W2 = omega1 (Im(W2/W1) > 0)
    reduce_basis(L, o2, o1, bits);
    fill_theta_data(L, bits);
    // eta(W) = basis_change * (H1, H2)
    Complex HW1 = L.H1.mul_si(L.basis_change[0][0]) + L.H2.mul_si(L.basis_change[0][1]);
    Complex HW2 = L.H1.mul_si(L.basis_change[1][0]) + L.H2.mul_si(L.basis_change[1][1]);
    L.eta1 = HW2;
    L.eta2 = HW1;
    auto [E4, E6] = eisenstein46(L.nome * L.nome, bits);
    Real pi = Real::pi(bits);
    Complex c = Complex(pi.mul_si(2)) / L.V1;
    Complex c2 = c * c;
    Complex c4 = c2 * c2;
    L.g2 = c4 * E4 / Real(bits, 12L);
    L.g3 = c4 * c2 * E6 / Real(bits, 216L);
    return L;
}

namespace {

// the basis from invariants is only fixed up to units u (u Lambda = Lambda, tau unchanged); reduction breaks
// ties between them by rounding noise, so pick the u omega1 with the largest real part, then imaginary part
QuasiPeriodLattice canonical_unit_multiple(const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    const long bits = L.bits;
    Real tol = abs(L.omega1).rounded(64).mul_2exp(-bits / 2);
    Real pi = Real::pi(bits);
    Complex best = L.omega1;
    int best_k = 0;
    for (int k = 1; k < 12; ++k) {
        // twelfth roots cover +-1, +-i and the sixth roots
        Real a = pi * Real(bits, static_cast<long>(k)) / Real(bits, 6L);
        Complex u(cos(a), sin(a));
        Complex w1 = L.omega1 * u, w2 = L.omega2 * u;
        auto [x1, x2] = lattice_coords(w1, L);
        auto [y1, y2] = lattice_coords(w2, L);
        bool in_lattice = true;
        for (const Real* c : {&x1, &x2, &y1, &y2})
            if (abs(*c - Real(bits, c->round_to_z())).rounded(64) > Real(64, 1L).mul_2exp(-bits / 2)) in_lattice = false;
        if (!in_lattice) continue;
        bool better = w1.re > best.re + tol || (abs(w1.re - best.re).rounded(64) <= tol && w1.im > best.im + tol);
        if (better) {
            best = w1;
            best_k = k;
        }
    }
    if (best_k == 0) return L;
    Real a = pi * Real(bits, static_cast<long>(best_k)) / Real(bits, 6L);
    Complex u(cos(a), sin(a));
    // u is an exact unit; snap to it so the result is the same lattice at full precision
    return lattice_from_periods(L.omega1 * u, L.omega2 * u, ctx);
}

}  // namespace

std::pair<Complex, Complex> invariants_from_lattice(const Complex& omega1, const Complex& omega2, const PrecisionContext& ctx) {
    QuasiPeriodLattice L = lattice_from_periods(omega1, omega2, ctx);
    return {L.g2, L.g3};
}

namespace {

std::array<Complex, 3> cubic_roots(const Complex& g2, const Complex& g3, long bits) {
    // 4x^3 - g2 x - g3 = 0  <=>  x^3 + p x + r = 0 with p = -g2/4, r = -g3/4
    Complex p = -g2.div_si(4), r = -g3.div_si(4);
    // Durand-Kerner seeds from long double, then Newton at full precision
    std::complex<long double> P(p.re.to_double(), p.im.to_double()), R(r.re.to_double(), r.im.to_double());
    auto f = [&](std::complex<long double> x) { return x * x * x + P * x + R; };
    long double rad = 1.0L + std::max(std::abs(P), std::abs(R));
    std::complex<long double> z[3] = {std::polar(rad, 0.4L), std::polar(rad, 0.4L + 2.1L), std::polar(rad, 0.4L + 4.2L)};
    for (int it = 0; it < 500; ++it) {
        for (int i = 0; i < 3; ++i) {
            std::complex<long double> den = 1;
            for (int j = 0; j < 3; ++j)
                if (j != i) den *= (z[i] - z[j]);
            z[i] -= f(z[i]) / den;
        }
    }
    std::array<Complex, 3> out{cz(bits), cz(bits), cz(bits)};
    for (int i = 0; i < 3; ++i) {
        Complex x(bits, static_cast<double>(z[i].real()), static_cast<double>(z[i].imag()));
        // Newton with deflation against the other seeds keeps roots distinct
        for (int it = 0; it < 200; ++it) {
            Complex fx = x * x * x + p * x + r;
            Complex dfx = x * x * Real(bits, 3L) + p;
            if (dfx.is_zero()) break;
            Complex dx = fx / dfx;
            x -= dx;
            if (dx.is_zero() || lg(dx) < lg(x) - bits - 4) break;
        }
        out[i] = x;
    }
    return out;
}

Real rel_err(const Complex& a, const Complex& b) {
    Real d = abs(a - b).rounded(64);
    Real s = max(Real(64, 1L), max(abs(a).rounded(64), abs(b).rounded(64)));
    return d / s;
}

}  // namespace

QuasiPeriodLattice periods_from_invariants(const Complex& g2_in, const Complex& g3_in, const PrecisionContext& ctx) {
    const long bits = ctx.bits();
    Complex g2 = g2_in.rounded(bits), g3 = g3_in.rounded(bits);
    Complex disc = g2 * g2 * g2 - g3 * g3 * Real(bits, 27L);
    Real dscale = max(abs(g2 * g2 * g2).rounded(64), abs(g3 * g3 * Real(bits, 27L)).rounded(64));
    if (disc.is_zero() || check_zero(disc, dscale, ctx).is_zero()) throw Error(ErrorCode::SingularCurve, "g2^3 = 27 g3^2");
    auto e = cubic_roots(g2, g3, bits);
    Real pi = Real::pi(bits);
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    // match quality threshold: half the working precision
    Real thresh = Real(64, 1L).mul_2exp(-ctx.working_bits / 2);
    for (auto& pm : perms) {
        const Complex& e1 = e[pm[0]];
        const Complex& e2 = e[pm[1]];
        const Complex& e3 = e[pm[2]];
        Complex a = sqrt(e1 - e3), b = sqrt(e1 - e2), c = sqrt(e2 - e3);
        if (a.is_zero() || b.is_zero() || c.is_zero()) continue;
        for (int sb = 0; sb < 2; ++sb)
            for (int sc = 0; sc < 2; ++sc) {
                Complex bb = sb ? -b : b, cc = sc ? -c : c;
                Complex w1, w2;
                try {
                    w1 = Complex(pi) / agm(a, bb, ctx);
                    w2 = Complex(pi).mul_i() / agm(a, cc, ctx);
                } catch (const Error&) {
                    continue;
                }
                Complex t = w2 / w1;
                if (abs(t.im).exponent() < -ctx.working_bits / 2) continue;
                QuasiPeriodLattice L;
                try {
                    L = lattice_from_periods(w1, w2, ctx);
                } catch (const Error&) {
                    continue;
                }
                if (rel_err(L.g2, g2) < thresh && rel_err(L.g3, g3) < thresh) {
                    // canonical basis: omega1 = V2, omega2 = V1 from the reduced standard basis
                    QuasiPeriodLattice C = canonical_unit_multiple(lattice_from_periods(L.V2, L.V1, ctx), ctx);
                    C.g2 = g2;
                    C.g3 = g3;
                    return C;
                }
            }
    }
    throw Error(ErrorCode::NonConvergence, "no AGM branch reproduced the invariants");
}

// ---------------------------------------------------------------- Curve

Curve Curve::from_invariants(CStr g2, CStr g3) {
    Curve c;
    c.kind_ = Kind::Invariants;
    c.a_ = std::move(g2);
    c.b_ = std::move(g3);
    return c;
}

Curve Curve::from_lattice(CStr omega1, CStr omega2) {
    Curve c;
    c.kind_ = Kind::Lattice;
    c.a_ = std::move(omega1);
    c.b_ = std::move(omega2);
    return c;
}

std::shared_ptr<const QuasiPeriodLattice> Curve::lattice(const PrecisionContext& ctx) const {
    {
        std::lock_guard<std::mutex> lk(cache_->m);
        auto it = cache_->by_bits.find(ctx.bits());
        if (it != cache_->by_bits.end()) return it->second;
    }
    const long bits = ctx.bits();
    Complex a = Complex::parse(bits, a_.re, a_.im), b = Complex::parse(bits, b_.re, b_.im);
    auto L = std::make_shared<QuasiPeriodLattice>(kind_ == Kind::Invariants ? periods_from_invariants(a, b, ctx)
                                                                            : lattice_from_periods(a, b, ctx));
    std::lock_guard<std::mutex> lk(cache_->m);
    cache_->by_bits.emplace(bits, L);
    return L;
}

// ---------------------------------------------------------------- Weierstrass functions

std::pair<Real, Real> lattice_coords(const Complex& z, const QuasiPeriodLattice& L) {
    // z = x1 w1 + x2 w2 over R: x1 = Im(z conj w2)/Im(w1 conj w2), x2 = Im(z conj w1)/Im(w2 conj w1)
    Real d = (L.omega1 * conj(L.omega2)).im;
    Real x1 = (z * conj(L.omega2)).im / d;
    Real x2 = -((z * conj(L.omega1)).im / d);
    return {x1, x2};
}

namespace {

struct Reduced {
    Complex z0;
    long m = 0, n = 0;  // z = z0 + m V1 + n V2
};

Reduced reduce_point(const Complex& z, const QuasiPeriodLattice& L) {
    Complex w = z / L.V1;
    Real b = w.im / L.tr.im;
    Real a = w.re - b * L.tr.re;
    Reduced r;
    r.m = a.round_to_z().get_si();
    r.n = b.round_to_z().get_si();
    r.z0 = z - L.V1.mul_si(r.m) - L.V2.mul_si(r.n);
    return r;
}

bool near_zero(const Complex& z0, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    if (z0.is_zero()) return true;
    return lg(z0) - lg(L.V1) < static_cast<double>(ctx.tolerance_exp());
}

}  // namespace

bool is_lattice_point(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    return near_zero(reduce_point(z, L).z0, L, ctx);
}

WeierstrassValues weierstrass(const Complex& z_in, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    const long bits = L.bits;
    Complex z = z_in.rounded(bits);
    Reduced r = reduce_point(z, L);
    if (near_zero(r.z0, L, ctx)) throw Error(ErrorCode::PoleAtLatticePoint, "argument is a lattice point");
    Real pi = Real::pi(bits);
    Complex k = Complex(pi) / L.V1;  // pi / V1
    Complex v = r.z0 * k;
    ThetaVals th = theta1_all(v, L, bits);
    WeierstrassValues out;
    Complex lt1 = th.t1 / th.t0;  // theta'/theta
    Complex lt2 = th.t2 / th.t0;
    Complex lt3 = th.t3 / th.t0;
    Complex HV = L.H1 / L.V1;
    Complex zeta0 = HV * r.z0 + k * lt1;
    Complex k2 = k * k;
    out.p = -HV - k2 * (lt2 - lt1 * lt1);
    out.p_prime = -(k2 * k) * (lt3 - lt1 * lt2.mul_si(3) + lt1 * lt1 * lt1.mul_si(2));
    Complex sigma0 = (L.V1 / Complex(pi)) * exp(HV * r.z0 * r.z0.div_si(2)) * th.t0 / L.theta1p0;
    // quasi-periodicity back to z
    Complex lam = L.V1.mul_si(r.m) + L.V2.mul_si(r.n);
    Complex eta_lam = L.H1.mul_si(r.m) + L.H2.mul_si(r.n);
    out.zeta = zeta0 + eta_lam;
    long parity = (r.m + r.n + r.m * r.n) & 1;
    Complex fac = exp(eta_lam * (r.z0 + lam.div_si(2)));
    out.sigma = sigma0 * fac;
    if (parity) out.sigma = -out.sigma;
    return out;
}

Complex wp_sigma(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    if (is_lattice_point(z, L, ctx)) return cz(L.bits);
    return weierstrass(z, L, ctx).sigma;
}

Complex wp_zeta(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) { return weierstrass(z, L, ctx).zeta; }

Complex serre_f(const Complex& q, const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    if (is_lattice_point(z, L, ctx) || is_lattice_point(q, L, ctx) || is_lattice_point(z + q, L, ctx))
        throw Error(ErrorCode::PoleOrZero, "serre_f: sigma vanishes at z, q or z+q");
    WeierstrassValues wq = weierstrass(q, L, ctx);
    Complex sz = weierstrass(z, L, ctx).sigma;
    Complex szq = weierstrass(z + q, L, ctx).sigma;
    return szq / (sz * wq.sigma) * exp(-(wq.zeta * z));
}

Complex third_kind_period(const Complex& q, int i, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    if (i != 1 && i != 2) throw Error(ErrorCode::InvalidArgument, "third_kind_period: index must be 1 or 2");
    Complex zq = wp_zeta(q, L, ctx);
    return i == 1 ? L.eta1 * q - L.omega1 * zq : L.eta2 * q - L.omega2 * zq;
}

// ---------------------------------------------------------------- elliptic logarithm

namespace {

// Carlson R_F by duplication, to about 'bits' bits
Complex carlson_rf(Complex x, Complex y, Complex z, long bits) {
    for (int it = 0; it < 4 * bits; ++it) {
        Complex A = (x + y + z).div_si(3);
        Real dev = max(abs(A - x), max(abs(A - y), abs(A - z))) / abs(A);
        if (dev.exponent() < -bits / 6 - 2) break;
        Complex sx = sqrt(x), sy = sqrt(y), sz = sqrt(z);
        Complex lam = sx * sy + sy * sz + sz * sx;
        x = (x + lam).div_si(4);
        y = (y + lam).div_si(4);
        z = (z + lam).div_si(4);
    }
    Complex A = (x + y + z).div_si(3);
    Complex X = cone(bits) - x / A, Y = cone(bits) - y / A;
    Complex Z = -(X + Y);
    Complex E2 = X * Y - Z * Z, E3 = X * Y * Z;
    Complex s = cone(bits) - E2.div_si(10) + E3.div_si(14) + (E2 * E2).div_si(24) - (E2 * E3).mul_si(3).div_si(44);
    return s / sqrt(A);
}

Complex to_fundamental(const Complex& z, const QuasiPeriodLattice& L) {
    auto [x1, x2] = lattice_coords(z, L);
    // nudge so points on a cell edge land the same way at every precision
    Real eps = Real(64, 1L).mul_2exp(-64);
    long m = (x1 + eps).floor_to_z().get_si(), n = (x2 + eps).floor_to_z().get_si();
    return z - L.omega1.mul_si(m) - L.omega2.mul_si(n);
}

}  // namespace

Complex elliptic_log(const Complex& x_in, const Complex& y_in, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    const long bits = L.bits;
    Complex x = x_in.rounded(bits), y = y_in.rounded(bits);
    Complex rhs = x * x * x.mul_si(4) - L.g2 * x - L.g3;
    Real sc = max(max(norm(y).rounded(64), abs(x * x * x.mul_si(4)).rounded(64)), max(abs(L.g2 * x).rounded(64), abs(L.g3).rounded(64)));
    if (!check_zero(y * y - rhs, sc, ctx).is_zero()) throw Error(ErrorCode::NotOnCurve, "point does not satisfy y^2 = 4x^3 - g2 x - g3");

    // roots e_i = p(half periods)
    Complex halves[3] = {L.omega1.div_si(2), L.omega2.div_si(2), (L.omega1 + L.omega2).div_si(2)};
    Complex e[3] = {weierstrass(halves[0], L, ctx).p, weierstrass(halves[1], L, ctx).p, weierstrass(halves[2], L, ctx).p};
    Real xs = max(Real(64, 1L), abs(x).rounded(64));
    // 2-torsion: y = 0
    if (check_zero(y, max(Real(64, 1L), sqrt(sc)), ctx).is_zero()) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (abs(e[i] - x) < abs(e[best] - x)) best = i;
        if (!check_zero(e[best] - x, xs, ctx).is_zero()) throw Error(ErrorCode::NotOnCurve, "y = 0 but x is not a root");
        return to_fundamental(halves[best], L);
    }

    auto residual = [&](const Complex& z) {
        WeierstrassValues w = weierstrass(z, L, ctx);
        return std::make_pair(w.p - x, w);
    };
    auto polish = [&](Complex z) -> std::optional<Complex> {
        for (int it = 0; it < 80; ++it) {
            auto [d, w] = residual(z);
            if (w.p_prime.is_zero()) return std::nullopt;
            Complex dz = d / w.p_prime;
            z -= dz;
            if (dz.is_zero() || lg(dz) < lg(L.omega1) - bits - 2) break;
        }
        auto [d, w] = residual(z);
        if (!check_zero(d, max(xs, abs(w.p).rounded(64)), ctx).is_zero()) return std::nullopt;
        // sign from p'
        if (abs(w.p_prime + y) < abs(w.p_prime - y)) z = -z;
        WeierstrassValues w2 = weierstrass(z, L, ctx);
        Real ys = max(Real(64, 1L), abs(y).rounded(64));
        if (!check_zero(w2.p_prime - y, ys, ctx).is_zero()) return std::nullopt;
        return to_fundamental(z, L);
    };

    Complex z0 = carlson_rf(x - e[0], x - e[1], x - e[2], 96);
    if (z0.is_finite()) {
        if (auto z = polish(z0)) return *z;
    }
    // fallback: coarse grid over the period parallelogram
    Complex best = halves[2];
    Real bestv(64, -1L);
    const int G = 24;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            if (i == 0 && j == 0) continue;
            Complex zz = L.omega1 * Real(bits, (i + 0.5) / G) + L.omega2 * Real(bits, (j + 0.5) / G);
            Real v = abs(weierstrass(zz, L, ctx).p - x).rounded(64);
            if (bestv.sign() < 0 || v < bestv) {
                bestv = v;
                best = zz;
            }
        }
    if (auto z = polish(best)) return *z;
    throw Error(ErrorCode::NonConvergence, "elliptic logarithm did not converge");
}

// ---------------------------------------------------------------- CM

Complex qt_value(const QT& u, const QuasiPeriodLattice& L) {
    const long bits = L.bits;
    return from_mpq(bits, u.x) + L.tau() * Real(bits, u.y);
}

namespace {

mpz_class fundamental_disc(mpz_class D) {
    for (mpz_class f = 2; f * f <= abs(D); ++f) {
        while (true) {
            mpz_class f2 = f * f;
            if (D % f2 != 0) break;
            mpz_class Dq = D / f2;
            mpz_class m4 = ((Dq % 4) + 4) % 4;
            if (m4 != 0 && m4 != 1) break;
            D = Dq;
        }
    }
    return D;
}

Complex kappa_of(const QuasiPeriodLattice& L) {
    Complex t = L.tau();
    return (L.eta1 * norm(t) - t * L.eta2) / L.omega1;
}

}  // namespace

std::optional<CMData> detect_cm(const Curve& curve, const PrecisionContext& ctx, const mpz_class& max_height) {
    ValueSource tsrc = [&curve](const PrecisionContext& c) {
        auto L = curve.lattice(c);
        Complex t = L->tau();
        return std::vector<Complex>{t * t, t, cone(c.bits())};
    };
    DetectionVerdict dv = find_integer_relation_escalating(tsrc, max_height, ctx);
    if (!dv.found()) return std::nullopt;
    const auto& cf = dv.relation.coeffs;
    if (cf[0] == 0) return std::nullopt;
    CMData cm;
    cm.a = cf[0];
    cm.b = cf[1];
    cm.c = cf[2];
    if (cm.a < 0) {
        cm.a = -cm.a;
        cm.b = -cm.b;
        cm.c = -cm.c;
    }
    mpz_class D = cm.b * cm.b - 4 * cm.a * cm.c;
    if (D >= 0) return std::nullopt;
    cm.field_disc = fundamental_disc(D);
    cm.residual_exp = dv.relation.residual_exp;
    auto L = curve.lattice(ctx);
    cm.tau = L->tau();
    cm.kappa = kappa_of(*L);

    ValueSource ksrc = [&curve](const PrecisionContext& c) {
        auto Lc = curve.lattice(c);
        return std::vector<Complex>{kappa_of(*Lc), cone(c.bits()), Lc->tau()};
    };
    DetectionVerdict kv = find_integer_relation_escalating(ksrc, max_height, ctx);
    if (kv.found() && kv.relation.coeffs[0] != 0) {
        const auto& k = kv.relation.coeffs;
        cm.kappa_exact = QT(Q(-k[1], k[0]), Q(-k[2], k[0]));
        cm.kappa_exact->x.canonicalize();
        cm.kappa_exact->y.canonicalize();
    } else {
        auto ar = algebraic_reconstruct([&curve](const PrecisionContext& c) { return kappa_of(*curve.lattice(c)); }, 4, max_height, ctx);
        if (ar) cm.kappa_minpoly = ar->poly;
    }
    return cm;
}

bool is_antisymmetric(const Q& phi1, const Q& phi2, const std::optional<CMData>& cm) {
    Q tr = cm ? Q(-cm->b, cm->a) : Q(0);
    if (!cm && phi2 != 0) return false;
    return 2 * phi1 + phi2 * tr == 0;
}

Endomorphism endo_matrix(const Q& phi1, const Q& phi2, const std::optional<CMData>& cm, const Curve& curve, const PrecisionContext& ctx,
                         const mpz_class& max_height) {
    if (phi2 != 0 && !cm) throw Error(ErrorCode::InvalidArgument, "endomorphism with tau component needs CM");
    Endomorphism E;
    E.phi1 = phi1;
    E.phi2 = phi2;
    E.antisymmetric = is_antisymmetric(phi1, phi2, cm);

    // entry (i,j) of Pi_E * Phi * Pi_E^{-1}
    auto entry = [&curve, phi1, phi2](const PrecisionContext& c, int i, int j) {
        auto L = curve.lattice(c);
        const long bits = L->bits;
        Complex t = L->tau();
        Complex ph = from_mpq(bits, phi1) + t * Real(bits, phi2);
        Complex phb = from_mpq(bits, phi1) + conj(t) * Real(bits, phi2);
        Complex k = kappa_of(*L);
        Complex P[2][2] = {{L->omega1, L->eta1}, {L->omega2, L->eta2}};
        Complex F[2][2] = {{ph, -(k * Real(bits, phi2)) / t}, {cz(bits), phb}};
        Complex det = L->omega1 * L->eta2 - L->omega2 * L->eta1;
        Complex Pi[2][2] = {{L->eta2 / det, -L->eta1 / det}, {-L->omega2 / det, L->omega1 / det}};
        Complex PF[2][2] = {{cz(bits), cz(bits)}, {cz(bits), cz(bits)}};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) PF[a][b] = P[a][0] * F[0][b] + P[a][1] * F[1][b];
        return PF[i][0] * Pi[0][j] + PF[i][1] * Pi[1][j];
    };
    auto L = curve.lattice(ctx);
    const long bits = L->bits;
    Complex t = L->tau();
    E.phi = from_mpq(bits, phi1) + t * Real(bits, phi2);
    E.phi_bar = from_mpq(bits, phi1) + conj(t) * Real(bits, phi2);
    Complex k = kappa_of(*L);
    E.Phi[0][0] = E.phi;
    E.Phi[0][1] = -(k * Real(bits, phi2)) / t;
    E.Phi[1][0] = cz(bits);
    E.Phi[1][1] = E.phi_bar;
    E.M_phi = QMat(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto r = rational_reconstruct([&entry, i, j](const PrecisionContext& c) { return entry(c, i, j); }, max_height, ctx);
            if (!r) throw Error(ErrorCode::ReconstructionFailure, "endomorphism matrix entry is not a bounded-height rational");
            E.M_phi(i, j) = *r;
        }
    return E;
}

}  // namespace motper
