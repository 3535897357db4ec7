#include "motper/numerics.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace motper {

const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SingularCurve: return "SingularCurve";
        case ErrorCode::DegenerateLattice: return "DegenerateLattice";
        case ErrorCode::PoleAtLatticePoint: return "PoleAtLatticePoint";
        case ErrorCode::PoleOrZero: return "PoleOrZero";
        case ErrorCode::NotOnCurve: return "NotOnCurve";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::Inconclusive: return "Inconclusive";
        case ErrorCode::ReconstructionFailure: return "ReconstructionFailure";
        case ErrorCode::NotLatticePoint: return "NotLatticePoint";
        case ErrorCode::PoleConfiguration: return "PoleConfiguration";
        case ErrorCode::InsufficientPrecision: return "InsufficientPrecision";
        case ErrorCode::AmbiguousClassification: return "AmbiguousClassification";
        case ErrorCode::MissingConstant: return "MissingConstant";
        case ErrorCode::NonRationalConstant: return "NonRationalConstant";
        case ErrorCode::RelationViolated: return "RelationViolated";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::Singular: return "Singular";
        case ErrorCode::Unsupported: return "Unsupported";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

// ---- Real ----

Real::Real(long prec) {
    mpfr_init2(v_, std::max<long>(prec, MPFR_PREC_MIN));
    mpfr_set_zero(v_, 1);
}
Real::Real(long prec, long v) : Real(prec) { mpfr_set_si(v_, v, MPFR_RNDN); }
Real::Real(long prec, double v) : Real(prec) { mpfr_set_d(v_, v, MPFR_RNDN); }
Real::Real(long prec, const mpz_class& v) : Real(prec) { mpfr_set_z(v_, v.get_mpz_t(), MPFR_RNDN); }
Real::Real(long prec, const mpq_class& v) : Real(prec) { mpfr_set_q(v_, v.get_mpq_t(), MPFR_RNDN); }

Real Real::parse(long prec, const std::string& s) {
    Real r(prec);
    // accept rationals "a/b" as well as decimals
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        mpq_class q;
        if (q.set_str(s, 10) != 0) throw Error(ErrorCode::ParseError, "bad rational: '" + s + "'");
        q.canonicalize();
        if (q.get_den() == 0) throw Error(ErrorCode::ParseError, "zero denominator: '" + s + "'");
        return Real(prec, q);
    }
    if (s.empty()) throw Error(ErrorCode::ParseError, "empty number");
    char* end = nullptr;
    mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
    if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::ParseError, "bad number: '" + s + "'");
    if (!r.is_finite()) throw Error(ErrorCode::ParseError, "non-finite number: '" + s + "'");
    return r;
}

Real Real::pi(long prec) {
    Real r(prec);
    mpfr_const_pi(r.v_, MPFR_RNDN);
    return r;
}

Real::Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
}
Real::Real(Real&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
}
Real& Real::operator=(const Real& o) {
    if (this != &o) {
        mpfr_set_prec(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
}
Real& Real::operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
}
Real::~Real() { mpfr_clear(v_); }

Real Real::rounded(long prec) const {
    Real r(prec);
    mpfr_set(r.v_, v_, MPFR_RNDN);
    return r;
}

long Real::exponent() const {
    if (is_zero()) return LONG_MIN / 4;
    if (!is_finite()) return LONG_MAX / 4;
    return static_cast<long>(mpfr_get_exp(v_)) - 1;
}

mpz_class Real::round_to_z() const {
    mpz_class z;
    mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDN);
    return z;
}
mpz_class Real::floor_to_z() const {
    mpz_class z;
    mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDD);
    return z;
}

std::string Real::to_string(int digits) const {
    if (is_zero()) return "0";
    if (digits <= 0) digits = static_cast<int>(std::ceil(prec() * 0.30103)) + 1;
    char* buf = nullptr;
    std::string fmt = "%." + std::to_string(digits) + "Rg";
    mpfr_asprintf(&buf, fmt.c_str(), v_);
    std::string s(buf);
    mpfr_free_str(buf);
    return s;
}

static long pmax(const Real& a, const Real& b) { return std::max(a.prec(), b.prec()); }

Real Real::operator-() const {
    Real r(prec());
    mpfr_neg(r.v_, v_, MPFR_RNDN);
    return r;
}
Real& Real::operator+=(const Real& o) {
    if (o.prec() > prec()) mpfr_prec_round(v_, o.prec(), MPFR_RNDN);
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}
Real& Real::operator-=(const Real& o) {
    if (o.prec() > prec()) mpfr_prec_round(v_, o.prec(), MPFR_RNDN);
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}
Real& Real::operator*=(const Real& o) {
    if (o.prec() > prec()) mpfr_prec_round(v_, o.prec(), MPFR_RNDN);
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}
Real& Real::operator/=(const Real& o) {
    if (o.prec() > prec()) mpfr_prec_round(v_, o.prec(), MPFR_RNDN);
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}
Real Real::mul_si(long k) const {
    Real r(prec());
    mpfr_mul_si(r.v_, v_, k, MPFR_RNDN);
    return r;
}
Real Real::div_si(long k) const {
    Real r(prec());
    mpfr_div_si(r.v_, v_, k, MPFR_RNDN);
    return r;
}
Real Real::mul_2exp(long e) const {
    Real r(prec());
    mpfr_mul_2si(r.v_, v_, e, MPFR_RNDN);
    return r;
}

#define MOTPER_UNARY(name, fn)              \
    Real name(const Real& x) {              \
        Real r(x.prec());                   \
        fn(r.raw(), x.raw(), MPFR_RNDN);    \
        return r;                           \
    }
MOTPER_UNARY(abs, mpfr_abs)
MOTPER_UNARY(sqrt, mpfr_sqrt)
MOTPER_UNARY(exp, mpfr_exp)
MOTPER_UNARY(log, mpfr_log)
MOTPER_UNARY(sin, mpfr_sin)
MOTPER_UNARY(cos, mpfr_cos)
#undef MOTPER_UNARY

Real atan2(const Real& y, const Real& x) {
    Real r(pmax(x, y));
    mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
    return r;
}
Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

mpq_class to_mpq(const Real& x) {
    if (x.is_zero()) return mpq_class(0);
    mpz_class m;
    mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x.raw());
    mpq_class q(m);
    if (e >= 0)
        mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    else
        mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    q.canonicalize();
    return q;
}

// ---- Complex ----

Complex::Complex(Real r) : re(std::move(r)), im(0L) { im = Real(re.prec(), 0L); }

Complex Complex::parse(long prec, const std::string& r, const std::string& i) {
    return Complex(Real::parse(prec, r), Real::parse(prec, i));
}

Complex Complex::two_pi_i(long prec) {
    Real p = Real::pi(prec).mul_si(2);
    return Complex(Real(prec, 0L), p);
}

Complex& Complex::operator+=(const Complex& o) {
    re += o.re;
    im += o.im;
    return *this;
}
Complex& Complex::operator-=(const Complex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
}
Complex& Complex::operator*=(const Complex& o) {
    Real r = re * o.re - im * o.im;
    Real i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}
Complex& Complex::operator/=(const Complex& o) {
    Real d = o.re * o.re + o.im * o.im;
    Real r = (re * o.re + im * o.im) / d;
    Real i = (im * o.re - re * o.im) / d;
    re = std::move(r);
    im = std::move(i);
    return *this;
}
Complex& Complex::operator*=(const Real& o) {
    re *= o;
    im *= o;
    return *this;
}
Complex& Complex::operator/=(const Real& o) {
    re /= o;
    im /= o;
    return *this;
}
Complex Complex::mul_q(const mpq_class& q) const {
    Real qq(prec(), q);
    return Complex(re * qq, im * qq);
}

Complex conj(const Complex& z) { return Complex(z.re, -z.im); }
Real norm(const Complex& z) { return z.re * z.re + z.im * z.im; }
Real abs(const Complex& z) {
    Real r(z.prec());
    mpfr_hypot(r.raw(), z.re.raw(), z.im.raw(), MPFR_RNDN);
    return r;
}
Real arg(const Complex& z) {
    Real a = atan2(z.im, z.re);
    // principal branch (-pi, pi]: the negative real axis maps to +pi regardless of the sign of zero
    if (z.im.is_zero() && z.re.sign() < 0) a = Real::pi(z.prec());
    return a;
}
Complex exp(const Complex& z) {
    Real m = exp(z.re);
    return Complex(m * cos(z.im), m * sin(z.im));
}
Complex log(const Complex& z) {
    if (z.is_zero()) throw Error(ErrorCode::PoleOrZero, "log of zero");
    return Complex(log(abs(z)), arg(z));
}
Complex sqrt(const Complex& z) {
    long p = z.prec();
    if (z.is_zero()) return Complex(p);
    Real m = abs(z);
    Real r = sqrt((m + abs(z.re)).div_si(2));
    // r = sqrt((|z|+|x|)/2)
    if (z.re.sign() >= 0) {
        Real i = z.im / r.mul_si(2);
        return Complex(r, i);
    }
    Real re = abs(z.im) / r.mul_si(2);
    Real im = z.im.sign() < 0 ? -r : r;
    return Complex(re, im);
}
Complex sin(const Complex& z) {
    Real ey = exp(z.im), emy = exp(-z.im);
    Real ch = (ey + emy).div_si(2), sh = (ey - emy).div_si(2);
    return Complex(sin(z.re) * ch, cos(z.re) * sh);
}
Complex cos(const Complex& z) {
    Real ey = exp(z.im), emy = exp(-z.im);
    Real ch = (ey + emy).div_si(2), sh = (ey - emy).div_si(2);
    return Complex(cos(z.re) * ch, -(sin(z.re) * sh));
}
Complex pow(const Complex& z, long n) {
    if (n < 0) {
        Complex one(Real(z.prec(), 1L));
        return one / pow(z, -n);
    }
    Complex result(Real(z.prec(), 1L));
    Complex b = z;
    while (n) {
        if (n & 1) result *= b;
        n >>= 1;
        if (n) b *= b;
    }
    return result;
}
Complex from_mpq(long prec, const mpq_class& q) { return Complex(Real(prec, q)); }

// ---- precision ----

PrecisionContext::PrecisionContext(long wb, long gb, long cf) : working_bits(wb), guard_bits(gb), confirm_factor(cf) {
    validate();
}

void PrecisionContext::validate() const {
    if (working_bits < 64) throw Error(ErrorCode::InvalidArgument, "working_bits must be >= 64");
    if (guard_bits <= 0 || guard_bits >= working_bits) throw Error(ErrorCode::InvalidArgument, "guard_bits must lie in (0, working_bits)");
    if (confirm_factor < 2) throw Error(ErrorCode::InvalidArgument, "confirm_factor must be >= 2");
    if (guard_bits - working_bits >= -32) throw Error(ErrorCode::InvalidArgument, "tolerance must be below 2^-32");
}

Real PrecisionContext::tolerance() const {
    Real t(64, 1L);
    return t.mul_2exp(tolerance_exp());
}

const char* zero_status_name(ZeroStatus s) {
    switch (s) {
        case ZeroStatus::Zero: return "Zero";
        case ZeroStatus::NonZero: return "NonZero";
        case ZeroStatus::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace {

// |x| <= 2^e * scale, compared at low precision
bool below(const Complex& x, const Real& scale, long e) {
    if (x.is_zero()) return true;
    Real ax = abs(x).rounded(64);
    Real bound = scale.rounded(64).mul_2exp(e);
    return ax <= bound;
}

long scale_exponent(const Real& scale) { return scale.is_zero() ? 0 : scale.exponent(); }

}  // namespace

CertifiedBool check_zero(const Complex& x, const Real& scale, const PrecisionContext& ctx) {
    CertifiedBool out;
    out.residual_exp = x.is_zero() ? LONG_MIN / 4 : abs(x).exponent();
    out.scale_exp = scale_exponent(scale);
    if (x.is_zero() || below(x, scale, ctx.tolerance_exp())) {
        out.status = ZeroStatus::Zero;
        out.lower_bound = Real(64, 0L);
    } else {
        out.status = ZeroStatus::NonZero;
        out.lower_bound = abs(x).rounded(64);
    }
    return out;
}

CertifiedBool certify_zero(const Complex& x, const Real& scale_in, const PrecisionContext& ctx, const Recompute& recompute) {
    CertifiedBool out;
    // a vanishing scale would make every bound zero; treat it as unit scale
    Real scale = scale_in.is_zero() ? Real(64, 1L) : scale_in;
    out.scale_exp = scale_exponent(scale);
    out.residual_exp = x.is_zero() ? LONG_MIN / 4 : abs(x).exponent();
    const long tol = ctx.tolerance_exp();
    bool z1 = below(x, scale, tol);
    if (!z1 && !below(x, scale, tol / 2)) {
        // far above tolerance, no rerun needed
        out.status = ZeroStatus::NonZero;
        out.lower_bound = abs(x).rounded(64);
        return out;
    }
    if (!recompute) {
        out.status = z1 ? ZeroStatus::Zero : ZeroStatus::NonZero;
        out.lower_bound = z1 ? Real(64, 0L) : abs(x).rounded(64);
        return out;
    }
    PrecisionContext hi = ctx.confirm();
    Scaled y = recompute(hi);
    Real scale2 = y.scale.is_zero() ? Real(64, 1L) : y.scale;
    bool z2 = below(y.value, scale2, hi.tolerance_exp());
    out.residual_exp = y.value.is_zero() ? LONG_MIN / 4 : abs(y.value).exponent();
    out.scale_exp = scale_exponent(scale2);
    if (z1 && z2) {
        out.status = ZeroStatus::Zero;
        out.lower_bound = Real(64, 0L);
    } else if (!z1 && !z2) {
        out.status = ZeroStatus::NonZero;
        out.lower_bound = abs(y.value).rounded(64);
    } else {
        out.status = ZeroStatus::Inconclusive;
        out.lower_bound = Real(64, 0L);
    }
    return out;
}

CertifiedBool certify_zero(const Recompute& eval, const PrecisionContext& ctx) {
    Scaled s = eval(ctx);
    return certify_zero(s.value, s.scale, ctx, eval);
}

Complex agm(const Complex& a0, const Complex& b0, const PrecisionContext& ctx) {
    const long p = ctx.bits();
    Complex a = a0.rounded(p), b = b0.rounded(p);
    if (a.is_zero() || b.is_zero()) throw Error(ErrorCode::InvalidArgument, "agm of zero argument");
    const long target = -(p - 4);
    const long max_iter = 4 * ctx.working_bits;
    for (long it = 0; it < max_iter; ++it) {
        Complex d = a - b;
        if (d.is_zero() || abs(d).exponent() - abs(a).exponent() < target) return a;
        Complex an = (a + b).div_si(2);
        Complex bn = sqrt(a * b);
        // right choice: Re(bn/an) >= 0
        Complex ratio = bn / an;
        if (ratio.re.sign() < 0) bn = -bn;
        a = std::move(an);
        b = std::move(bn);
    }
    throw Error(ErrorCode::NonConvergence, "agm did not converge");
}

Real max_abs(std::initializer_list<const Complex*> zs) {
    Real m(64, 0L);
    for (const Complex* z : zs) {
        Real a = abs(*z).rounded(64);
        if (a > m) m = a;
    }
    return m;
}

std::string to_json_number(const Real& x) { return x.to_string(); }

}  // namespace motper
