#pragma once
// Multiprecision reals/complexes over MPFR, precision policy, zero certification.

#include <mpfr.h>
#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace motper {

enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    SingularCurve,
    DegenerateLattice,
    PoleAtLatticePoint,
    PoleOrZero,
    NotOnCurve,
    NonConvergence,
    Inconclusive,
    ReconstructionFailure,
    NotLatticePoint,
    PoleConfiguration,
    InsufficientPrecision,
    AmbiguousClassification,
    MissingConstant,
    NonRationalConstant,
    RelationViolated,
    ShapeMismatch,
    Singular,
    Unsupported,
    ParseError,
    Internal
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode c, const std::string& what) : std::runtime_error(what), code_(c) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Real: owns an mpfr_t. Binary operations yield the larger of the operand precisions.
class Real {
public:
    explicit Real(long prec = 64);
    Real(long prec, long v);
    Real(long prec, int v) : Real(prec, static_cast<long>(v)) {}
    Real(long prec, double v);
    Real(long prec, const mpz_class& v);
    Real(long prec, const mpq_class& v);
    static Real parse(long prec, const std::string& s);  // decimal string, throws ParseError
    static Real pi(long prec);

    Real(const Real& o);
    Real(Real&& o) noexcept;
    Real& operator=(const Real& o);
    Real& operator=(Real&& o) noexcept;
    ~Real();

    long prec() const { return static_cast<long>(mpfr_get_prec(v_)); }
    Real rounded(long prec) const;

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    // floor(log2|x|) style exponent; very negative for zero.
    long exponent() const;
    mpz_class round_to_z() const;
    mpz_class floor_to_z() const;
    std::string to_string(int digits = 0) const;  // 0: enough digits for the precision

    Real operator-() const;
    Real& operator+=(const Real& o);
    Real& operator-=(const Real& o);
    Real& operator*=(const Real& o);
    Real& operator/=(const Real& o);

    friend Real operator+(Real a, const Real& b) { return a += b; }
    friend Real operator-(Real a, const Real& b) { return a -= b; }
    friend Real operator*(Real a, const Real& b) { return a *= b; }
    friend Real operator/(Real a, const Real& b) { return a /= b; }
    Real mul_si(long k) const;
    Real div_si(long k) const;
    Real mul_2exp(long e) const;

    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }

private:
    mpfr_t v_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real atan2(const Real& y, const Real& x);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);
mpq_class to_mpq(const Real& x);  // exact binary value

class Complex {
public:
    explicit Complex(long prec = 64) : re(prec), im(prec) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    explicit Complex(Real r);
    Complex(long prec, double r, double i = 0.0) : re(prec, r), im(prec, i) {}
    static Complex parse(long prec, const std::string& re, const std::string& im);
    static Complex i(long prec) { return Complex(Real(prec, 0L), Real(prec, 1L)); }
    static Complex two_pi_i(long prec);

    long prec() const { return std::max(re.prec(), im.prec()); }
    Complex rounded(long prec) const { return Complex(re.rounded(prec), im.rounded(prec)); }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool is_finite() const { return re.is_finite() && im.is_finite(); }

    Complex operator-() const { return Complex(-re, -im); }
    Complex& operator+=(const Complex& o);
    Complex& operator-=(const Complex& o);
    Complex& operator*=(const Complex& o);
    Complex& operator/=(const Complex& o);
    Complex& operator*=(const Real& o);
    Complex& operator/=(const Real& o);

    friend Complex operator+(Complex a, const Complex& b) { return a += b; }
    friend Complex operator-(Complex a, const Complex& b) { return a -= b; }
    friend Complex operator*(Complex a, const Complex& b) { return a *= b; }
    friend Complex operator/(Complex a, const Complex& b) { return a /= b; }
    friend Complex operator*(Complex a, const Real& b) { return a *= b; }
    friend Complex operator*(const Real& b, Complex a) { return a *= b; }
    friend Complex operator/(Complex a, const Real& b) { return a /= b; }
    Complex mul_si(long k) const { return Complex(re.mul_si(k), im.mul_si(k)); }
    Complex div_si(long k) const { return Complex(re.div_si(k), im.div_si(k)); }
    Complex mul_q(const mpq_class& q) const;
    Complex mul_i() const { return Complex(-im, re); }

    Real re, im;
};

Complex conj(const Complex& z);
Real norm(const Complex& z);  // |z|^2
Real abs(const Complex& z);
Real arg(const Complex& z);
Complex exp(const Complex& z);
Complex log(const Complex& z);  // principal branch, Im in (-pi, pi]
Complex sqrt(const Complex& z);  // principal branch
Complex sin(const Complex& z);
Complex cos(const Complex& z);
Complex pow(const Complex& z, long n);
Complex from_mpq(long prec, const mpq_class& q);

// Precision policy. Computation happens at working_bits + guard_bits.
struct PrecisionContext {
    long working_bits = 256;
    long guard_bits = 32;
    long confirm_factor = 2;

    PrecisionContext() = default;
    PrecisionContext(long wb, long gb = 32, long cf = 2);
    void validate() const;
    long bits() const { return working_bits + guard_bits; }
    // 2^(guard - working), as an exponent
    long tolerance_exp() const { return guard_bits - working_bits; }
    Real tolerance() const;
    PrecisionContext confirm() const { return PrecisionContext(working_bits * confirm_factor, guard_bits, confirm_factor); }
    PrecisionContext scaled(long factor) const { return PrecisionContext(working_bits * factor, guard_bits, confirm_factor); }
};

enum class ZeroStatus { Zero, NonZero, Inconclusive };
const char* zero_status_name(ZeroStatus s);

struct CertifiedBool {
    ZeroStatus status = ZeroStatus::Inconclusive;
    long residual_exp = 0;      // log2 of |x| at the highest precision used (relative exponents use scale_exp)
    long scale_exp = 0;         // log2 of the scale
    Real lower_bound{64};       // for NonZero: certified-ish lower bound on |x|
    bool is_zero() const { return status == ZeroStatus::Zero; }
    bool is_nonzero() const { return status == ZeroStatus::NonZero; }
};

// A value together with the modulus scale of the terms that produced it.
struct Scaled {
    Complex value;
    Real scale;
};

using Recompute = std::function<Scaled(const PrecisionContext&)>;

// certify_zero: Zero iff |x| <= tol*scale and the rerun at confirm precision satisfies its tighter bound.
// Values above sqrt(tol)*scale are NonZero without a rerun.
CertifiedBool certify_zero(const Complex& x, const Real& scale, const PrecisionContext& ctx, const Recompute& recompute);
CertifiedBool certify_zero(const Recompute& eval, const PrecisionContext& ctx);
// exact zero or plain tolerance check, no rerun available
CertifiedBool check_zero(const Complex& x, const Real& scale, const PrecisionContext& ctx);

Complex agm(const Complex& a, const Complex& b, const PrecisionContext& ctx);

// largest modulus among the arguments, at 64 bits
Real max_abs(std::initializer_list<const Complex*> zs);

std::string to_json_number(const Real& x);  // decimal string

}  // namespace motper
