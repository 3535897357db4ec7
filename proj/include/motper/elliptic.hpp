#pragma once
// Periods, quasi-periods, Weierstrass functions, Serre's function, elliptic logarithms, CM data.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "motper/numerics.hpp"
#include "motper/rational.hpp"

namespace motper {

// Orientation: Im(omega1/omega2) > 0, so tau = omega2/omega1 lies in the lower half plane and
// omega1*eta2 - omega2*eta1 = +2*pi*i.
struct QuasiPeriodLattice {
    Complex omega1, omega2, eta1, eta2, g2, g3;

    // reduced basis used for theta series: (V1, V2) with tr = V2/V1 in the standard fundamental domain
    Complex V1, V2, H1, H2, tr, nome, nome14, theta1p0;
    // (omega2, omega1)^t = basis_change * (V1, V2)^t
    long basis_change[2][2] = {{1, 0}, {0, 1}};
    long bits = 0;

    Complex tau() const { return omega2 / omega1; }
    Complex two_pi_i() const { return Complex::two_pi_i(bits); }
    // eta of an integer combination m*omega1 + n*omega2
    Complex eta_of(long m, long n) const { return eta1.mul_si(m) + eta2.mul_si(n); }
};

struct CStr {
    std::string re = "0", im = "0";
};

// Exact description of a curve; realizes its lattice at any precision (cached per bit count).
class Curve {
public:
    enum class Kind { Invariants, Lattice };
    static Curve from_invariants(CStr g2, CStr g3);
    static Curve from_lattice(CStr omega1, CStr omega2);

    Kind kind() const { return kind_; }
    const CStr& a() const { return a_; }
    const CStr& b() const { return b_; }
    std::shared_ptr<const QuasiPeriodLattice> lattice(const PrecisionContext& ctx) const;

private:
    Kind kind_ = Kind::Invariants;
    CStr a_, b_;
    struct Cache {
        std::mutex m;
        std::map<long, std::shared_ptr<const QuasiPeriodLattice>> by_bits;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// Builds the lattice from (omega1, omega2); orientation is normalized by negating omega2 when needed.
QuasiPeriodLattice lattice_from_periods(const Complex& omega1, const Complex& omega2, const PrecisionContext& ctx);
QuasiPeriodLattice periods_from_invariants(const Complex& g2, const Complex& g3, const PrecisionContext& ctx);
std::pair<Complex, Complex> invariants_from_lattice(const Complex& omega1, const Complex& omega2, const PrecisionContext& ctx);

struct WeierstrassValues {
    Complex p, p_prime, zeta, sigma;
};

// z = x1*omega1 + x2*omega2 with real x1, x2
std::pair<Real, Real> lattice_coords(const Complex& z, const QuasiPeriodLattice& L);
bool is_lattice_point(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

WeierstrassValues weierstrass(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);
Complex wp_sigma(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);  // exact 0 on the lattice
Complex wp_zeta(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);
Complex serre_f(const Complex& q, const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);
Complex elliptic_log(const Complex& x, const Complex& y, const QuasiPeriodLattice& L, const PrecisionContext& ctx);
Complex third_kind_period(const Complex& q, int i, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

struct CMData {
    Complex tau;
    mpz_class a, b, c;  // a tau^2 + b tau + c = 0
    QuadField field() const { return QuadField{a, b, c}; }
    Complex kappa;
    std::optional<QT> kappa_exact;          // kappa = x + y tau when reconstructed in Q(tau)
    std::vector<mpz_class> kappa_minpoly;   // fallback witness (coefficients, constant term first)
    mpz_class field_disc;
    long residual_exp = 0;
};

std::optional<CMData> detect_cm(const Curve& curve, const PrecisionContext& ctx, const mpz_class& max_height);
// numeric value of x + y*tau at the lattice's precision
Complex qt_value(const QT& u, const QuasiPeriodLattice& L);

struct Endomorphism {
    Q phi1, phi2;
    Complex phi, phi_bar;
    Complex Phi[2][2];
    QMat M_phi;  // 2x2, acts on (omega1, omega2)^t
    bool antisymmetric = false;
};

bool is_antisymmetric(const Q& phi1, const Q& phi2, const std::optional<CMData>& cm);
Endomorphism endo_matrix(const Q& phi1, const Q& phi2, const std::optional<CMData>& cm, const Curve& curve,
                         const PrecisionContext& ctx, const mpz_class& max_height);

}  // namespace motper
