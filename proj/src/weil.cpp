#include "motper/weil.hpp"

namespace motper {

PolarizationForm::PolarizationForm(const QuasiPeriodLattice& L) : normalizer((L.omega1 * conj(L.omega2)).im) {
    if (normalizer.sign() <= 0) throw Error(ErrorCode::DegenerateLattice, "polarization normalizer is not positive");
}

Complex PolarizationForm::H(const Complex& z1, const Complex& z2) const {
    Complex w = z1 * conj(z2);
    return Complex(w.re / normalizer, w.im / normalizer);
}

Real PolarizationForm::im_H(const Complex& z1, const Complex& z2) const { return (z1 * conj(z2)).im / normalizer; }

SymplecticCoords symplectic_coords(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    PolarizationForm pf(L);  // throws on a degenerate basis
    (void)ctx;
    auto [x1, x2] = lattice_coords(z, L);
    return {x1, x2};
}

Complex h_tilde(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    auto c = symplectic_coords(z, L, ctx);
    return L.eta1 * c.x1 + L.eta2 * c.x2;
}

namespace {

// integer coordinates of a lattice point, or NotLatticePoint
std::pair<mpz_class, mpz_class> integer_coords(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    if (!is_lattice_point(z, L, ctx)) throw Error(ErrorCode::NotLatticePoint, "argument is not a lattice point");
    auto [x1, x2] = lattice_coords(z, L);
    return {x1.round_to_z(), x2.round_to_z()};
}

}  // namespace

Complex hodge_pairing(const Complex& lam, const Complex& lam_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx,
                      mpz_class* k) {
    auto a = integer_coords(lam, L, ctx);
    auto b = integer_coords(lam_star_source, L, ctx);
    PolarizationForm pf(L);
    Real v = pf.im_H(lam_star_source, lam);
    // Im H on lattice coordinates is x^t J y with J = [[0,1],[-1,0]]
    mpz_class exact = b.first * a.second - b.second * a.first;
    Real gap = abs(v - Real(v.prec(), exact));
    if (!gap.is_zero() && gap.exponent() > ctx.tolerance_exp() + 8) throw Error(ErrorCode::Internal, "hodge pairing is not integral");
    if (k) *k = exact;
    return L.two_pi_i() * v;
}

Complex lie_pairing(const Complex& z, const Complex& z_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    (void)ctx;
    PolarizationForm pf(L);
    return exp(L.two_pi_i() * pf.im_H(z_star_source, z));
}

CMatrix lie_bracket_log(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                        const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    (void)ctx;
    if (z1.size() != z2.size() || z1s.size() != z2s.size()) throw Error(ErrorCode::ShapeMismatch, "bracket arguments differ in shape");
    PolarizationForm pf(L);
    Complex tpi = L.two_pi_i();
    CMatrix out(z1.size(), std::vector<Complex>(z1s.size()));
    for (size_t i = 0; i < z1.size(); ++i)
        for (size_t k = 0; k < z1s.size(); ++k) out[i][k] = tpi * (pf.im_H(z2s[k], z1[i]) - pf.im_H(z1s[k], z2[i]));
    return out;
}

CMatrix lie_bracket(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                    const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    CMatrix m = lie_bracket_log(z1, z1s, z2, z2s, L, ctx);
    for (auto& row : m)
        for (auto& x : row) x = exp(x);
    return m;
}

CMatrix factor_system(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                      const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    (void)ctx;
    (void)z2;
    (void)z1s;
    PolarizationForm pf(L);
    Complex tpi = L.two_pi_i();
    CMatrix out(z1.size(), std::vector<Complex>(z2s.size()));
    for (size_t i = 0; i < z1.size(); ++i)
        for (size_t k = 0; k < z2s.size(); ++k) out[i][k] = tpi * pf.im_H(z2s[k], z1[i]);
    return out;
}

SymplecticCoords dual_coords(const Complex& z_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx) {
    auto c = symplectic_coords(z_star_source, L, ctx);
    return {-c.x2, c.x1};
}

}  // namespace motper
