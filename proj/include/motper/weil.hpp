#pragma once
// Hodge and Lie realizations of the Weil pairing for an elliptic curve, brackets and factor systems.
// Dual points are always given by their source in Lie(E) under the polarization.

#include <vector>

#include "motper/elliptic.hpp"

namespace motper {

struct SymplecticCoords {
    Real x1, x2;  // z = x1*omega1 + x2*omega2
};

// H(z1, z2) = z1 * conj(z2) / normalizer, normalizer = Im(omega1 * conj(omega2)) > 0 here.
struct PolarizationForm {
    Real normalizer;
    explicit PolarizationForm(const QuasiPeriodLattice& L);
    Complex H(const Complex& z1, const Complex& z2) const;
    Real im_H(const Complex& z1, const Complex& z2) const;
};

SymplecticCoords symplectic_coords(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

// R-linear extension of the quasi-period map: x1*eta1 + x2*eta2
Complex h_tilde(const Complex& z, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

// 2*pi*i*Im H(lam_star_source, lam); both arguments must be lattice points (NotLatticePoint otherwise).
// The integer k with value = 2*pi*i*k is returned through *k when given.
Complex hodge_pairing(const Complex& lam, const Complex& lam_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx,
                      mpz_class* k = nullptr);

// e^{2 pi i Im H(z_star_source, z)}
Complex lie_pairing(const Complex& z, const Complex& z_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

using CMatrix = std::vector<std::vector<Complex>>;

// (i,k) -> e^{2 pi i (Im H(z2s_k, z1_i) - Im H(z1s_k, z2_i))}
CMatrix lie_bracket(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                    const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx);
// additive form of the same bracket, without reduction mod 2 pi i Z
CMatrix lie_bracket_log(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                        const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

// (i,k) -> 2 pi i Im H(z2s_k, z1_i)
CMatrix factor_system(const std::vector<Complex>& z1, const std::vector<Complex>& z1s, const std::vector<Complex>& z2,
                      const std::vector<Complex>& z2s, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

// Coordinates v* of a dual point such that Im H(z_star_source, z) = x(z) . v*; v* = (-x2, x1) of the source.
SymplecticCoords dual_coords(const Complex& z_star_source, const QuasiPeriodLattice& L, const PrecisionContext& ctx);

}  // namespace motper
