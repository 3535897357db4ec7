#pragma once
// Shared curves and small helpers for the test binaries.

#include <random>
#include <string>

#include "motper/elliptic.hpp"

namespace fx {

using namespace motper;

inline Curve square() { return Curve::from_invariants({"4", "0"}, {"0", "0"}); }
inline Curve hexagonal() { return Curve::from_invariants({"0", "0"}, {"4", "0"}); }
// CM by the maximal order of Q(sqrt(-7)), j = -3375
inline Curve cm7() { return Curve::from_invariants({"140", "0"}, {"392", "0"}); }
inline Curve noncm() { return Curve::from_invariants({"4", "0"}, {"1", "0"}); }
inline Curve generic_lattice() { return Curve::from_lattice({"1", "0"}, {"0.3141592653589793238462643383279502884197", "-1.7320508075688772935274463415058723669428"}); }

// |x| <= 2^e * max(1, scale)
inline bool tiny(const Complex& x, long e, const Real& scale = Real(64, 1L)) {
    if (x.is_zero()) return true;
    Real s = max(Real(64, 1L), scale);
    return abs(x).rounded(64) <= s.mul_2exp(e);
}

// random point x1*omega1 + x2*omega2 with x in (0.05, 0.95)
inline Complex random_point(const QuasiPeriodLattice& L, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(0.05, 0.95);
    return L.omega1 * Real(L.bits, d(rng)) + L.omega2 * Real(L.bits, d(rng));
}

}  // namespace fx
