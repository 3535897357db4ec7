#pragma once
// Mumford-Tate group as rational matrices rho(a, u, u*, sigma), its action on period matrices,
// per-case parameterizations for n = s = 1 and the stabilizer test.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "motper/galois.hpp"
#include "motper/rational.hpp"

namespace motper {

//   [ Id_n  u   sigma         ]
//   [ 0     a   u*            ]
//   [ 0     0   det(a) Id_s   ]
struct MTElement {
    QMat a;       // 2 x 2
    QMat u;       // n x 2
    QMat u_star;  // 2 x s
    QMat sigma;   // n x s

    int n() const { return u.rows(); }
    int s() const { return u_star.cols(); }
    QMat matrix() const;
    bool operator==(const MTElement& o) const { return a == o.a && u == o.u && u_star == o.u_star && sigma == o.sigma; }
    bool operator!=(const MTElement& o) const { return !(*this == o); }
};

MTElement mt_identity(int n, int s);
// throws ShapeMismatch / Singular
MTElement mt_make(QMat a, QMat u, QMat u_star, QMat sigma);
MTElement compose(const MTElement& r1, const MTElement& r2);
MTElement invert(const MTElement& r);
MTElement commutator(const MTElement& r1, const MTElement& r2);

// rho * Pi_M; provenance fields that no longer describe paths are cleared
PeriodMatrix act(const MTElement& r, const PeriodMatrix& pm);

// Reductive part. Non-CM: random invertible rational matrix. CM: [[b1, b2], [-b2 N, b1 + b2 Tr]] with
// N, Tr the norm and trace of tau, i.e. multiplication by b1 + b2 tau on (omega1, omega2).
QMat sample_reductive(const std::optional<CMData>& cm, std::uint64_t seed);
QMat cm_reductive(const Q& b1, const Q& b2, const QuadField& F);
// matrix of phi = phi1 + phi2 tau on (omega1, omega2)^t
QMat endo_qmatrix(const QT& phi, const QuadField& F);

// which blocks are free and which are bound, per case
enum class Block { A, U, UStar, Sigma };
struct CaseParameterization {
    CaseId id = CaseId::GENERIC;
    std::vector<std::string> free_names;  // u1 u2 | us1 us2 | sigma, in this order when present
    std::vector<Block> bound;             // blocks fixed by formulas (A listed when the curve has CM)
    std::vector<std::string> formulas;    // human-readable constraints
    int free_count() const { return static_cast<int>(free_names.size()); }
};
CaseParameterization case_parameterization(CaseId c, bool cm);

// a: reductive part; free: values for free_names in order. Needs the case's exact constants in d:
// alpha (a1, a2), beta (b1, b2), phi and delta (d1, d2), gamma_tilde. Throws MissingConstant.
MTElement sample_case_element(const CaseParameterization& par, const QMat& a, const std::vector<Q>& free, const CaseData& d, bool cm);
// random conforming element (a from sample_reductive, free parameters small rationals)
MTElement random_case_element(const CaseParameterization& par, const CaseData& d, const std::optional<CMData>& cm, std::uint64_t seed);

// shift one entry of a bound block by 1 (entry picked from seed); nullopt if the case has no bound entry
struct Perturbation {
    MTElement element;
    Block block;
    int row = 0, col = 0;
};
std::optional<Perturbation> perturb_bound_entry(const MTElement& r, const CaseParameterization& par, std::uint64_t seed);

struct StabilizerResult {
    bool stabilizes = false;  // every relation certified on the transformed matrix
    bool violated = false;    // some relation certified nonzero
    std::vector<RelationCheck> checks;
};
// Each relation keeps its coefficients; Vanishes must vanish on act(r, pm), AlgebraicValue must keep the value it has
// on pm. rerun recomputes pm at higher precision for the certificates.
StabilizerResult stabilizes(const MTElement& r, const std::vector<RelationPolynomial>& rels, const PeriodMatrix& pm,
                            const PrecisionContext& ctx, const std::optional<CMData>& cm, const PeriodSource* rerun = nullptr);

std::string mt_str(const MTElement& r);

}  // namespace motper
