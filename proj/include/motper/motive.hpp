#pragma once
// Semi-elliptic 1-motives [Z^n -> G], G an extension of E by G_m^s: data model, period matrices of M and M*,
// path changes and the alpha/beta/gamma constants.

#include <array>
#include <optional>
#include <vector>

#include "motper/elliptic.hpp"
#include "motper/relations.hpp"
#include "motper/weil.hpp"

namespace motper {

// A point of Lie(E) given exactly enough to be recomputed at any precision.
struct PointSpec {
    enum class Kind { Log, Curve, Lattice, Endo };
    Kind kind = Kind::Log;
    CStr z;          // Log
    CStr x, y;       // Curve: elliptic_log(x, y)
    Q a = 0, b = 0;  // Lattice: a*omega1 + b*omega2; Endo: the lattice correction
    Q phi1 = 0, phi2 = 0;
    int base = 0;    // Endo: (phi1 + phi2*tau) * p_base + a*omega1 + b*omega2

    static PointSpec log(CStr z);
    static PointSpec curve(CStr x, CStr y);
    static PointSpec lattice(Q a, Q b);
    static PointSpec endo(Q phi1, Q phi2, int base, Q a = 0, Q b = 0);
};

// Toric logarithm l_{ik}. Gamma: l = log f_q(p) - 2 pi i gamma. Reduced: l chosen so the reduced
// invariant of the pair (see PairStructure) equals 2 pi i gamma.
struct EllSpec {
    enum class Kind { Literal, Gamma, Reduced };
    Kind kind = Kind::Literal;
    CStr value;
    Q gamma = 0;

    static EllSpec literal(CStr v);
    static EllSpec of_gamma(Q g);
    static EllSpec reduced(Q g);
};

struct MotiveHints {
    std::optional<long> p_torsion;                   // order of P (n = 1)
    std::optional<long> q_torsion;                   // order of Q (s = 1)
    std::optional<std::pair<Q, Q>> q_equals_phi_p;  // q = phi*p mod lattice
    std::optional<bool> r_torsion;
    bool empty() const { return !p_torsion && !q_torsion && !q_equals_phi_p && !r_torsion; }
};

struct OneMotive {
    Curve curve;
    int n = 1, s = 1;
    std::vector<PointSpec> p, q;
    std::vector<std::vector<EllSpec>> ell;  // n x s
    MotiveHints hints;

    // path choices: p_i += m*omega1 + n*omega2; q_k += a*omega2 - b*omega1 (so Upsilon_Q moves by -2 pi i (a, b));
    // branch: extra 2 pi i multiples in log f_{q_k}(p_i)
    std::vector<std::array<mpz_class, 2>> p_shift, q_shift;
    std::vector<std::vector<mpz_class>> branch;

    void validate() const;  // shapes, references; throws InvalidArgument / ShapeMismatch
};

// Structure of one pair (P_i, Q_k) used for the reduced invariant D with D = X + correction.
struct PairStructure {
    enum class Kind { None, PTorsion, QTorsion, Dependent };
    Kind kind = Kind::None;
    Q a1 = 0, a2 = 0;  // PTorsion: p = a1*omega1 + a2*omega2
    Q b1 = 0, b2 = 0;  // QTorsion: q = b1*omega1 + b2*omega2
    Q phi1 = 0, phi2 = 0, d1 = 0, d2 = 0;  // Dependent: q = phi*p + d1*omega1 + d2*omega2 (antisymmetric phi)
};

// All transcendental inputs at one precision.
struct MotiveValues {
    std::shared_ptr<const QuasiPeriodLattice> L;
    std::vector<Complex> p, q, zp, zq;  // points and zeta values
    CMatrix logf;                        // log f_{q_k}(p_i) with the recorded path choices
    CMatrix ell;
    CMatrix X;                           // logf - ell
    // Upsilon_Q column k: (eta1 q - omega1 zeta q, eta2 q - omega2 zeta q)
    std::vector<std::array<Complex, 2>> ups_q;
    // reduction of p_i into the fundamental cell: p_i = p0 + m omega1 + n omega2
    std::vector<std::array<mpz_class, 2>> cell;
};

MotiveValues motive_values(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx);
struct MotivePoints {
    std::shared_ptr<const QuasiPeriodLattice> L;
    std::vector<Complex> p, q;  // with path shifts
};
MotivePoints motive_points(const OneMotive& M, const PrecisionContext& ctx);
// log f_q(p) with p reduced to the cell and a precision-stable principal branch (arg pi on the negative axis)
Complex canonical_log_f(const Complex& q, const Complex& p, const QuasiPeriodLattice& L, const PrecisionContext& ctx,
                        std::array<mpz_class, 2>* cell = nullptr);
Complex point_value(const OneMotive& M, const PointSpec& ps, bool is_q, const QuasiPeriodLattice& L, const std::optional<CMData>& cm,
                    const PrecisionContext& ctx);

// correction with D = X + correction; throws Unsupported for Kind::None
Complex reduced_correction(const MotiveValues& v, int i, int k, const PairStructure& st, const std::optional<CMData>& cm,
                           const PrecisionContext& ctx);
// what an EllSpec::Reduced entry refers to, read off the point specs (Unsupported when not recognizable)
PairStructure spec_structure(const OneMotive& M, int i, int k, const std::optional<CMData>& cm);

struct PeriodMatrix {
    bool dual = false;
    int n = 0, s = 0;
    CMatrix m;  // (n+2+s) square
    // provenance
    std::vector<std::array<mpz_class, 2>> p_shift, q_shift, cell;
    std::vector<std::vector<mpz_class>> branch;
    std::vector<std::vector<mpz_class>> dual_branch;  // M*: 2 pi i multiples fixed in Xi_{R*}
    long bits = 0;

    int size() const { return n + 2 + s; }
    // Pi_M: rows [n | 2 | s], columns [s | 2 | n]
    const Complex& Xi(int i, int k) const { return m[i][k]; }
    const Complex& logP(int i, int j) const { return m[i][s + j]; }
    const Complex& UpsQ(int j, int k) const { return m[n + j][k]; }
    const Complex& PiA(int j, int l) const { return m[n + j][s + l]; }
    // Pi_M*: rows [n | 2 | s], columns [s | 2 | n]
    const Complex& PiAdual(int j, int l) const { return m[n + j][s + l]; }
    const Complex& UpsP(int j, int i) const { return m[n + j][s + 2 + i]; }
    const Complex& logQ(int k, int j) const { return m[n + 2 + k][s + j]; }
    const Complex& XiDual(int k, int i) const { return m[n + 2 + k][s + 2 + i]; }
};

PeriodMatrix build_period_matrix(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm = std::nullopt);
PeriodMatrix build_dual_period_matrix(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm = std::nullopt);

struct PathOffsets {
    std::vector<std::array<mpz_class, 2>> alpha;       // per p_i
    std::vector<std::array<mpz_class, 2>> alpha_star;  // per q_k
    std::vector<std::vector<mpz_class>> sigma;         // n x s
};
OneMotive shift_paths(const OneMotive& M, const PathOffsets& off, const PrecisionContext& ctx);

// Certified checks on the assembled matrices. Each entry is a residual certified at ctx with a rerun.
struct MatrixCheck {
    bool ok = true;
    long worst_exp = -100000;  // log2 of the largest residual relative to its scale
    std::vector<std::string> failures;
};
MatrixCheck check_duality(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm = std::nullopt);
MatrixCheck check_lemma_identities(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm = std::nullopt);
// det(Pi_M) / (2 pi i)^{1+s} and det(Pi_M*) / (2 pi i)^{n+1}, reconstructed to +-1
struct DetCheck {
    std::optional<Q> det_ratio, dual_det_ratio;
};
DetCheck check_determinants(const OneMotive& M, const PrecisionContext& ctx, const std::optional<CMData>& cm = std::nullopt);
// shift_paths(M) against the stated differences
MatrixCheck check_shift(const OneMotive& M, const PathOffsets& off, const PrecisionContext& ctx,
                        const std::optional<CMData>& cm = std::nullopt);

struct MotiveConstants {
    std::vector<std::array<Complex, 2>> alpha, beta;
    CMatrix gamma;
    std::vector<std::optional<LatticeMembership>> alpha_rational, beta_rational;
    std::vector<std::vector<std::optional<Q>>> gamma_rational;
    std::vector<Complex> c_P, c_Q;  // zeta - alpha.eta for torsion points (zero otherwise)
};
MotiveConstants motive_constants(const OneMotive& M, const PrecisionContext& ctx, const mpz_class& max_height,
                                 const std::optional<CMData>& cm = std::nullopt);

// small dense helpers
CMatrix cmat_mul(const CMatrix& a, const CMatrix& b);
CMatrix cmat_transpose(const CMatrix& a);
Complex cmat_det(CMatrix a);

}  // namespace motper
