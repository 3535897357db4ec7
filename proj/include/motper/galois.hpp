#pragma once
// Dimensions of B, Z'(1), Z/Z'(1), UR(M); the ten-case classifier for n = s = 1; polynomial period relations.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "motper/motive.hpp"
#include "motper/relations.hpp"

namespace motper {

// ---------------------------------------------------------------- dimensions, any (n, s)

struct SubvarietyData {
    bool over_qtau = false;  // F = Q(tau) when the curve has CM
    std::optional<CMData> cm;
    int n = 0, s = 0;
    int N = 0;  // B ~ E^N
    // rows for p_1..p_n then q_1..q_s, each of length N over F
    std::vector<std::vector<QT>> gamma_rows;
    std::vector<int> retained;
    bool heuristic = false;
};

SubvarietyData dim_B(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx, const mpz_class& max_height);
// vectors S_ik over Q (2 N^2 coordinates), their rank, and an integer basis of the kernel of (c_ik) -> sum c_ik S_ik
struct ZprimeData {
    int dim = 0;
    std::vector<std::vector<mpz_class>> kernel;  // each of length n*s, index i*s + k
};
ZprimeData dim_Zprime(const SubvarietyData& sub);

struct ZmodZprimeData {
    int dim = 0;
    bool heuristic = false;
    std::vector<std::vector<PairStructure>> structure;  // per pair, as used for the reduced invariant
};
ZmodZprimeData dim_ZmodZprime(const OneMotive& M, const SubvarietyData& sub, const std::vector<std::vector<mpz_class>>& zperp_basis,
                              const PrecisionContext& ctx, const mpz_class& max_height);

struct UnipotentDims {
    int dim_B = 0, dim_Zprime = 0, dim_ZmodZprime = 0, dim_UR = 0;
    std::vector<std::string> heuristic_flags;
};
UnipotentDims unipotent_dims(const OneMotive& M, const std::optional<CMData>& cm, const PrecisionContext& ctx, const mpz_class& max_height);

// structure of pair (i, k) read off the numbers: Q torsion first, then P torsion, then antisymmetric dependence
PairStructure detect_pair_structure(const OneMotive& M, int i, int k, const std::optional<CMData>& cm, const PrecisionContext& ctx,
                                    const mpz_class& max_height);
// D / 2 pi i for that structure
Complex reduced_gamma(const OneMotive& M, int i, int k, const PairStructure& st, const std::optional<CMData>& cm,
                      const PrecisionContext& ctx);

// ---------------------------------------------------------------- relations, n = s = 1

enum class CaseId {
    GENERIC,
    DEP_NONANTISYM,
    DEP_ANTISYM_R_FREE,
    DEP_ANTISYM_R_TORSION,
    P_TORSION_R_FREE,
    P_TORSION_R_TORSION,
    Q_TORSION_R_FREE,
    Q_TORSION_R_TORSION,
    BOTH_TORSION_R_FREE,
    BOTH_TORSION_R_TORSION
};
const char* case_name(CaseId c);
std::optional<CaseId> case_from_name(const std::string& s);
constexpr int kNumCases = 10;

struct CaseDims {
    int dim_B, dim_Zprime, dim_ZmodZprime, dim_UR;
};
CaseDims expected_dims(CaseId c);
int expected_ideal_rank(CaseId c, bool cm);

// the ten periods of an n = s = 1 motive
namespace pv {
enum Var : int { X = 0, P, ZP, U1, U2, W1, E1, W2, E2, T };
}
constexpr int kNumVars = 10;
const char* var_name(int v);

struct Term {
    QT coeff;
    std::array<int, kNumVars> exp{};
};

struct RelationPolynomial {
    enum class Kind { Vanishes, AlgebraicValue };
    std::string name;
    Kind kind = Kind::Vanishes;
    int weight = 0;  // AlgebraicValue: polynomial / (2 pi i)^weight is algebraic
    std::vector<Term> terms;
    std::string expression() const;
};

// exact data a case's relations depend on
struct CaseData {
    QuadField field;  // meaningful with CM
    std::optional<QT> kappa;
    Q a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    QT phi;
    Q d1 = 0, d2 = 0;
    std::optional<Q> gamma_tilde;
    bool has_alpha = false, has_beta = false, has_phi = false;
};

std::vector<RelationPolynomial> case_relations(CaseId c, const CaseData& d, bool cm);

enum class RelationStatus { Certified, Violated, Unverified };
const char* relation_status_name(RelationStatus s);

struct RelationCheck {
    std::string name;
    RelationPolynomial::Kind kind = RelationPolynomial::Kind::Vanishes;
    RelationStatus status = RelationStatus::Unverified;
    long residual_exp = 0, scale_exp = 0;
    std::optional<AlgebraicReconstruction> value;
};

struct VerificationReport {
    std::vector<RelationCheck> checks;
    int jacobian_rank = 0;
    bool all_certified() const;
    bool any_violated() const;
};

using PeriodSource = std::function<PeriodMatrix(const PrecisionContext&)>;
std::array<Complex, kNumVars> period_vars(const PeriodMatrix& pm);
// tau as the root of its exact minimal polynomial nearest omega2/omega1 (so omega2 - tau*omega1 is a real test)
Complex exact_tau(const std::optional<CMData>& cm, const Complex& approx);
Complex evaluate(const RelationPolynomial& r, const std::array<Complex, kNumVars>& v, const Complex& tau, Real* scale = nullptr);
// the same with tau taken from the matrix
Complex evaluate_on(const RelationPolynomial& r, const PeriodMatrix& pm, const std::optional<CMData>& cm, Real* scale = nullptr);
// polynomial / T^weight for an AlgebraicValue relation
Complex algebraic_value(const RelationPolynomial& r, const PeriodMatrix& pm, const std::optional<CMData>& cm);
// rerun: recomputation at higher precision; without it AlgebraicValue relations stay Unverified
VerificationReport verify_relations(const PeriodMatrix& pm, const std::vector<RelationPolynomial>& rels, const PrecisionContext& ctx,
                                    const mpz_class& max_height, const std::optional<CMData>& cm, const PeriodSource* rerun = nullptr);
// numerical rank of the Jacobian of the relations at the period point
int jacobian_rank(const PeriodMatrix& pm, const std::vector<RelationPolynomial>& rels, const std::optional<CMData>& cm);

// ---------------------------------------------------------------- classification, n = s = 1

struct ClassificationReport {
    CaseId id = CaseId::GENERIC;
    bool cm = false;
    std::optional<CMData> cm_data;
    UnipotentDims dims;
    int dim_MT_E = 4, dim_MT_M = 0;
    CaseData data;
    PairStructure structure;
    std::optional<LatticeMembership> p_torsion, q_torsion;
    std::optional<EndoDependence> dependence;
    bool antisymmetric = false;
    std::vector<RelationPolynomial> relations;
    VerificationReport verification;
    std::vector<std::string> basis;
    std::vector<std::string> heuristic_flags;
    bool heuristic() const { return !heuristic_flags.empty(); }
};

ClassificationReport classify(const OneMotive& M, const PrecisionContext& ctx, const mpz_class& max_height);

}  // namespace motper
