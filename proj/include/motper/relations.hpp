#pragma once
// Integer relations (integral LLL), rational/algebraic reconstruction, torsion and dependence searches.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "motper/numerics.hpp"
#include "motper/rational.hpp"

namespace motper {

class Curve;
struct QuasiPeriodLattice;
struct CMData;

// Precision needed: working_bits >= kRelationPrecisionConstant * len * log2(max_height).
constexpr long kRelationPrecisionConstant = 2;
// escalation stops once working_bits would exceed this
constexpr long kMaxEscalationBits = 4096;

struct IntegerRelation {
    std::vector<mpz_class> coeffs;
    mpz_class height;
    long residual_exp = 0;
};

struct DetectionVerdict {
    enum class Status { Found, NotFoundUpToHeight } status = Status::NotFoundUpToHeight;
    IntegerRelation relation;
    mpz_class height_bound;
    long bits_used = 0;
    bool found() const { return status == Status::Found; }
    bool heuristic() const { return status == Status::NotFoundUpToHeight; }
};

// Values recomputable at any precision; a relation must be certified at ctx.confirm().
using ValueSource = std::function<std::vector<Complex>(const PrecisionContext&)>;

std::vector<std::vector<mpz_class>> lll_reduce(std::vector<std::vector<mpz_class>> basis);

long required_bits(size_t len, const mpz_class& max_height);

// No escalation: throws InsufficientPrecision when ctx is too small.
DetectionVerdict find_integer_relation(const ValueSource& xs, const mpz_class& max_height, const PrecisionContext& ctx);
// Fixed values (treated as exact at their precision; certification uses the input precision only).
DetectionVerdict find_integer_relation(const std::vector<Complex>& xs, const mpz_class& max_height, const PrecisionContext& ctx);
// Doubles working_bits until the precondition holds (capped), then searches.
DetectionVerdict find_integer_relation_escalating(const ValueSource& xs, const mpz_class& max_height, const PrecisionContext& ctx);

std::optional<Q> rational_reconstruct(const std::function<Complex(const PrecisionContext&)>& x, const mpz_class& max_height,
                                      const PrecisionContext& ctx);
std::optional<Q> rational_reconstruct(const Complex& x, const mpz_class& max_height, const PrecisionContext& ctx);

// minimal polynomial of degree <= max_degree (coefficients constant-first, primitive, leading > 0)
struct AlgebraicReconstruction {
    std::vector<mpz_class> poly;
    long residual_exp = 0;
};
std::optional<AlgebraicReconstruction> algebraic_reconstruct(const std::function<Complex(const PrecisionContext&)>& x, int max_degree,
                                                             const mpz_class& max_height, const PrecisionContext& ctx);
std::string poly_str(const std::vector<mpz_class>& poly, const std::string& var = "x");

struct LatticeMembership {
    Q a, b;
    mpz_class order;  // lcm of denominators
};
std::optional<LatticeMembership> lattice_membership(const std::function<Complex(const PrecisionContext&)>& z, const Curve& curve,
                                                    const mpz_class& max_denominator, const PrecisionContext& ctx);

struct EndoDependence {
    Q phi1, phi2;
    Q delta1, delta2;  // q = phi*p + delta1*omega1 + delta2*omega2
    IntegerRelation relation;
};
std::optional<EndoDependence> endo_dependence(const std::function<Complex(const PrecisionContext&)>& p,
                                              const std::function<Complex(const PrecisionContext&)>& q, const Curve& curve,
                                              const std::optional<CMData>& cm, const mpz_class& max_height,
                                              const PrecisionContext& ctx);

// F-rank of vectors modulo the F-span of mod_periods. F = Q(tau) when cm is given.
struct FRankResult {
    int rank = 0;
    std::vector<int> retained;  // indices of the vectors kept as a basis
    // for each input vector: coefficients over F on the retained basis (QT), plus the period part
    std::vector<std::vector<QT>> coords;
    bool heuristic = false;      // some retention rests on NotFound
};
FRankResult f_rank(const ValueSource& vectors, const std::optional<CMData>& cm, const ValueSource& mod_periods, const mpz_class& max_height,
                   const PrecisionContext& ctx);

}  // namespace motper
