#pragma once
// Exact rationals: matrices over Q and the quadratic field Q(tau).

#include <gmpxx.h>

#include <string>
#include <vector>

namespace motper {

using Q = mpq_class;

std::string q_str(const Q& q);
Q q_parse(const std::string& s);  // "a", "a/b" or a finite decimal "1.25"

class QMat {
public:
    QMat() = default;
    QMat(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<size_t>(rows) * cols) {}
    QMat(int rows, int cols, std::vector<Q> v);
    static QMat identity(int n);

    int rows() const { return r_; }
    int cols() const { return c_; }
    Q& operator()(int i, int j) { return a_[static_cast<size_t>(i) * c_ + j]; }
    const Q& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * c_ + j]; }

    QMat operator+(const QMat& o) const;
    QMat operator-(const QMat& o) const;
    QMat operator*(const QMat& o) const;
    QMat operator*(const Q& s) const;
    QMat operator-() const;
    bool operator==(const QMat& o) const;
    bool operator!=(const QMat& o) const { return !(*this == o); }

    QMat transpose() const;
    Q det() const;
    QMat inverse() const;  // throws Singular
    int rank() const;
    std::vector<std::vector<Q>> kernel() const;  // basis of {x : A x = 0}
    bool is_zero() const;
    std::string str() const;

private:
    int r_ = 0, c_ = 0;
    std::vector<Q> a_;
};

// Q(tau) with a*tau^2 + b*tau + c = 0; elements x + y*tau.
struct QuadField {
    mpz_class a = 1, b = 0, c = 1;
    Q trace_tau() const { return Q(-b, a); }  // tau + conj(tau)
    Q norm_tau() const { return Q(c, a); }    // tau * conj(tau)
};

struct QT {
    Q x, y;
    QT() = default;
    QT(Q x_, Q y_ = 0) : x(std::move(x_)), y(std::move(y_)) {}
    bool is_zero() const { return x == 0 && y == 0; }
    bool operator==(const QT& o) const { return x == o.x && y == o.y; }
};

QT qt_add(const QT& u, const QT& v);
QT qt_sub(const QT& u, const QT& v);
QT qt_mul(const QT& u, const QT& v, const QuadField& F);
QT qt_conj(const QT& u, const QuadField& F);
QT qt_inv(const QT& u, const QuadField& F);
std::string qt_str(const QT& u);

// rank over Q of a set of vectors (rows)
int q_rank(const std::vector<std::vector<Q>>& rows);

}  // namespace motper
