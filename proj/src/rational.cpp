#include "motper/rational.hpp"

#include <sstream>

#include "motper/numerics.hpp"

namespace motper {

std::string q_str(const Q& q) { return q.get_str(10); }

Q q_parse(const std::string& s_in) {
    std::string s = s_in;
    if (s.empty()) throw Error(ErrorCode::ParseError, "empty rational");
    Q out;
    auto dot = s.find('.');
    auto ee = s.find_first_of("eE");
    if (ee != std::string::npos) throw Error(ErrorCode::ParseError, "exponent notation is not exact: '" + s + "'");
    if (dot != std::string::npos) {
        if (s.find('/') != std::string::npos) throw Error(ErrorCode::ParseError, "bad rational: '" + s + "'");
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        size_t frac = s.size() - dot - 1;
        mpz_class num;
        if (digits.empty() || digits == "-" || num.set_str(digits, 10) != 0) throw Error(ErrorCode::ParseError, "bad decimal: '" + s + "'");
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, frac);
        out = Q(num, den);
    } else {
        if (out.set_str(s, 10) != 0) throw Error(ErrorCode::ParseError, "bad rational: '" + s + "'");
        if (out.get_den() == 0) throw Error(ErrorCode::ParseError, "zero denominator: '" + s + "'");
    }
    out.canonicalize();
    return out;
}

QMat::QMat(int rows, int cols, std::vector<Q> v) : r_(rows), c_(cols), a_(std::move(v)) {
    if (a_.size() != static_cast<size_t>(rows) * cols) throw Error(ErrorCode::ShapeMismatch, "QMat: wrong entry count");
}

QMat QMat::identity(int n) {
    QMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

QMat QMat::operator+(const QMat& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw Error(ErrorCode::ShapeMismatch, "QMat +");
    QMat m(*this);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] += o.a_[k];
    return m;
}
QMat QMat::operator-(const QMat& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw Error(ErrorCode::ShapeMismatch, "QMat -");
    QMat m(*this);
    for (size_t k = 0; k < a_.size(); ++k) m.a_[k] -= o.a_[k];
    return m;
}
QMat QMat::operator*(const QMat& o) const {
    if (c_ != o.r_) throw Error(ErrorCode::ShapeMismatch, "QMat *");
    QMat m(r_, o.c_);
    for (int i = 0; i < r_; ++i)
        for (int k = 0; k < c_; ++k) {
            const Q& x = (*this)(i, k);
            if (x == 0) continue;
            for (int j = 0; j < o.c_; ++j) m(i, j) += x * o(k, j);
        }
    return m;
}
QMat QMat::operator*(const Q& s) const {
    QMat m(*this);
    for (auto& x : m.a_) x *= s;
    return m;
}
QMat QMat::operator-() const { return (*this) * Q(-1); }
bool QMat::operator==(const QMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

QMat QMat::transpose() const {
    QMat m(c_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

bool QMat::is_zero() const {
    for (auto& x : a_)
        if (x != 0) return false;
    return true;
}

Q QMat::det() const {
    if (r_ != c_) throw Error(ErrorCode::ShapeMismatch, "det of non-square matrix");
    if (r_ == 0) return 1;
    if (r_ == 2) return a_[0] * a_[3] - a_[1] * a_[2];
    QMat m(*this);
    Q d = 1;
    for (int col = 0; col < r_; ++col) {
        int piv = -1;
        for (int i = col; i < r_; ++i)
            if (m(i, col) != 0) { piv = i; break; }
        if (piv < 0) return 0;
        if (piv != col) {
            for (int j = 0; j < c_; ++j) std::swap(m(piv, j), m(col, j));
            d = -d;
        }
        d *= m(col, col);
        for (int i = col + 1; i < r_; ++i) {
            if (m(i, col) == 0) continue;
            Q f = m(i, col) / m(col, col);
            for (int j = col; j < c_; ++j) m(i, j) -= f * m(col, j);
        }
    }
    return d;
}

QMat QMat::inverse() const {
    if (r_ != c_) throw Error(ErrorCode::ShapeMismatch, "inverse of non-square matrix");
    int n = r_;
    QMat m(*this), inv = identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int i = col; i < n; ++i)
            if (m(i, col) != 0) { piv = i; break; }
        if (piv < 0) throw Error(ErrorCode::Singular, "singular rational matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(m(piv, j), m(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        Q p = m(col, col);
        for (int j = 0; j < n; ++j) {
            m(col, j) /= p;
            inv(col, j) /= p;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col || m(i, col) == 0) continue;
            Q f = m(i, col);
            for (int j = 0; j < n; ++j) {
                m(i, j) -= f * m(col, j);
                inv(i, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

namespace {

// reduced row echelon form in place; returns pivot columns
std::vector<int> rref(std::vector<std::vector<Q>>& m, int cols) {
    std::vector<int> pivots;
    int row = 0;
    int rows = static_cast<int>(m.size());
    for (int col = 0; col < cols && row < rows; ++col) {
        int piv = -1;
        for (int i = row; i < rows; ++i)
            if (m[i][col] != 0) { piv = i; break; }
        if (piv < 0) continue;
        std::swap(m[piv], m[row]);
        Q p = m[row][col];
        for (auto& x : m[row]) x /= p;
        for (int i = 0; i < rows; ++i) {
            if (i == row || m[i][col] == 0) continue;
            Q f = m[i][col];
            for (int j = 0; j < cols; ++j) m[i][j] -= f * m[row][j];
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

}  // namespace

int q_rank(const std::vector<std::vector<Q>>& rows) {
    if (rows.empty()) return 0;
    auto m = rows;
    return static_cast<int>(rref(m, static_cast<int>(rows[0].size())).size());
}

int QMat::rank() const {
    std::vector<std::vector<Q>> m(r_, std::vector<Q>(c_));
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < c_; ++j) m[i][j] = (*this)(i, j);
    return static_cast<int>(rref(m, c_).size());
}

std::vector<std::vector<Q>> QMat::kernel() const {
    std::vector<std::vector<Q>> m(r_, std::vector<Q>(c_));
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < c_; ++j) m[i][j] = (*this)(i, j);
    auto piv = rref(m, c_);
    std::vector<bool> is_piv(c_, false);
    for (int p : piv) is_piv[p] = true;
    std::vector<std::vector<Q>> basis;
    for (int f = 0; f < c_; ++f) {
        if (is_piv[f]) continue;
        std::vector<Q> v(c_);
        v[f] = 1;
        for (size_t k = 0; k < piv.size(); ++k) v[piv[k]] = -m[k][f];
        basis.push_back(std::move(v));
    }
    return basis;
}

std::string QMat::str() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < r_; ++i) {
        os << (i ? ", [" : "[");
        for (int j = 0; j < c_; ++j) os << (j ? ", " : "") << q_str((*this)(i, j));
        os << "]";
    }
    os << "]";
    return os.str();
}

QT qt_add(const QT& u, const QT& v) { return QT(u.x + v.x, u.y + v.y); }
QT qt_sub(const QT& u, const QT& v) { return QT(u.x - v.x, u.y - v.y); }

QT qt_mul(const QT& u, const QT& v, const QuadField& F) {
    // tau^2 = -(b tau + c)/a
    Q yy = u.y * v.y;
    Q x = u.x * v.x - yy * Q(F.c, F.a);
    Q y = u.x * v.y + u.y * v.x - yy * Q(F.b, F.a);
    return QT(x, y);
}

QT qt_conj(const QT& u, const QuadField& F) {
    // conj(tau) = trace - tau
    return QT(u.x + u.y * F.trace_tau(), -u.y);
}

QT qt_inv(const QT& u, const QuadField& F) {
    QT c = qt_conj(u, F);
    QT n = qt_mul(u, c, F);  // rational
    if (n.x == 0) throw Error(ErrorCode::Singular, "inverse of zero in Q(tau)");
    return QT(c.x / n.x, c.y / n.x);
}

std::string qt_str(const QT& u) {
    if (u.y == 0) return q_str(u.x);
    return q_str(u.x) + " + " + q_str(u.y) + "*tau";
}

}  // namespace motper
