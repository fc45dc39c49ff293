#include "recur/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace recur {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::symmetrize() {
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j) {
            const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
            (*this)(i, j) = v;
            (*this)(j, i) = v;
        }
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double norm2_squared(const Vec& v) { return dot(v, v); }

Vec matvec(const Matrix& m, const Vec& v) {
    Vec out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
    return out;
}

Vec solve_linear(Matrix a, Vec b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw NumericError("solve_linear: dimension mismatch");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::fabs(a(r, col));
            if (v > best) { best = v; piv = r; }
        }
        if (!(best > 0.0) || !std::isfinite(best))
            throw NumericError("solve_linear: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
        if (!std::isfinite(x[i])) throw NumericError("solve_linear: non-finite solution");
    }
    return x;
}

Vec sym_eigen(const Matrix& a_in, Matrix& vectors) {
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    vectors = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors(k, p), vkq = vectors(k, q);
                    vectors(k, p) = c * vkp - s * vkq;
                    vectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    Vec values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
    return values;
}

Matrix sym_pinv(const Matrix& a, bool* singular) {
    const std::size_t n = a.rows();
    Matrix v;
    Vec w = sym_eigen(a, v);
    double wmax = 0.0;
    for (double x : w) wmax = std::max(wmax, std::fabs(x));
    const double cutoff = wmax * n * 1e-13;
    bool dropped = false;
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::fabs(w[k]) <= cutoff) { dropped = true; continue; }
        const double inv = 1.0 / w[k];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) += inv * v(i, k) * v(j, k);
    }
    if (singular) *singular = dropped;
    return out;
}

double quadratic_form_inv(const Matrix& a, const Vec& x, bool* singular) {
    if (a.rows() != x.size() || a.cols() != x.size())
        throw NumericError("quadratic_form_inv: dimension mismatch");
    if (singular) *singular = false;
    try {
        Vec y = solve_linear(a, x);
        const double q = dot(x, y);
        if (std::isfinite(q) && q >= -1e-8) return std::max(q, 0.0);
    } catch (const NumericError&) {
        // fall through to the pseudo-inverse
    }
    if (singular) *singular = true;
    Matrix pinv = sym_pinv(a);
    return std::max(dot(x, matvec(pinv, x)), 0.0);
}

} // namespace recur
