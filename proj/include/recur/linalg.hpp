#ifndef RECUR_LINALG_HPP
#define RECUR_LINALG_HPP

#include <cstddef>

#include "recur/common.hpp"

namespace recur {

// Dense row-major matrix, small dimensions (covariate blocks, information
// matrices).  Not meant for large linear algebra.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const Vec& data() const { return data_; }

    void symmetrize();

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

double dot(const Vec& a, const Vec& b);
double norm_inf(const Vec& v);
double norm2_squared(const Vec& v);

Vec matvec(const Matrix& m, const Vec& v);

// Solves a x = b by Gaussian elimination with partial pivoting.
// Throws NumericError when a is singular to working precision.
Vec solve_linear(Matrix a, Vec b);

// Eigen decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues; columns of `vectors` hold the eigenvectors.
Vec sym_eigen(const Matrix& a, Matrix& vectors);

// Moore-Penrose pseudo-inverse of a symmetric matrix; `singular` is set
// when any eigenvalue was dropped.
Matrix sym_pinv(const Matrix& a, bool* singular = nullptr);

// x' A^{-1} x for symmetric positive semidefinite A, via sym_pinv when the
// plain solve fails.
double quadratic_form_inv(const Matrix& a, const Vec& x, bool* singular = nullptr);

} // namespace recur

#endif
