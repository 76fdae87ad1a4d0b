#pragma once

#include <Eigen/Dense>

#include "pmsdr/errors.hpp"

namespace pmsdr {

// Repo-wide conventions: dense double-precision matrices, columns are
// samples (a DataMatrix is M x N: ambient dimension by sample count).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws InvalidInput if any entry of A is NaN/inf.
void require_finite(const Matrix& A, const char* what);

// An orthonormal basis of an r-dimensional subspace of R^M, with the
// orthonormality and 1 <= r < M invariants checked at construction.
struct SubspaceBasis {
    int ambient_dim = 0;
    int rank = 0;
    Matrix columns; // M x r, orthonormal

    // Validates and wraps an M x r matrix. max |B^T B - I| must be <= tol.
    static SubspaceBasis from_matrix(const Matrix& B, double tol = 1e-10);
};

struct SvdResult {
    Matrix U;        // M x r, orthonormal columns
    Vector singular; // r, non-increasing, non-negative
    Matrix V;        // N x r, orthonormal columns
};

// Best rank-r approximation factors of A (A ~= U * diag(singular) * V^T).
// Throws InvalidInput on non-finite input and RankError if r is out of
// range.
SvdResult truncated_svd(const Matrix& A, int r);

struct LeastSquares {
    Vector coeffs;     // r
    Vector projection; // M, equals B * coeffs
};

// Minimum-norm least-squares solution of min_c ||v - B c||_2 via SVD
// pseudo-inverse. Singular values sigma_i <= max(M, r) * eps * sigma_max are
// treated as zero, so rank-deficient B is handled without error.
LeastSquares least_squares_projection(const Matrix& B, const Vector& v);

// u.v / (|u| |v|); returns 0 when either norm is below 1e-12. Throws
// DimensionError on length mismatch.
double cosine_similarity(const Vector& u, const Vector& v);

} // namespace pmsdr
