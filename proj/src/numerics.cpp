#include "pmsdr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmsdr {

void require_finite(const Matrix& A, const char* what) {
    if (!A.allFinite())
        throw InvalidInput(std::string(what) + ": non-finite entries");
}

SubspaceBasis SubspaceBasis::from_matrix(const Matrix& B, double tol) {
    const int m = static_cast<int>(B.rows());
    const int r = static_cast<int>(B.cols());
    if (r < 1 || r >= m)
        throw RankError("SubspaceBasis: need 1 <= rank < ambient_dim, got rank " +
                        std::to_string(r) + ", dim " + std::to_string(m));
    require_finite(B, "SubspaceBasis");
    Matrix gram = B.transpose() * B;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > tol)
        throw InvalidInput("SubspaceBasis: columns not orthonormal within tolerance");
    return SubspaceBasis{m, r, B};
}

SvdResult truncated_svd(const Matrix& A, int r) {
    require_finite(A, "truncated_svd");
    const int kmax = static_cast<int>(std::min(A.rows(), A.cols()));
    if (r < 1 || r > kmax)
        throw RankError("truncated_svd: r = " + std::to_string(r) +
                        " out of range [1, " + std::to_string(kmax) + "]");
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult out;
    out.U = svd.matrixU().leftCols(r);
    out.singular = svd.singularValues().head(r);
    out.V = svd.matrixV().leftCols(r);
    return out;
}

LeastSquares least_squares_projection(const Matrix& B, const Vector& v) {
    if (B.rows() != v.size())
        throw DimensionError("least_squares_projection: B has " +
                             std::to_string(B.rows()) + " rows, v has " +
                             std::to_string(v.size()));
    require_finite(B, "least_squares_projection");
    Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double cutoff = static_cast<double>(std::max(B.rows(), B.cols())) *
                          std::numeric_limits<double>::epsilon() * smax;
    Vector d = svd.matrixU().transpose() * v;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        d(i) = (s(i) > cutoff && s(i) > 0.0) ? d(i) / s(i) : 0.0;
    LeastSquares out;
    out.coeffs = svd.matrixV() * d;
    out.projection = B * out.coeffs;
    return out;
}

double cosine_similarity(const Vector& u, const Vector& v) {
    if (u.size() != v.size())
        throw DimensionError("cosine_similarity: length mismatch");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu < 1e-12 || nv < 1e-12) return 0.0;
    return u.dot(v) / (nu * nv);
}

} // namespace pmsdr
