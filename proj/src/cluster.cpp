#include "pmsdr/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include "pmsdr/rng.hpp"

namespace pmsdr {

Matrix affinity_from_selfrep(const Matrix& R, const std::vector<char>& inlier_mask) {
    const Eigen::Index N = R.rows();
    if (R.cols() != N) throw InvalidInput("affinity_from_selfrep: R must be square");
    if (static_cast<Eigen::Index>(inlier_mask.size()) != N)
        throw DimensionError("affinity_from_selfrep: mask length mismatch");
    if (R.diagonal().cwiseAbs().maxCoeff() != 0.0)
        throw InvalidInput("affinity_from_selfrep: R must have a zero diagonal");

    std::vector<int> idx;
    for (Eigen::Index i = 0; i < N; ++i)
        if (inlier_mask[static_cast<std::size_t>(i)]) idx.push_back(static_cast<int>(i));
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    Matrix sub(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            sub(a, b) = std::abs(R(idx[static_cast<std::size_t>(a)],
                                   idx[static_cast<std::size_t>(b)]));
    return sub + sub.transpose();
}

namespace detail {

std::vector<int> kmeans_rows(const Matrix& rows, int k, std::uint64_t rng_seed,
                             int restarts, int max_iter, double tol) {
    const Eigen::Index n = rows.rows();
    const Eigen::Index d = rows.cols();
    std::vector<int> best_labels(static_cast<std::size_t>(n), 0);
    double best_inertia = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        Rng rng = make_rng(rng_seed, stream::kmeans, static_cast<std::uint64_t>(restart));
        // k-means++ seeding
        Matrix centers(k, d);
        {
            std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
            centers.row(0) = rows.row(first(rng));
            Vector d2 = (rows.rowwise() - centers.row(0)).rowwise().squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double total = d2.sum();
                Eigen::Index chosen = 0;
                if (total > 0.0) {
                    std::uniform_real_distribution<double> u(0.0, total);
                    double target = u(rng);
                    double run = 0.0;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        run += d2(i);
                        if (run >= target) { chosen = i; break; }
                        chosen = i;
                    }
                } else {
                    std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
                    chosen = any(rng);
                }
                centers.row(c) = rows.row(chosen);
                d2 = d2.cwiseMin(
                    (rows.rowwise() - centers.row(c)).rowwise().squaredNorm());
            }
        }

        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        for (int iter = 0; iter < max_iter; ++iter) {
            // assign
            for (Eigen::Index i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int arg = 0;
                for (int c = 0; c < k; ++c) {
                    const double dist = (rows.row(i) - centers.row(c)).squaredNorm();
                    if (dist < best) { best = dist; arg = c; }
                }
                labels[static_cast<std::size_t>(i)] = arg;
            }
            // update
            Matrix next = Matrix::Zero(k, d);
            std::vector<int> count(static_cast<std::size_t>(k), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                next.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
                ++count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k; ++c) {
                if (count[static_cast<std::size_t>(c)] > 0) {
                    next.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
                } else {
                    // Re-seed an emptied center at the point farthest from
                    // its current center (deterministic).
                    Eigen::Index far = 0;
                    double far_d = -1.0;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double dist =
                            (rows.row(i) -
                             centers.row(labels[static_cast<std::size_t>(i)]))
                                .squaredNorm();
                        if (dist > far_d) { far_d = dist; far = i; }
                    }
                    next.row(c) = rows.row(far);
                    labels[static_cast<std::size_t>(far)] = c;
                }
            }
            const double shift = (next - centers).norm();
            centers = next;
            if (shift < tol) break;
        }
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia +=
                (rows.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
                    .squaredNorm();
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

} // namespace detail

ClusterAssignment spectral_clustering(const Matrix& W, int L, std::uint64_t rng_seed) {
    const Eigen::Index n = W.rows();
    if (W.cols() != n) throw InvalidInput("spectral_clustering: W must be square");
    if (L < 1) throw InvalidInput("spectral_clustering: L must be >= 1");
    if (n < L)
        throw InsufficientData("spectral_clustering: " + std::to_string(n) +
                               " columns for " + std::to_string(L) + " clusters");
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidInput("spectral_clustering: W must be symmetric");
    if (W.minCoeff() < 0.0)
        throw InvalidInput("spectral_clustering: W must be non-negative");

    ClusterAssignment out;
    out.L = L;
    if (L == 1) {
        out.labels.assign(static_cast<std::size_t>(n), 0);
        return out;
    }

    Vector degree = W.rowwise().sum();
    std::vector<Eigen::Index> active; // positive-degree nodes
    for (Eigen::Index i = 0; i < n; ++i)
        if (degree(i) > 0.0) active.push_back(i);
    if (active.empty()) throw ClusteringError("spectral_clustering: all-zero affinity");
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    if (na < L)
        throw InsufficientData("spectral_clustering: only " + std::to_string(na) +
                               " connected columns for " + std::to_string(L) +
                               " clusters");

    Matrix Wa(na, na);
    for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index b = 0; b < na; ++b)
            Wa(a, b) = W(active[static_cast<std::size_t>(a)],
                         active[static_cast<std::size_t>(b)]);
    Vector dinv = Wa.rowwise().sum().cwiseSqrt().cwiseInverse();
    Matrix Lsym = Matrix::Identity(na, na) -
                  dinv.asDiagonal() * Wa * dinv.asDiagonal();
    // Symmetrize against round-off so the eigensolver sees an exact
    // self-adjoint matrix.
    Lsym = 0.5 * (Lsym + Lsym.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Lsym);
    Matrix embed = eig.eigenvectors().leftCols(L); // ascending eigenvalues
    for (Eigen::Index i = 0; i < na; ++i) {
        const double nrm = embed.row(i).norm();
        if (nrm > 1e-12) embed.row(i) /= nrm;
    }
    std::vector<int> labels_active =
        detail::kmeans_rows(embed, L, rng_seed, /*restarts=*/20, /*max_iter=*/300,
                            /*tol=*/1e-6);

    out.labels.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index a = 0; a < na; ++a)
        out.labels[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] =
            labels_active[static_cast<std::size_t>(a)];
    // Zero-degree nodes inherit the nearest positive-degree node's label.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (out.labels[static_cast<std::size_t>(i)] >= 0) continue;
        Eigen::Index nearest = active.front();
        for (Eigen::Index a : active)
            if (std::abs(a - i) < std::abs(nearest - i)) nearest = a;
        out.labels[static_cast<std::size_t>(i)] =
            out.labels[static_cast<std::size_t>(nearest)];
    }
    return out;
}

SubspaceModel estimate_basis(const Matrix& X_k, int r, int group) {
    if (X_k.cols() < r)
        throw DegenerateCluster("estimate_basis: cluster has " +
                                std::to_string(X_k.cols()) + " columns, rank " +
                                std::to_string(r) + " requested");
    SvdResult svd = truncated_svd(X_k, r);
    SubspaceModel model;
    model.basis = SubspaceBasis::from_matrix(svd.U);
    model.group = group;
    model.sample_count = static_cast<int>(X_k.cols());
    return model;
}

} // namespace pmsdr
