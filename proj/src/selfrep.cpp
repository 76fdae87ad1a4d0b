#include "pmsdr/selfrep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmsdr/threads.hpp"

namespace pmsdr {

namespace {

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

} // namespace

double max_offdiag_correlation(int j, const Matrix& G) {
    Vector corr = G.transpose() * G.col(j);
    corr(j) = 0.0;
    return corr.cwiseAbs().maxCoeff();
}

double elastic_net_kkt_residual(int j, const Matrix& G, const Vector& r, double lambda_en,
                                double gamma_en) {
    const Vector residual = G.col(j) - G * r;
    const Vector q = gamma_en * (G.transpose() * residual);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (i == j) continue;
        double v;
        if (r(i) != 0.0) {
            const double sgn = r(i) > 0.0 ? 1.0 : -1.0;
            v = std::abs(q(i) - lambda_en * sgn - (1.0 - lambda_en) * r(i));
        } else {
            v = std::max(0.0, std::abs(q(i)) - lambda_en);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

double elastic_net_objective(int j, const Matrix& G, const Vector& r, double lambda_en,
                             double gamma_en) {
    const Vector e = G.col(j) - G * r;
    return lambda_en * r.lpNorm<1>() + 0.5 * (1.0 - lambda_en) * r.squaredNorm() +
           0.5 * gamma_en * e.squaredNorm();
}

// Cyclic coordinate descent drives the support; once the support settles the
// solver switches to exact KKT solves on the active set (with partial steps to
// the first sign boundary when a coordinate would cross zero, and one-at-a-time
// additions of the worst inactive violator). Pure coordinate descent alone
// stalls far above any usable tolerance when the dictionary contains many
// near-collinear columns — exactly the regime self-representation lives in —
// while the active-set polish reaches machine-precision stationarity in a
// handful of small SPD solves. Both phases decrease the objective
// monotonically, and both count against max_iter.
Vector solve_elastic_net_column(int j, const Matrix& G, double lambda_en, double gamma_en,
                                double tol, int max_iter) {
    const Eigen::Index N = G.cols();
    if (j < 0 || j >= N) throw InvalidInput("solve_elastic_net_column: bad column index");
    if (lambda_en < 0.0 || lambda_en > 1.0)
        throw InvalidInput("solve_elastic_net_column: lambda_en outside [0, 1]");
    if (gamma_en <= 0.0)
        throw InvalidInput("solve_elastic_net_column: gamma_en must be positive");

    Vector r = Vector::Zero(N);
    // Unit columns make every coordinate's curvature (1-lambda) + gamma.
    const double denom = (1.0 - lambda_en) + gamma_en;
    Vector e = G.col(j); // residual g_j - G r, maintained across updates

    double kkt = std::numeric_limits<double>::infinity();
    int iter = 0;
    int sweeps_since_polish = 0;
    while (iter < max_iter) {
        ++iter;
        ++sweeps_since_polish;
        bool support_changed = false;
        for (Eigen::Index i = 0; i < N; ++i) {
            if (i == j) continue;
            const double ci = G.col(i).dot(e) + r(i); // correlation with i's residual
            const double rnew = soft_threshold(gamma_en * ci, lambda_en) / denom;
            const double delta = r(i) - rnew;
            if (delta != 0.0) {
                support_changed = support_changed || (rnew == 0.0) != (r(i) == 0.0);
                e += G.col(i) * delta;
                r(i) = rnew;
            }
        }
        // Keep sweeping while the support is still in flux, but force a polish
        // attempt periodically so an oscillating support cannot starve it.
        if (support_changed && sweeps_since_polish < 5) continue;
        sweeps_since_polish = 0;

        while (iter < max_iter) {
            ++iter;
            std::vector<Eigen::Index> active;
            for (Eigen::Index i = 0; i < N; ++i)
                if (i != j && r(i) != 0.0) active.push_back(i);
            const Eigen::Index a = static_cast<Eigen::Index>(active.size());

            if (a > 0) {
                Matrix Ga(G.rows(), a);
                Vector s(a);
                for (Eigen::Index k = 0; k < a; ++k) {
                    Ga.col(k) = G.col(active[static_cast<std::size_t>(k)]);
                    s(k) = r(active[static_cast<std::size_t>(k)]) > 0.0 ? 1.0 : -1.0;
                }
                Matrix H = gamma_en * (Ga.transpose() * Ga);
                double ridge = 1.0 - lambda_en;
                if (ridge < 1e-12) ridge = 1e-12; // keep H positive definite at lambda = 1
                H.diagonal().array() += ridge;
                const Vector rhs = gamma_en * (Ga.transpose() * G.col(j)) - lambda_en * s;
                const Vector x = H.ldlt().solve(rhs);

                // Partial step to the first sign boundary if the exact solution
                // crosses zero anywhere; the blocking coordinate leaves the set.
                double t = 1.0;
                Eigen::Index blocking = -1;
                for (Eigen::Index k = 0; k < a; ++k) {
                    if (x(k) * s(k) > 0.0) continue;
                    const double rk = r(active[static_cast<std::size_t>(k)]);
                    const double tk = rk / (rk - x(k));
                    if (tk < t) {
                        t = tk;
                        blocking = k;
                    }
                }
                for (Eigen::Index k = 0; k < a; ++k) {
                    const Eigen::Index i = active[static_cast<std::size_t>(k)];
                    r(i) += t * (x(k) - r(i));
                }
                if (blocking >= 0) r(active[static_cast<std::size_t>(blocking)]) = 0.0;
                e = G.col(j) - G * r;
                if (blocking >= 0) continue; // support shrank; re-solve
            }

            // Global stationarity check on the committed point.
            const Vector q = gamma_en * (G.transpose() * e);
            double active_res = 0.0;
            for (Eigen::Index i = 0; i < N; ++i) {
                if (i == j || r(i) == 0.0) continue;
                const double sgn = r(i) > 0.0 ? 1.0 : -1.0;
                active_res = std::max(
                    active_res, std::abs(q(i) - lambda_en * sgn - (1.0 - lambda_en) * r(i)));
            }
            double worst_violation = 0.0;
            Eigen::Index worst_i = -1;
            for (Eigen::Index i = 0; i < N; ++i) {
                if (i == j || r(i) != 0.0) continue;
                const double v = std::abs(q(i)) - lambda_en;
                if (v > worst_violation) {
                    worst_violation = v;
                    worst_i = i;
                }
            }
            kkt = std::max(active_res, worst_violation);
            if (kkt <= tol) return r;
            if (worst_i >= 0) {
                // Admit the worst violator with a plain coordinate step; the
                // next exact solve sizes it properly.
                const double ci = G.col(worst_i).dot(e) + r(worst_i);
                const double rnew = soft_threshold(gamma_en * ci, lambda_en) / denom;
                if (rnew != 0.0) {
                    e += G.col(worst_i) * (r(worst_i) - rnew);
                    r(worst_i) = rnew;
                    continue;
                }
            }
            break; // stationarity stalled above tol: fall back to CD sweeps
        }
        if (kkt <= tol) return r;
    }
    throw ConvergenceError("solve_elastic_net_column: column " + std::to_string(j) +
                               " KKT residual " + std::to_string(kkt) + " after " +
                               std::to_string(max_iter) + " iterations",
                           kkt);
}

Matrix self_representation(const Matrix& G, const SelfRepParams& params) {
    const Eigen::Index N = G.cols();
    if (N < 2) throw InvalidInput("self_representation: need at least 2 columns");
    require_finite(G, "self_representation");

    Matrix R = Matrix::Zero(N, N);
    std::vector<std::string> failures(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), resolve_threads(params.threads),
                 [&](std::size_t jb, std::size_t je) {
                     for (std::size_t j = jb; j < je; ++j) {
                         const int jc = static_cast<int>(j);
                         double gamma = params.gamma_en;
                         if (gamma <= 0.0) {
                             const double mu = max_offdiag_correlation(jc, G);
                             if (mu < 1e-12) continue; // orthogonal column: r_j = 0
                             gamma = params.alpha / mu;
                         }
                         try {
                             R.col(jc) = solve_elastic_net_column(
                                 jc, G, params.lambda_en, gamma, params.tol,
                                 params.max_iter);
                         } catch (const Error& err) {
                             failures[j] = err.what();
                         }
                     }
                 });
    std::string aggregate;
    for (const auto& f : failures)
        if (!f.empty()) aggregate += (aggregate.empty() ? "" : "; ") + f;
    if (!aggregate.empty())
        throw ConvergenceError("self_representation: " + aggregate, 0.0);
    return R;
}

Matrix transition_matrix(const Matrix& R) {
    const Eigen::Index N = R.rows();
    if (R.cols() != N) throw InvalidInput("transition_matrix: R must be square");
    if (R.diagonal().cwiseAbs().maxCoeff() != 0.0)
        throw InvalidInput("transition_matrix: R must have a zero diagonal");

    Matrix P(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector col = R.col(i).cwiseAbs(); // r_i in p_ij = |r_ji| / ||r_i||_1
        const double l1 = col.sum();
        if (l1 < 1e-12) {
            P.row(i).setConstant(1.0 / static_cast<double>(N - 1));
            P(i, i) = 0.0;
        } else {
            P.row(i) = (col / l1).transpose();
        }
    }
    return P;
}

} // namespace pmsdr
