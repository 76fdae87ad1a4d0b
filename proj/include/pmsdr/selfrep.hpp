#pragma once

#include "pmsdr/numerics.hpp"

namespace pmsdr {

struct SelfRepParams {
    double lambda_en = 0.95; // l1 weight, in [0, 1]
    // gamma_en <= 0 selects the per-column rule alpha / max_{i != j}
    // |g_i . g_j|, which keeps at least one coordinate active; a positive
    // value fixes gamma for every column.
    double gamma_en = 0.0;
    double alpha = 50.0;
    double tol = 1e-8;     // KKT residual tolerance
    int max_iter = 2000;   // coordinate-descent sweeps
    int threads = 0;       // 0 = resolve from environment
};

// Objective value of the per-column elastic-net problem at a candidate r:
//   lambda ||r||_1 + (1 - lambda)/2 ||r||_2^2 + gamma/2 ||g_j - G r||_2^2
double elastic_net_objective(int j, const Matrix& G, const Vector& r, double lambda_en,
                             double gamma_en);

// Minimize the objective above with r_j = 0 pinned, by cyclic coordinate
// descent with the soft-threshold closed form, polished by exact solves on
// the settled active set (near-collinear dictionaries leave plain coordinate
// descent stalled orders of magnitude above tol). Columns of G must be unit
// l2-normalized by the caller. Returns the N-vector r_j. Throws
// ConvergenceError (carrying the last KKT residual) if the KKT conditions
// are not met within tol after max_iter iterations (sweeps + polish rounds).
Vector solve_elastic_net_column(int j, const Matrix& G, double lambda_en, double gamma_en,
                                double tol, int max_iter);

// Largest |g_i . g_j| over i != j; the per-column gamma rule divides alpha
// by this.
double max_offdiag_correlation(int j, const Matrix& G);

// Maximum violation of the elastic-net stationarity conditions for a
// candidate solution (0 means exact):
//   active i:   gamma g_i.(g_j - G r) = lambda sign(r_i) + (1-lambda) r_i
//   inactive i: |gamma g_i.(g_j - G r)| <= lambda
double elastic_net_kkt_residual(int j, const Matrix& G, const Vector& r, double lambda_en,
                                double gamma_en);

// Column j of the result = solve_elastic_net_column(j, ...). Deterministic;
// columns solved concurrently.
Matrix self_representation(const Matrix& G, const SelfRepParams& params);

// Row-stochastic transition matrix from a zero-diagonal self-representation
// matrix: p_ij = |r_ji| / ||r_i||_1 with r_i the i-th COLUMN of R. Columns
// with ||r_i||_1 < 1e-12 yield a uniform row over the other N-1 states.
Matrix transition_matrix(const Matrix& R);

} // namespace pmsdr
