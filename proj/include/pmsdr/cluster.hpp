#pragma once

#include <cstdint>
#include <vector>

#include "pmsdr/numerics.hpp"

namespace pmsdr {

struct ClusterAssignment {
    std::vector<int> labels; // over inlier columns, values in [0, L)
    int L = 0;
};

struct SubspaceModel {
    SubspaceBasis basis;
    int group = 0;
    int sample_count = 0;
};

// Symmetric affinity over the detected inliers: W = |R_sub| + |R_sub|^T
// where R_sub is R restricted to inlier rows/columns. Zero diagonal is
// inherited from R.
Matrix affinity_from_selfrep(const Matrix& R, const std::vector<char>& inlier_mask);

// Standard spectral clustering on a symmetric non-negative affinity:
// L_sym = I - D^{-1/2} W D^{-1/2}, bottom-L eigenvectors, row-normalized,
// then k-means++ (20 restarts, 300 iterations, tol 1e-6), best inertia
// kept. Deterministic given the seed. Zero-degree nodes are assigned the
// label of the nearest (by index) positive-degree node after clustering.
// Throws InsufficientData when there are fewer than L rows and
// ClusteringError when W is entirely zero.
ClusterAssignment spectral_clustering(const Matrix& W, int L, std::uint64_t rng_seed);

// First r left singular vectors of the cluster's columns. Throws
// DegenerateCluster when the cluster has fewer than r columns.
SubspaceModel estimate_basis(const Matrix& X_k, int r, int group = 0);

namespace detail {
// k-means with k-means++ seeding on row vectors; exposed for tests.
std::vector<int> kmeans_rows(const Matrix& rows, int k, std::uint64_t rng_seed,
                             int restarts, int max_iter, double tol);
} // namespace detail

} // namespace pmsdr
