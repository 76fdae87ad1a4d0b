#pragma once

#include <vector>

#include "pmsdr/classify.hpp"

namespace pmsdr {

struct RecoveredColumn {
    Vector y_hat;              // U_t * coeffs, full length
    Vector coeffs;             // beta
    std::vector<int> retained; // surviving coordinates A, ascending
    int subspace = 0;          // label t
};

struct RecoverParams {
    double gamma_retain = 0.5;
    int max_iter = 10;
    int threads = 0;
};

// Unlabeled-sensing recovery of one column: run the elimination loop
// against the assigned basis, then least-squares fit the retained
// coordinates and reconstruct the full column from the basis. Throws
// RecoveryError if fewer than r + 1 coordinates survive.
RecoveredColumn recover_outlier(const Vector& y, const SubspaceModel& model,
                                double gamma_retain, int max_iter);

// Assemble the recovered matrix: inlier columns pass through bit-identical,
// outlier columns are replaced by recover_outlier against the model named
// by labels[j]. Original column order is preserved.
Matrix recover_matrix(const Matrix& G, const std::vector<char>& inlier_mask,
                      const std::vector<int>& labels,
                      const std::vector<SubspaceModel>& models,
                      const RecoverParams& params);

} // namespace pmsdr
