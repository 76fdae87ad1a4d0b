#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pmsdr/numerics.hpp"
#include "pmsdr/synth.hpp"

namespace pmsdr {

// A ratio metric plus the empty-denominator flag demanded by sweep
// aggregation (0/0 reports as value 0, degenerate = true).
struct MetricValue {
    double value = 0.0;
    bool degenerate = false;
};

struct EvaluationReport {
    MetricValue ce_gt;    // misclassified outliers / outliers (gt models)
    MetricValue ce_recon; // misclassified detected outliers / detected outliers
    MetricValue re_gt;    // ||Proj_S(Yhat) - Y||_F / ||Y||_F, gt subspaces
    MetricValue re_recon;
    MetricValue uoratio;  // undetected outliers / outliers
    MetricValue scerr;    // misclassified detected inliers / detected inliers
    std::map<std::string, double> timings_sec; // per stage
    std::string config_echo;                   // JSON of the pipeline config
    std::uint64_t seed = 0;

    std::string to_json() const;
};

// Minimum-cost assignment on a square cost matrix (Hungarian algorithm,
// O(n^3)); returns column assigned to each row.
std::vector<int> hungarian_assignment(const Matrix& cost);

// Optimal one-to-one relabeling map maximizing agreement between predicted
// and true labels: out[pred_label] = truth label. Labels must lie in
// [0, L).
std::vector<int> align_labels(const std::vector<int>& pred, const std::vector<int>& truth,
                              int L);

// Fraction of masked columns where pred != truth; degenerate when the mask
// selects nothing.
MetricValue misclassification_ratio(const std::vector<int>& pred,
                                    const std::vector<int>& truth,
                                    const std::vector<char>& mask);

// Frobenius-normalized recovery error over masked columns, with each
// recovered column first projected onto its own subspace (bases[j] must be
// non-null wherever mask[j] is set):
//   sqrt( sum_j ||B_j B_j^T yhat_j - y_j||^2 / sum_j ||y_j||^2 ).
// Throws DegenerateError when the selected ground-truth energy is zero.
double recovery_error(const Matrix& Yhat, const Matrix& Y,
                      const std::vector<const SubspaceBasis*>& bases,
                      const std::vector<char>& mask);

// (uoratio, scerr): undetected-outlier ratio and detected-inlier clustering
// error. aligned_labels are the predictions after align_labels.
std::pair<MetricValue, MetricValue> auxiliary_metrics(
    const std::vector<char>& detected_outlier_mask,
    const std::vector<char>& truth_outlier_mask,
    const std::vector<int>& aligned_labels, const std::vector<int>& truth_labels);

// Fraction of indices i with phat(i) != p(i). Throws DimensionError on
// length mismatch.
double permutation_error_ratio(const PartialPermutation& phat, const PartialPermutation& p);

} // namespace pmsdr
