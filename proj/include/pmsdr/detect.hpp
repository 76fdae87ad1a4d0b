#pragma once

#include <utility>
#include <vector>

#include "pmsdr/numerics.hpp"

namespace pmsdr {

struct OutlierScores {
    Vector pi;           // per-column probability mass; low = outlier
    int walk_length = 0; // T
};

// Cesaro-averaged random-walk mass (1/T) sum_{t=1..T} pi0 P^t with pi0
// uniform. The averaging makes periodic chains (e.g. a 2-cycle) converge.
// Throws InvalidInput when P is not row-stochastic within 1e-10 or T < 1.
OutlierScores random_walk_scores(const Matrix& P, int T);

using SplitMasks = std::pair<std::vector<char>, std::vector<char>>; // (inlier, outlier)

// Flag the n_out lowest-score columns as outliers; ties broken toward the
// lower column index.
SplitMasks split_by_known_ratio(const OutlierScores& scores, int n_out);

// Threshold at the largest consecutive gap in sorted scores. Throws
// NoGapError when all scores are equal.
SplitMasks split_by_gap(const OutlierScores& scores);

} // namespace pmsdr
