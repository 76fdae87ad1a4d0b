#include "pmsdr/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pmsdr {

OutlierScores random_walk_scores(const Matrix& P, int T) {
    const Eigen::Index N = P.rows();
    if (P.cols() != N) throw InvalidInput("random_walk_scores: P must be square");
    if (T < 1) throw InvalidInput("random_walk_scores: T must be >= 1");
    if (P.minCoeff() < 0.0)
        throw InvalidInput("random_walk_scores: P has negative entries");
    for (Eigen::Index i = 0; i < N; ++i)
        if (std::abs(P.row(i).sum() - 1.0) > 1e-10)
            throw InvalidInput("random_walk_scores: row " + std::to_string(i) +
                               " does not sum to 1");

    Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(N, 1.0 / static_cast<double>(N));
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(N);
    for (int t = 0; t < T; ++t) {
        v = v * P;
        acc += v;
    }
    OutlierScores out;
    out.pi = (acc / static_cast<double>(T)).transpose();
    out.walk_length = T;
    return out;
}

namespace {

std::vector<int> ascending_score_order(const Vector& pi) {
    std::vector<int> order(static_cast<std::size_t>(pi.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&pi](int a, int b) { return pi(a) < pi(b); });
    return order;
}

} // namespace

SplitMasks split_by_known_ratio(const OutlierScores& scores, int n_out) {
    const int N = static_cast<int>(scores.pi.size());
    if (n_out < 0 || n_out >= N)
        throw InvalidInput("split_by_known_ratio: need 0 <= n_out < N");
    std::vector<char> inlier(static_cast<std::size_t>(N), 1);
    std::vector<char> outlier(static_cast<std::size_t>(N), 0);
    const auto order = ascending_score_order(scores.pi);
    for (int k = 0; k < n_out; ++k) {
        inlier[static_cast<std::size_t>(order[k])] = 0;
        outlier[static_cast<std::size_t>(order[k])] = 1;
    }
    return {std::move(inlier), std::move(outlier)};
}

SplitMasks split_by_gap(const OutlierScores& scores) {
    const int N = static_cast<int>(scores.pi.size());
    if (N < 2) throw InvalidInput("split_by_gap: need at least 2 scores");
    const auto order = ascending_score_order(scores.pi);
    double best_gap = 0.0;
    int cut = -1; // outliers = sorted positions [0, cut]
    for (int k = 0; k + 1 < N; ++k) {
        const double gap = scores.pi(order[k + 1]) - scores.pi(order[k]);
        if (gap > best_gap) {
            best_gap = gap;
            cut = k;
        }
    }
    if (cut < 0) throw NoGapError("split_by_gap: all scores equal");
    std::vector<char> inlier(static_cast<std::size_t>(N), 1);
    std::vector<char> outlier(static_cast<std::size_t>(N), 0);
    for (int k = 0; k <= cut; ++k) {
        inlier[static_cast<std::size_t>(order[k])] = 0;
        outlier[static_cast<std::size_t>(order[k])] = 1;
    }
    return {std::move(inlier), std::move(outlier)};
}

} // namespace pmsdr
