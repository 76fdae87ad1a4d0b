#include "pmsdr/metrics.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace pmsdr {

std::string EvaluationReport::to_json() const {
    nlohmann::json j;
    auto put = [&j](const char* name, const MetricValue& m) {
        j[name] = m.value;
        j[std::string(name) + "_degenerate"] = m.degenerate;
    };
    put("ce_gt", ce_gt);
    put("ce_recon", ce_recon);
    put("re_gt", re_gt);
    put("re_recon", re_recon);
    put("uoratio", uoratio);
    put("scerr", scerr);
    j["timings_sec"] = timings_sec;
    if (!config_echo.empty())
        j["config"] = nlohmann::json::parse(config_echo);
    j["seed"] = seed;
    return j.dump(2);
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw DimensionError("hungarian_assignment: cost must be square");
    // Potential-based shortest augmenting paths; 1-indexed internals with a
    // dummy row/column 0 (standard formulation).
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = INF;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

std::vector<int> align_labels(const std::vector<int>& pred, const std::vector<int>& truth,
                              int L) {
    if (pred.size() != truth.size())
        throw DimensionError("align_labels: label vectors differ in length");
    Matrix agreement = Matrix::Zero(L, L);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= L || truth[i] < 0 || truth[i] >= L)
            throw InvalidInput("align_labels: label out of range");
        agreement(pred[i], truth[i]) += 1.0;
    }
    return hungarian_assignment(-agreement); // max agreement = min negated
}

MetricValue misclassification_ratio(const std::vector<int>& pred,
                                    const std::vector<int>& truth,
                                    const std::vector<char>& mask) {
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw DimensionError("misclassification_ratio: length mismatch");
    int total = 0, wrong = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (pred[i] != truth[i]) ++wrong;
    }
    if (total == 0) return {0.0, true};
    return {static_cast<double>(wrong) / static_cast<double>(total), false};
}

double recovery_error(const Matrix& Yhat, const Matrix& Y,
                      const std::vector<const SubspaceBasis*>& bases,
                      const std::vector<char>& mask) {
    if (Yhat.rows() != Y.rows() || Yhat.cols() != Y.cols())
        throw DimensionError("recovery_error: matrix shape mismatch");
    if (static_cast<Eigen::Index>(mask.size()) != Y.cols() ||
        bases.size() != mask.size())
        throw DimensionError("recovery_error: mask/bases length mismatch");
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        if (!mask[static_cast<std::size_t>(j)]) continue;
        const SubspaceBasis* B = bases[static_cast<std::size_t>(j)];
        if (B == nullptr) throw InvalidInput("recovery_error: missing basis for column");
        const Vector proj = B->columns * (B->columns.transpose() * Yhat.col(j));
        num += (proj - Y.col(j)).squaredNorm();
        den += Y.col(j).squaredNorm();
    }
    if (den == 0.0) throw DegenerateError("recovery_error: ground truth energy is zero");
    return std::sqrt(num / den);
}

std::pair<MetricValue, MetricValue> auxiliary_metrics(
    const std::vector<char>& detected_outlier_mask,
    const std::vector<char>& truth_outlier_mask,
    const std::vector<int>& aligned_labels, const std::vector<int>& truth_labels) {
    const std::size_t N = detected_outlier_mask.size();
    if (truth_outlier_mask.size() != N || aligned_labels.size() != N ||
        truth_labels.size() != N)
        throw DimensionError("auxiliary_metrics: length mismatch");

    int outliers = 0, undetected = 0, det_inliers = 0, mis_inliers = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (truth_outlier_mask[i]) {
            ++outliers;
            if (!detected_outlier_mask[i]) ++undetected;
        }
        if (!detected_outlier_mask[i]) {
            ++det_inliers;
            if (aligned_labels[i] != truth_labels[i]) ++mis_inliers;
        }
    }
    MetricValue uoratio =
        outliers == 0 ? MetricValue{0.0, true}
                      : MetricValue{static_cast<double>(undetected) / outliers, false};
    MetricValue scerr =
        det_inliers == 0
            ? MetricValue{0.0, true}
            : MetricValue{static_cast<double>(mis_inliers) / det_inliers, false};
    return {uoratio, scerr};
}

double permutation_error_ratio(const PartialPermutation& phat, const PartialPermutation& p) {
    if (phat.length != p.length)
        throw DimensionError("permutation_error_ratio: length mismatch");
    if (p.length == 0) return 0.0;
    int wrong = 0;
    for (int i = 0; i < p.length; ++i)
        if (phat.map[static_cast<std::size_t>(i)] != p.map[static_cast<std::size_t>(i)])
            ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(p.length);
}

} // namespace pmsdr
