#include "pmsdr/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pmsdr {

EliminationSchedule build_schedule(int M, int r, double gamma_retain, int max_iter) {
    if (M <= r) throw RankError("build_schedule: need M > r");
    if (gamma_retain <= 0.0 || gamma_retain > 1.0)
        throw InvalidInput("build_schedule: gamma_retain must lie in (0, 1]");
    if (max_iter < 1) throw InvalidInput("build_schedule: max_iter must be >= 1");

    EliminationSchedule sched;
    sched.budget =
        static_cast<int>(std::floor((M - r) * (1.0 - gamma_retain)));
    int remaining = sched.budget;
    while (remaining > 0) {
        const int step = std::max(1, (remaining + 1) / 2); // ceil(remaining / 2)
        sched.m.push_back(step);
        remaining -= step;
    }
    if (static_cast<int>(sched.m.size()) > max_iter) {
        // Fold the tail into slot max_iter - 1. The folded value equals the
        // budget remaining before that slot, which never exceeds the
        // previous slot (it was ceil of twice ... of the remainder), so the
        // schedule stays descending.
        int head = 0;
        for (int i = 0; i + 1 < max_iter; ++i) head += sched.m[static_cast<std::size_t>(i)];
        sched.m.resize(static_cast<std::size_t>(max_iter));
        sched.m.back() = sched.budget - head;
    }
    return sched;
}

EliminationResult eliminate(const Vector& nu0, const Matrix& B0,
                            const EliminationSchedule& schedule) {
    const int M = static_cast<int>(nu0.size());
    const int r = static_cast<int>(B0.cols());
    if (B0.rows() != M) throw DimensionError("eliminate: basis row count mismatch");
    if (M - schedule.budget < r + 1)
        throw ScheduleError("eliminate: schedule retains " +
                            std::to_string(M - schedule.budget) +
                            " coordinates, need at least " + std::to_string(r + 1));

    EliminationResult out;
    out.nu = nu0;
    out.B = B0;
    std::vector<int> coords(static_cast<std::size_t>(M));
    std::iota(coords.begin(), coords.end(), 0);

    for (int step : schedule.m) {
        const LeastSquares ls = least_squares_projection(out.B, out.nu);
        const Vector resid = (out.nu - ls.projection).cwiseAbs();
        const int n = static_cast<int>(out.nu.size());
        // Rank positions by descending residual; ties toward the lower
        // original coordinate.
        std::vector<int> pos(static_cast<std::size_t>(n));
        std::iota(pos.begin(), pos.end(), 0);
        std::sort(pos.begin(), pos.end(), [&](int a, int b) {
            if (resid(a) != resid(b)) return resid(a) > resid(b);
            return coords[static_cast<std::size_t>(a)] < coords[static_cast<std::size_t>(b)];
        });
        std::vector<char> drop(static_cast<std::size_t>(n), 0);
        for (int k = 0; k < step; ++k) {
            drop[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])] = 1;
            out.removed.push_back(coords[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])]);
        }
        Vector nu_next(n - step);
        Matrix B_next(n - step, r);
        std::vector<int> coords_next;
        coords_next.reserve(static_cast<std::size_t>(n - step));
        int w = 0;
        for (int i = 0; i < n; ++i) {
            if (drop[static_cast<std::size_t>(i)]) continue;
            nu_next(w) = out.nu(i);
            B_next.row(w) = out.B.row(i);
            coords_next.push_back(coords[static_cast<std::size_t>(i)]);
            ++w;
        }
        out.nu = std::move(nu_next);
        out.B = std::move(B_next);
        coords = std::move(coords_next);
    }
    out.retained = std::move(coords);
    return out;
}

double subspace_distance(const Vector& nu, const Matrix& B) {
    const LeastSquares ls = least_squares_projection(B, nu);
    const double c = cosine_similarity(nu, ls.projection); // 0 when either is ~zero
    return 1.0 - c;
}

ClassificationResult classify_outlier(const Vector& y, const std::vector<SubspaceModel>& models,
                                      double gamma_retain, int max_iter) {
    if (models.empty()) throw InvalidInput("classify_outlier: no candidate models");
    const int M = static_cast<int>(y.size());
    const int r = models.front().basis.rank;
    for (const auto& m : models)
        if (m.basis.ambient_dim != M || m.basis.rank != r)
            throw DimensionError("classify_outlier: inconsistent model dimensions");

    const EliminationSchedule sched = build_schedule(M, r, gamma_retain, max_iter);
    ClassificationResult out;
    out.distances.resize(static_cast<Eigen::Index>(models.size()));
    out.retained.resize(models.size());
    for (std::size_t k = 0; k < models.size(); ++k) {
        EliminationResult elim = eliminate(y, models[k].basis.columns, sched);
        out.distances(static_cast<Eigen::Index>(k)) = subspace_distance(elim.nu, elim.B);
        out.retained[k] = std::move(elim.retained);
    }
    out.label = 0;
    for (Eigen::Index k = 1; k < out.distances.size(); ++k)
        if (out.distances(k) < out.distances(out.label)) out.label = static_cast<int>(k);
    return out;
}

} // namespace pmsdr
