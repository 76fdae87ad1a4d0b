#include "pmsdr/recover.hpp"

#include <string>

#include "pmsdr/threads.hpp"

namespace pmsdr {

RecoveredColumn recover_outlier(const Vector& y, const SubspaceModel& model,
                                double gamma_retain, int max_iter) {
    if (y.size() != model.basis.ambient_dim)
        throw DimensionError("recover_outlier: column length does not match model");
    const int r = model.basis.rank;
    const EliminationSchedule sched =
        build_schedule(static_cast<int>(y.size()), r, gamma_retain, max_iter);
    EliminationResult elim = eliminate(y, model.basis.columns, sched);
    if (static_cast<int>(elim.retained.size()) < r + 1)
        throw RecoveryError("recover_outlier: only " +
                            std::to_string(elim.retained.size()) +
                            " coordinates retained for rank " + std::to_string(r));
    const LeastSquares ls = least_squares_projection(elim.B, elim.nu);
    RecoveredColumn out;
    out.coeffs = ls.coeffs;
    out.y_hat = model.basis.columns * ls.coeffs;
    out.retained = std::move(elim.retained);
    out.subspace = model.group;
    return out;
}

Matrix recover_matrix(const Matrix& G, const std::vector<char>& inlier_mask,
                      const std::vector<int>& labels,
                      const std::vector<SubspaceModel>& models,
                      const RecoverParams& params) {
    const Eigen::Index N = G.cols();
    if (static_cast<Eigen::Index>(inlier_mask.size()) != N ||
        static_cast<Eigen::Index>(labels.size()) != N)
        throw DimensionError("recover_matrix: mask/label length mismatch");

    Matrix out = G;
    std::vector<std::string> failures(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), resolve_threads(params.threads),
                 [&](std::size_t jb, std::size_t je) {
                     for (std::size_t j = jb; j < je; ++j) {
                         if (inlier_mask[j]) continue;
                         const int label = labels[j];
                         if (label < 0 || label >= static_cast<int>(models.size())) {
                             failures[j] = "column " + std::to_string(j) +
                                           ": label " + std::to_string(label) +
                                           " out of range";
                             continue;
                         }
                         try {
                             out.col(static_cast<Eigen::Index>(j)) =
                                 recover_outlier(G.col(static_cast<Eigen::Index>(j)),
                                                 models[static_cast<std::size_t>(label)],
                                                 params.gamma_retain, params.max_iter)
                                     .y_hat;
                         } catch (const Error& err) {
                             failures[j] = "column " + std::to_string(j) + ": " +
                                           err.what();
                         }
                     }
                 });
    std::string aggregate;
    for (const auto& f : failures)
        if (!f.empty()) aggregate += (aggregate.empty() ? "" : "; ") + f;
    if (!aggregate.empty()) throw RecoveryError("recover_matrix: " + aggregate);
    return out;
}

} // namespace pmsdr
