#pragma once

#include <vector>

#include "pmsdr/cluster.hpp"
#include "pmsdr/numerics.hpp"

namespace pmsdr {

struct EliminationSchedule {
    std::vector<int> m; // descending positive counts
    int budget = 0;     // sum of m
};

// Removal schedule: budget = floor((M - r) * (1 - gamma_retain)), split by
// geometric halving of the remaining budget (m_i = ceil(remaining / 2)).
// When that produces more than max_iter terms, the tail is folded into the
// last slot, which preserves the descending property. gamma_retain = 1
// yields an empty schedule.
EliminationSchedule build_schedule(int M, int r, double gamma_retain, int max_iter);

struct EliminationResult {
    Vector nu;                // retained entries
    Matrix B;                 // retained rows of the basis
    std::vector<int> removed; // original coordinates, in removal order
    std::vector<int> retained;// original coordinates, ascending
};

// Algorithm: at each schedule step, project nu onto span(B), rank
// coordinates by |nu - B B^+ nu|, and drop the m_i largest (ties toward the
// lower original index) from nu and the rows of B. Throws ScheduleError if
// the schedule would leave fewer than r + 1 coordinates.
EliminationResult eliminate(const Vector& nu0, const Matrix& B0,
                            const EliminationSchedule& schedule);

// d = 1 - cos(nu, B B^+ nu), with d = 1 when the projection (or nu) is
// numerically zero. Range [0, 2].
double subspace_distance(const Vector& nu, const Matrix& B);

struct ClassificationResult {
    int label = 0;                            // argmin_k distances, ties -> smallest k
    Vector distances;                         // d_k per candidate
    std::vector<std::vector<int>> retained;   // per candidate, original coordinates
};

// Run the same elimination schedule against every candidate basis and pick
// the subspace with the smallest retained-vector cosine distance.
ClassificationResult classify_outlier(const Vector& y, const std::vector<SubspaceModel>& models,
                                      double gamma_retain, int max_iter);

} // namespace pmsdr
