#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "pmsdr/numerics.hpp"
#include "pmsdr/rng.hpp"

namespace pmsdr {

// A permutation of [0, length) that fixes every index outside the shuffled
// set O. Convention: applying the permutation maps x to x' with
// x'[i] = x[map[i]], i.e. map[i] names the source coordinate of entry i.
struct PartialPermutation {
    int length = 0;
    std::vector<int> map;      // full-length source-index table
    std::vector<int> shuffled; // sorted members of O

    Vector apply(const Vector& x) const;
    Vector apply_inverse(const Vector& x) const;
    bool is_identity() const { return shuffled.empty(); }
};

// Uniform fixed-point-free permutation of [0, k) via rejection sampling;
// strict mode additionally rejects 2-cycles. Throws ConstraintError when no
// such permutation exists (k == 1, or strict with k == 2).
std::vector<int> fixed_point_free_permutation(int k, bool strict, Rng& rng);

// Haar-like orthonormal basis U = X (X^T X)^{-1/2} with X i.i.d. N(0, 1/M).
// Accepts 1 <= r <= M (r == M yields a full orthogonal matrix); RankError
// otherwise.
SubspaceBasis generate_basis(int M, int r, std::uint64_t rng_seed);

// n columns B * beta with beta i.i.d. N(0, I_r / r).
Matrix sample_points(const SubspaceBasis& basis, int n, std::uint64_t rng_seed);

// Partial permutation with |O| = floor(shuffle_ratio * M) indices chosen
// uniformly. Throws ConstraintError when |O| == 1 or (strict and |O| == 2).
PartialPermutation make_partial_permutation(int M, double shuffle_ratio, bool strict,
                                            std::uint64_t rng_seed);

// Additive i.i.d. Gaussian noise scaled so the expected SNR in dB matches
// snr_db; +infinity means no noise. Noise is drawn per column from derived
// sub-seeds, so columns are independent and generation order does not
// matter.
Matrix add_noise(const Matrix& A, double snr_db, std::uint64_t rng_seed);

struct SynthConfig {
    int M = 50;              // ambient dimension
    int L = 1;               // subspace count
    int r = 3;               // subspace rank
    int n_per_group = 120;   // samples per subspace
    double outlier_ratio = 0.0;
    double shuffle_ratio = 0.0;
    bool strict = false;     // also forbid 2-cycles in permutations
    double snr_db = std::numeric_limits<double>::infinity();
};

struct DatasetBundle {
    Matrix corrupted; // G~, permuted then noised
    Matrix clean;     // G, noiseless ground truth
    std::vector<SubspaceBasis> bases;
    std::vector<int> labels;        // per column, 0-based group index
    std::vector<char> outlier_mask; // per column
    std::map<int, PartialPermutation> permutations; // outlier column -> phi
    SynthConfig config;
    std::uint64_t seed = 0;
};

// Full synthetic protocol: L independent bases, per-group samples, per-group
// outlier subsets at the configured proportion, one independent partial
// permutation per outlier, noise applied last (clean stays noiseless).
// Throws ConfigError on inconsistent configuration.
DatasetBundle build_dataset(const SynthConfig& cfg, std::uint64_t rng_seed);

} // namespace pmsdr
