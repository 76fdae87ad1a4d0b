#include "pmsdr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmsdr/threads.hpp"

namespace pmsdr {

Vector PartialPermutation::apply(const Vector& x) const {
    if (x.size() != length)
        throw DimensionError("PartialPermutation::apply: length mismatch");
    Vector out(length);
    for (int i = 0; i < length; ++i) out(i) = x(map[i]);
    return out;
}

Vector PartialPermutation::apply_inverse(const Vector& x) const {
    if (x.size() != length)
        throw DimensionError("PartialPermutation::apply_inverse: length mismatch");
    Vector out(length);
    for (int i = 0; i < length; ++i) out(map[i]) = x(i);
    return out;
}

std::vector<int> fixed_point_free_permutation(int k, bool strict, Rng& rng) {
    if (k == 0) return {};
    if (k == 1 || (strict && k == 2))
        throw ConstraintError("fixed_point_free_permutation: no valid permutation of " +
                              std::to_string(k) + " indices" +
                              (strict ? " without 2-cycles" : ""));
    std::vector<int> p(k);
    std::iota(p.begin(), p.end(), 0);
    while (true) {
        std::shuffle(p.begin(), p.end(), rng);
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            if (p[i] == i) ok = false;
            else if (strict && p[p[i]] == i) ok = false;
        }
        if (ok) return p;
    }
}

SubspaceBasis generate_basis(int M, int r, std::uint64_t rng_seed) {
    if (r < 1 || r > M)
        throw RankError("generate_basis: need 1 <= r <= M, got r = " + std::to_string(r) +
                        ", M = " + std::to_string(M));
    Rng rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(M)));
    Matrix X(M, r);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < M; ++i) X(i, j) = gauss(rng);
    // Polar factor X (X^T X)^{-1/2} through the eigendecomposition of the
    // r x r Gram matrix.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(X.transpose() * X);
    Vector inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    Matrix U = X * (eig.eigenvectors() * inv_sqrt.asDiagonal() *
                    eig.eigenvectors().transpose());
    SubspaceBasis out;
    out.ambient_dim = M;
    out.rank = r;
    out.columns = std::move(U);
    return out;
}

Matrix sample_points(const SubspaceBasis& basis, int n, std::uint64_t rng_seed) {
    if (n < 1) throw InvalidInput("sample_points: need n >= 1");
    Rng rng(rng_seed);
    const int r = basis.rank;
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(r)));
    Matrix B(r, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < r; ++i) B(i, j) = gauss(rng);
    return basis.columns * B;
}

PartialPermutation make_partial_permutation(int M, double shuffle_ratio, bool strict,
                                            std::uint64_t rng_seed) {
    if (shuffle_ratio < 0.0 || shuffle_ratio > 1.0)
        throw InvalidInput("make_partial_permutation: shuffle_ratio outside [0, 1]");
    const int k = static_cast<int>(std::floor(shuffle_ratio * M));
    PartialPermutation perm;
    perm.length = M;
    perm.map.resize(M);
    std::iota(perm.map.begin(), perm.map.end(), 0);
    if (k == 0) return perm;
    if (k == 1)
        throw ConstraintError("make_partial_permutation: a single shuffled index cannot move");
    Rng rng(rng_seed);
    // Uniform k-subset of [0, M) via partial Fisher-Yates.
    std::vector<int> pool(M);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, M - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    perm.shuffled.assign(pool.begin(), pool.begin() + k);
    std::sort(perm.shuffled.begin(), perm.shuffled.end());
    std::vector<int> local = fixed_point_free_permutation(k, strict, rng);
    for (int i = 0; i < k; ++i) perm.map[perm.shuffled[i]] = perm.shuffled[local[i]];
    return perm;
}

Matrix add_noise(const Matrix& A, double snr_db, std::uint64_t rng_seed) {
    if (std::isinf(snr_db) && snr_db > 0) return A;
    if (!(snr_db > 0))
        throw InvalidInput("add_noise: snr_db must be positive or infinite");
    const double power = A.squaredNorm() / static_cast<double>(A.size());
    const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
    Matrix out = A;
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        Rng rng = make_rng(rng_seed, stream::noise, static_cast<std::uint64_t>(j));
        std::normal_distribution<double> gauss(0.0, sigma);
        for (Eigen::Index i = 0; i < A.rows(); ++i) out(i, j) += gauss(rng);
    }
    return out;
}

namespace {

void validate_config(const SynthConfig& cfg) {
    if (cfg.M < 2) throw ConfigError("build_dataset: M must be >= 2");
    if (cfg.L < 1) throw ConfigError("build_dataset: L must be >= 1");
    if (cfg.r < 1 || cfg.r >= cfg.M)
        throw ConfigError("build_dataset: need 1 <= r < M");
    if (cfg.n_per_group < 1) throw ConfigError("build_dataset: n_per_group must be >= 1");
    if (cfg.outlier_ratio < 0.0 || cfg.outlier_ratio >= 1.0 + 1e-12)
        throw ConfigError("build_dataset: outlier_ratio must lie in [0, 1]");
    if (cfg.shuffle_ratio < 0.0 || cfg.shuffle_ratio > 1.0)
        throw ConfigError("build_dataset: shuffle_ratio must lie in [0, 1]");
    if (cfg.outlier_ratio > 0.0) {
        const int k = static_cast<int>(std::floor(cfg.shuffle_ratio * cfg.M));
        if (k == 1)
            throw ConfigError("build_dataset: shuffle_ratio yields a single shuffled index");
        if (cfg.strict && k == 2)
            throw ConfigError("build_dataset: strict mode impossible with exactly 2 shuffled indices");
        if (k == 0)
            throw ConfigError("build_dataset: outliers requested but shuffle_ratio shuffles nothing");
    }
}

} // namespace

DatasetBundle build_dataset(const SynthConfig& cfg, std::uint64_t rng_seed) {
    validate_config(cfg);
    DatasetBundle bundle;
    bundle.config = cfg;
    bundle.seed = rng_seed;

    const int N = cfg.L * cfg.n_per_group;
    bundle.clean.resize(cfg.M, N);
    bundle.corrupted.resize(cfg.M, N);
    bundle.labels.resize(N);
    bundle.outlier_mask.assign(N, 0);

    bundle.bases.reserve(cfg.L);
    for (int k = 0; k < cfg.L; ++k)
        bundle.bases.push_back(
            generate_basis(cfg.M, cfg.r, mix_seed(rng_seed, stream::basis, k)));

    // Outlier subsets are drawn per group so every subspace contributes
    // outliers at the configured proportion.
    const int n_out = static_cast<int>(std::llround(cfg.outlier_ratio * cfg.n_per_group));
    std::vector<char> is_outlier(N, 0);
    for (int k = 0; k < cfg.L; ++k) {
        Rng rng = make_rng(rng_seed, stream::outlier_pick, k);
        std::vector<int> pool(cfg.n_per_group);
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < n_out; ++i) {
            std::uniform_int_distribution<int> pick(i, cfg.n_per_group - 1);
            std::swap(pool[i], pool[pick(rng)]);
            is_outlier[k * cfg.n_per_group + pool[i]] = 1;
        }
    }

    // Columns are generated from per-column sub-seeds, so this loop can run
    // on any number of threads with identical output.
    std::vector<PartialPermutation> perms(N);
    parallel_for(static_cast<std::size_t>(N), resolve_threads(0),
                 [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const int group = static_cast<int>(j) / cfg.n_per_group;
            Rng rng = make_rng(rng_seed, stream::coeffs, j);
            std::normal_distribution<double> gauss(
                0.0, 1.0 / std::sqrt(static_cast<double>(cfg.r)));
            Vector beta(cfg.r);
            for (int i = 0; i < cfg.r; ++i) beta(i) = gauss(rng);
            Vector y = bundle.bases[group].columns * beta;
            bundle.clean.col(static_cast<Eigen::Index>(j)) = y;
            bundle.labels[j] = group;
            if (is_outlier[j]) {
                perms[j] = make_partial_permutation(
                    cfg.M, cfg.shuffle_ratio, cfg.strict,
                    mix_seed(rng_seed, stream::permutation, j));
                bundle.corrupted.col(static_cast<Eigen::Index>(j)) = perms[j].apply(y);
                bundle.outlier_mask[j] = 1;
            } else {
                bundle.corrupted.col(static_cast<Eigen::Index>(j)) = y;
            }
        }
    });
    for (int j = 0; j < N; ++j)
        if (bundle.outlier_mask[j]) bundle.permutations.emplace(j, std::move(perms[j]));

    bundle.corrupted = add_noise(bundle.corrupted, cfg.snr_db, rng_seed);
    return bundle;
}

} // namespace pmsdr
