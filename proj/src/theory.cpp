#include "pmsdr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pmsdr/errors.hpp"
#include "pmsdr/rng.hpp"
#include "pmsdr/synth.hpp"
#include "pmsdr/threads.hpp"

namespace pmsdr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

// Horner evaluation for the fixed-degree rationals below.
double poly7(const double (&c)[8], double x) {
    double acc = c[7];
    for (int i = 6; i >= 0; --i) acc = acc * x + c[i];
    return acc;
}

} // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Wichura's PPND16 rational approximation to the normal quantile. Three
// regimes: a central rational in q = p - 1/2, and two tail rationals in
// sqrt(-log(min(p, 1-p))). Max absolute error is well below 1e-10 across
// (0, 1), which is what the extreme-value locations rho(m) need for m up
// to 1e4 and beyond.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("normal_quantile: p must lie in (0, 1)");

    static constexpr double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2,
        1.9715909503065514427e3,  1.3731693765509461125e4,
        4.5921953931549871457e4,  6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static constexpr double b[8] = {
        1.0,                      4.2313330701600911252e1,
        6.8718700749205790830e2,  5.3941960214247511077e3,
        2.1213794301586595867e4,  3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static constexpr double c[8] = {
        1.42343711074968357734e0, 4.63033784615654529590e0,
        5.76949722146069140550e0, 3.64784832476320460504e0,
        1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[8] = {
        1.0,                      2.05319162663775882187e0,
        1.67638483018380384940e0, 6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static constexpr double e[8] = {
        6.65790464350110377720e0, 5.46378491116411436990e0,
        1.78482653991729133580e0, 2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[8] = {
        1.0,                      5.99832206555887937690e-1,
        1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly7(a, r) / poly7(b, r);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = poly7(c, r) / poly7(d, r);
    } else {
        r -= 5.0;
        value = poly7(e, r) / poly7(f, r);
    }
    return q < 0.0 ? -value : value;
}

double rho(int m) {
    if (m < 2) throw DomainError("rho: m must be >= 2");
    return normal_quantile(1.0 - 1.0 / static_cast<double>(m));
}

double psi(int m) {
    if (m < 2) throw DomainError("psi: m must be >= 2");
    return 1.0 / (static_cast<double>(m) * normal_pdf(rho(m)));
}

double success_probability(const ResidualModel& model) {
    if (model.m1 + model.m2 != model.ambient_dim)
        throw InvalidInput("success_probability: m1 + m2 must equal ambient_dim");
    if (model.sigma_xi_sq <= 0.0 || model.sigma_eta_sq <= 0.0)
        throw InvalidInput("success_probability: variances must be positive");
    const double sigma_xi = std::sqrt(model.sigma_xi_sq);
    const double sigma_eta = std::sqrt(model.sigma_eta_sq);
    const double num = sigma_eta * rho(model.m2) - sigma_xi * rho(model.m1);
    const double psi2 = psi(model.m2);
    const double psi1 = psi(model.m1);
    const double den = std::sqrt(model.sigma_eta_sq * psi2 * psi2 +
                                 model.sigma_xi_sq * psi1 * psi1);
    return 2.0 * normal_cdf(num / den) - 1.0;
}

namespace {

void require_bound_dims(const char* who, int M, int m2, int r) {
    if (r < 1 || r >= M)
        throw InvalidInput(std::string(who) + ": need M > r >= 1");
    if (m2 < 1)
        throw InvalidInput(std::string(who) + ": need m2 >= 1");
}

} // namespace

VarianceBound sigma_xi_sq_bound(int ambient_dim, int m2, int rank) {
    require_bound_dims("sigma_xi_sq_bound", ambient_dim, m2, rank);
    const double M = ambient_dim;
    const double r = rank;
    const double M2 = m2;
    VarianceBound out;
    out.c_factor = 2.0 + 6.0 * (1.0 + std::sqrt(2.0)) * std::sqrt((M - r) / (r * M2 * M));
    out.bound = out.c_factor * r * (M - r) * M2 / (M * M * (M - 1.0) * (M + 2.0));
    out.delta = 0.0054;
    return out;
}

double expected_sigma_xi_upper(int ambient_dim, int m2, int rank) {
    require_bound_dims("expected_sigma_xi_upper", ambient_dim, m2, rank);
    const double M = ambient_dim;
    const double r = rank;
    const double M2 = m2;
    const double first = M2 * r * (M - r) / (M * M * (M - 1.0) * (M + 2.0));
    const double second = std::sqrt(6.0) * M2 * std::sqrt(r) * std::pow(M - r, 1.5) /
                          (M * M * (M - 1.0) * std::pow(M + 2.0, 1.5));
    const double third = M2 * M2 / (M * M * M);
    return first + second + third;
}

double log_multivariate_gamma(double x, int p) {
    if (p < 1) throw DomainError("log_multivariate_gamma: p must be >= 1");
    if (!(x > 0.5 * static_cast<double>(p - 1)))
        throw DomainError("log_multivariate_gamma: need x > (p-1)/2");
    double acc = 0.25 * static_cast<double>(p) * static_cast<double>(p - 1) *
                 std::log(M_PI);
    for (int i = 0; i < p; ++i) acc += std::lgamma(x - 0.5 * static_cast<double>(i));
    return acc;
}

double expected_sigma_eta_lower(int ambient_dim, int m2, int rank) {
    require_bound_dims("expected_sigma_eta_lower", ambient_dim, m2, rank);
    const double M = ambient_dim;
    const double r = rank;
    const double M2 = m2;
    const double middle =
        2.0 * (M2 * M + M - 4.0) * (M - r) / (M * M * (M - 1.0) * (M + 2.0));
    // Gamma_r(r/2 + 3/r) Gamma_r(M/2) / (M2 Gamma_r(M/2 + 3/r) Gamma_r(r/2)),
    // assembled in log space so the large-argument factors cancel before
    // exponentiation.
    const double log_ratio = log_multivariate_gamma(0.5 * r + 3.0 / r, rank) +
                             log_multivariate_gamma(0.5 * M, rank) -
                             std::log(M2) -
                             log_multivariate_gamma(0.5 * M + 3.0 / r, rank) -
                             log_multivariate_gamma(0.5 * r, rank);
    return 2.0 / M - middle + std::exp(log_ratio);
}

double expected_sigma_eta_approx(int ambient_dim, int m2, int rank,
                                 EtaApproxVariant variant) {
    require_bound_dims("expected_sigma_eta_approx", ambient_dim, m2, rank);
    const double M = ambient_dim;
    const double r = rank;
    const double M2 = m2;
    const double bracket = (r / M - 1.0) * (r / M - 1.0) +
                           2.0 * r * (M - r) / (M * M * (M + 2.0)) +
                           (M2 - 1.0) * r * (M - r) / (M * (M - 1.0) * (M + 2.0));
    const double prefactor = variant == EtaApproxVariant::kMain
                                 ? (2.0 * M - M2) / (M * M)
                                 : (M - M2) / (M * M);
    return prefactor * bracket;
}

ProjectionMoments projection_moment_predictions(int ambient_dim, int rank,
                                                int m2) {
    if (ambient_dim < 2)
        throw InvalidInput("projection_moment_predictions: need ambient_dim >= 2");
    if (rank < 1 || rank > ambient_dim)
        throw InvalidInput("projection_moment_predictions: need 1 <= rank <= ambient_dim");
    if (m2 < 0 || m2 > ambient_dim)
        throw InvalidInput("projection_moment_predictions: need 0 <= m2 <= ambient_dim");
    const double M = ambient_dim;
    const double r = rank;
    const double M2 = m2;
    ProjectionMoments out;
    out.diag_mean = r / M;
    out.diag_var = 2.0 * r * (M - r) / (M * M * (M + 2.0));
    out.offdiag_var = r * (M - r) / (M * (M - 1.0) * (M + 2.0));
    out.diag_cov = -2.0 * r * (M - r) / (M * M * (M - 1.0) * (M + 2.0));
    out.trace_mean = r * M2 / M;
    out.trace_var =
        2.0 * M2 * (M - M2) * r * (M - r) / (M * M * (M + 2.0) * (M - 1.0));
    return out;
}

namespace {

struct ResidualDraw {
    Matrix basis;          // M x r
    std::vector<int> map;  // full-length source map
    Vector beta;           // r
    Vector shuffled;       // y_tilde
    Vector residual;       // y_tilde - U U^T y_tilde
};

// One draw of the generative model the residual theory addresses: U from the
// Gaussian polar construction, beta ~ N(0, I/r), and a strict permutation of
// the trailing m2 coordinates (phi(i) != i and phi(phi(i)) != i within the
// block). m2 == 0 means no shuffling at all.
ResidualDraw draw_residual(int M, int m2, int r, std::uint64_t seed) {
    if (M < 2) throw InvalidInput("draw_residual: need ambient_dim >= 2");
    if (r < 1 || r > M)
        throw InvalidInput("draw_residual: need 1 <= rank <= ambient_dim");
    if (m2 < 0 || m2 > M)
        throw InvalidInput("draw_residual: need 0 <= m2 <= ambient_dim");

    ResidualDraw out;
    out.basis = generate_basis(M, r, mix_seed(seed, stream::basis, 0)).columns;

    Rng beta_rng = make_rng(seed, stream::coeffs, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.beta = Vector(r);
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    for (int i = 0; i < r; ++i) out.beta(i) = gauss(beta_rng) * scale;

    out.map.resize(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) out.map[static_cast<std::size_t>(i)] = i;
    if (m2 > 0) {
        Rng perm_rng = make_rng(seed, stream::permutation, 0);
        const std::vector<int> block =
            fixed_point_free_permutation(m2, /*strict=*/true, perm_rng);
        const int offset = M - m2;
        for (int i = 0; i < m2; ++i)
            out.map[static_cast<std::size_t>(offset + i)] = offset + block[static_cast<std::size_t>(i)];
    }

    const Vector y = out.basis * out.beta;
    out.shuffled = Vector(M);
    for (int i = 0; i < M; ++i) out.shuffled(i) = y(out.map[static_cast<std::size_t>(i)]);
    out.residual = out.shuffled - out.basis * (out.basis.transpose() * out.shuffled);
    return out;
}

} // namespace

TargetExpressionInstance target_expression_instance(int ambient_dim, int m2,
                                                    int rank,
                                                    std::uint64_t seed) {
    ResidualDraw draw = draw_residual(ambient_dim, m2, rank, seed);

    // tau = (I - P) U, built row-wise from the source map so the permutation
    // matrix is never materialized: row j of P U is row map[j] of U.
    Matrix tau(ambient_dim, rank);
    for (int j = 0; j < ambient_dim; ++j)
        tau.row(j) = draw.basis.row(j) - draw.basis.row(draw.map[static_cast<std::size_t>(j)]);

    Vector predicted(ambient_dim);
    for (int j = 0; j < ambient_dim; ++j) {
        // kappa(j) = U u_j - e_j with u_j the j-th row of U.
        Vector kappa = draw.basis * draw.basis.row(j).transpose();
        kappa(j) -= 1.0;
        predicted(j) = kappa.transpose() * (tau * draw.beta);
    }

    TargetExpressionInstance out;
    out.basis = std::move(draw.basis);
    out.perm_map = std::move(draw.map);
    out.beta = std::move(draw.beta);
    out.direct = std::move(draw.residual);
    out.predicted = std::move(predicted);
    return out;
}

double target_expression_check(int ambient_dim, int m2, int rank,
                               std::uint64_t seed) {
    const TargetExpressionInstance inst =
        target_expression_instance(ambient_dim, m2, rank, seed);
    return (inst.direct - inst.predicted).cwiseAbs().maxCoeff();
}

MonteCarloEstimate monte_carlo_residuals(int ambient_dim, int m2, int rank,
                                         long trials, std::uint64_t seed,
                                         int threads) {
    if (trials < 100)
        throw InvalidInput("monte_carlo_residuals: need trials >= 100");

    const int m1 = ambient_dim - m2;
    // Per-trial group means of squared residual entries plus the argmax
    // indicator, indexed by trial so the reduction order is fixed no matter
    // how the blocks are scheduled.
    std::vector<double> sq_un(static_cast<std::size_t>(trials), 0.0);
    std::vector<double> sq_sh(static_cast<std::size_t>(trials), 0.0);
    std::vector<double> hit(static_cast<std::size_t>(trials), 0.0);

    parallel_for(static_cast<std::size_t>(trials), resolve_threads(threads),
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t t = begin; t < end; ++t) {
                         const std::uint64_t trial_seed =
                             mix_seed(seed, stream::trial, static_cast<std::uint64_t>(t));
                         const ResidualDraw draw =
                             draw_residual(ambient_dim, m2, rank, trial_seed);
                         double acc_un = 0.0;
                         double acc_sh = 0.0;
                         int argmax = 0;
                         double best = -1.0;
                         for (int j = 0; j < ambient_dim; ++j) {
                             const double v = draw.residual(j);
                             if (j < m1) acc_un += v * v;
                             else acc_sh += v * v;
                             const double mag = std::abs(v);
                             if (mag > best) {
                                 best = mag;
                                 argmax = j;
                             }
                         }
                         if (m1 > 0) sq_un[t] = acc_un / static_cast<double>(m1);
                         if (m2 > 0) sq_sh[t] = acc_sh / static_cast<double>(m2);
                         hit[t] = (m2 > 0 && argmax >= m1) ? 1.0 : 0.0;
                     }
                 });

    const double n = static_cast<double>(trials);
    auto mean_and_se = [n](const std::vector<double>& xs, double& mean, double& se) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        mean = acc / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / (n * (n - 1.0)));
    };

    MonteCarloEstimate out;
    out.trials = trials;
    mean_and_se(sq_un, out.var_unshuffled, out.se_var_unshuffled);
    mean_and_se(sq_sh, out.var_shuffled, out.se_var_shuffled);
    double p_se_unused;
    mean_and_se(hit, out.p_max_in_shuffled, p_se_unused);
    out.se_p = std::sqrt(out.p_max_in_shuffled * (1.0 - out.p_max_in_shuffled) / n);
    return out;
}

} // namespace pmsdr
