#pragma once

#include <cstdint>
#include <vector>

#include "pmsdr/numerics.hpp"

namespace pmsdr {

// --- Standard-normal helpers -------------------------------------------------

// Density of the standard normal distribution at x.
double normal_pdf(double x);

// CDF of the standard normal distribution, evaluated via erfc for accuracy in
// both tails.
double normal_cdf(double x);

// Inverse CDF of the standard normal distribution (Wichura's PPND16 rational
// approximation, max absolute error below 1e-10 over (0, 1)).
//
// Throws DomainError when p is outside the open interval (0, 1).
double normal_quantile(double p);

// rho(m) = Phi^{-1}(1 - 1/m): the location of the expected maximum of m
// standard-normal draws under the quantile heuristic. Requires m >= 2
// (DomainError otherwise); rho(2) == 0.
double rho(int m);

// psi(m) = 1 / (m * pdf(rho(m))): the scale attached to the maximum of m
// standard-normal draws. Requires m >= 2 (DomainError otherwise).
double psi(int m);

// --- Closed-form residual model ----------------------------------------------

// Two-group variance model for the entries of the projection residual
// g - U U^T g of a partially shuffled sample: coordinates in the ordered set A
// (|A| = m1) have variance sigma_xi_sq, coordinates in the shuffled set O
// (|O| = m2) have variance sigma_eta_sq.
struct ResidualModel {
  int ambient_dim = 0;  // M = m1 + m2
  int m1 = 0;           // |A|, ordered coordinates; must be >= 2
  int m2 = 0;           // |O|, shuffled coordinates; must be >= 2
  int rank = 0;         // subspace rank r
  double sigma_xi_sq = 0.0;
  double sigma_eta_sq = 0.0;
};

// Probability that the largest-magnitude residual entry falls inside the
// shuffled set O, under the two-group Gaussian model:
//
//   2 * Phi( (sigma_eta * rho(m2) - sigma_xi * rho(m1))
//            / sqrt(sigma_eta^2 psi(m2)^2 + sigma_xi^2 psi(m1)^2) ) - 1
//
// The raw value lies in [-1, 1]; callers that report a probability clamp to
// [0, 1] themselves so the raw model output stays observable.
//
// Throws InvalidInput for non-positive variances or inconsistent counts, and
// DomainError (via rho/psi) when either group has fewer than 2 coordinates.
double success_probability(const ResidualModel& model);

// High-probability bound on the ordered-coordinate residual variance.
struct VarianceBound {
  double bound = 0.0;     // c_factor * r(M-r)M2 / (M^2 (M-1)(M+2))
  double c_factor = 0.0;  // 2 + 6(1+sqrt(2)) * sqrt((M-r)/(r M2 M))
  double delta = 0.0;     // failure probability of the bound (~5.4e-3)
};

// Bound such that sigma_xi_sq < bound holds with probability > 1 - delta,
// with the constant evaluated at its stated upper value.
// Requires M > r >= 1 and M2 >= 1 (InvalidInput otherwise).
VarianceBound sigma_xi_sq_bound(int ambient_dim, int m2, int rank);

// Upper bound on E(sigma_xi_sq):
//   M2 r(M-r)/(M^2(M-1)(M+2))
//   + sqrt(6) M2 r^{1/2} (M-r)^{3/2} / (M^2 (M-1)(M+2)^{3/2})
//   + M2^2 / M^3.
// Requires M > r >= 1 and M2 >= 1 (InvalidInput otherwise).
double expected_sigma_xi_upper(int ambient_dim, int m2, int rank);

// Lower bound on E(sigma_eta_sq):
//   2/M - 2[M2 M + M - 4](M-r) / (M^2 (M-1)(M+2))
//   + Gamma_r(r/2 + 3/r) Gamma_r(M/2)
//     / (M2 Gamma_r(M/2 + 3/r) Gamma_r(r/2)),
// with every multivariate gamma factor evaluated in log space.
// Requires M > r >= 1 and M2 >= 1; throws DomainError when a gamma argument
// is outside its domain.
double expected_sigma_eta_lower(int ambient_dim, int m2, int rank);

// Two closed-form approximations of E(sigma_eta_sq) share the bracket
//   (r/M - 1)^2 + 2r(M-r)/(M^2(M+2)) + (M2-1) r(M-r)/(M(M-1)(M+2))
// but disagree on the prefactor: (2M - M2)/M^2 in the headline form versus
// (M - M2)/M^2 in the step-by-step derivation. Both are exposed and
// arbitrated empirically by monte_carlo_residuals.
enum class EtaApproxVariant { kMain, kDerivation };

// Evaluates the selected approximation of E(sigma_eta_sq).
// Requires M > r >= 1 and M2 >= 1 (InvalidInput otherwise).
double expected_sigma_eta_approx(int ambient_dim, int m2, int rank,
                                 EtaApproxVariant variant);

// log Gamma_p(x) for the multivariate gamma function
//   Gamma_p(x) = pi^{p(p-1)/4} * prod_{i=1..p} Gamma(x - (i-1)/2).
// Requires p >= 1 and x > (p-1)/2 (DomainError otherwise).
double log_multivariate_gamma(double x, int p);

// --- Projection-matrix moment predictions ------------------------------------

// Moments of H = U U^T for a uniformly random rank-r projector in dimension M,
// plus the induced statistics of the partial trace over a fixed coordinate
// subset of size m2.
struct ProjectionMoments {
  double diag_mean = 0.0;      // E[H_ii] = r/M
  double diag_var = 0.0;       // Var(H_ii) = 2r(M-r)/(M^2(M+2))
  double offdiag_var = 0.0;    // Var(H_ij) = r(M-r)/(M(M-1)(M+2)), i != j
  double diag_cov = 0.0;       // Cov(H_ii, H_kk) = -2r(M-r)/(M^2(M-1)(M+2))
  double trace_mean = 0.0;     // E[sum_{i in O} H_ii] = r m2 / M
  double trace_var = 0.0;      // 2 m2 (M-m2) r (M-r) / (M^2 (M+2)(M-1))
};

// Closed-form moment predictions for H = U U^T. Requires M >= 2 and
// 1 <= r <= M and 0 <= m2 <= M (InvalidInput otherwise).
ProjectionMoments projection_moment_predictions(int ambient_dim, int rank,
                                                int m2);

// --- Independent Monte Carlo oracles ------------------------------------------

// One synthetic instance of the shuffled-residual identity: the projection
// residual of a partially shuffled in-subspace sample, computed both directly
// and through the rank-one expansion
//   residual_j = kappa(j)^T tau beta,   tau = (I - P) U,
//   kappa(j) = U u_j - e_j,
// where P is the permutation matrix ((P x)_j = x_{phi(j)}) and u_j is the j-th
// row of U. The two evaluations are independent code paths; their agreement is
// a correctness oracle for both.
struct TargetExpressionInstance {
  Matrix basis;               // U, M x r
  std::vector<int> perm_map;  // full-length source map: shuffled_j = y[perm_map[j]]
  Vector beta;                // subspace coefficients
  Vector direct;              // y_tilde - U U^T y_tilde
  Vector predicted;           // kappa(j)^T tau beta per coordinate
};

// Draws U (Gaussian polar), beta ~ N(0, I/r), and a strict permutation of the
// last m2 coordinates (identity when m2 == 0), then evaluates both sides.
// Requires M >= 2, 1 <= r <= M, and m2 in {0} union [3, M] (strictness needs
// at least 3 moved coordinates); ConstraintError for m2 in {1, 2}.
TargetExpressionInstance target_expression_instance(int ambient_dim, int m2,
                                                    int rank,
                                                    std::uint64_t seed);

// max_j |direct_j - predicted_j| for one instance drawn from seed.
double target_expression_check(int ambient_dim, int m2, int rank,
                               std::uint64_t seed);

// Monte Carlo estimates of the residual-entry variances and of the probability
// that the largest-magnitude residual entry lies in the shuffled set.
struct MonteCarloEstimate {
  double var_unshuffled = 0.0;     // pooled second moment over A
  double var_shuffled = 0.0;       // pooled second moment over O
  double p_max_in_shuffled = 0.0;  // empirical Pr(argmax_j |residual_j| in O)
  long trials = 0;
  double se_var_unshuffled = 0.0;  // standard errors of the three estimates
  double se_var_shuffled = 0.0;
  double se_p = 0.0;
};

// Runs `trials` independent residual draws (fresh U, beta, and strict
// permutation of the last m2 coordinates per trial) and accumulates the
// group-wise variances and the argmax indicator. Trials are partitioned into
// fixed blocks executed in parallel; every trial derives its own seed, so the
// estimate is independent of the worker count. threads <= 0 resolves to the
// PMSDR_THREADS environment variable or the hardware count.
//
// Requires trials >= 100 (InvalidInput), M >= 2, 1 <= r <= M, and m2 in
// {0} union [3, M] as above. m2 == 0 yields p_max_in_shuffled = 0 and a zero
// shuffled variance by convention.
MonteCarloEstimate monte_carlo_residuals(int ambient_dim, int m2, int rank,
                                         long trials, std::uint64_t seed,
                                         int threads = 0);

}  // namespace pmsdr
