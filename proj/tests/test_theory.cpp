#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmsdr/theory.hpp"

using namespace pmsdr;

TEST_CASE("normal distribution helpers") {
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-6));

    SUBCASE("quantile inverts the cdf to high accuracy") {
        for (double p : {1e-9, 1e-4, 0.025, 0.5, 0.8, 1 - 1e-6}) {
            const double x = normal_quantile(p);
            CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-9));
        }
        CHECK(normal_quantile(0.5) == 0.0);
        CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    }
    SUBCASE("quantile domain") {
        CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
        CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
        CHECK_THROWS_AS(normal_quantile(-0.1), DomainError);
    }
}

TEST_CASE("rho and psi extreme-value factors") {
    CHECK(rho(2) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(rho(100) == doctest::Approx(2.3263478740408408).epsilon(1e-12));
    CHECK(psi(2) == doctest::Approx(1.2533141373155001).epsilon(1e-12));
    CHECK(psi(10) == doctest::Approx(0.5698059856117003).epsilon(1e-12));
    // Defining identity: m * pdf(rho(m)) * psi(m) == 1.
    for (int m : {2, 10, 100, 10000})
        CHECK(m * normal_pdf(rho(m)) * psi(m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(rho(1), DomainError);
    CHECK_THROWS_AS(psi(1), DomainError);
}

TEST_CASE("success_probability frozen value and behaviour") {
    ResidualModel model;
    model.ambient_dim = 50;
    model.m1 = 30;
    model.m2 = 20;
    model.rank = 3;
    model.sigma_xi_sq = 0.002;
    model.sigma_eta_sq = 0.02;
    CHECK(success_probability(model) ==
          doctest::Approx(0.9649736875481094).epsilon(1e-10));

    SUBCASE("symmetric variances and groups give zero") {
        ResidualModel sym = model;
        sym.m1 = sym.m2 = 25;
        sym.sigma_xi_sq = sym.sigma_eta_sq = 0.01;
        CHECK(success_probability(sym) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("monotone in the shuffled-group variance") {
        ResidualModel a = model, b = model;
        a.sigma_eta_sq = 0.005;
        b.sigma_eta_sq = 0.05;
        CHECK(success_probability(a) < success_probability(model));
        CHECK(success_probability(model) < success_probability(b));
        CHECK(success_probability(b) <= 1.0);
    }
    SUBCASE("validation") {
        ResidualModel bad = model;
        bad.m1 = 29; // m1 + m2 != M
        CHECK_THROWS_AS(success_probability(bad), InvalidInput);
        bad = model;
        bad.sigma_xi_sq = 0.0;
        CHECK_THROWS_AS(success_probability(bad), InvalidInput);
        bad = model;
        bad.m1 = 49;
        bad.m2 = 1; // rho(1) undefined
        CHECK_THROWS_AS(success_probability(bad), DomainError);
    }
}

TEST_CASE("sigma_xi_sq_bound frozen values") {
    const VarianceBound vb = sigma_xi_sq_bound(50, 20, 3);
    CHECK(vb.c_factor == doctest::Approx(3.813072778008884).epsilon(1e-12));
    CHECK(vb.bound == doctest::Approx(0.0016880479174230852).epsilon(1e-12));
    CHECK(vb.delta == doctest::Approx(0.0054).epsilon(1e-12));
    CHECK_THROWS_AS(sigma_xi_sq_bound(50, 0, 3), InvalidInput);
    CHECK_THROWS_AS(sigma_xi_sq_bound(3, 20, 3), InvalidInput);
}

TEST_CASE("expected_sigma_xi_upper frozen value") {
    CHECK(expected_sigma_xi_upper(50, 20, 3) ==
          doctest::Approx(0.0042379125031531805).epsilon(1e-12));
    // Strictly above the zero-mean part: the M2^2/M^3 term alone.
    CHECK(expected_sigma_xi_upper(50, 20, 3) > 400.0 / 125000.0);
}

TEST_CASE("log_multivariate_gamma") {
    // p = 1 reduces to the ordinary log gamma.
    CHECK(log_multivariate_gamma(2.5, 1) ==
          doctest::Approx(std::lgamma(2.5)).epsilon(1e-12));
    // p = 2: log(sqrt(pi)) + lgamma(x) + lgamma(x - 1/2).
    const double expected2 =
        0.5 * std::log(M_PI) + std::lgamma(3.0) + std::lgamma(2.5);
    CHECK(log_multivariate_gamma(3.0, 2) == doctest::Approx(expected2).epsilon(1e-12));
    CHECK(log_multivariate_gamma(3.0, 2) ==
          doctest::Approx(1.5501949939575645).epsilon(1e-12));
    // Stays finite where naive products overflow.
    CHECK(std::isfinite(log_multivariate_gamma(100.0, 10)));
    CHECK_THROWS_AS(log_multivariate_gamma(0.5, 2), DomainError);
    CHECK_THROWS_AS(log_multivariate_gamma(1.0, 0), DomainError);
}

TEST_CASE("expected_sigma_eta_lower frozen values") {
    CHECK(expected_sigma_eta_lower(50, 20, 3) ==
          doctest::Approx(0.02456707221350079).epsilon(1e-10));
    // The log-space evaluation must survive a large configuration.
    CHECK(expected_sigma_eta_lower(200, 50, 10) ==
          doctest::Approx(0.007590511952280161).epsilon(1e-10));
}

TEST_CASE("expected_sigma_eta_approx variants share the bracket") {
    CHECK(expected_sigma_eta_approx(50, 20, 3, EtaApproxVariant::kMain) ==
          doctest::Approx(0.02901751962323391).epsilon(1e-12));
    CHECK(expected_sigma_eta_approx(50, 20, 3, EtaApproxVariant::kDerivation) ==
          doctest::Approx(0.010881569858712716).epsilon(1e-12));
    // Identical bracket means the ratio is (2M - M2)/(M - M2) at every point.
    for (int M : {20, 50, 120})
        for (int m2 : {4, 10, 15})
            for (int r : {1, 3, 5}) {
                const double main = expected_sigma_eta_approx(M, m2, r, EtaApproxVariant::kMain);
                const double app =
                    expected_sigma_eta_approx(M, m2, r, EtaApproxVariant::kDerivation);
                CHECK(main / app ==
                      doctest::Approx((2.0 * M - m2) / (M - m2)).epsilon(1e-12));
            }
}

TEST_CASE("projection_moment_predictions formulas") {
    const ProjectionMoments pm = projection_moment_predictions(50, 3, 20);
    CHECK(pm.diag_mean == doctest::Approx(3.0 / 50.0).epsilon(1e-14));
    CHECK(pm.diag_var == doctest::Approx(2.0 * 3 * 47 / (2500.0 * 52)).epsilon(1e-14));
    CHECK(pm.offdiag_var == doctest::Approx(3.0 * 47 / (50.0 * 49 * 52)).epsilon(1e-14));
    CHECK(pm.diag_cov ==
          doctest::Approx(-2.0 * 3 * 47 / (2500.0 * 49 * 52)).epsilon(1e-14));
    CHECK(pm.trace_mean == doctest::Approx(3.0 * 20 / 50.0).epsilon(1e-14));
    CHECK(pm.trace_var ==
          doctest::Approx(2.0 * 20 * 30 * 3 * 47 / (2500.0 * 52 * 49.0)).epsilon(1e-14));

    SUBCASE("full-rank projector is deterministic") {
        const ProjectionMoments full = projection_moment_predictions(10, 10, 4);
        CHECK(full.diag_mean == 1.0);
        CHECK(full.diag_var == 0.0);
        CHECK(full.offdiag_var == 0.0);
        CHECK(full.trace_var == 0.0);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(projection_moment_predictions(1, 1, 0), InvalidInput);
        CHECK_THROWS_AS(projection_moment_predictions(10, 0, 2), InvalidInput);
        CHECK_THROWS_AS(projection_moment_predictions(10, 11, 2), InvalidInput);
        CHECK_THROWS_AS(projection_moment_predictions(10, 2, 11), InvalidInput);
    }
}

TEST_CASE("projection moments match Monte Carlo") {
    // Empirical diagonal mean/variance of H = U U^T over independent draws.
    const int M = 20, r = 4, draws = 4000;
    const ProjectionMoments pm = projection_moment_predictions(M, r, 0);
    double sum = 0.0, sum_sq = 0.0, off_sq = 0.0;
    for (int t = 0; t < draws; ++t) {
        const TargetExpressionInstance inst =
            target_expression_instance(M, 0, r, 5000 + static_cast<std::uint64_t>(t));
        const Matrix H = inst.basis * inst.basis.transpose();
        sum += H(0, 0);
        sum_sq += H(0, 0) * H(0, 0);
        off_sq += H(0, 1) * H(0, 1);
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    CHECK(mean == doctest::Approx(pm.diag_mean).epsilon(0.05));
    CHECK(var == doctest::Approx(pm.diag_var).epsilon(0.15));
    CHECK(off_sq / draws == doctest::Approx(pm.offdiag_var).epsilon(0.15));
}

TEST_CASE("target expression identity holds to machine precision") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CHECK(target_expression_check(50, 20, 3, seed) <= 1e-10);
        CHECK(target_expression_check(30, 10, 5, seed) <= 1e-10);
    }
    SUBCASE("identity permutation gives a zero residual") {
        const TargetExpressionInstance inst = target_expression_instance(40, 0, 3, 7);
        CHECK(inst.direct.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(inst.predicted.cwiseAbs().maxCoeff() < 1e-12);
        for (int i = 0; i < 40; ++i) CHECK(inst.perm_map[static_cast<std::size_t>(i)] == i);
    }
    SUBCASE("predicted side is linear in beta") {
        const TargetExpressionInstance inst = target_expression_instance(30, 10, 4, 3);
        // direct = (I - H) applied to the shuffled vector is linear in beta,
        // and both sides agree, so scaling beta scales the residual; verify
        // through an independent instance equality instead of recomputation:
        CHECK((inst.direct - inst.predicted).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("tiny shuffled sets are rejected") {
        CHECK_THROWS_AS(target_expression_instance(30, 1, 3, 1), ConstraintError);
        CHECK_THROWS_AS(target_expression_instance(30, 2, 3, 1), ConstraintError);
        CHECK_NOTHROW(target_expression_instance(30, 3, 3, 1));
    }
}

TEST_CASE("monte_carlo_residuals estimator properties") {
    const MonteCarloEstimate est = monte_carlo_residuals(50, 20, 3, 2000, 99, 1);
    CHECK(est.trials == 2000);
    CHECK(est.var_shuffled > 0.0);
    CHECK(est.var_unshuffled > 0.0);
    CHECK(est.p_max_in_shuffled > 0.0);
    CHECK(est.p_max_in_shuffled <= 1.0);
    // The shuffled coordinates must carry visibly more residual energy.
    CHECK(est.var_shuffled >
          est.var_unshuffled +
              5.0 * std::hypot(est.se_var_shuffled, est.se_var_unshuffled));

    SUBCASE("independent of the worker count") {
        const MonteCarloEstimate four = monte_carlo_residuals(50, 20, 3, 2000, 99, 4);
        CHECK(four.var_unshuffled == est.var_unshuffled);
        CHECK(four.var_shuffled == est.var_shuffled);
        CHECK(four.p_max_in_shuffled == est.p_max_in_shuffled);
        CHECK(four.se_p == est.se_p);
    }
    SUBCASE("standard errors shrink like 1/sqrt(n)") {
        const MonteCarloEstimate big = monte_carlo_residuals(50, 20, 3, 8000, 99, 0);
        CHECK(big.se_var_shuffled < est.se_var_shuffled);
        CHECK(big.se_var_shuffled == doctest::Approx(est.se_var_shuffled / 2.0).epsilon(0.3));
    }
    SUBCASE("m2 == 0 draws have no shuffled side") {
        const MonteCarloEstimate none = monte_carlo_residuals(50, 0, 3, 500, 1, 1);
        CHECK(none.p_max_in_shuffled == 0.0);
        CHECK(none.var_shuffled == 0.0);
        // Noiseless in-subspace samples project onto themselves.
        CHECK(none.var_unshuffled < 1e-20);
    }
    SUBCASE("trial floor enforced") {
        CHECK_THROWS_AS(monte_carlo_residuals(50, 20, 3, 99, 1, 1), InvalidInput);
    }
}
