#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmsdr/recover.hpp"
#include "pmsdr/synth.hpp"

using namespace pmsdr;

TEST_CASE("recover_outlier undoes a noiseless partial shuffle") {
    const int M = 50, r = 3;
    int exact = 0;
    for (int t = 0; t < 25; ++t) {
        SubspaceModel model;
        model.basis = generate_basis(M, r, mix_seed(500 + t, stream::basis, 0));
        const Vector y =
            sample_points(model.basis, 1, mix_seed(500 + t, stream::coeffs, 0)).col(0);
        const PartialPermutation perm = make_partial_permutation(
            M, 0.2, false, mix_seed(500 + t, stream::permutation, 0));
        const RecoveredColumn rec = recover_outlier(perm.apply(y), model, 0.5, 10);
        if ((rec.y_hat - y).norm() / y.norm() <= 1e-6) ++exact;
        CHECK(rec.subspace == model.group);
        CHECK(static_cast<int>(rec.retained.size()) ==
              M - build_schedule(M, r, 0.5, 10).budget);
    }
    // 10 of 50 coordinates are shuffled and 22 are discarded; the clean
    // majority pins the fit almost every time.
    CHECK(exact >= 23);
}

TEST_CASE("recovered columns live in the assigned subspace") {
    SubspaceModel model;
    model.basis = generate_basis(20, 4, 9);
    model.group = 3;
    Vector junk(20);
    for (int i = 0; i < 20; ++i) junk(i) = std::sin(i * 1.7) + 0.2 * i;
    const RecoveredColumn rec = recover_outlier(junk, model, 0.5, 10);
    const Matrix& U = model.basis.columns;
    CHECK((rec.y_hat - U * (U.transpose() * rec.y_hat)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rec.y_hat == U * rec.coeffs);
    CHECK(rec.subspace == 3);
}

TEST_CASE("recover_outlier is scale equivariant") {
    SubspaceModel model;
    model.basis = generate_basis(30, 3, 41);
    const Vector y = sample_points(model.basis, 1, 42).col(0);
    const PartialPermutation perm = make_partial_permutation(30, 0.2, false, 43);
    const Vector shuffled = perm.apply(y);
    const RecoveredColumn one = recover_outlier(shuffled, model, 0.5, 10);
    const RecoveredColumn big = recover_outlier(-4.0 * shuffled, model, 0.5, 10);
    CHECK(big.retained == one.retained); // same elimination path
    CHECK((big.y_hat + 4.0 * one.y_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("recover_outlier validates dimensions") {
    SubspaceModel model;
    model.basis = generate_basis(20, 4, 9);
    CHECK_THROWS_AS(recover_outlier(Vector::Ones(19), model, 0.5, 10), DimensionError);
}

TEST_CASE("recover_matrix passes inliers through untouched") {
    const int M = 40, r = 3;
    std::vector<SubspaceModel> models(2);
    for (int k = 0; k < 2; ++k) {
        models[k].basis = generate_basis(M, r, 100 + static_cast<std::uint64_t>(k));
        models[k].group = k;
    }
    Matrix G(M, 6);
    std::vector<char> inlier = {1, 0, 1, 0, 1, 1};
    std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    for (int j = 0; j < 6; ++j) {
        const Vector y =
            sample_points(models[labels[static_cast<std::size_t>(j)]].basis, 1,
                          200 + static_cast<std::uint64_t>(j))
                .col(0);
        if (!inlier[static_cast<std::size_t>(j)]) {
            const PartialPermutation perm = make_partial_permutation(
                M, 0.2, false, 300 + static_cast<std::uint64_t>(j));
            G.col(j) = perm.apply(y);
        } else {
            G.col(j) = y;
        }
    }
    RecoverParams params;
    const Matrix out = recover_matrix(G, inlier, labels, models, params);
    REQUIRE(out.cols() == 6);
    for (int j = 0; j < 6; ++j) {
        if (inlier[static_cast<std::size_t>(j)]) {
            CHECK(Vector(out.col(j)) == Vector(G.col(j))); // bit-identical
        } else {
            CHECK(Vector(out.col(j)) != Vector(G.col(j)));
            const Matrix& U = models[labels[static_cast<std::size_t>(j)]].basis.columns;
            const Vector v = out.col(j);
            CHECK((v - U * (U.transpose() * v)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SUBCASE("thread count does not change the result") {
        RecoverParams four;
        four.threads = 4;
        CHECK(Matrix(recover_matrix(G, inlier, labels, models, four)) == out);
    }
    SUBCASE("out-of-range label fails with context") {
        std::vector<int> bad = labels;
        bad[1] = 7;
        CHECK_THROWS_AS(recover_matrix(G, inlier, bad, models, params), RecoveryError);
    }
    SUBCASE("mask length mismatch") {
        CHECK_THROWS_AS(recover_matrix(G, {1, 0}, labels, models, params), DimensionError);
    }
}
