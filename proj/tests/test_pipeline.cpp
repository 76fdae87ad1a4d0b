#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pmsdr/pipeline.hpp"
#include "pmsdr/selfrep.hpp"

using namespace pmsdr;

namespace {

SynthConfig small_mixture() {
    SynthConfig sc;
    sc.M = 50;
    sc.L = 3;
    sc.r = 5;
    sc.n_per_group = 40;
    sc.outlier_ratio = 0.6;
    sc.shuffle_ratio = 0.2;
    sc.snr_db = 40.0;
    return sc;
}

PipelineConfig config_for(const SynthConfig& sc, const DatasetBundle& bundle) {
    PipelineConfig cfg;
    cfg.L = sc.L;
    cfg.r = sc.r;
    cfg.split.mode = OutlierSplit::Mode::kKnownRatio;
    cfg.split.n_out = 0;
    for (char m : bundle.outlier_mask) cfg.split.n_out += m ? 1 : 0;
    cfg.seed = bundle.seed;
    cfg.threads = 1;
    return cfg;
}

} // namespace

TEST_CASE("clean single-subspace data passes through untouched") {
    SynthConfig sc;
    sc.M = 30;
    sc.L = 1;
    sc.r = 3;
    sc.n_per_group = 25;
    const DatasetBundle bundle = build_dataset(sc, 5);
    PipelineConfig cfg = config_for(sc, bundle); // n_out == 0

    const PipelineResult result = run_pipeline(bundle.corrupted, cfg);
    CHECK(result.recovered == bundle.corrupted); // nothing flagged, nothing changed
    CHECK(result.labels == std::vector<int>(25, 0));
    CHECK(result.inlier_mask == std::vector<char>(25, 1));
    REQUIRE(result.models.size() == 1);
    CHECK(result.models[0].sample_count == 25);

    const EvaluationReport rep = evaluate_run(result, bundle);
    CHECK(rep.ce_gt.degenerate);    // no true outliers to classify
    CHECK(rep.ce_recon.degenerate); // no detected outliers
    CHECK(rep.re_gt.degenerate);
    CHECK(rep.re_recon.degenerate);
    CHECK(rep.uoratio.degenerate);
    CHECK_FALSE(rep.scerr.degenerate);
    CHECK(rep.scerr.value == 0.0);
}

TEST_CASE("full pipeline on a three-subspace mixture") {
    const SynthConfig sc = small_mixture();
    const DatasetBundle bundle = build_dataset(sc, 11);
    const PipelineConfig cfg = config_for(sc, bundle);

    const PipelineResult result = run_pipeline(bundle.corrupted, cfg);
    const int N = sc.L * sc.n_per_group;
    REQUIRE(static_cast<int>(result.labels.size()) == N);

    SUBCASE("structural invariants") {
        // Masks partition the columns.
        for (int j = 0; j < N; ++j)
            CHECK((result.inlier_mask[static_cast<std::size_t>(j)] ^
                   result.outlier_mask[static_cast<std::size_t>(j)]) == 1);
        // Labels stay in range; one model per cluster.
        REQUIRE(static_cast<int>(result.models.size()) == sc.L);
        for (int lbl : result.labels) {
            CHECK(lbl >= 0);
            CHECK(lbl < sc.L);
        }
        // Transition matrix is row-stochastic.
        for (int i = 0; i < N; ++i)
            CHECK(result.transition.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
        // Column scales hold the original norms.
        for (int j = 0; j < N; ++j)
            CHECK(result.column_scales[static_cast<std::size_t>(j)] ==
                  doctest::Approx(bundle.corrupted.col(j).norm()).epsilon(1e-12));
        // Every stage reported a timing.
        for (const char* key : {"selfrep", "detect", "cluster", "classify", "recover", "total"})
            CHECK(result.timings_sec.count(key) == 1);
    }

    SUBCASE("later stages recompute from stored intermediates") {
        CHECK(Matrix(transition_matrix(result.selfrep)) == result.transition);
        CHECK(Vector(random_walk_scores(result.transition, cfg.walk_T).pi) ==
              result.scores.pi);
        // Detected inliers pass through; detected outliers land in the
        // assigned estimated subspace (up to the recorded scale).
        for (int j = 0; j < N; ++j) {
            if (result.inlier_mask[static_cast<std::size_t>(j)]) {
                CHECK(Vector(result.recovered.col(j)) == Vector(bundle.corrupted.col(j)));
            } else {
                const Matrix& U =
                    result.models[static_cast<std::size_t>(
                                      result.labels[static_cast<std::size_t>(j)])]
                        .basis.columns;
                const Vector v = result.recovered.col(j);
                CHECK((v - U * (U.transpose() * v)).norm() <= 1e-10 * (1.0 + v.norm()));
            }
        }
    }

    SUBCASE("metrics against ground truth are strong at this difficulty") {
        const EvaluationReport rep = evaluate_run(result, bundle);
        CHECK_FALSE(rep.ce_recon.degenerate);
        CHECK(rep.ce_recon.value <= 0.10);
        CHECK_FALSE(rep.re_recon.degenerate);
        CHECK(rep.re_recon.value <= 0.10);
        CHECK(rep.uoratio.value <= 0.10);
        CHECK(rep.scerr.value <= 0.10);
        CHECK(rep.ce_gt.value <= 0.05);
        CHECK(rep.re_gt.value <= 0.05);
        CHECK(rep.seed == bundle.seed);
    }

    SUBCASE("bit-identical across repeat runs and thread counts") {
        const PipelineResult again = run_pipeline(bundle.corrupted, cfg);
        CHECK(again.recovered == result.recovered);
        CHECK(again.labels == result.labels);
        PipelineConfig threaded = cfg;
        threaded.threads = 4;
        const PipelineResult par = run_pipeline(bundle.corrupted, threaded);
        CHECK(par.recovered == result.recovered);
        CHECK(par.labels == result.labels);
        CHECK(par.selfrep == result.selfrep);
    }
}

TEST_CASE("pipeline failures carry their stage") {
    // 6 random-ish columns; known split flags 2, leaving 4 inliers for 5
    // clusters.
    Matrix G(8, 6);
    std::uint64_t x = 3;
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 8; ++i) {
            x = 6364136223846793005ULL * x + 1442695040888963407ULL;
            G(i, j) = static_cast<double>(x >> 11) / static_cast<double>(1ULL << 53) - 0.5;
        }
    PipelineConfig cfg;
    cfg.L = 5;
    cfg.r = 2;
    cfg.split.mode = OutlierSplit::Mode::kKnownRatio;
    cfg.split.n_out = 2;

    try {
        run_pipeline(G, cfg);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage_name == "cluster");
        CHECK(std::string(e.what()).find("cluster") != std::string::npos);
    }

    SUBCASE("detect stage failures are attributed too") {
        PipelineConfig bad = cfg;
        bad.L = 2;
        bad.split.n_out = 6; // no inliers left: split refuses
        try {
            run_pipeline(G, bad);
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage_name == "detect");
        }
    }
    SUBCASE("zero columns are rejected before any stage") {
        Matrix Gz = G;
        Gz.col(3).setZero();
        CHECK_THROWS_AS(run_pipeline(Gz, cfg), InvalidInput);
    }
}

TEST_CASE("run_pipeline validates its configuration") {
    const Matrix G = Matrix::Identity(6, 6);
    PipelineConfig cfg;
    cfg.r = 2;

    PipelineConfig bad = cfg;
    bad.r = 6;
    CHECK_THROWS_AS(run_pipeline(G, bad), ConfigError);
    bad = cfg;
    bad.lambda_en = 1.5;
    CHECK_THROWS_AS(run_pipeline(G, bad), ConfigError);
    bad = cfg;
    bad.gamma_retain = 0.0;
    CHECK_THROWS_AS(run_pipeline(G, bad), ConfigError);
    bad = cfg;
    bad.split.mode = OutlierSplit::Mode::kKnownRatio;
    bad.split.n_out = -1;
    CHECK_THROWS_AS(run_pipeline(G, bad), ConfigError);
    bad = cfg;
    bad.walk_T = 0;
    CHECK_THROWS_AS(run_pipeline(G, bad), ConfigError);
}

TEST_CASE("pipeline config JSON round-trip") {
    PipelineConfig cfg;
    cfg.L = 4;
    cfg.r = 6;
    cfg.lambda_en = 0.9;
    cfg.gamma_en = 12.5;
    cfg.alpha_en = 30.0;
    cfg.en_tol = 1e-7;
    cfg.en_max_iter = 500;
    cfg.walk_T = 200;
    cfg.split.mode = OutlierSplit::Mode::kKnownRatio;
    cfg.split.n_out = 17;
    cfg.gamma_retain = 0.4;
    cfg.max_iter = 6;
    cfg.seed = 99;
    cfg.threads = 2;

    const PipelineConfig back = pipeline_config_from_json(cfg.to_json());
    CHECK(back.L == cfg.L);
    CHECK(back.r == cfg.r);
    CHECK(back.lambda_en == cfg.lambda_en);
    CHECK(back.gamma_en == cfg.gamma_en);
    CHECK(back.alpha_en == cfg.alpha_en);
    CHECK(back.en_tol == cfg.en_tol);
    CHECK(back.en_max_iter == cfg.en_max_iter);
    CHECK(back.walk_T == cfg.walk_T);
    CHECK(back.split.mode == OutlierSplit::Mode::kKnownRatio);
    CHECK(back.split.n_out == 17);
    CHECK(back.gamma_retain == cfg.gamma_retain);
    CHECK(back.max_iter == cfg.max_iter);
    CHECK(back.seed == cfg.seed);
    CHECK(back.threads == cfg.threads);

    SUBCASE("gap mode round-trips") {
        PipelineConfig gap;
        gap.split.mode = OutlierSplit::Mode::kGap;
        const PipelineConfig g2 = pipeline_config_from_json(gap.to_json());
        CHECK(g2.split.mode == OutlierSplit::Mode::kGap);
    }
    SUBCASE("defaults survive an empty object") {
        const PipelineConfig d = pipeline_config_from_json("{}");
        CHECK(d.L == 1);
        CHECK(d.lambda_en == 0.95);
        CHECK(d.split.mode == OutlierSplit::Mode::kGap);
    }
    SUBCASE("null gamma_en selects the per-column rule") {
        CHECK(pipeline_config_from_json(R"({"gamma_en": null})").gamma_en == 0.0);
    }
    SUBCASE("unknown keys and bad modes rejected") {
        CHECK_THROWS_AS(pipeline_config_from_json(R"({"bogus": 1})"), ConfigError);
        CHECK_THROWS_AS(pipeline_config_from_json(R"({"split": {"mode": "psychic"}})"),
                        ConfigError);
        CHECK_THROWS_AS(pipeline_config_from_json("not json"), ConfigError);
    }
}

TEST_CASE("make_report flags everything degenerate") {
    SynthConfig sc;
    sc.M = 20;
    sc.L = 1;
    sc.r = 2;
    sc.n_per_group = 10;
    const DatasetBundle bundle = build_dataset(sc, 3);
    const PipelineConfig cfg = config_for(sc, bundle);
    const PipelineResult result = run_pipeline(bundle.corrupted, cfg);
    const EvaluationReport rep = make_report(result);
    CHECK(rep.ce_gt.degenerate);
    CHECK(rep.ce_recon.degenerate);
    CHECK(rep.re_gt.degenerate);
    CHECK(rep.re_recon.degenerate);
    CHECK(rep.uoratio.degenerate);
    CHECK(rep.scerr.degenerate);
    CHECK(rep.timings_sec.count("total") == 1);
    CHECK_NOTHROW(pipeline_config_from_json(rep.config_echo));
}

TEST_CASE("sweep aggregates a small grid") {
    SweepGrid grid;
    grid.ambient_dims = {20};
    grid.group_counts = {2};
    grid.ranks = {2};
    grid.samples_per_group = {12};
    grid.outlier_ratios = {0.25};
    grid.shuffle_ratios = {0.2, 0.3};
    grid.snr_db = {std::numeric_limits<double>::infinity()};

    PipelineConfig base;
    base.split.mode = OutlierSplit::Mode::kKnownRatio;
    const std::vector<std::uint64_t> seeds = {1, 2};

    const std::vector<SweepRow> rows = sweep(grid, base, seeds, 1);
    REQUIRE(rows.size() == 2);
    for (const SweepRow& row : rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.seed_count == 2);
        REQUIRE(row.stats.size() == 6);
        CHECK(row.stats[0].first == "ce_gt");
        CHECK(row.stats[3].first == "re_recon");
        for (const auto& [name, s] : row.stats) {
            CHECK(s.min <= s.median);
            CHECK(s.median <= s.max);
            CHECK(s.stddev >= 0.0);
        }
    }
    CHECK(rows[0].point.shuffle_ratio == 0.2);
    CHECK(rows[1].point.shuffle_ratio == 0.3);

    SUBCASE("csv layout") {
        const std::string csv = sweep_csv(rows);
        CHECK(csv.find("M,L,r,n_per_group,outlier_ratio,shuffle_ratio,snr_db,seeds,"
                       "failed,error") == 0);
        CHECK(csv.find("ce_gt_median") != std::string::npos);
        CHECK(csv.find("scerr_max") != std::string::npos);
        CHECK(csv.find("inf") != std::string::npos); // noiseless snr column
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
        // Every row has the same number of cells as the header.
        const auto cells = [](const std::string& line) {
            return std::count(line.begin(), line.end(), ',');
        };
        const std::size_t h = csv.find('\n');
        const std::size_t r1 = csv.find('\n', h + 1);
        CHECK(cells(csv.substr(0, h)) == cells(csv.substr(h + 1, r1 - h - 1)));
    }
    SUBCASE("sweep is deterministic") {
        const std::vector<SweepRow> again = sweep(grid, base, seeds, 4);
        CHECK(sweep_csv(again) == sweep_csv(rows));
    }
    SUBCASE("a failing point is recorded, not fatal") {
        SweepGrid bad = grid;
        bad.ranks = {25}; // r > M: dataset construction refuses
        bad.shuffle_ratios = {0.2};
        const std::vector<SweepRow> rbad = sweep(bad, base, seeds, 1);
        REQUIRE(rbad.size() == 1);
        CHECK(rbad[0].failed);
        CHECK_FALSE(rbad[0].error.empty());
        CHECK(rbad[0].stats.empty());
        const std::string csv = sweep_csv(rbad);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    }
    SUBCASE("empty axes rejected") {
        SweepGrid empty = grid;
        empty.ranks.clear();
        CHECK_THROWS_AS(sweep(empty, base, seeds, 1), InvalidInput);
        CHECK_THROWS_AS(sweep(grid, base, {}, 1), InvalidInput);
    }
}
