#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "pmsdr/io.hpp"
#include "pmsdr/rng.hpp"

using namespace pmsdr;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pmsdr_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("matrix CSV round-trip is lossless") {
    TempDir dir;
    Rng rng = make_rng(3, stream::coeffs, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix A(7, 5);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) A(i, j) = gauss(rng) * std::pow(10.0, (i - 3) * 40);
    A(0, 0) = 0.0;
    A(1, 1) = -1.0 / 3.0;

    const std::string path = (dir.path / "a.csv").string();
    write_matrix_csv(path, A);
    const Matrix back = read_matrix_csv(path);
    REQUIRE(back.rows() == A.rows());
    REQUIRE(back.cols() == A.cols());
    CHECK(back == A); // bit-identical via round-trip formatting

    SUBCASE("missing file throws") {
        CHECK_THROWS_AS(read_matrix_csv((dir.path / "nope.csv").string()), Error);
    }
    SUBCASE("ragged rows rejected") {
        std::ofstream out(dir.path / "ragged.csv");
        out << "1,2,3\n1,2\n";
        out.close();
        CHECK_THROWS_AS(read_matrix_csv((dir.path / "ragged.csv").string()), Error);
    }
}

TEST_CASE("dataset bundle round-trip preserves every field") {
    TempDir dir;
    SynthConfig cfg;
    cfg.M = 20;
    cfg.L = 2;
    cfg.r = 3;
    cfg.n_per_group = 15;
    cfg.outlier_ratio = 0.4;
    cfg.shuffle_ratio = 0.25;
    cfg.snr_db = 30.0;
    const DatasetBundle bundle = build_dataset(cfg, 77);

    write_bundle(dir.str(), bundle);
    CHECK(bundle_has_ground_truth(dir.str()));
    const DatasetBundle back = read_bundle(dir.str());

    CHECK(back.corrupted == bundle.corrupted);
    CHECK(back.clean == bundle.clean);
    CHECK(back.labels == bundle.labels);
    CHECK(back.outlier_mask == bundle.outlier_mask);
    CHECK(back.seed == bundle.seed);
    REQUIRE(back.bases.size() == bundle.bases.size());
    for (std::size_t k = 0; k < back.bases.size(); ++k)
        CHECK(back.bases[k].columns == bundle.bases[k].columns);
    REQUIRE(back.permutations.size() == bundle.permutations.size());
    for (const auto& [j, perm] : bundle.permutations) {
        REQUIRE(back.permutations.count(j) == 1);
        CHECK(back.permutations.at(j).map == perm.map);
        CHECK(back.permutations.at(j).shuffled == perm.shuffled);
    }
    CHECK(back.config.M == cfg.M);
    CHECK(back.config.snr_db == cfg.snr_db);

    SUBCASE("noiseless snr survives the JSON null encoding") {
        SynthConfig quiet = cfg;
        quiet.snr_db = std::numeric_limits<double>::infinity();
        TempDir dir2;
        write_bundle(dir2.str(), build_dataset(quiet, 7));
        CHECK(std::isinf(read_bundle(dir2.str()).config.snr_db));
    }
    SUBCASE("matrix-only directory has no ground truth") {
        TempDir dir2;
        write_matrix_csv((dir2.path / "corrupted.csv").string(), bundle.corrupted);
        CHECK_FALSE(bundle_has_ground_truth(dir2.str()));
        CHECK_THROWS_AS(read_bundle(dir2.str()), Error);
    }
}

TEST_CASE("synth config JSON round-trip") {
    SynthConfig cfg;
    cfg.M = 64;
    cfg.L = 4;
    cfg.r = 7;
    cfg.n_per_group = 99;
    cfg.outlier_ratio = 0.5;
    cfg.shuffle_ratio = 0.125;
    cfg.strict = true;
    cfg.snr_db = 25.0;

    const SynthConfig back = synth_config_from_json(synth_config_to_json(cfg));
    CHECK(back.M == cfg.M);
    CHECK(back.L == cfg.L);
    CHECK(back.r == cfg.r);
    CHECK(back.n_per_group == cfg.n_per_group);
    CHECK(back.outlier_ratio == cfg.outlier_ratio);
    CHECK(back.shuffle_ratio == cfg.shuffle_ratio);
    CHECK(back.strict == cfg.strict);
    CHECK(back.snr_db == cfg.snr_db);

    SUBCASE("missing keys keep defaults") {
        const SynthConfig sparse = synth_config_from_json(R"({"M": 12, "r": 2})");
        CHECK(sparse.M == 12);
        CHECK(sparse.r == 2);
        CHECK(sparse.L == SynthConfig{}.L);
        CHECK(std::isinf(sparse.snr_db));
    }
    SUBCASE("null snr_db means noiseless") {
        CHECK(std::isinf(synth_config_from_json(R"({"snr_db": null})").snr_db));
        const std::string json = synth_config_to_json(SynthConfig{});
        CHECK(json.find("null") != std::string::npos);
    }
    SUBCASE("unknown keys rejected") {
        CHECK_THROWS_AS(synth_config_from_json(R"({"M": 12, "bogus": 1})"), ConfigError);
    }
    SUBCASE("malformed JSON rejected") {
        CHECK_THROWS_AS(synth_config_from_json("{"), ConfigError);
        CHECK_THROWS_AS(synth_config_from_json(R"({"M": "twelve"})"), ConfigError);
    }
}
