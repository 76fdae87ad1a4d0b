#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pmsdr/cluster.hpp"
#include "pmsdr/detect.hpp"
#include "pmsdr/metrics.hpp"
#include "pmsdr/numerics.hpp"
#include "pmsdr/synth.hpp"

namespace pmsdr {

// How the outlier/inlier split is chosen after scoring.
struct OutlierSplit {
    enum class Mode {
        kKnownRatio, // flag the n_out lowest-score columns
        kGap,        // threshold at the largest score gap
    };
    Mode mode = Mode::kGap;
    int n_out = 0; // read only in kKnownRatio mode
};

struct PipelineConfig {
    int L = 1;               // subspace count
    int r = 3;               // recovery rank
    double lambda_en = 0.95; // elastic-net l1 weight
    double gamma_en = 0.0;   // <= 0 selects the per-column rule
    double alpha_en = 50.0;  // numerator of the per-column gamma rule
    double en_tol = 1e-8;
    int en_max_iter = 2000;
    int walk_T = 1000;       // random-walk length
    OutlierSplit split;
    double gamma_retain = 0.5; // elimination retain ratio
    int max_iter = 10;         // elimination iterations
    std::uint64_t seed = 0;
    int threads = 0;           // 0 = resolve from environment

    std::string to_json() const;
};

// Parse the JSON produced by PipelineConfig::to_json (also the CLI's config
// file format). Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const std::string& json_text);

// Everything a run produces, stage by stage. `labels` covers every column:
// detected inliers carry their cluster label, detected outliers the label
// assigned by elimination-based classification.
struct PipelineResult {
    Matrix recovered;                  // G_hat, original column scales
    Matrix selfrep;                    // R
    Matrix transition;                 // P
    OutlierScores scores;
    std::vector<char> inlier_mask;     // detected
    std::vector<char> outlier_mask;    // detected
    std::vector<int> labels;           // per column, values in [0, L)
    std::vector<SubspaceModel> models; // index = cluster label
    std::vector<double> column_scales; // recorded l2 norms (pre-normalization)
    std::map<std::string, double> timings_sec;
    PipelineConfig config;
};

// The four-stage recovery pipeline: elastic-net self-representation,
// random-walk outlier detection, spectral clustering + basis estimation on
// the detected inliers, then elimination-based classification and
// unlabeled-sensing recovery of the detected outliers.
//
// Columns are normalized to unit l2 before self-representation (the scales
// are recorded and undone on output); a zero column is InvalidInput. A
// failing stage aborts the run with a StageError naming the stage. A
// DegenerateCluster during basis estimation triggers exactly one clustering
// retry with seed+1 before the error is surfaced.
PipelineResult run_pipeline(const Matrix& G, const PipelineConfig& cfg);

// Report carrying only run-side content (timings, config echo, seed); every
// ground-truth metric is left at zero with its degenerate flag set.
EvaluationReport make_report(const PipelineResult& result);

// Full metric suite against a ground-truth bundle: cluster labels are
// aligned to the true groups over the detected inliers, then
//   ce_recon / re_recon  use the pipeline's own detection + estimated bases,
//   ce_gt / re_gt        re-classify and re-recover the true outliers
//                        against the ground-truth bases,
//   uoratio / scerr      measure detection misses and inlier clustering.
EvaluationReport evaluate_run(const PipelineResult& result, const DatasetBundle& bundle);

// --- Grid sweeps --------------------------------------------------------------

// Cartesian product of dataset axes; every axis must be non-empty. Pipeline
// knobs other than (L, r, split, seed) are taken from the base config.
struct SweepGrid {
    std::vector<int> ambient_dims;      // M
    std::vector<int> group_counts;      // L
    std::vector<int> ranks;             // r
    std::vector<int> samples_per_group; // n per group
    std::vector<double> outlier_ratios;
    std::vector<double> shuffle_ratios;
    std::vector<double> snr_db; // +infinity = noiseless
};

struct MetricStats {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation, 0 for a single seed
    double min = 0.0;
    double max = 0.0;
};

struct SweepRow {
    SynthConfig point;
    int seed_count = 0;
    bool failed = false; // any seed at this point threw
    std::string error;   // first failure message
    // Fixed order: ce_gt, ce_recon, re_gt, re_recon, uoratio, scerr.
    std::vector<std::pair<std::string, MetricStats>> stats;
};

// For every grid point x seed: build_dataset, run_pipeline, evaluate_run;
// aggregate each metric across seeds. Rows appear in cartesian-product
// order (M, L, r, n, outlier_ratio, shuffle_ratio, snr). A failing point is
// recorded with its error and the sweep continues. Points run concurrently;
// each individual pipeline run is kept single-threaded.
std::vector<SweepRow> sweep(const SweepGrid& grid, const PipelineConfig& base,
                            const std::vector<std::uint64_t>& seeds, int threads = 0);

// One header row plus one CSV row per sweep row (median/mean/std/min/max per
// metric; error messages quoted).
std::string sweep_csv(const std::vector<SweepRow>& rows);

} // namespace pmsdr
