#include "pmsdr/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include <json.hpp>

#include "pmsdr/classify.hpp"
#include "pmsdr/errors.hpp"
#include "pmsdr/recover.hpp"
#include "pmsdr/selfrep.hpp"
#include "pmsdr/threads.hpp"

namespace pmsdr {

std::string PipelineConfig::to_json() const {
    nlohmann::json j;
    j["L"] = L;
    j["r"] = r;
    j["lambda_en"] = lambda_en;
    j["gamma_en"] = gamma_en;
    j["alpha_en"] = alpha_en;
    j["en_tol"] = en_tol;
    j["en_max_iter"] = en_max_iter;
    j["walk_T"] = walk_T;
    if (split.mode == OutlierSplit::Mode::kKnownRatio)
        j["split"] = {{"mode", "known_ratio"}, {"n_out", split.n_out}};
    else
        j["split"] = {{"mode", "gap"}};
    j["gamma_retain"] = gamma_retain;
    j["max_iter"] = max_iter;
    j["seed"] = seed;
    j["threads"] = threads;
    return j.dump(2);
}

PipelineConfig pipeline_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("pipeline config: expected a JSON object");

    PipelineConfig cfg;
    try {
        for (const auto& item : j.items()) {
            const std::string& key = item.key();
            const nlohmann::json& v = item.value();
            if (key == "L") cfg.L = v.get<int>();
            else if (key == "r") cfg.r = v.get<int>();
            else if (key == "lambda_en") cfg.lambda_en = v.get<double>();
            else if (key == "gamma_en") cfg.gamma_en = v.is_null() ? 0.0 : v.get<double>();
            else if (key == "alpha_en") cfg.alpha_en = v.get<double>();
            else if (key == "en_tol") cfg.en_tol = v.get<double>();
            else if (key == "en_max_iter") cfg.en_max_iter = v.get<int>();
            else if (key == "walk_T") cfg.walk_T = v.get<int>();
            else if (key == "gamma_retain") cfg.gamma_retain = v.get<double>();
            else if (key == "max_iter") cfg.max_iter = v.get<int>();
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "threads") cfg.threads = v.get<int>();
            else if (key == "split") {
                const std::string mode = v.at("mode").get<std::string>();
                if (mode == "gap") {
                    cfg.split.mode = OutlierSplit::Mode::kGap;
                } else if (mode == "known_ratio") {
                    cfg.split.mode = OutlierSplit::Mode::kKnownRatio;
                    cfg.split.n_out = v.value("n_out", -1);
                } else {
                    throw ConfigError("pipeline config: unknown split mode '" + mode + "'");
                }
            } else {
                throw ConfigError("pipeline config: unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    return cfg;
}

namespace {

void validate_config(const PipelineConfig& cfg, Eigen::Index M, Eigen::Index N) {
    if (N < 2) throw ConfigError("run_pipeline: need at least 2 columns");
    if (cfg.L < 1) throw ConfigError("run_pipeline: L must be >= 1");
    if (cfg.r < 1 || cfg.r >= M)
        throw ConfigError("run_pipeline: need 1 <= r < ambient dimension");
    if (cfg.lambda_en < 0.0 || cfg.lambda_en > 1.0)
        throw ConfigError("run_pipeline: lambda_en must lie in [0, 1]");
    if (cfg.gamma_en <= 0.0 && cfg.alpha_en <= 0.0)
        throw ConfigError("run_pipeline: per-column gamma rule needs alpha_en > 0");
    if (cfg.en_tol <= 0.0) throw ConfigError("run_pipeline: en_tol must be positive");
    if (cfg.en_max_iter < 1) throw ConfigError("run_pipeline: en_max_iter must be >= 1");
    if (cfg.walk_T < 1) throw ConfigError("run_pipeline: walk_T must be >= 1");
    if (cfg.gamma_retain <= 0.0 || cfg.gamma_retain > 1.0)
        throw ConfigError("run_pipeline: gamma_retain must lie in (0, 1]");
    if (cfg.max_iter < 1) throw ConfigError("run_pipeline: max_iter must be >= 1");
    if (cfg.split.mode == OutlierSplit::Mode::kKnownRatio && cfg.split.n_out < 0)
        throw ConfigError("run_pipeline: known-ratio split needs n_out >= 0");
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

PipelineResult run_pipeline(const Matrix& G, const PipelineConfig& cfg) {
    validate_config(cfg, G.rows(), G.cols());
    require_finite(G, "run_pipeline: input matrix");

    const int M = static_cast<int>(G.rows());
    const int N = static_cast<int>(G.cols());
    const int threads = resolve_threads(cfg.threads);

    PipelineResult out;
    out.config = cfg;
    const auto t_total = std::chrono::steady_clock::now();

    // Record column scales and normalize once; every stage below sees unit
    // columns, and the recovered outliers are rescaled on the way out.
    out.column_scales.resize(static_cast<std::size_t>(N));
    Matrix Gn(M, N);
    for (int j = 0; j < N; ++j) {
        const double s = G.col(j).norm();
        if (s < 1e-12)
            throw InvalidInput("run_pipeline: column " + std::to_string(j) +
                               " has zero norm");
        out.column_scales[static_cast<std::size_t>(j)] = s;
        Gn.col(j) = G.col(j) / s;
    }

    auto stage = [&out](const char* name, const std::function<void()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const Error& e) {
            throw StageError(name, e.what());
        }
        out.timings_sec[name] = seconds_since(t0);
    };

    stage("selfrep", [&] {
        SelfRepParams params;
        params.lambda_en = cfg.lambda_en;
        params.gamma_en = cfg.gamma_en;
        params.alpha = cfg.alpha_en;
        params.tol = cfg.en_tol;
        params.max_iter = cfg.en_max_iter;
        params.threads = threads;
        out.selfrep = self_representation(Gn, params);
    });

    stage("detect", [&] {
        out.transition = transition_matrix(out.selfrep);
        out.scores = random_walk_scores(out.transition, cfg.walk_T);
        SplitMasks masks = cfg.split.mode == OutlierSplit::Mode::kKnownRatio
                               ? split_by_known_ratio(out.scores, cfg.split.n_out)
                               : split_by_gap(out.scores);
        out.inlier_mask = std::move(masks.first);
        out.outlier_mask = std::move(masks.second);
    });

    // Map detected-inlier subset positions back to column indices.
    std::vector<int> inlier_cols;
    for (int j = 0; j < N; ++j)
        if (out.inlier_mask[static_cast<std::size_t>(j)]) inlier_cols.push_back(j);

    out.labels.assign(static_cast<std::size_t>(N), 0);
    stage("cluster", [&] {
        const Matrix W = affinity_from_selfrep(out.selfrep, out.inlier_mask);

        auto attempt = [&](std::uint64_t seed)
            -> std::pair<ClusterAssignment, std::vector<SubspaceModel>> {
            ClusterAssignment assign = spectral_clustering(W, cfg.L, seed);
            std::vector<SubspaceModel> models;
            models.reserve(static_cast<std::size_t>(cfg.L));
            for (int k = 0; k < cfg.L; ++k) {
                int count = 0;
                for (int lbl : assign.labels)
                    if (lbl == k) ++count;
                Matrix Xk(M, count);
                int c = 0;
                for (std::size_t p = 0; p < inlier_cols.size(); ++p)
                    if (assign.labels[p] == k) Xk.col(c++) = Gn.col(inlier_cols[p]);
                models.push_back(estimate_basis(Xk, cfg.r, k));
            }
            return {std::move(assign), std::move(models)};
        };

        ClusterAssignment assign;
        try {
            auto got = attempt(cfg.seed);
            assign = std::move(got.first);
            out.models = std::move(got.second);
        } catch (const DegenerateCluster&) {
            // One reseeded retry: an unlucky k-means split can starve a
            // cluster below rank r even when the data supports L groups.
            auto got = attempt(cfg.seed + 1);
            assign = std::move(got.first);
            out.models = std::move(got.second);
        }
        for (std::size_t p = 0; p < inlier_cols.size(); ++p)
            out.labels[static_cast<std::size_t>(inlier_cols[p])] = assign.labels[p];
    });

    stage("classify", [&] {
        std::vector<int> outlier_cols;
        for (int j = 0; j < N; ++j)
            if (out.outlier_mask[static_cast<std::size_t>(j)]) outlier_cols.push_back(j);
        parallel_for(outlier_cols.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const int j = outlier_cols[p];
                const ClassificationResult res = classify_outlier(
                    Gn.col(j), out.models, cfg.gamma_retain, cfg.max_iter);
                out.labels[static_cast<std::size_t>(j)] = res.label;
            }
        });
    });

    stage("recover", [&] {
        RecoverParams params;
        params.gamma_retain = cfg.gamma_retain;
        params.max_iter = cfg.max_iter;
        params.threads = threads;
        const Matrix Gn_hat =
            recover_matrix(Gn, out.inlier_mask, out.labels, out.models, params);
        out.recovered = G; // detected inliers pass through bit-identical
        for (int j = 0; j < N; ++j)
            if (out.outlier_mask[static_cast<std::size_t>(j)])
                out.recovered.col(j) =
                    Gn_hat.col(j) * out.column_scales[static_cast<std::size_t>(j)];
    });

    out.timings_sec["total"] = seconds_since(t_total);
    return out;
}

EvaluationReport make_report(const PipelineResult& result) {
    EvaluationReport rep;
    rep.ce_gt.degenerate = true;
    rep.ce_recon.degenerate = true;
    rep.re_gt.degenerate = true;
    rep.re_recon.degenerate = true;
    rep.uoratio.degenerate = true;
    rep.scerr.degenerate = true;
    rep.timings_sec = result.timings_sec;
    rep.config_echo = result.config.to_json();
    rep.seed = result.config.seed;
    return rep;
}

EvaluationReport evaluate_run(const PipelineResult& result, const DatasetBundle& bundle) {
    const int N = static_cast<int>(result.recovered.cols());
    if (bundle.corrupted.rows() != result.recovered.rows() ||
        bundle.corrupted.cols() != result.recovered.cols())
        throw DimensionError("evaluate_run: bundle does not match the run");
    if (static_cast<int>(bundle.labels.size()) != N ||
        static_cast<int>(result.labels.size()) != N)
        throw DimensionError("evaluate_run: label vectors do not match the run");

    EvaluationReport rep = make_report(result);

    // Align cluster labels to true groups over the detected inliers, then
    // apply the same relabeling everywhere (classification labels live in
    // the same cluster-label space).
    int truth_L = bundle.config.L;
    for (int lbl : bundle.labels) truth_L = std::max(truth_L, lbl + 1);
    const int L_align = std::max(result.config.L, truth_L);
    std::vector<int> pred_in, truth_in;
    for (int j = 0; j < N; ++j) {
        if (!result.inlier_mask[static_cast<std::size_t>(j)]) continue;
        pred_in.push_back(result.labels[static_cast<std::size_t>(j)]);
        truth_in.push_back(bundle.labels[static_cast<std::size_t>(j)]);
    }
    const std::vector<int> relabel = align_labels(pred_in, truth_in, L_align);
    std::vector<int> aligned(static_cast<std::size_t>(N), 0);
    for (int j = 0; j < N; ++j)
        aligned[static_cast<std::size_t>(j)] =
            relabel[static_cast<std::size_t>(result.labels[static_cast<std::size_t>(j)])];

    const auto aux = auxiliary_metrics(result.outlier_mask, bundle.outlier_mask, aligned,
                                       bundle.labels);
    rep.uoratio = aux.first;
    rep.scerr = aux.second;
    rep.ce_recon = misclassification_ratio(aligned, bundle.labels, result.outlier_mask);

    // Reconstruction error with the pipeline's own detection and bases: each
    // detected outlier is judged against the estimated subspace it was
    // assigned to.
    {
        std::vector<const SubspaceBasis*> bases(static_cast<std::size_t>(N), nullptr);
        for (int j = 0; j < N; ++j)
            if (result.outlier_mask[static_cast<std::size_t>(j)])
                bases[static_cast<std::size_t>(j)] =
                    &result.models[static_cast<std::size_t>(
                                       result.labels[static_cast<std::size_t>(j)])]
                         .basis;
        try {
            rep.re_recon.value =
                recovery_error(result.recovered, bundle.clean, bases, result.outlier_mask);
            rep.re_recon.degenerate = false;
        } catch (const DegenerateError&) {
            rep.re_recon = {0.0, true};
        }
    }

    // Ground-truth path: re-classify and re-recover the true outliers against
    // the true bases, independent of the pipeline's detection and clustering.
    if (!bundle.bases.empty()) {
        std::vector<SubspaceModel> gt_models;
        gt_models.reserve(bundle.bases.size());
        for (std::size_t k = 0; k < bundle.bases.size(); ++k) {
            SubspaceModel m;
            m.basis = bundle.bases[k];
            m.group = static_cast<int>(k);
            gt_models.push_back(std::move(m));
        }

        std::vector<int> gt_outlier_cols;
        for (int j = 0; j < N; ++j)
            if (bundle.outlier_mask[static_cast<std::size_t>(j)]) gt_outlier_cols.push_back(j);

        std::vector<int> gt_labels(static_cast<std::size_t>(N), 0);
        Matrix gt_recovered = bundle.corrupted;
        parallel_for(gt_outlier_cols.size(), resolve_threads(result.config.threads),
                     [&](std::size_t begin, std::size_t end) {
                         for (std::size_t p = begin; p < end; ++p) {
                             const int j = gt_outlier_cols[p];
                             const Vector y = bundle.corrupted.col(j);
                             const ClassificationResult cls =
                                 classify_outlier(y, gt_models, result.config.gamma_retain,
                                                  result.config.max_iter);
                             gt_labels[static_cast<std::size_t>(j)] = cls.label;
                             const RecoveredColumn rec =
                                 recover_outlier(y, gt_models[static_cast<std::size_t>(cls.label)],
                                                 result.config.gamma_retain,
                                                 result.config.max_iter);
                             gt_recovered.col(j) = rec.y_hat;
                         }
                     });

        rep.ce_gt = misclassification_ratio(gt_labels, bundle.labels, bundle.outlier_mask);
        std::vector<const SubspaceBasis*> bases(static_cast<std::size_t>(N), nullptr);
        for (int j : gt_outlier_cols)
            bases[static_cast<std::size_t>(j)] =
                &bundle.bases[static_cast<std::size_t>(gt_labels[static_cast<std::size_t>(j)])];
        try {
            rep.re_gt.value = recovery_error(gt_recovered, bundle.clean, bases,
                                             bundle.outlier_mask);
            rep.re_gt.degenerate = false;
        } catch (const DegenerateError&) {
            rep.re_gt = {0.0, true};
        }
    }

    rep.seed = result.config.seed;
    return rep;
}

namespace {

MetricStats aggregate(std::vector<double> xs) {
    MetricStats s;
    if (xs.empty()) return s;
    const std::size_t n = xs.size();
    std::sort(xs.begin(), xs.end());
    s.min = xs.front();
    s.max = xs.back();
    s.median = n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    double acc = 0.0;
    for (double x : xs) acc += x;
    s.mean = acc / static_cast<double>(n);
    if (n >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return s;
}

constexpr std::array<const char*, 6> kMetricNames = {
    "ce_gt", "ce_recon", "re_gt", "re_recon", "uoratio", "scerr"};

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace

std::vector<SweepRow> sweep(const SweepGrid& grid, const PipelineConfig& base,
                            const std::vector<std::uint64_t>& seeds, int threads) {
    if (grid.ambient_dims.empty() || grid.group_counts.empty() || grid.ranks.empty() ||
        grid.samples_per_group.empty() || grid.outlier_ratios.empty() ||
        grid.shuffle_ratios.empty() || grid.snr_db.empty())
        throw InvalidInput("sweep: every grid axis must be non-empty");
    if (seeds.empty()) throw InvalidInput("sweep: need at least one seed");

    std::vector<SynthConfig> points;
    for (int M : grid.ambient_dims)
        for (int L : grid.group_counts)
            for (int r : grid.ranks)
                for (int n : grid.samples_per_group)
                    for (double outlier : grid.outlier_ratios)
                        for (double shuffle : grid.shuffle_ratios)
                            for (double snr : grid.snr_db) {
                                SynthConfig sc;
                                sc.M = M;
                                sc.L = L;
                                sc.r = r;
                                sc.n_per_group = n;
                                sc.outlier_ratio = outlier;
                                sc.shuffle_ratio = shuffle;
                                sc.snr_db = snr;
                                points.push_back(sc);
                            }

    std::vector<SweepRow> rows(points.size());
    parallel_for(points.size(), resolve_threads(threads), [&](std::size_t begin,
                                                              std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const SynthConfig& sc = points[idx];
            SweepRow row;
            row.point = sc;
            row.seed_count = static_cast<int>(seeds.size());
            std::array<std::vector<double>, 6> vals;
            try {
                for (std::uint64_t seed : seeds) {
                    const DatasetBundle bundle = build_dataset(sc, seed);
                    PipelineConfig cfg = base;
                    cfg.L = sc.L;
                    cfg.r = sc.r;
                    cfg.seed = seed;
                    cfg.threads = 1; // points already run concurrently
                    if (cfg.split.mode == OutlierSplit::Mode::kKnownRatio) {
                        int n_out = 0;
                        for (char m : bundle.outlier_mask) n_out += m ? 1 : 0;
                        cfg.split.n_out = n_out;
                    }
                    const PipelineResult result = run_pipeline(bundle.corrupted, cfg);
                    const EvaluationReport rep = evaluate_run(result, bundle);
                    vals[0].push_back(rep.ce_gt.value);
                    vals[1].push_back(rep.ce_recon.value);
                    vals[2].push_back(rep.re_gt.value);
                    vals[3].push_back(rep.re_recon.value);
                    vals[4].push_back(rep.uoratio.value);
                    vals[5].push_back(rep.scerr.value);
                }
                for (std::size_t m = 0; m < kMetricNames.size(); ++m)
                    row.stats.emplace_back(kMetricNames[m], aggregate(vals[m]));
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
                row.stats.clear();
            }
            rows[idx] = std::move(row);
        }
    });
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "M,L,r,n_per_group,outlier_ratio,shuffle_ratio,snr_db,seeds,failed,error";
    for (const char* name : kMetricNames)
        for (const char* stat : {"median", "mean", "std", "min", "max"})
            out += "," + std::string(name) + "_" + stat;
    out += "\n";

    for (const SweepRow& row : rows) {
        const SynthConfig& sc = row.point;
        out += std::to_string(sc.M) + "," + std::to_string(sc.L) + "," +
               std::to_string(sc.r) + "," + std::to_string(sc.n_per_group) + "," +
               format_double(sc.outlier_ratio) + "," + format_double(sc.shuffle_ratio) +
               "," + format_double(sc.snr_db) + "," + std::to_string(row.seed_count) +
               "," + (row.failed ? "1" : "0") + "," + csv_quote(row.error);
        if (row.failed || row.stats.empty()) {
            for (std::size_t i = 0; i < kMetricNames.size() * 5; ++i) out += ",";
        } else {
            for (const auto& named : row.stats) {
                const MetricStats& s = named.second;
                out += "," + format_double(s.median) + "," + format_double(s.mean) + "," +
                       format_double(s.stddev) + "," + format_double(s.min) + "," +
                       format_double(s.max);
            }
        }
        out += "\n";
    }
    return out;
}

} // namespace pmsdr
