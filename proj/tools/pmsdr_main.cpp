// Command-line surface for the recovery pipeline: dataset synthesis, full
// runs, re-evaluation, grid sweeps, and theory-vs-Monte-Carlo comparisons.
// Every command writes a manifest.json next to its outputs so results stay
// reproducible from the artifacts alone.

#include <array>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmsdr/errors.hpp"
#include "pmsdr/io.hpp"
#include "pmsdr/pipeline.hpp"
#include "pmsdr/theory.hpp"
#include "pmsdr/threads.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pmsdr::ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw pmsdr::Error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw pmsdr::Error("write failed for " + path);
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_path,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t seed) {
    json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed;
    j["tool_version"] = kToolVersion;
    j["timestamp"] = utc_timestamp();
    write_text_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

json matrix_to_json(const pmsdr::Matrix& A) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

pmsdr::Matrix matrix_from_json(const json& rows) {
    const std::size_t m = rows.size();
    if (m == 0) throw pmsdr::Error("pipeline_state.json: empty matrix");
    const std::size_t n = rows.at(0).size();
    pmsdr::Matrix A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows.at(i).at(j).get<double>();
    return A;
}

// Everything evaluate_run needs from a finished run, so `eval` can work from
// the files alone.
void write_pipeline_state(const std::string& path, const pmsdr::PipelineResult& result) {
    json j;
    j["config"] = json::parse(result.config.to_json());
    j["labels"] = result.labels;
    json inl = json::array();
    for (char m : result.inlier_mask) inl.push_back(m != 0);
    j["inlier_mask"] = std::move(inl);
    json outl = json::array();
    for (char m : result.outlier_mask) outl.push_back(m != 0);
    j["outlier_mask"] = std::move(outl);
    j["column_scales"] = result.column_scales;
    json models = json::array();
    for (const auto& m : result.models) {
        json jm;
        jm["group"] = m.group;
        jm["sample_count"] = m.sample_count;
        jm["basis"] = matrix_to_json(m.basis.columns);
        models.push_back(std::move(jm));
    }
    j["models"] = std::move(models);
    j["timings_sec"] = result.timings_sec;
    write_text_file(path, j.dump(2) + "\n");
}

pmsdr::PipelineResult read_pipeline_state(const std::string& path,
                                          const pmsdr::Matrix& recovered) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw pmsdr::Error("pipeline_state.json: " + std::string(e.what()));
    }
    pmsdr::PipelineResult result;
    result.recovered = recovered;
    result.config = pmsdr::pipeline_config_from_json(j.at("config").dump());
    result.labels = j.at("labels").get<std::vector<int>>();
    for (bool m : j.at("inlier_mask").get<std::vector<bool>>())
        result.inlier_mask.push_back(m ? 1 : 0);
    for (bool m : j.at("outlier_mask").get<std::vector<bool>>())
        result.outlier_mask.push_back(m ? 1 : 0);
    result.column_scales = j.at("column_scales").get<std::vector<double>>();
    for (const auto& jm : j.at("models")) {
        pmsdr::SubspaceModel m;
        m.group = jm.at("group").get<int>();
        m.sample_count = jm.at("sample_count").get<int>();
        m.basis = pmsdr::SubspaceBasis::from_matrix(matrix_from_json(jm.at("basis")));
        result.models.push_back(std::move(m));
    }
    result.timings_sec = j.at("timings_sec").get<std::map<std::string, double>>();
    return result;
}

// Report JSON plus a flat single-row CSV of the same metrics.
void write_report_files(const std::string& dir, const pmsdr::EvaluationReport& rep,
                        bool has_ground_truth) {
    json j = json::parse(rep.to_json());
    j["ground_truth"] = has_ground_truth;
    write_text_file(dir + "/report.json", j.dump(2) + "\n");

    std::string csv =
        "ce_gt,ce_recon,re_gt,re_recon,uoratio,scerr,"
        "ce_gt_degenerate,ce_recon_degenerate,re_gt_degenerate,re_recon_degenerate,"
        "uoratio_degenerate,scerr_degenerate\n";
    char buf[64];
    const pmsdr::MetricValue* vals[6] = {&rep.ce_gt,    &rep.ce_recon, &rep.re_gt,
                                         &rep.re_recon, &rep.uoratio,  &rep.scerr};
    for (int i = 0; i < 6; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", vals[i]->value);
        csv += buf;
        csv += i + 1 < 6 ? "," : ",";
    }
    for (int i = 0; i < 6; ++i) {
        csv += vals[i]->degenerate ? "1" : "0";
        if (i + 1 < 6) csv += ",";
    }
    csv += "\n";
    write_text_file(dir + "/metrics.csv", csv);
}

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    bool verbose = false;
    bool dump_intermediates = false;
};

void log_verbose(const CommonFlags& flags, const std::string& msg) {
    if (flags.verbose) std::cerr << "[pmsdr] " << msg << "\n";
}

int cmd_synth(const CommonFlags& flags, const std::string& out_dir) {
    pmsdr::SynthConfig cfg;
    if (!flags.config_path.empty())
        cfg = pmsdr::synth_config_from_json(read_text_file(flags.config_path));
    const std::uint64_t seed = flags.seed_given ? flags.seed : 0;
    log_verbose(flags, "building dataset into " + out_dir);
    const pmsdr::DatasetBundle bundle = pmsdr::build_dataset(cfg, seed);
    fs::create_directories(out_dir);
    pmsdr::write_bundle(out_dir, bundle);
    write_manifest(out_dir, "synth", flags.config_path, {},
                   {out_dir + "/corrupted.csv", out_dir + "/clean.csv",
                    out_dir + "/bundle.json"},
                   seed);
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& dataset_dir,
            const std::string& out_dir) {
    const bool has_gt = pmsdr::bundle_has_ground_truth(dataset_dir);
    pmsdr::DatasetBundle bundle;
    pmsdr::Matrix G;
    if (has_gt) {
        bundle = pmsdr::read_bundle(dataset_dir);
        G = bundle.corrupted;
    } else {
        G = pmsdr::read_matrix_csv(dataset_dir + "/corrupted.csv");
    }

    pmsdr::PipelineConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = pmsdr::pipeline_config_from_json(read_text_file(flags.config_path));
    } else if (has_gt) {
        // No explicit config: adopt the dataset's own structure.
        cfg.L = bundle.config.L;
        cfg.r = bundle.config.r;
    }
    if (flags.seed_given) cfg.seed = flags.seed;
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (cfg.split.mode == pmsdr::OutlierSplit::Mode::kKnownRatio && cfg.split.n_out < 0) {
        if (!has_gt)
            throw pmsdr::ConfigError(
                "run: known-ratio split with n_out < 0 needs a ground-truth bundle");
        int n_out = 0;
        for (char m : bundle.outlier_mask) n_out += m ? 1 : 0;
        cfg.split.n_out = n_out;
    }

    log_verbose(flags, "running pipeline on " + dataset_dir);
    const pmsdr::PipelineResult result = pmsdr::run_pipeline(G, cfg);
    const pmsdr::EvaluationReport report =
        has_gt ? pmsdr::evaluate_run(result, bundle) : pmsdr::make_report(result);
    for (const auto& [name, sec] : result.timings_sec)
        log_verbose(flags, "stage " + name + ": " + std::to_string(sec) + " s");

    fs::create_directories(out_dir);
    pmsdr::write_matrix_csv(out_dir + "/G_hat.csv", result.recovered);
    write_pipeline_state(out_dir + "/pipeline_state.json", result);
    write_report_files(out_dir, report, has_gt);
    std::vector<std::string> outputs = {out_dir + "/G_hat.csv",
                                        out_dir + "/pipeline_state.json",
                                        out_dir + "/report.json", out_dir + "/metrics.csv"};
    if (flags.dump_intermediates) {
        pmsdr::write_matrix_csv(out_dir + "/selfrep.csv", result.selfrep);
        pmsdr::write_matrix_csv(out_dir + "/transition.csv", result.transition);
        pmsdr::write_matrix_csv(out_dir + "/scores.csv", result.scores.pi);
        outputs.push_back(out_dir + "/selfrep.csv");
        outputs.push_back(out_dir + "/transition.csv");
        outputs.push_back(out_dir + "/scores.csv");
    }
    write_manifest(out_dir, "run", flags.config_path, {dataset_dir}, outputs, cfg.seed);
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& run_dir,
             const std::string& dataset_dir, std::string out_dir) {
    if (out_dir.empty()) out_dir = run_dir + "/eval";
    const pmsdr::Matrix recovered = pmsdr::read_matrix_csv(run_dir + "/G_hat.csv");
    const pmsdr::PipelineResult result =
        read_pipeline_state(run_dir + "/pipeline_state.json", recovered);

    const bool has_gt = pmsdr::bundle_has_ground_truth(dataset_dir);
    pmsdr::EvaluationReport report;
    if (has_gt) {
        const pmsdr::DatasetBundle bundle = pmsdr::read_bundle(dataset_dir);
        report = pmsdr::evaluate_run(result, bundle);
    } else {
        log_verbose(flags, "no ground truth in " + dataset_dir + "; metrics omitted");
        report = pmsdr::make_report(result);
    }
    fs::create_directories(out_dir);
    write_report_files(out_dir, report, has_gt);
    write_manifest(out_dir, "eval", flags.config_path, {run_dir, dataset_dir},
                   {out_dir + "/report.json", out_dir + "/metrics.csv"},
                   result.config.seed);
    return 0;
}

std::vector<double> snr_axis_from_json(const json& axis) {
    std::vector<double> out;
    for (const auto& v : axis)
        out.push_back(v.is_null() ? std::numeric_limits<double>::infinity()
                                  : v.get<double>());
    return out;
}

int cmd_sweep(const CommonFlags& flags, const std::string& grid_path,
              const std::string& out_csv) {
    json j;
    try {
        j = json::parse(read_text_file(grid_path));
    } catch (const json::exception& e) {
        throw pmsdr::ConfigError("sweep grid: invalid JSON: " + std::string(e.what()));
    }

    pmsdr::SweepGrid grid;
    pmsdr::PipelineConfig base;
    std::vector<std::uint64_t> seeds;
    try {
        grid.ambient_dims = j.value("M", std::vector<int>{50});
        grid.group_counts = j.value("L", std::vector<int>{3});
        grid.ranks = j.at("r").get<std::vector<int>>();
        grid.samples_per_group = j.value("n_per_group", std::vector<int>{120});
        grid.outlier_ratios = j.value("outlier_ratio", std::vector<double>{0.6});
        grid.shuffle_ratios = j.at("shuffle_ratio").get<std::vector<double>>();
        grid.snr_db = j.contains("snr_db")
                          ? snr_axis_from_json(j.at("snr_db"))
                          : std::vector<double>{std::numeric_limits<double>::infinity()};
        seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("pipeline"))
            base = pmsdr::pipeline_config_from_json(j.at("pipeline").dump());
    } catch (const json::exception& e) {
        throw pmsdr::ConfigError("sweep grid: " + std::string(e.what()));
    }

    log_verbose(flags, "sweeping " + std::to_string(grid.ranks.size()) + " rank values");
    const auto rows = pmsdr::sweep(grid, base, seeds, flags.threads);
    const fs::path out_path(out_csv);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_text_file(out_csv, pmsdr::sweep_csv(rows));
    const std::string manifest_dir =
        out_path.has_parent_path() ? out_path.parent_path().string() : std::string(".");
    write_manifest(manifest_dir, "sweep", grid_path, {grid_path}, {out_csv},
                   seeds.empty() ? 0 : seeds.front());
    return 0;
}

int cmd_theory(const CommonFlags& flags, const std::string& grid_path,
               const std::string& out_csv) {
    json j;
    try {
        j = json::parse(read_text_file(grid_path));
    } catch (const json::exception& e) {
        throw pmsdr::ConfigError("theory grid: invalid JSON: " + std::string(e.what()));
    }

    long trials = 10000;
    std::uint64_t seed = flags.seed_given ? flags.seed : 0;
    std::vector<std::array<int, 3>> points;
    try {
        trials = j.value("trials", trials);
        if (j.contains("seed") && !flags.seed_given) seed = j.at("seed").get<std::uint64_t>();
        for (const auto& p : j.at("points"))
            points.push_back({p.at("M").get<int>(), p.at("M2").get<int>(),
                              p.at("r").get<int>()});
    } catch (const json::exception& e) {
        throw pmsdr::ConfigError("theory grid: " + std::string(e.what()));
    }
    if (points.empty()) throw pmsdr::ConfigError("theory grid: no points");

    std::string csv = "M,M2,r,quantity,predicted,empirical,std_err\n";
    char buf[160];
    for (const auto& [M, M2, r] : points) {
        log_verbose(flags, "theory point M=" + std::to_string(M) +
                               " M2=" + std::to_string(M2) + " r=" + std::to_string(r));
        const pmsdr::MonteCarloEstimate mc =
            pmsdr::monte_carlo_residuals(M, M2, r, trials, seed, flags.threads);

        pmsdr::ResidualModel model;
        model.ambient_dim = M;
        model.m1 = M - M2;
        model.m2 = M2;
        model.rank = r;
        model.sigma_xi_sq = mc.var_unshuffled;
        model.sigma_eta_sq = mc.var_shuffled;
        const double p_raw = pmsdr::success_probability(model);
        const double p_pred = std::min(1.0, std::max(0.0, p_raw));

        const auto emit = [&](const char* quantity, double predicted, double empirical,
                              double se) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%d,%s,%.17g,%.17g,%.17g\n", M, M2, r,
                          quantity, predicted, empirical, se);
            csv += buf;
        };
        emit("p_max_in_shuffled", p_pred, mc.p_max_in_shuffled, mc.se_p);
        emit("sigma_xi_sq", pmsdr::expected_sigma_xi_upper(M, M2, r), mc.var_unshuffled,
             mc.se_var_unshuffled);
        emit("sigma_eta_sq",
             pmsdr::expected_sigma_eta_approx(M, M2, r, pmsdr::EtaApproxVariant::kMain),
             mc.var_shuffled, mc.se_var_shuffled);
    }

    const fs::path out_path(out_csv);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_text_file(out_csv, csv);
    const std::string manifest_dir =
        out_path.has_parent_path() ? out_path.parent_path().string() : std::string(".");
    write_manifest(manifest_dir, "theory", grid_path, {grid_path}, {out_csv}, seed);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Permuted multi-subspace data recovery"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string dataset_dir, out_dir, run_dir, grid_path, out_csv;

    const auto add_common = [&flags](CLI::App* cmd, bool with_dump = false) {
        cmd->add_option("--config", flags.config_path, "JSON config file");
        cmd->add_option("--seed", flags.seed, "RNG seed")
            ->each([&flags](const std::string&) { flags.seed_given = true; });
        cmd->add_option("--threads", flags.threads,
                        "worker cap (0 = PMSDR_THREADS env or hardware)");
        cmd->add_flag("--verbose", flags.verbose, "progress logging on stderr");
        if (with_dump)
            cmd->add_flag("--dump-intermediates", flags.dump_intermediates,
                          "also write selfrep/transition/scores CSVs");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset bundle");
    synth->add_option("out_dir", out_dir, "output directory")->required();
    add_common(synth);

    CLI::App* run = app.add_subcommand("run", "run the recovery pipeline on a dataset");
    run->add_option("dataset_dir", dataset_dir, "dataset directory")->required();
    run->add_option("out_dir", out_dir, "output directory")->required();
    add_common(run, /*with_dump=*/true);

    CLI::App* eval = app.add_subcommand("eval", "re-evaluate a finished run");
    eval->add_option("run_dir", run_dir, "directory written by `run`")->required();
    eval->add_option("dataset_dir", dataset_dir, "dataset directory")->required();
    eval->add_option("--out", out_dir, "output directory (default: run_dir/eval)");
    add_common(eval);

    CLI::App* sweep = app.add_subcommand("sweep", "grid sweep to a CSV");
    sweep->add_option("grid", grid_path, "grid JSON file")->required();
    sweep->add_option("out_csv", out_csv, "output CSV path")->required();
    add_common(sweep);

    CLI::App* theory = app.add_subcommand("theory", "closed forms vs Monte Carlo CSV");
    theory->add_option("grid", grid_path, "grid JSON file")->required();
    theory->add_option("out_csv", out_csv, "output CSV path")->required();
    add_common(theory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors are exit 1, --help is success
    }

    try {
        if (app.got_subcommand(synth)) return cmd_synth(flags, out_dir);
        if (app.got_subcommand(run)) return cmd_run(flags, dataset_dir, out_dir);
        if (app.got_subcommand(eval)) return cmd_eval(flags, run_dir, dataset_dir, out_dir);
        if (app.got_subcommand(sweep)) return cmd_sweep(flags, grid_path, out_csv);
        if (app.got_subcommand(theory)) return cmd_theory(flags, grid_path, out_csv);
    } catch (const pmsdr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const pmsdr::ConstraintError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const pmsdr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
