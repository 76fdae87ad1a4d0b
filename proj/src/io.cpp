#include "pmsdr/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace pmsdr {

using nlohmann::json;

void write_matrix_csv(const std::string& path, const Matrix& A) {
    std::ofstream out(path);
    if (!out) throw Error("write_matrix_csv: cannot open " + path);
    char buf[40];
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", A(i, j));
            out << buf;
            if (j + 1 < A.cols()) out << ',';
        }
        out << '\n';
    }
    if (!out) throw Error("write_matrix_csv: write failed for " + path);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error("read_matrix_csv: bad cell '" + cell + "' in " + path);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("read_matrix_csv: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("read_matrix_csv: empty file " + path);
    Matrix A(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            A(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return A;
}

namespace {

json matrix_to_json(const Matrix& A) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    const auto m = rows.size();
    if (m == 0) throw Error("bundle.json: empty matrix");
    const auto n = rows.at(0).size();
    Matrix A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows.at(i).at(j).get<double>();
    return A;
}

json config_to_json(const SynthConfig& cfg) {
    json j;
    j["M"] = cfg.M;
    j["L"] = cfg.L;
    j["r"] = cfg.r;
    j["n_per_group"] = cfg.n_per_group;
    j["outlier_ratio"] = cfg.outlier_ratio;
    j["shuffle_ratio"] = cfg.shuffle_ratio;
    j["strict"] = cfg.strict;
    if (std::isinf(cfg.snr_db))
        j["snr_db"] = nullptr; // JSON has no infinity; null = noiseless
    else
        j["snr_db"] = cfg.snr_db;
    return j;
}

SynthConfig config_from_json(const json& j) {
    SynthConfig cfg;
    cfg.M = j.at("M").get<int>();
    cfg.L = j.at("L").get<int>();
    cfg.r = j.at("r").get<int>();
    cfg.n_per_group = j.at("n_per_group").get<int>();
    cfg.outlier_ratio = j.at("outlier_ratio").get<double>();
    cfg.shuffle_ratio = j.at("shuffle_ratio").get<double>();
    cfg.strict = j.at("strict").get<bool>();
    cfg.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                          : j.at("snr_db").get<double>();
    return cfg;
}

} // namespace

void write_bundle(const std::string& dir, const DatasetBundle& bundle) {
    std::filesystem::create_directories(dir);
    write_matrix_csv(dir + "/corrupted.csv", bundle.corrupted);
    write_matrix_csv(dir + "/clean.csv", bundle.clean);

    json j;
    j["config"] = config_to_json(bundle.config);
    j["seed"] = bundle.seed;
    j["labels"] = bundle.labels;
    json mask = json::array();
    for (char m : bundle.outlier_mask) mask.push_back(m != 0);
    j["outlier_mask"] = std::move(mask);
    json perms = json::object();
    for (const auto& [col, perm] : bundle.permutations) {
        json p;
        p["map"] = perm.map;
        p["shuffled"] = perm.shuffled;
        perms[std::to_string(col)] = std::move(p);
    }
    j["permutations"] = std::move(perms);
    json bases = json::array();
    for (const auto& b : bundle.bases) bases.push_back(matrix_to_json(b.columns));
    j["bases"] = std::move(bases);

    std::ofstream out(dir + "/bundle.json");
    if (!out) throw Error("write_bundle: cannot open " + dir + "/bundle.json");
    out << j.dump(2) << '\n';
}

DatasetBundle read_bundle(const std::string& dir) {
    std::ifstream in(dir + "/bundle.json");
    if (!in) throw Error("read_bundle: cannot open " + dir + "/bundle.json");
    json j;
    in >> j;

    DatasetBundle bundle;
    bundle.config = config_from_json(j.at("config"));
    bundle.seed = j.at("seed").get<std::uint64_t>();
    bundle.labels = j.at("labels").get<std::vector<int>>();
    for (bool m : j.at("outlier_mask").get<std::vector<bool>>())
        bundle.outlier_mask.push_back(m ? 1 : 0);
    for (const auto& [key, val] : j.at("permutations").items()) {
        PartialPermutation perm;
        perm.map = val.at("map").get<std::vector<int>>();
        perm.shuffled = val.at("shuffled").get<std::vector<int>>();
        perm.length = static_cast<int>(perm.map.size());
        bundle.permutations.emplace(std::stoi(key), std::move(perm));
    }
    for (const auto& b : j.at("bases")) {
        Matrix cols = matrix_from_json(b);
        bundle.bases.push_back(SubspaceBasis::from_matrix(cols));
    }
    bundle.corrupted = read_matrix_csv(dir + "/corrupted.csv");
    bundle.clean = read_matrix_csv(dir + "/clean.csv");
    return bundle;
}

bool bundle_has_ground_truth(const std::string& dir) {
    return std::filesystem::exists(dir + "/bundle.json") &&
           std::filesystem::exists(dir + "/clean.csv");
}

std::string synth_config_to_json(const SynthConfig& cfg) {
    return config_to_json(cfg).dump(2);
}

SynthConfig synth_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("synth config: expected a JSON object");

    SynthConfig cfg;
    try {
        for (const auto& item : j.items()) {
            const std::string& key = item.key();
            const json& v = item.value();
            if (key == "M") cfg.M = v.get<int>();
            else if (key == "L") cfg.L = v.get<int>();
            else if (key == "r") cfg.r = v.get<int>();
            else if (key == "n_per_group") cfg.n_per_group = v.get<int>();
            else if (key == "outlier_ratio") cfg.outlier_ratio = v.get<double>();
            else if (key == "shuffle_ratio") cfg.shuffle_ratio = v.get<double>();
            else if (key == "strict") cfg.strict = v.get<bool>();
            else if (key == "snr_db")
                cfg.snr_db = v.is_null() ? std::numeric_limits<double>::infinity()
                                         : v.get<double>();
            else
                throw ConfigError("synth config: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    return cfg;
}

} // namespace pmsdr
