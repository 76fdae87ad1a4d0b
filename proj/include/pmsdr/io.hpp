#pragma once

#include <string>

#include "pmsdr/synth.hpp"

namespace pmsdr {

// Matrix CSV convention used across the repo: no header, row i = ambient
// dimension i, one numeric cell per sample, full round-trip precision.
void write_matrix_csv(const std::string& path, const Matrix& A);
Matrix read_matrix_csv(const std::string& path);

// A DatasetBundle is stored as a directory:
//   corrupted.csv / clean.csv   matrices
//   bundle.json                 labels, masks, permutations, bases, config
void write_bundle(const std::string& dir, const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::string& dir);

// Minimal dataset view for evaluation when only the corrupted matrix is
// present (bundle.json missing): read_bundle throws, callers fall back to
// read_matrix_csv on corrupted.csv.
bool bundle_has_ground_truth(const std::string& dir);

// SynthConfig <-> JSON (the CLI's synth config file format). Missing keys
// keep their defaults, unknown keys are rejected, snr_db null means
// noiseless. Throws ConfigError on malformed input.
std::string synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const std::string& json_text);

} // namespace pmsdr
