#pragma once

// Experiment configuration: a flat text file of `key = value` lines.
// `#` starts a comment. Unknown or repeated keys are errors. Lists are
// comma-separated; numeric lists also accept `start:stop:step` ranges, and
// sigma values accept a `pi` suffix (`10pi`).

#include "sfi_lee/dataset.hpp"
#include "sfi_lee/lie.hpp"
#include "sfi_lee/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sfi {

struct ExperimentConfig {
    std::string experiment_id = "sweep";
    ModelSpec model;
    std::vector<double> test_rates{8000.0, 16000.0};
    std::vector<double> sigma_grid;  ///< default 10pi..100pi step 10pi
    std::size_t seeds = 4;
    double segment_seconds = 5.0;
    WindowSpec window;
    LieOptions lie;

    std::string dataset_dir;  ///< empty: synthetic
    SyntheticSceneSpec synthetic = SyntheticSceneSpec::two_band();
    std::size_t scenes = 8;

    std::vector<double> lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    double period_frames = 64.0;
    std::uint64_t knob_seed = 0;

    bool metrics_at_test_rates = false;
    std::string output_dir = "out";

    ExperimentConfig();
    void validate() const;
};

/// Documented key set with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& config_keys();

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Parses "1, 2.5, 10pi, 0:1:0.25".
std::vector<double> parse_number_list(const std::string& text);
double parse_number(const std::string& text);

}  // namespace sfi
