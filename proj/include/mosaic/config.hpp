#pragma once

#include "mosaic/cube.hpp"
#include "mosaic/design.hpp"
#include "mosaic/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mosaic {

struct DataConfig {
    std::size_t patch_size = 10;
    std::size_t train_patches = 10000;
    std::size_t test_patches = 1000;
    std::size_t train_spectra = 100000;
    std::size_t test_spectra = 10000;
    std::size_t train_cols = 0;  // 0: 350/440 of the split axis
    SplitAxis split_axis = SplitAxis::columns;
    double snr = 100.0;
    std::size_t steps = 1;
};

struct SweepConfig {
    std::vector<double> learning_rates{1e-4, 3e-4, 1e-3};
    std::vector<double> l2_weights{0.0, 1e-4, 1e-3};
    std::vector<std::size_t> n_filters{2, 3, 4, 5, 6, 7};
    std::vector<std::size_t> n_steps{1, 2, 3, 4};
    std::vector<Configuration> configurations = all_configurations();
    std::size_t random_inits = 5;
    std::size_t workers = 1;
};

struct AnalysisConfig {
    std::size_t band_index = 20;
    std::size_t max_pairs = 1000000;
};

/// Every tunable of the tool. Each field has a default; config files
/// override them section by section.
struct AppConfig {
    TrainConfig train;
    DataConfig data;
    SynthSpec synth;
    SweepConfig sweep;
    AnalysisConfig analysis;
};

/// Nested-section key=value text:
///   [train]
///   learning_rate = 1e-3
/// Unknown sections or keys are errors.
AppConfig parse_config(std::istream& in);
AppConfig load_config(const std::filesystem::path& path);

/// Canonical text form of the effective configuration (round-trips through
/// parse_config).
std::string format_config(const AppConfig& config);

}  // namespace mosaic
