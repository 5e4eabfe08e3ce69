#pragma once

#include "mosaic/config.hpp"
#include "mosaic/design.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mosaic {

/// Training, validation and test sets of both estimators, drawn from
/// disjoint regions of one cube.
struct SweepData {
    SampleSet train_patches, val_patches, test_patches;
    SampleSet train_spectra, val_spectra, test_spectra;
    std::size_t train_extent = 0;  // leading columns (or rows) of the training region
    SplitAxis axis = SplitAxis::columns;
    std::size_t cube_rows = 0, cube_cols = 0;
};

/// Default training extent: 350/440 of the split axis, as in a 440 pixel
/// scene with 350 training columns.
std::size_t default_train_extent(std::size_t axis_length);

/// Patch requests larger than the number of distinct patches are capped at
/// that number. A zero train_patches count skips patch sampling.
SweepData prepare_data(const HyperCube& cube, const DataConfig& data, double val_fraction, std::uint64_t seed);

/// SHA-256 of the raw sample matrix of each set, plus region bounds.
std::string split_manifest_json(const SweepData& data);
std::string sample_checksum(const SampleSet& s);

struct SweepRow {
    std::string configuration;
    std::size_t n_filters = 0;
    std::size_t n_steps = 0;
    double learning_rate = 0.0;
    double l2_weight = 0.0;
    std::uint64_t seed = 0;
    std::size_t init = 0;  // random-initialization index
    double val_loss = 0.0;
    std::optional<double> test_mse;  // only the selected run of a cell touches the test set
    std::optional<double> test_psnr;
    double compression_ratio = 0.0;
    double wall_time_s = 0.0;
    bool selected = false;
};

struct FilterStageResult {
    std::size_t n_filters = 0;
    FilterSet filters;
    std::vector<SweepRow> runs;
};

struct SweepResult {
    std::vector<SweepRow> cells;  // selected run per (configuration, n_filters, n_steps)
    std::vector<SweepRow> runs;   // every hyperparameter / initialization run
    std::map<std::size_t, FilterStageResult> filter_stage;
    std::size_t resumed_cells = 0;
};

struct SweepOptions {
    std::filesystem::path out_dir;  // empty: no artifacts, no resume
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

/// Runs every (configuration, n_filters, n_steps) cell over the learning-rate
/// and L2 grids, selecting by validation loss. Cells with a complete
/// result.json under out_dir are loaded instead of retrained.
SweepResult run_sweep(const SweepData& data, const AppConfig& config, const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Seed of one training run inside a sweep.
std::uint64_t sweep_run_seed(std::uint64_t seed, Configuration c, std::size_t n_filters, std::size_t n_steps,
                             std::size_t lr_index, std::size_t l2_index, std::size_t init);

}  // namespace mosaic
