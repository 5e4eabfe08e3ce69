#pragma once

#include "mosaic/train.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace mosaic {

/// The five layout-estimator configurations.
enum class Configuration {
    regular_lvf,            // regular filters, fixed LVF-like layout
    best_lvf,               // estimated filters, fixed LVF-like layout
    best_random_optimized,  // estimated filters as snapping targets, free layout
    regular_squarish,       // regular filters, fixed squarish layout
    optimized_squarish,     // filters trained jointly, fixed squarish layout
};

std::string_view configuration_name(Configuration c);
std::optional<Configuration> parse_configuration(std::string_view name);
const std::vector<Configuration>& all_configurations();
bool uses_best_filters(Configuration c);
bool has_random_init(Configuration c);

struct Metrics {
    double mse = 0.0;
    double psnr = 0.0;
    std::size_t samples = 0;
};

/// Test-style evaluation: one noise draw, no regularizers.
Metrics evaluate_design(const Model& model, const SampleSet& samples, std::uint64_t noise_seed);

// ---------------------------------------------------------------------------
// Optimal-filters estimator: N virtual pixels view the same spectrum through
// N filters in a single snapshot, so it reuses the layout engine with a
// 1 x N layout and spectra replicated across the strip.

Model filter_estimator_model(const FilterSet& initial, const WavelengthGrid& grid, double snr);

struct FilterEstimate {
    FilterSet filters;
    TrainResult training;
};

/// Trains from regular filters; `config.trainable.filters` decides whether
/// the passbands move.
FilterEstimate estimate_filters(const SampleSet& train_spectra, const SampleSet& val_spectra, std::size_t n_filters,
                                const TrainConfig& config, double snr);

/// Metrics of a filter set on 1 x 1 spectra.
Metrics evaluate_filters(const FilterEstimate& estimate, const SampleSet& spectra, std::uint64_t noise_seed);

// ---------------------------------------------------------------------------
// Layout estimator

struct DesignSpec {
    Configuration configuration = Configuration::regular_lvf;
    std::size_t n_filters = 6;
    std::size_t steps = 1;
    std::size_t patch_size = 10;
    double snr = 100.0;
    std::uint64_t init_seed = 0;  // random layout initialization
};

/// Untrained model for a configuration. `best` is required for the
/// configurations that use estimated filters.
Model initial_model(const DesignSpec& spec, const WavelengthGrid& grid, const FilterSet* best);

/// Trainability and regularizer settings implied by a configuration.
TrainConfig configure(Configuration c, TrainConfig base, const FilterSet* best);

struct DesignResult {
    Model model;
    TrainResult training;
    std::optional<TrainResult> refit;  // reconstructor refit after snapping a free layout
    double val_loss = 0.0;
};

/// Trains a design. Free layouts are snapped to the estimated filters and the
/// reconstructor is refit on the snapped layout.
DesignResult optimize_design(const DesignSpec& spec, const SampleSet& train_set, const SampleSet& val_set,
                             const TrainConfig& base, const FilterSet* best);

}  // namespace mosaic
