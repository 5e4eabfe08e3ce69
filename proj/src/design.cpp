#include "mosaic/design.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"

#include <algorithm>
#include <array>

namespace mosaic {

namespace {

constexpr std::array<std::pair<Configuration, std::string_view>, 5> kNames{{
    {Configuration::regular_lvf, "regular-lvf"},
    {Configuration::best_lvf, "best-lvf"},
    {Configuration::best_random_optimized, "best-random-optimized"},
    {Configuration::regular_squarish, "regular-squarish"},
    {Configuration::optimized_squarish, "optimized-squarish"},
}};

}  // namespace

std::string_view configuration_name(Configuration c) {
    for (const auto& [cfg, name] : kNames)
        if (cfg == c) return name;
    return "unknown";
}

std::optional<Configuration> parse_configuration(std::string_view name) {
    for (const auto& [cfg, n] : kNames)
        if (n == name) return cfg;
    return std::nullopt;
}

const std::vector<Configuration>& all_configurations() {
    static const std::vector<Configuration> all = [] {
        std::vector<Configuration> v;
        for (const auto& entry : kNames) v.push_back(entry.first);
        return v;
    }();
    return all;
}

bool uses_best_filters(Configuration c) {
    return c == Configuration::best_lvf || c == Configuration::best_random_optimized;
}

bool has_random_init(Configuration c) { return c == Configuration::best_random_optimized; }

Metrics evaluate_design(const Model& model, const SampleSet& samples, std::uint64_t noise_seed) {
    Metrics m;
    m.mse = data_loss(model, samples, noise_seed);
    m.psnr = psnr_from_mse(m.mse, samples.max_value);
    m.samples = samples.count();
    return m;
}

// ---------------------------------------------------------------------------

Model filter_estimator_model(const FilterSet& initial, const WavelengthGrid& grid, double snr) {
    std::vector<std::size_t> idx(initial.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    return Model::make(LayoutPattern::indexed(1, initial.size(), std::move(idx), initial), grid,
                       MeasurementSpec{1, snr, 0});
}

FilterEstimate estimate_filters(const SampleSet& train_spectra, const SampleSet& val_spectra, std::size_t n_filters,
                                const TrainConfig& config, double snr) {
    require(n_filters >= 1, "estimate_filters: need at least one filter");
    require(train_spectra.rows == 1 && train_spectra.cols == 1, "estimate_filters: expects 1 x 1 spectra");
    const WavelengthGrid& grid = train_spectra.grid;
    Model model = filter_estimator_model(regular_filters(n_filters, grid.front(), grid.back()), grid, snr);
    TrainConfig cfg = config;
    cfg.trainable.layout = false;
    FilterEstimate out;
    out.training = train(std::move(model), replicate_spectra(train_spectra, n_filters),
                         replicate_spectra(val_spectra, n_filters), cfg);
    out.filters = out.training.model.layout.filters();
    if (cfg.trainable.filters)
        std::stable_sort(out.filters.filters.begin(), out.filters.filters.end(),
                         [](const FilterParams& a, const FilterParams& b) { return a.center < b.center; });
    return out;
}

Metrics evaluate_filters(const FilterEstimate& estimate, const SampleSet& spectra, std::uint64_t noise_seed) {
    const Model& model = estimate.training.model;
    return evaluate_design(model, replicate_spectra(spectra, model.layout.cols()), noise_seed);
}

// ---------------------------------------------------------------------------

Model initial_model(const DesignSpec& spec, const WavelengthGrid& grid, const FilterSet* best) {
    require(spec.n_filters >= 1, "design: need at least one filter");
    require(spec.patch_size >= 1, "design: patch size must be positive");
    if (uses_best_filters(spec.configuration)) {
        require(best != nullptr, "design: configuration " + std::string(configuration_name(spec.configuration)) +
                                     " needs estimated filters");
        require(best->size() == spec.n_filters, "design: estimated filter count does not match n_filters");
    }
    const FilterSet regular = regular_filters(spec.n_filters, grid.front(), grid.back());
    const std::size_t p = spec.patch_size;
    LayoutPattern layout;
    switch (spec.configuration) {
        case Configuration::regular_lvf: layout = lvf_layout(regular, p, p); break;
        case Configuration::best_lvf: layout = lvf_layout(*best, p, p); break;
        case Configuration::best_random_optimized:
            layout = random_layout(p, p, ParamDomain::for_grid(grid), spec.init_seed);
            break;
        case Configuration::regular_squarish:
        case Configuration::optimized_squarish: layout = squarish_layout(regular, p, p); break;
    }
    return Model::make(std::move(layout), grid, MeasurementSpec{spec.steps, spec.snr, 0});
}

TrainConfig configure(Configuration c, TrainConfig base, const FilterSet* best) {
    base.trainable.reconstructor = true;
    base.trainable.filters = c == Configuration::optimized_squarish;
    base.trainable.layout = c == Configuration::best_random_optimized;
    if (c == Configuration::best_random_optimized) {
        require(best != nullptr, "design: best-random-optimized needs estimated filters");
        base.lorentzian.enabled = true;
        base.lorentzian.targets = *best;
    } else {
        base.lorentzian.enabled = false;
    }
    return base;
}

DesignResult optimize_design(const DesignSpec& spec, const SampleSet& train_set, const SampleSet& val_set,
                             const TrainConfig& base, const FilterSet* best) {
    const Model model = initial_model(spec, train_set.grid, best);
    const TrainConfig cfg = configure(spec.configuration, base, best);
    DesignResult out;
    out.training = train(model, train_set, val_set, cfg);
    out.model = out.training.model;
    out.val_loss = out.training.best_val_loss;
    if (!out.model.layout.is_indexed()) {
        Model snapped = out.model;
        snapped.layout = snap_layout(out.model.layout, *best, out.model.domain);
        TrainConfig refit_cfg = cfg;
        refit_cfg.trainable = {false, false, true};
        refit_cfg.lorentzian.enabled = false;
        refit_cfg.seed = derive_seed(cfg.seed, {0x72656669ULL});
        out.refit = train(std::move(snapped), train_set, val_set, refit_cfg);
        out.model = out.refit->model;
        out.val_loss = out.refit->best_val_loss;
    }
    return out;
}

}  // namespace mosaic
