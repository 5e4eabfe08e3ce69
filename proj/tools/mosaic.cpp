#include "mosaic/analysis.hpp"
#include "mosaic/config.hpp"
#include "mosaic/error.hpp"
#include "mosaic/manifest.hpp"
#include "mosaic/random.hpp"
#include "mosaic/sweep.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace mosaic;
using nlohmann::json;

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<std::size_t> workers;
};

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Writes an artifact atomically and registers it with the manifest.
class Outputs {
public:
    Outputs(std::string command, const fs::path& dir) : dir_(dir), manifest_(std::move(command), dir) {
        fs::create_directories(dir);
    }
    RunManifest& manifest() { return manifest_; }
    const fs::path& dir() const { return dir_; }

    fs::path text(const std::string& name, const std::string& content) {
        write_atomic(dir_ / name, content);
        manifest_.add_artifact(dir_ / name);
        return dir_ / name;
    }
    template <typename Fn>
    fs::path stream(const std::string& name, Fn&& fn) {
        std::ostringstream o;
        fn(o);
        return text(name, o.str());
    }
    fs::path bytes(const std::string& name, const std::vector<std::uint8_t>& data) {
        write_atomic(dir_ / name, data);
        manifest_.add_artifact(dir_ / name);
        return dir_ / name;
    }
    void finish(const AppConfig& cfg) {
        manifest_.set_config(format_config(cfg));
        const fs::path path = manifest_.save();
        std::cout << path.string() << "\n";
    }

private:
    fs::path dir_;
    RunManifest manifest_;
};

AppConfig effective_config(const Common& common) {
    AppConfig cfg = common.config_path.empty() ? AppConfig{} : load_config(common.config_path);
    if (common.seed) {
        cfg.train.seed = *common.seed;
        cfg.synth.seed = *common.seed;
    }
    if (common.workers) cfg.sweep.workers = *common.workers;
    return cfg;
}

HyperCube open_cube(const std::string& path, RunManifest& manifest) {
    if (!fs::exists(path)) fail("cube file not found: " + path);
    const CubeFormat format = fs::path(path).extension() == ".csv" ? CubeFormat::csv_spectra : CubeFormat::flat_binary;
    HyperCube cube = load_cube(path, format);
    manifest.add_input(path);
    return cube;
}

std::string metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows) {
    std::string out = "split,mse,psnr,samples\n";
    for (const auto& [name, m] : rows) out += name + "," + fmt9(m.mse) + "," + fmt9(m.psnr) + "," + std::to_string(m.samples) + "\n";
    return out;
}

std::uint64_t data_seed(const AppConfig& cfg) { return derive_seed(cfg.train.seed, {0x64617461ULL}); }
std::uint64_t test_noise_seed(const AppConfig& cfg) { return derive_seed(cfg.train.seed, {0x74657374ULL}); }

// ---------------------------------------------------------------------------

void cmd_synth(const Common& common, const std::optional<std::size_t>& rows, const std::optional<std::size_t>& cols,
               const std::optional<std::size_t>& bands, const std::optional<std::size_t>& rank,
               const std::optional<double>& length, const std::optional<double>& noise) {
    AppConfig cfg = effective_config(common);
    if (rows) cfg.synth.rows = *rows;
    if (cols) cfg.synth.cols = *cols;
    if (bands) cfg.synth.bands = *bands;
    if (rank) cfg.synth.spectral_rank = *rank;
    if (length) cfg.synth.correlation_length = *length;
    if (noise) cfg.synth.noise_floor = *noise;
    const HyperCube cube = synth_cube(cfg.synth);
    Outputs out("synth", common.out_dir);
    out.bytes("cube.hcub", encode_hcub(cube));
    out.manifest().add_seed("synth", cfg.synth.seed);
    out.finish(cfg);
}

void cmd_analyze(const Common& common, const std::string& cube_path, const std::optional<std::size_t>& band,
                 const std::optional<std::size_t>& max_pairs) {
    AppConfig cfg = effective_config(common);
    if (band) cfg.analysis.band_index = *band;
    if (max_pairs) cfg.analysis.max_pairs = *max_pairs;
    Outputs out("analyze", common.out_dir);
    const HyperCube cube = open_cube(cube_path, out.manifest());
    require(cfg.analysis.band_index < cube.bands(), "band index " + std::to_string(cfg.analysis.band_index) +
                                                        " out of range for " + std::to_string(cube.bands()) +
                                                        " bands");
    const std::size_t b = cfg.analysis.band_index;

    const Eigen::MatrixXd power = power_spectrum(cube.band_image(b));
    out.stream("power_spectrum.csv", [&](std::ostream& o) {
        o << "freq_row,freq_col,power_unnormalized_dft\n";
        const auto rows = power.rows(), cols = power.cols();
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) {
                const auto fr = r <= rows / 2 ? r : r - rows;
                const auto fc = c <= cols / 2 ? c : c - cols;
                o << fr << "," << fc << "," << fmt9(power(r, c)) << "\n";
            }
    });
    const RadialProfile profile = azimuthal_average(power);
    out.stream("radial_profile.csv", [&](std::ostream& o) {
        o << "radius,power_unnormalized_dft,count\n";
        for (std::size_t i = 0; i < profile.radii.size(); ++i)
            o << fmt9(profile.radii[i]) << "," << fmt9(profile.power[i]) << "," << profile.counts[i] << "\n";
    });
    // Log-log slope over the nonzero radii with positive power.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < profile.radii.size(); ++i)
        if (profile.radii[i] > 0 && profile.power[i] > 0) {
            const double x = std::log(profile.radii[i]), y = std::log(profile.power[i]);
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
        }
    const double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;

    const std::uint64_t pair_seed = derive_seed(cfg.train.seed, {0x70616972ULL});
    const DistanceCurve curve = psnr_vs_distance(cube, cfg.analysis.max_pairs, pair_seed);
    out.stream("psnr_vs_distance.csv", [&](std::ostream& o) {
        o << "distance,mean_psnr,pairs\n";
        for (std::size_t i = 0; i < curve.distance.size(); ++i)
            o << fmt9(curve.distance[i]) << "," << fmt9(curve.mean_psnr[i]) << "," << curve.counts[i] << "\n";
    });

    const Eigen::MatrixXd spectra = cube.spectra_matrix();
    const PcaResult p = pca(spectra);
    out.stream("pca_variance.csv", [&](std::ostream& o) {
        o << "component,variance_ratio,cumulative\n";
        double cum = 0;
        for (Eigen::Index k = 0; k < p.variance_ratios.size(); ++k) {
            cum += p.variance_ratios[k];
            o << k + 1 << "," << fmt9(p.variance_ratios[k]) << "," << fmt9(cum) << "\n";
        }
    });
    out.stream("pca_components.csv", [&](std::ostream& o) {
        o << "wavelength_nm,mean";
        for (Eigen::Index k = 0; k < p.components.cols(); ++k) o << ",pc" << k + 1;
        o << "\n";
        for (std::size_t b2 = 0; b2 < cube.bands(); ++b2) {
            o << fmt9(cube.grid()[b2]) << "," << fmt9(p.mean_spectrum[static_cast<Eigen::Index>(b2)]);
            for (Eigen::Index k = 0; k < p.components.cols(); ++k)
                o << "," << fmt9(p.components(static_cast<Eigen::Index>(b2), k));
            o << "\n";
        }
    });
    const std::vector<double> by_k = psnr_vs_components(spectra, p, cube.max_value());
    out.stream("psnr_vs_components.csv", [&](std::ostream& o) {
        o << "components,mean_psnr\n";
        for (std::size_t k = 0; k < by_k.size(); ++k) o << k << "," << fmt9(by_k[k]) << "\n";
    });

    json summary;
    summary["band_index"] = b;
    summary["wavelength_nm"] = cube.grid()[b];
    summary["fourier_normalization"] = "unnormalized forward DFT of the mean-removed, Bartlett-Hann tapered band";
    summary["radial_loglog_slope"] = slope;
    summary["baseline_psnr"] = curve.baseline;
    summary["crossover_distance"] = curve.crossover ? json(*curve.crossover) : json(nullptr);
    summary["infinite_pairs"] = curve.infinite_pairs;
    std::vector<double> ratios(p.variance_ratios.data(), p.variance_ratios.data() + p.variance_ratios.size());
    summary["variance_ratios"] = ratios;
    out.text("summary.json", summary.dump(2) + "\n");
    out.manifest().add_seed("pairs", pair_seed);
    out.finish(cfg);
}

void cmd_optimize_filters(const Common& common, const std::string& cube_path, std::size_t n_filters, bool fix_filters,
                          const std::optional<double>& snr) {
    AppConfig cfg = effective_config(common);
    if (snr) cfg.data.snr = *snr;
    require(n_filters >= 1, "--n-filters must be at least 1");
    Outputs out("optimize-filters", common.out_dir);
    const HyperCube cube = open_cube(cube_path, out.manifest());
    DataConfig dc = cfg.data;
    dc.train_patches = 0;
    const SweepData data = prepare_data(cube, dc, cfg.train.val_fraction, data_seed(cfg));
    TrainConfig tc = cfg.train;
    tc.trainable = {!fix_filters, false, true};
    tc.lorentzian.enabled = false;
    const FilterEstimate est = estimate_filters(data.train_spectra, data.val_spectra, n_filters, tc, cfg.data.snr);
    out.stream("filters.csv", [&](std::ostream& o) { write_filter_set(o, est.filters); });
    out.stream("history.csv", [&](std::ostream& o) { write_history_csv(o, est.training.history); });
    out.text("metrics.csv", metrics_csv({{"train", evaluate_filters(est, data.train_spectra, test_noise_seed(cfg))},
                                         {"test", evaluate_filters(est, data.test_spectra, test_noise_seed(cfg))}}));
    out.text("split.json", split_manifest_json(data));
    out.manifest().add_seed("train", cfg.train.seed);
    out.manifest().add_seed("data", data_seed(cfg));
    out.finish(cfg);
}

void cmd_optimize_layout(const Common& common, const std::string& cube_path, const std::string& configuration,
                         std::size_t n_filters, std::size_t steps, const std::string& filters_path,
                         const std::optional<double>& snr) {
    AppConfig cfg = effective_config(common);
    if (snr) cfg.data.snr = *snr;
    const auto conf = parse_configuration(configuration);
    if (!conf) {
        std::string names;
        for (auto c : all_configurations()) names += (names.empty() ? "" : ", ") + std::string(configuration_name(c));
        fail("unknown configuration '" + configuration + "'; valid names: " + names);
    }
    require(n_filters >= 1, "--n-filters must be at least 1");
    require(steps >= 1, "--steps must be at least 1");
    Outputs out("optimize-layout", common.out_dir);
    const HyperCube cube = open_cube(cube_path, out.manifest());
    const SweepData data = prepare_data(cube, cfg.data, cfg.train.val_fraction, data_seed(cfg));

    std::optional<FilterSet> best;
    if (uses_best_filters(*conf)) {
        if (!filters_path.empty()) {
            best = load_filter_set(filters_path);
            out.manifest().add_input(filters_path);
            require(best->size() == n_filters, "filter file holds " + std::to_string(best->size()) +
                                                   " filters, --n-filters is " + std::to_string(n_filters));
        } else {
            TrainConfig tc = cfg.train;
            tc.trainable = {true, false, true};
            tc.lorentzian.enabled = false;
            best = estimate_filters(data.train_spectra, data.val_spectra, n_filters, tc, cfg.data.snr).filters;
            out.stream("filters.csv", [&](std::ostream& o) { write_filter_set(o, *best); });
        }
    }
    DesignSpec spec;
    spec.configuration = *conf;
    spec.n_filters = n_filters;
    spec.steps = steps;
    spec.patch_size = cfg.data.patch_size;
    spec.snr = cfg.data.snr;
    spec.init_seed = derive_seed(cfg.train.seed, {0x696e6974ULL});
    const DesignResult res =
        optimize_design(spec, data.train_patches, data.val_patches, cfg.train, best ? &*best : nullptr);
    out.stream("layout.txt", [&](std::ostream& o) { write_layout(o, res.model.layout); });
    out.bytes("reconstructor.rcon", encode_rcon(res.model.reconstructor));
    out.stream("history.csv", [&](std::ostream& o) {
        write_history_csv(o, res.refit ? res.refit->history : res.training.history);
    });
    if (res.refit)
        out.stream("history_free.csv", [&](std::ostream& o) { write_history_csv(o, res.training.history); });
    const Metrics test = evaluate_design(res.model, data.test_patches, test_noise_seed(cfg));
    out.text("metrics.csv", metrics_csv({{"val", {res.val_loss, psnr_from_mse(res.val_loss, cube.max_value()),
                                                  data.val_patches.count()}},
                                         {"test", test}}));
    out.text("split.json", split_manifest_json(data));
    out.manifest().add_seed("train", cfg.train.seed);
    out.manifest().add_seed("data", data_seed(cfg));
    out.manifest().add_seed("init", spec.init_seed);
    out.manifest().add_note("configuration", configuration);
    out.manifest().add_note("compression_ratio", fmt9(compression_ratio(steps)));
    out.finish(cfg);
}

void cmd_evaluate(const Common& common, const std::string& cube_path, const std::string& layout_path,
                  const std::string& recon_path, std::size_t steps, const std::optional<double>& snr) {
    AppConfig cfg = effective_config(common);
    if (snr) cfg.data.snr = *snr;
    Outputs out("evaluate", common.out_dir);
    const HyperCube cube = open_cube(cube_path, out.manifest());
    if (!fs::exists(layout_path)) fail("layout file not found: " + layout_path);
    if (!fs::exists(recon_path)) fail("reconstructor file not found: " + recon_path);
    LayoutPattern layout = load_layout(layout_path);
    LinearReconstructor recon = load_reconstructor(recon_path);
    out.manifest().add_input(layout_path);
    out.manifest().add_input(recon_path);
    require(recon.dims.steps == steps, "steps mismatch: reconstructor was built for " +
                                           std::to_string(recon.dims.steps) + " steps, --steps is " +
                                           std::to_string(steps));
    require(recon.dims.rows == layout.rows() && recon.dims.cols == layout.cols(),
            "reconstructor and layout dimensions differ");
    require(recon.dims.bands == cube.bands(), "reconstructor band count differs from the cube");
    DataConfig dc = cfg.data;
    dc.patch_size = layout.rows();
    require(layout.rows() == layout.cols(), "evaluate: square layouts only");
    const SweepData data = prepare_data(cube, dc, cfg.train.val_fraction, data_seed(cfg));
    Model model = Model::make(std::move(layout), cube.grid(), MeasurementSpec{steps, cfg.data.snr, 0});
    model.reconstructor = std::move(recon);
    model.validate();
    out.text("metrics.csv", metrics_csv({{"train", evaluate_design(model, data.train_patches, test_noise_seed(cfg))},
                                         {"test", evaluate_design(model, data.test_patches, test_noise_seed(cfg))}}));
    out.text("split.json", split_manifest_json(data));
    out.manifest().add_seed("data", data_seed(cfg));
    out.finish(cfg);
}

void cmd_sweep(const Common& common, const std::string& cube_path) {
    AppConfig cfg = effective_config(common);
    Outputs out("sweep", common.out_dir);
    const HyperCube cube = open_cube(cube_path, out.manifest());
    const SweepData data = prepare_data(cube, cfg.data, cfg.train.val_fraction, data_seed(cfg));
    out.text("split.json", split_manifest_json(data));
    SweepOptions opts;
    opts.out_dir = out.dir();
    opts.workers = cfg.sweep.workers;
    opts.seed = cfg.train.seed;
    const SweepResult res = run_sweep(data, cfg, opts);
    out.stream("sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, res.cells); });
    out.stream("sweep_runs.csv", [&](std::ostream& o) { write_sweep_csv(o, res.runs); });
    // Best configuration per (n_filters, n_steps), chosen by validation loss.
    out.stream("configuration_map.csv", [&](std::ostream& o) {
        o << "n_filters,n_steps,configuration,val_loss,test_psnr\n";
        for (std::size_t n : cfg.sweep.n_filters)
            for (std::size_t s : cfg.sweep.n_steps) {
                const SweepRow* best = nullptr;
                for (const auto& r : res.cells)
                    if (r.n_filters == n && r.n_steps == s && (!best || r.val_loss < best->val_loss)) best = &r;
                if (best)
                    o << n << "," << s << "," << best->configuration << "," << fmt9(best->val_loss) << ","
                      << fmt9(*best->test_psnr) << "\n";
            }
    });
    for (const auto& entry : fs::recursive_directory_iterator(out.dir())) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), out.dir());
        if (*rel.begin() == "cells" || *rel.begin() == "filters") out.manifest().add_artifact(entry.path());
    }
    out.manifest().add_seed("train", cfg.train.seed);
    out.manifest().add_seed("data", data_seed(cfg));
    out.manifest().add_note("resumed_cells", std::to_string(res.resumed_cells));
    out.finish(cfg);
}

void report(const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filter-mosaic design for compressed-sensing hyperspectral imaging"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config_path, "Configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", common.seed, "Master seed");
    app.add_option("--out", common.out_dir, "Output directory");
    app.add_option("--workers", common.workers, "Parallel sweep workers");

    std::string cube_path, layout_path, recon_path, configuration, filters_path;
    std::optional<std::size_t> rows, cols, bands, rank, band_index, max_pairs;
    std::optional<double> length, noise, snr;
    std::size_t n_filters = 6, steps = 1;
    bool fix_filters = false;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic cube");
    synth->add_option("--rows", rows);
    synth->add_option("--cols", cols);
    synth->add_option("--bands", bands);
    synth->add_option("--rank", rank);
    synth->add_option("--correlation-length", length);
    synth->add_option("--noise-floor", noise);

    auto* analyze = app.add_subcommand("analyze", "Power spectrum, PSNR vs distance and PCA of a cube");
    analyze->add_option("cube", cube_path)->required();
    analyze->add_option("--band-index", band_index);
    analyze->add_option("--max-pairs", max_pairs);

    auto* filters = app.add_subcommand("optimize-filters", "Estimate optimal filter passbands");
    filters->add_option("cube", cube_path)->required();
    filters->add_option("--n-filters", n_filters)->required();
    filters->add_flag("--fix-filters", fix_filters, "Keep the regular filters; train only the reconstructor");
    filters->add_option("--snr", snr);

    auto* layout = app.add_subcommand("optimize-layout", "Train a filter layout and reconstructor");
    layout->add_option("cube", cube_path)->required();
    layout->add_option("--configuration", configuration)->required();
    layout->add_option("--n-filters", n_filters);
    layout->add_option("--steps", steps);
    layout->add_option("--filters", filters_path, "Estimated filters for best-* configurations");
    layout->add_option("--snr", snr);

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained design");
    evaluate->add_option("cube", cube_path)->required();
    evaluate->add_option("--layout", layout_path)->required();
    evaluate->add_option("--reconstructor", recon_path)->required();
    evaluate->add_option("--steps", steps)->required();
    evaluate->add_option("--snr", snr);

    auto* sweep = app.add_subcommand("sweep", "Steps x filters x configuration sweep");
    sweep->add_option("cube", cube_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report("usage", e.what());
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*synth) cmd_synth(common, rows, cols, bands, rank, length, noise);
        else if (*analyze) cmd_analyze(common, cube_path, band_index, max_pairs);
        else if (*filters) cmd_optimize_filters(common, cube_path, n_filters, fix_filters, snr);
        else if (*layout) cmd_optimize_layout(common, cube_path, configuration, n_filters, steps, filters_path, snr);
        else if (*evaluate) cmd_evaluate(common, cube_path, layout_path, recon_path, steps, snr);
        else if (*sweep) cmd_sweep(common, cube_path);
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::numerical: report("numerical", e.what()); return kNumericalError;
            case ErrorKind::format: report("format", e.what()); return kUsageError;
            default: report("invalid_argument", e.what()); return kUsageError;
        }
    } catch (const std::exception& e) {
        report("io", e.what());
        return kUsageError;
    }
    return 0;
}
