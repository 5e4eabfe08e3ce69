#include "mosaic/sweep.hpp"

#include "mosaic/error.hpp"
#include "mosaic/manifest.hpp"
#include "mosaic/random.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace mosaic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kFilterStage = 0x66696c74ULL;
constexpr std::uint64_t kLayoutStage = 0x6c61796fULL;
constexpr std::uint64_t kTestNoise = 0x74657374ULL;

std::size_t config_index(Configuration c) {
    const auto& all = all_configurations();
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == c) return i;
    return all.size();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json optional_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
}

std::optional<double> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) return j.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                            : -std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json row_json(const SweepRow& r) {
    return {{"configuration", r.configuration},
            {"n_filters", r.n_filters},
            {"n_steps", r.n_steps},
            {"lr", r.learning_rate},
            {"l2", r.l2_weight},
            {"seed", r.seed},
            {"init", r.init},
            {"val_loss", r.val_loss},
            {"test_mse", optional_json(r.test_mse)},
            {"test_psnr", optional_json(r.test_psnr)},
            {"compression_ratio", r.compression_ratio},
            {"wall_time_s", r.wall_time_s},
            {"selected", r.selected}};
}

SweepRow row_from(const json& j) {
    SweepRow r;
    r.configuration = j.at("configuration").get<std::string>();
    r.n_filters = j.at("n_filters").get<std::size_t>();
    r.n_steps = j.at("n_steps").get<std::size_t>();
    r.learning_rate = j.at("lr").get<double>();
    r.l2_weight = j.at("l2").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.init = j.at("init").get<std::size_t>();
    r.val_loss = j.at("val_loss").get<double>();
    r.test_mse = optional_from(j.at("test_mse"));
    r.test_psnr = optional_from(j.at("test_psnr"));
    r.compression_ratio = j.at("compression_ratio").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.selected = j.at("selected").get<bool>();
    return r;
}

// Everything a cell's result depends on apart from its own coordinates.
std::string resume_key(const SweepData& data, const AppConfig& config, std::uint64_t seed) {
    AppConfig c = config;
    c.sweep.n_filters = {0};
    c.sweep.n_steps = {0};
    c.sweep.configurations = {Configuration::regular_lvf};
    c.sweep.workers = 0;
    c.analysis = AnalysisConfig{};
    return sha256_hex(format_config(c) + "\nseed=" + std::to_string(seed) + "\n" + split_manifest_json(data));
}

std::optional<std::vector<SweepRow>> load_cell(const fs::path& dir, const std::string& key) {
    const fs::path path = dir / "result.json";
    if (!fs::exists(path)) return std::nullopt;
    try {
        std::ifstream in(path);
        const json j = json::parse(in);
        if (j.at("key").get<std::string>() != key) return std::nullopt;
        for (const auto& a : j.at("artifacts"))
            if (sha256_file(dir / a.at("path").get<std::string>()) != a.at("sha256").get<std::string>())
                return std::nullopt;
        std::vector<SweepRow> rows;
        for (const auto& r : j.at("runs")) rows.push_back(row_from(r));
        return rows;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void save_cell(const fs::path& dir, const std::string& key, const std::vector<SweepRow>& rows,
               const std::vector<std::string>& artifacts, const json& extra = json::object()) {
    json j;
    j["key"] = key;
    j["runs"] = json::array();
    for (const auto& r : rows) j["runs"].push_back(row_json(r));
    j["artifacts"] = json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a}, {"sha256", sha256_file(dir / a)}});
    for (const auto& [k, v] : extra.items()) j[k] = v;
    write_atomic(dir / "result.json", j.dump(2) + "\n");
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
    std::ostringstream out;
    fn(out);
    write_atomic(path, out.str());
}

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first failure
// in index order.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string cell_name(Configuration c, std::size_t n, std::size_t s) {
    return std::string(configuration_name(c)) + "_n" + std::to_string(n) + "_s" + std::to_string(s);
}

[[noreturn]] void rethrow_for(const std::string& cell, const Error& e) {
    const std::string msg = "sweep cell " + cell + ": " + e.what();
    if (e.kind() == ErrorKind::numerical) fail_numerical(msg);
    fail(msg);
}

}  // namespace

std::size_t default_train_extent(std::size_t axis_length) {
    const auto extent = static_cast<std::size_t>(std::llround(static_cast<double>(axis_length) * 350.0 / 440.0));
    return std::clamp<std::size_t>(extent, 1, axis_length > 1 ? axis_length - 1 : 1);
}

SweepData prepare_data(const HyperCube& cube, const DataConfig& cfg, double val_fraction, std::uint64_t seed) {
    const std::size_t axis_len = cfg.split_axis == SplitAxis::columns ? cube.cols() : cube.rows();
    const std::size_t extent = cfg.train_cols ? cfg.train_cols : default_train_extent(axis_len);
    auto [train_region, test_region] = split_columns(cube, extent, cfg.split_axis);

    SweepData d;
    d.train_extent = extent;
    d.axis = cfg.split_axis;
    d.cube_rows = cube.rows();
    d.cube_cols = cube.cols();

    if (cfg.train_patches > 0) {
        const std::size_t p = cfg.patch_size;
        require(p <= std::min(test_region.rows(), test_region.cols()),
                "data: patch size " + std::to_string(p) + " exceeds the test region");
        const std::size_t train_distinct = (train_region.rows() - p + 1) * (train_region.cols() - p + 1) * 8;
        const std::size_t test_distinct = (test_region.rows() - p + 1) * (test_region.cols() - p + 1);
        const PatchBatch patches = sample_patches(train_region, std::min(cfg.train_patches, train_distinct), p, true,
                                                  derive_seed(seed, {1}));
        auto [tp, vp] = train_val_split(patches, val_fraction, derive_seed(seed, {2}));
        d.train_patches = tp.to_samples();
        d.val_patches = vp.to_samples();
        d.test_patches = sample_patches(test_region, std::min(std::max<std::size_t>(cfg.test_patches, 1), test_distinct),
                                        p, false, derive_seed(seed, {3}))
                             .to_samples();
    }

    auto [ts, vs] = train_val_split(sample_spectra(train_region, cfg.train_spectra, derive_seed(seed, {4})),
                                    val_fraction, derive_seed(seed, {5}));
    d.train_spectra = std::move(ts);
    d.val_spectra = std::move(vs);
    d.test_spectra = sample_spectra(test_region, cfg.test_spectra, derive_seed(seed, {6}));
    return d;
}

std::string sample_checksum(const SampleSet& s) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.values.data());
    return sha256_hex(std::span(bytes, static_cast<std::size_t>(s.values.size()) * sizeof(double)));
}

std::string split_manifest_json(const SweepData& d) {
    const bool cols = d.axis == SplitAxis::columns;
    const std::size_t len = cols ? d.cube_cols : d.cube_rows;
    json j;
    j["axis"] = cols ? "columns" : "rows";
    j["train_region"] = {0, d.train_extent};
    j["test_region"] = {d.train_extent, len};
    const auto entry = [](const SampleSet& s) {
        return json{{"count", s.count()}, {"rows", s.rows}, {"cols", s.cols}, {"sha256", sample_checksum(s)}};
    };
    j["sets"] = {{"train_patches", entry(d.train_patches)}, {"val_patches", entry(d.val_patches)},
                 {"test_patches", entry(d.test_patches)},   {"train_spectra", entry(d.train_spectra)},
                 {"val_spectra", entry(d.val_spectra)},     {"test_spectra", entry(d.test_spectra)}};
    return j.dump(2) + "\n";
}

std::uint64_t sweep_run_seed(std::uint64_t seed, Configuration c, std::size_t n_filters, std::size_t n_steps,
                             std::size_t lr_index, std::size_t l2_index, std::size_t init) {
    return derive_seed(seed, {kLayoutStage, config_index(c), n_filters, n_steps, lr_index, l2_index, init});
}

SweepResult run_sweep(const SweepData& data, const AppConfig& config, const SweepOptions& options) {
    const SweepConfig& grid = config.sweep;
    require(!grid.learning_rates.empty() && !grid.l2_weights.empty() && !grid.n_filters.empty() &&
                !grid.n_steps.empty() && !grid.configurations.empty(),
            "sweep: grids must be non-empty");
    require(grid.random_inits >= 1, "sweep: random_inits must be at least 1");
    for (std::size_t n : grid.n_filters) require(n >= 1, "sweep: n_filters must be positive");
    for (std::size_t s : grid.n_steps) require(s >= 1, "sweep: n_steps must be positive");

    const bool persist = !options.out_dir.empty();
    const std::string key = resume_key(data, config, options.seed);
    const std::uint64_t test_seed = derive_seed(options.seed, {kTestNoise});
    const double snr = config.data.snr;

    SweepResult result;
    std::mutex mu;

    // Stage 1: estimated filter sets for configurations that need them.
    bool need_filters = false;
    for (auto c : grid.configurations) need_filters = need_filters || uses_best_filters(c);
    if (need_filters) {
        std::vector<FilterStageResult> stage(grid.n_filters.size());
        parallel_for(grid.n_filters.size(), options.workers, [&](std::size_t i) {
            const std::size_t n = grid.n_filters[i];
            const fs::path dir = persist ? options.out_dir / "filters" / ("n" + std::to_string(n)) : fs::path{};
            FilterStageResult& out = stage[i];
            out.n_filters = n;
            if (persist) {
                if (auto rows = load_cell(dir, key)) {
                    out.runs = std::move(*rows);
                    out.filters = load_filter_set(dir / "filters.csv");
                    std::lock_guard lock(mu);
                    ++result.resumed_cells;
                    return;
                }
            }
            std::optional<FilterEstimate> best;
            std::size_t best_row = 0;
            for (std::size_t a = 0; a < grid.learning_rates.size(); ++a)
                for (std::size_t b = 0; b < grid.l2_weights.size(); ++b) {
                    const auto t0 = std::chrono::steady_clock::now();
                    TrainConfig cfg = config.train;
                    cfg.learning_rate = grid.learning_rates[a];
                    cfg.l2_weight = grid.l2_weights[b];
                    cfg.seed = derive_seed(options.seed, {kFilterStage, n, a, b});
                    cfg.trainable = {true, false, true};
                    cfg.lorentzian.enabled = false;
                    FilterEstimate est = [&] {
                        try {
                            return estimate_filters(data.train_spectra, data.val_spectra, n, cfg, snr);
                        } catch (const Error& e) {
                            rethrow_for("filters_n" + std::to_string(n), e);
                        }
                    }();
                    SweepRow row;
                    row.configuration = "filters";
                    row.n_filters = n;
                    row.n_steps = 1;
                    row.learning_rate = cfg.learning_rate;
                    row.l2_weight = cfg.l2_weight;
                    row.seed = cfg.seed;
                    row.val_loss = est.training.best_val_loss;
                    row.compression_ratio = compression_ratio(1);
                    row.wall_time_s = seconds_since(t0);
                    out.runs.push_back(row);
                    if (!best || row.val_loss < out.runs[best_row].val_loss) {
                        best = std::move(est);
                        best_row = out.runs.size() - 1;
                    }
                }
            const Metrics m = evaluate_filters(*best, data.test_spectra, test_seed);
            out.runs[best_row].selected = true;
            out.runs[best_row].test_mse = m.mse;
            out.runs[best_row].test_psnr = m.psnr;
            out.filters = best->filters;
            if (persist) {
                fs::create_directories(dir);
                write_text(dir / "filters.csv", [&](std::ostream& o) { write_filter_set(o, out.filters); });
                write_text(dir / "history.csv",
                           [&](std::ostream& o) { write_history_csv(o, best->training.history); });
                save_cell(dir, key, out.runs, {"filters.csv", "history.csv"});
            }
        });
        for (auto& s : stage) result.filter_stage[s.n_filters] = std::move(s);
    }

    // Stage 2: layout cells.
    struct Cell {
        Configuration c;
        std::size_t n, s;
    };
    std::vector<Cell> cells;
    for (auto c : grid.configurations)
        for (std::size_t n : grid.n_filters)
            for (std::size_t s : grid.n_steps) cells.push_back({c, n, s});

    std::vector<std::vector<SweepRow>> cell_rows(cells.size());
    parallel_for(cells.size(), options.workers, [&](std::size_t i) {
        const Cell cell = cells[i];
        const std::string name = cell_name(cell.c, cell.n, cell.s);
        const fs::path dir = persist ? options.out_dir / "cells" / name : fs::path{};
        if (persist) {
            if (auto rows = load_cell(dir, key)) {
                cell_rows[i] = std::move(*rows);
                std::lock_guard lock(mu);
                ++result.resumed_cells;
                return;
            }
        }
        const FilterSet* best_filters =
            uses_best_filters(cell.c) ? &result.filter_stage.at(cell.n).filters : nullptr;
        const std::size_t inits = has_random_init(cell.c) ? grid.random_inits : 1;

        std::vector<SweepRow>& rows = cell_rows[i];
        std::optional<DesignResult> best;
        std::size_t best_row = 0;
        for (std::size_t a = 0; a < grid.learning_rates.size(); ++a)
            for (std::size_t b = 0; b < grid.l2_weights.size(); ++b)
                for (std::size_t k = 0; k < inits; ++k) {
                    const auto t0 = std::chrono::steady_clock::now();
                    TrainConfig base = config.train;
                    base.learning_rate = grid.learning_rates[a];
                    base.l2_weight = grid.l2_weights[b];
                    base.seed = sweep_run_seed(options.seed, cell.c, cell.n, cell.s, a, b, k);
                    DesignSpec spec;
                    spec.configuration = cell.c;
                    spec.n_filters = cell.n;
                    spec.steps = cell.s;
                    spec.patch_size = config.data.patch_size;
                    spec.snr = snr;
                    spec.init_seed = derive_seed(base.seed, {0x696e6974ULL});
                    DesignResult res = [&] {
                        try {
                            return optimize_design(spec, data.train_patches, data.val_patches, base, best_filters);
                        } catch (const Error& e) {
                            rethrow_for(name, e);
                        }
                    }();
                    SweepRow row;
                    row.configuration = std::string(configuration_name(cell.c));
                    row.n_filters = cell.n;
                    row.n_steps = cell.s;
                    row.learning_rate = base.learning_rate;
                    row.l2_weight = base.l2_weight;
                    row.seed = base.seed;
                    row.init = k;
                    row.val_loss = res.val_loss;
                    row.compression_ratio = compression_ratio(cell.s);
                    row.wall_time_s = seconds_since(t0);
                    rows.push_back(row);
                    if (!best || row.val_loss < rows[best_row].val_loss) {
                        best = std::move(res);
                        best_row = rows.size() - 1;
                    }
                }
        const Metrics m = evaluate_design(best->model, data.test_patches, test_seed);
        rows[best_row].selected = true;
        rows[best_row].test_mse = m.mse;
        rows[best_row].test_psnr = m.psnr;
        if (persist) {
            fs::create_directories(dir);
            write_text(dir / "layout.txt", [&](std::ostream& o) { write_layout(o, best->model.layout); });
            write_atomic(dir / "reconstructor.rcon", encode_rcon(best->model.reconstructor));
            write_text(dir / "history.csv", [&](std::ostream& o) {
                write_history_csv(o, best->refit ? best->refit->history : best->training.history);
            });
            std::vector<std::string> artifacts{"layout.txt", "reconstructor.rcon", "history.csv"};
            if (best->refit) {
                write_text(dir / "history_free.csv",
                           [&](std::ostream& o) { write_history_csv(o, best->training.history); });
                artifacts.push_back("history_free.csv");
            }
            save_cell(dir, key, rows, artifacts);
        }
    });

    for (const auto& [n, stage] : result.filter_stage)
        for (const auto& r : stage.runs) result.runs.push_back(r);
    for (const auto& rows : cell_rows)
        for (const auto& r : rows) {
            result.runs.push_back(r);
            if (r.selected) result.cells.push_back(r);
        }
    return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "configuration,n_filters,n_steps,lr,l2,seed,init,selected,val_loss,test_mse,test_psnr,compression_ratio,"
           "wall_time_s\n";
    char buf[512];
    const auto opt = [](const std::optional<double>& v) {
        if (!v) return std::string();
        char b[64];
        std::snprintf(b, sizeof b, "%.9g", *v);
        return std::string(b);
    };
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.9g,%.9g,%llu,%zu,%d,%.9g,%s,%s,%.9g,%.9g\n",
                      r.configuration.c_str(), r.n_filters, r.n_steps, r.learning_rate, r.l2_weight,
                      static_cast<unsigned long long>(r.seed), r.init, r.selected ? 1 : 0, r.val_loss,
                      opt(r.test_mse).c_str(), opt(r.test_psnr).c_str(), r.compression_ratio, r.wall_time_s);
        out << buf;
    }
}

}  // namespace mosaic
