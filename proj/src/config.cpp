#include "mosaic/config.hpp"

#include "mosaic/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace mosaic {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail("config: " + key + " expects a number, got '" + v + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        fail("config: " + key + " expects a non-negative integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail("config: " + key + " expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += f(v[i]);
    }
    return out;
}

using Setter = std::function<void(AppConfig&, const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

const Table& setters() {
    static const Table table = [] {
        Table t;
        auto& tr = t["train"];
        tr["learning_rate"] = [](AppConfig& c, const std::string& v) { c.train.learning_rate = to_double("learning_rate", v); };
        tr["schedule"] = [](AppConfig& c, const std::string& v) {
            if (v == "constant")
                c.train.schedule = LrSchedule::constant;
            else if (v == "cosine")
                c.train.schedule = LrSchedule::cosine;
            else
                fail("config: schedule must be 'constant' or 'cosine'");
        };
        tr["l2_weight"] = [](AppConfig& c, const std::string& v) { c.train.l2_weight = to_double("l2_weight", v); };
        tr["epochs"] = [](AppConfig& c, const std::string& v) { c.train.epochs = to_size("epochs", v); };
        tr["patience"] = [](AppConfig& c, const std::string& v) { c.train.patience = to_size("patience", v); };
        tr["batch_size"] = [](AppConfig& c, const std::string& v) { c.train.batch_size = to_size("batch_size", v); };
        tr["seed"] = [](AppConfig& c, const std::string& v) { c.train.seed = to_size("seed", v); };
        tr["val_fraction"] = [](AppConfig& c, const std::string& v) { c.train.val_fraction = to_double("val_fraction", v); };
        tr["beta1"] = [](AppConfig& c, const std::string& v) { c.train.beta1 = to_double("beta1", v); };
        tr["beta2"] = [](AppConfig& c, const std::string& v) { c.train.beta2 = to_double("beta2", v); };
        tr["epsilon"] = [](AppConfig& c, const std::string& v) { c.train.epsilon = to_double("epsilon", v); };

        auto& tb = t["trainable"];
        tb["filters"] = [](AppConfig& c, const std::string& v) { c.train.trainable.filters = to_bool("filters", v); };
        tb["layout"] = [](AppConfig& c, const std::string& v) { c.train.trainable.layout = to_bool("layout", v); };
        tb["reconstructor"] = [](AppConfig& c, const std::string& v) {
            c.train.trainable.reconstructor = to_bool("reconstructor", v);
        };

        auto& lo = t["lorentzian"];
        lo["enabled"] = [](AppConfig& c, const std::string& v) { c.train.lorentzian.enabled = to_bool("enabled", v); };
        lo["alpha_reg"] = [](AppConfig& c, const std::string& v) {
            c.train.lorentzian.alpha_reg = v == "auto" ? -1.0 : to_double("alpha_reg", v);
        };
        lo["width"] = [](AppConfig& c, const std::string& v) { c.train.lorentzian.width = to_double("width", v); };
        lo["targets"] = [](AppConfig& c, const std::string& v) {
            c.train.lorentzian.targets = v.empty() ? FilterSet{} : parse_filter_list(v);
        };

        auto& da = t["data"];
        da["patch_size"] = [](AppConfig& c, const std::string& v) { c.data.patch_size = to_size("patch_size", v); };
        da["train_patches"] = [](AppConfig& c, const std::string& v) { c.data.train_patches = to_size("train_patches", v); };
        da["test_patches"] = [](AppConfig& c, const std::string& v) { c.data.test_patches = to_size("test_patches", v); };
        da["train_spectra"] = [](AppConfig& c, const std::string& v) { c.data.train_spectra = to_size("train_spectra", v); };
        da["test_spectra"] = [](AppConfig& c, const std::string& v) { c.data.test_spectra = to_size("test_spectra", v); };
        da["train_cols"] = [](AppConfig& c, const std::string& v) { c.data.train_cols = to_size("train_cols", v); };
        da["split_axis"] = [](AppConfig& c, const std::string& v) {
            if (v == "columns")
                c.data.split_axis = SplitAxis::columns;
            else if (v == "rows")
                c.data.split_axis = SplitAxis::rows;
            else
                fail("config: split_axis must be 'columns' or 'rows'");
        };
        da["snr"] = [](AppConfig& c, const std::string& v) { c.data.snr = to_double("snr", v); };
        da["steps"] = [](AppConfig& c, const std::string& v) { c.data.steps = to_size("steps", v); };

        auto& sy = t["synth"];
        sy["rows"] = [](AppConfig& c, const std::string& v) { c.synth.rows = to_size("rows", v); };
        sy["cols"] = [](AppConfig& c, const std::string& v) { c.synth.cols = to_size("cols", v); };
        sy["bands"] = [](AppConfig& c, const std::string& v) { c.synth.bands = to_size("bands", v); };
        sy["rank"] = [](AppConfig& c, const std::string& v) { c.synth.spectral_rank = to_size("rank", v); };
        sy["correlation_length"] = [](AppConfig& c, const std::string& v) {
            c.synth.correlation_length = to_double("correlation_length", v);
        };
        sy["noise_floor"] = [](AppConfig& c, const std::string& v) { c.synth.noise_floor = to_double("noise_floor", v); };
        sy["mean_radiance"] = [](AppConfig& c, const std::string& v) {
            c.synth.mean_radiance = to_double("mean_radiance", v);
        };
        sy["seed"] = [](AppConfig& c, const std::string& v) { c.synth.seed = to_size("seed", v); };

        auto& sw = t["sweep"];
        sw["learning_rates"] = [](AppConfig& c, const std::string& v) {
            c.sweep.learning_rates.clear();
            for (const auto& s : split_list(v)) c.sweep.learning_rates.push_back(to_double("learning_rates", s));
        };
        sw["l2_weights"] = [](AppConfig& c, const std::string& v) {
            c.sweep.l2_weights.clear();
            for (const auto& s : split_list(v)) c.sweep.l2_weights.push_back(to_double("l2_weights", s));
        };
        sw["n_filters"] = [](AppConfig& c, const std::string& v) {
            c.sweep.n_filters.clear();
            for (const auto& s : split_list(v)) c.sweep.n_filters.push_back(to_size("n_filters", s));
        };
        sw["n_steps"] = [](AppConfig& c, const std::string& v) {
            c.sweep.n_steps.clear();
            for (const auto& s : split_list(v)) c.sweep.n_steps.push_back(to_size("n_steps", s));
        };
        sw["configurations"] = [](AppConfig& c, const std::string& v) {
            c.sweep.configurations.clear();
            for (const auto& s : split_list(v)) {
                const auto cfg = parse_configuration(s);
                if (!cfg) fail("config: unknown configuration '" + s + "'");
                c.sweep.configurations.push_back(*cfg);
            }
        };
        sw["random_inits"] = [](AppConfig& c, const std::string& v) { c.sweep.random_inits = to_size("random_inits", v); };
        sw["workers"] = [](AppConfig& c, const std::string& v) { c.sweep.workers = to_size("workers", v); };

        auto& an = t["analysis"];
        an["band_index"] = [](AppConfig& c, const std::string& v) { c.analysis.band_index = to_size("band_index", v); };
        an["max_pairs"] = [](AppConfig& c, const std::string& v) { c.analysis.max_pairs = to_size("max_pairs", v); };
        return t;
    }();
    return table;
}

}  // namespace

AppConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(std::string("config: ") + e.what());
    }
    AppConfig config;
    const Table& table = setters();
    for (const auto& [section, body] : tree) {
        const auto sec = table.find(section);
        if (sec == table.end()) {
            if (body.empty()) fail("config: key '" + section + "' outside of a section");
            fail("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            const auto entry = sec->second.find(key);
            if (entry == sec->second.end()) fail("config: unknown key '" + key + "' in [" + section + "]");
            entry->second(config, trim(value.get_value<std::string>()));
        }
    }
    if (config.sweep.learning_rates.empty() || config.sweep.l2_weights.empty() || config.sweep.n_filters.empty() ||
        config.sweep.n_steps.empty() || config.sweep.configurations.empty())
        fail("config: sweep grids must be non-empty");
    return config;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config " + path.string());
    return parse_config(in);
}

std::string format_config(const AppConfig& c) {
    std::ostringstream o;
    const auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[train]\n"
      << "learning_rate = " << fmt(c.train.learning_rate) << "\n"
      << "schedule = " << (c.train.schedule == LrSchedule::cosine ? "cosine" : "constant") << "\n"
      << "l2_weight = " << fmt(c.train.l2_weight) << "\n"
      << "epochs = " << c.train.epochs << "\n"
      << "patience = " << c.train.patience << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "seed = " << c.train.seed << "\n"
      << "val_fraction = " << fmt(c.train.val_fraction) << "\n"
      << "beta1 = " << fmt(c.train.beta1) << "\n"
      << "beta2 = " << fmt(c.train.beta2) << "\n"
      << "epsilon = " << fmt(c.train.epsilon) << "\n\n";
    o << "[trainable]\n"
      << "filters = " << b(c.train.trainable.filters) << "\n"
      << "layout = " << b(c.train.trainable.layout) << "\n"
      << "reconstructor = " << b(c.train.trainable.reconstructor) << "\n\n";
    o << "[lorentzian]\n"
      << "enabled = " << b(c.train.lorentzian.enabled) << "\n"
      << "alpha_reg = " << (c.train.lorentzian.alpha_reg < 0 ? std::string("auto") : fmt(c.train.lorentzian.alpha_reg))
      << "\n"
      << "width = " << fmt(c.train.lorentzian.width) << "\n"
      << "targets = "
      << join(c.train.lorentzian.targets.filters, [](const FilterParams& f) { return fmt(f.center) + ":" + fmt(f.fwhm); })
      << "\n\n";
    o << "[data]\n"
      << "patch_size = " << c.data.patch_size << "\n"
      << "train_patches = " << c.data.train_patches << "\n"
      << "test_patches = " << c.data.test_patches << "\n"
      << "train_spectra = " << c.data.train_spectra << "\n"
      << "test_spectra = " << c.data.test_spectra << "\n"
      << "train_cols = " << c.data.train_cols << "\n"
      << "split_axis = " << (c.data.split_axis == SplitAxis::columns ? "columns" : "rows") << "\n"
      << "snr = " << fmt(c.data.snr) << "\n"
      << "steps = " << c.data.steps << "\n\n";
    o << "[synth]\n"
      << "rows = " << c.synth.rows << "\n"
      << "cols = " << c.synth.cols << "\n"
      << "bands = " << c.synth.bands << "\n"
      << "rank = " << c.synth.spectral_rank << "\n"
      << "correlation_length = " << fmt(c.synth.correlation_length) << "\n"
      << "noise_floor = " << fmt(c.synth.noise_floor) << "\n"
      << "mean_radiance = " << fmt(c.synth.mean_radiance) << "\n"
      << "seed = " << c.synth.seed << "\n\n";
    o << "[sweep]\n"
      << "learning_rates = " << join(c.sweep.learning_rates, fmt) << "\n"
      << "l2_weights = " << join(c.sweep.l2_weights, fmt) << "\n"
      << "n_filters = " << join(c.sweep.n_filters, [](std::size_t v) { return std::to_string(v); }) << "\n"
      << "n_steps = " << join(c.sweep.n_steps, [](std::size_t v) { return std::to_string(v); }) << "\n"
      << "configurations = "
      << join(c.sweep.configurations, [](Configuration v) { return std::string(configuration_name(v)); }) << "\n"
      << "random_inits = " << c.sweep.random_inits << "\n"
      << "workers = " << c.sweep.workers << "\n\n";
    o << "[analysis]\n"
      << "band_index = " << c.analysis.band_index << "\n"
      << "max_pairs = " << c.analysis.max_pairs << "\n";
    return o.str();
}

}  // namespace mosaic
