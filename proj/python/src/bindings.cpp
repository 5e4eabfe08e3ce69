#include "mosaic/analysis.hpp"
#include "mosaic/config.hpp"
#include "mosaic/design.hpp"
#include "mosaic/error.hpp"
#include "mosaic/manifest.hpp"
#include "mosaic/random.hpp"
#include "mosaic/sweep.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace mosaic;

namespace {

using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;

HyperCube cube_from_array(const Array3& a, const std::vector<double>& wavelengths, double max_value) {
    if (a.ndim() != 3) throw py::value_error("cube array must have shape (rows, cols, bands)");
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1)),
               bands = static_cast<std::size_t>(a.shape(2));
    WavelengthGrid grid = wavelengths.empty() ? WavelengthGrid::uniform(450.0, 940.0, bands) : WavelengthGrid(wavelengths);
    std::vector<double> data(a.data(), a.data() + a.size());
    return HyperCube(rows, cols, std::move(grid), std::move(data), max_value);
}

py::array_t<double> cube_to_array(const HyperCube& c) {
    py::array_t<double> out({c.rows(), c.cols(), c.bands()});
    std::copy(c.data().begin(), c.data().end(), out.mutable_data());
    return out;
}

std::string layout_text(const LayoutPattern& l) {
    std::ostringstream o;
    write_layout(o, l);
    return o.str();
}

}  // namespace

PYBIND11_MODULE(_mosaic, m) {
    m.doc() = "Filter-mosaic design for compressed-sensing hyperspectral imaging";
    m.attr("__version__") = tool_version();
    m.attr("DEFAULT_MAX_VALUE") = kDefaultMaxValue;

    // mosaic::Error keeps its kind; the Python side sees ValueError or ArithmeticError.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::numerical) PyErr_SetString(PyExc_ArithmeticError, e.what());
            else PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<WavelengthGrid>(m, "WavelengthGrid")
        .def(py::init<std::vector<double>>())
        .def_static("uniform", &WavelengthGrid::uniform, py::arg("first_nm"), py::arg("last_nm"), py::arg("count"))
        .def("__len__", &WavelengthGrid::size)
        .def_property_readonly("bands", [](const WavelengthGrid& g) { return std::vector<double>(g.bands().begin(), g.bands().end()); })
        .def_property_readonly("spacing", &WavelengthGrid::spacing);

    py::class_<HyperCube>(m, "HyperCube")
        .def(py::init(&cube_from_array), py::arg("values"), py::arg("wavelengths") = std::vector<double>{},
             py::arg("max_value") = kDefaultMaxValue)
        .def_property_readonly("shape", [](const HyperCube& c) { return py::make_tuple(c.rows(), c.cols(), c.bands()); })
        .def_property_readonly("grid", &HyperCube::grid)
        .def_property_readonly("max_value", &HyperCube::max_value)
        .def("to_numpy", &cube_to_array)
        .def("region", &HyperCube::region)
        .def("band_image", &HyperCube::band_image)
        .def("spectra_matrix", &HyperCube::spectra_matrix);

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("rows", &SynthSpec::rows)
        .def_readwrite("cols", &SynthSpec::cols)
        .def_readwrite("bands", &SynthSpec::bands)
        .def_readwrite("spectral_rank", &SynthSpec::spectral_rank)
        .def_readwrite("correlation_length", &SynthSpec::correlation_length)
        .def_readwrite("noise_floor", &SynthSpec::noise_floor)
        .def_readwrite("mean_radiance", &SynthSpec::mean_radiance)
        .def_readwrite("seed", &SynthSpec::seed);
    m.def("synth_cube", &synth_cube);
    m.def("load_cube", [](const std::filesystem::path& p) { return load_cube(p); });
    m.def("save_cube", &save_cube);

    py::class_<FilterParams>(m, "FilterParams")
        .def(py::init<double, double>(), py::arg("center"), py::arg("fwhm"))
        .def_readwrite("center", &FilterParams::center)
        .def_readwrite("fwhm", &FilterParams::fwhm)
        .def("__repr__", [](const FilterParams& f) {
            return "FilterParams(center=" + std::to_string(f.center) + ", fwhm=" + std::to_string(f.fwhm) + ")";
        });
    py::class_<FilterSet>(m, "FilterSet")
        .def(py::init([](std::vector<FilterParams> f) { return FilterSet{std::move(f)}; }))
        .def_readonly("filters", &FilterSet::filters)
        .def("__len__", &FilterSet::size);
    m.def("regular_filters", &regular_filters, py::arg("n"), py::arg("lo_nm") = 450.0, py::arg("hi_nm") = 940.0);
    m.def("transmission", &transmission);

    py::class_<LayoutPattern>(m, "LayoutPattern")
        .def_property_readonly("rows", &LayoutPattern::rows)
        .def_property_readonly("cols", &LayoutPattern::cols)
        .def_property_readonly("is_indexed", &LayoutPattern::is_indexed)
        .def_property_readonly("filters", &LayoutPattern::filters)
        .def("filter_of", &LayoutPattern::filter_of)
        .def("to_text", &layout_text)
        .def("__eq__", [](const LayoutPattern& a, const LayoutPattern& b) { return a == b; });
    m.def("lvf_layout", &lvf_layout);
    m.def("squarish_layout", &squarish_layout);
    m.def("load_layout", &load_layout);
    m.def("save_layout", &save_layout);

    m.def("forward", [](const HyperCube& patch, const LayoutPattern& layout, std::size_t steps) {
        const Frames f = forward(patch, layout, steps);
        py::array_t<double> out({f.steps, f.rows, f.cols});
        std::copy(f.values.data(), f.values.data() + f.values.size(), out.mutable_data());
        return out;
    });
    m.def("build_H", [](const LayoutPattern& l, const WavelengthGrid& g, std::size_t steps) { return build_H(l, g, steps); });
    m.def("compression_ratio", &compression_ratio, py::arg("steps"), py::arg("baseline_steps") = 40);
    m.def("pseudo_inverse", [](const Eigen::MatrixXd& h) {
        return pseudo_inverse_reconstructor({1, 1, static_cast<std::size_t>(h.cols()), static_cast<std::size_t>(h.rows())}, h)
            .weights;
    });

    m.def("mse", [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return mse({a.data(), static_cast<std::size_t>(a.size())}, {b.data(), static_cast<std::size_t>(b.size())});
    });
    m.def("psnr", [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double max_value) {
        return psnr({a.data(), static_cast<std::size_t>(a.size())}, {b.data(), static_cast<std::size_t>(b.size())}, max_value);
    }, py::arg("truth"), py::arg("estimate"), py::arg("max_value") = kDefaultMaxValue);

    m.def("power_spectrum", &power_spectrum);
    m.def("radial_profile", [](const Eigen::MatrixXd& power) {
        const RadialProfile p = azimuthal_average(power);
        return py::make_tuple(p.radii, p.power, p.counts);
    });
    py::class_<PcaResult>(m, "PcaResult")
        .def_readonly("components", &PcaResult::components)
        .def_readonly("variances", &PcaResult::variances)
        .def_readonly("variance_ratios", &PcaResult::variance_ratios)
        .def_readonly("mean_spectrum", &PcaResult::mean_spectrum);
    m.def("pca", &pca, py::arg("spectra"), py::arg("components") = 0);
    m.def("psnr_vs_components", &psnr_vs_components, py::arg("spectra"), py::arg("result"),
          py::arg("max_value") = kDefaultMaxValue);
    py::class_<DistanceCurve>(m, "DistanceCurve")
        .def_readonly("distance", &DistanceCurve::distance)
        .def_readonly("mean_psnr", &DistanceCurve::mean_psnr)
        .def_readonly("counts", &DistanceCurve::counts)
        .def_readonly("baseline", &DistanceCurve::baseline)
        .def_readonly("crossover", &DistanceCurve::crossover);
    m.def("psnr_vs_distance", &psnr_vs_distance, py::arg("cube"), py::arg("max_pairs"), py::arg("seed") = 0);

    // Design workflow, driven by the same config text as the CLI.
    py::class_<AppConfig>(m, "Config")
        .def(py::init<>())
        .def_static("parse", [](const std::string& text) {
            std::istringstream in(text);
            return parse_config(in);
        })
        .def("__str__", &format_config);
    py::class_<SweepData>(m, "SweepData")
        .def_property_readonly("train_count", [](const SweepData& d) { return d.train_patches.count(); })
        .def_property_readonly("val_count", [](const SweepData& d) { return d.val_patches.count(); })
        .def_property_readonly("test_count", [](const SweepData& d) { return d.test_patches.count(); })
        .def("split_manifest", &split_manifest_json);
    m.def("prepare_data", [](const HyperCube& cube, const AppConfig& c, std::uint64_t seed) {
        return prepare_data(cube, c.data, c.train.val_fraction, seed);
    }, py::arg("cube"), py::arg("config"), py::arg("seed") = 0);

    py::class_<Metrics>(m, "Metrics")
        .def_readonly("mse", &Metrics::mse)
        .def_readonly("psnr", &Metrics::psnr)
        .def_readonly("samples", &Metrics::samples);
    py::class_<DesignResult>(m, "Design")
        .def_property_readonly("layout", [](const DesignResult& d) { return d.model.layout; })
        .def_property_readonly("reconstructor", [](const DesignResult& d) { return d.model.reconstructor.weights; })
        .def_readonly("val_loss", &DesignResult::val_loss)
        .def("evaluate_test", [](const DesignResult& d, const SweepData& data, std::uint64_t seed) {
            return evaluate_design(d.model, data.test_patches, seed);
        }, py::arg("data"), py::arg("noise_seed") = 0);
    m.def("configurations", [] {
        std::vector<std::string> names;
        for (auto c : all_configurations()) names.emplace_back(configuration_name(c));
        return names;
    });
    m.def("optimize_design", [](const SweepData& data, const AppConfig& c, const std::string& configuration,
                                std::size_t n_filters, std::size_t steps, std::optional<FilterSet> best,
                                std::uint64_t seed) {
        const auto conf = parse_configuration(configuration);
        if (!conf) throw py::value_error("unknown configuration " + configuration);
        DesignSpec spec{*conf, n_filters, steps, c.data.patch_size, c.data.snr, derive_seed(seed, {1})};
        TrainConfig t = c.train;
        t.seed = seed;
        py::gil_scoped_release release;
        return optimize_design(spec, data.train_patches, data.val_patches, t, best ? &*best : nullptr);
    }, py::arg("data"), py::arg("config"), py::arg("configuration"), py::arg("n_filters"), py::arg("steps"),
       py::arg("best_filters") = std::nullopt, py::arg("seed") = 0);
    m.def("sweep_csv", [](const SweepData& data, const AppConfig& c, std::uint64_t seed) {
        SweepResult r;
        {
            py::gil_scoped_release release;
            r = run_sweep(data, c, {{}, 1, seed});
        }
        std::ostringstream o;
        write_sweep_csv(o, r.cells);
        return o.str();
    }, py::arg("data"), py::arg("config"), py::arg("seed") = 0);
}
