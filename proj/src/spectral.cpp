#include "mosaic/spectral.hpp"

#include "mosaic/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mosaic {

namespace {
constexpr double kFourLn2 = 4.0 * std::numbers::ln2;
}

ParamDomain ParamDomain::for_grid(const WavelengthGrid& grid) {
    return {grid.front(), grid.back(), grid.spacing(), grid.back() - grid.front()};
}

bool ParamDomain::contains(const FilterParams& f) const {
    return f.center >= center_min && f.center <= center_max && f.fwhm >= fwhm_min && f.fwhm <= fwhm_max;
}

void ParamDomain::validate() const {
    require(std::isfinite(center_min) && std::isfinite(center_max) && center_min < center_max,
            "parameter domain: center range is degenerate");
    require(std::isfinite(fwhm_min) && std::isfinite(fwhm_max) && fwhm_min < fwhm_max && fwhm_min > 0,
            "parameter domain: fwhm range is degenerate");
}

Eigen::VectorXd transmission(const FilterParams& f, const WavelengthGrid& grid) {
    require(f.fwhm > 0, "transmission: fwhm must be positive");
    Eigen::VectorXd t(grid.size());
    const double inv_w2 = 1.0 / (f.fwhm * f.fwhm);
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const double d = grid[b] - f.center;
        t[b] = std::exp(-kFourLn2 * d * d * inv_w2);
    }
    return t;
}

TransmissionGrad transmission_grad(const FilterParams& f, const WavelengthGrid& grid) {
    require(f.fwhm > 0, "transmission_grad: fwhm must be positive");
    const Eigen::VectorXd t = transmission(f, grid);
    TransmissionGrad g{Eigen::VectorXd(grid.size()), Eigen::VectorXd(grid.size())};
    const double w2 = f.fwhm * f.fwhm;
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const double d = grid[b] - f.center;
        g.d_center[b] = t[b] * 2.0 * kFourLn2 * d / w2;
        g.d_fwhm[b] = t[b] * 2.0 * kFourLn2 * d * d / (w2 * f.fwhm);
    }
    return g;
}

ScaledParams scale(const FilterParams& f, const ParamDomain& domain) {
    domain.validate();
    return {(f.center - domain.center_min) / domain.center_halfwidth() - 1.0,
            (f.fwhm - domain.fwhm_min) / domain.fwhm_halfwidth() - 1.0};
}

FilterParams unscale(const ScaledParams& u, const ParamDomain& domain) {
    domain.validate();
    const double uc = std::clamp(u.u_center, -1.0, 1.0);
    const double uw = std::clamp(u.u_fwhm, -1.0, 1.0);
    // Endpoints map exactly onto the domain bounds.
    const auto map = [](double v, double lo, double hi, double half) {
        if (v == -1.0) return lo;
        if (v == 1.0) return hi;
        return lo + (v + 1.0) * half;
    };
    return {map(uc, domain.center_min, domain.center_max, domain.center_halfwidth()),
            map(uw, domain.fwhm_min, domain.fwhm_max, domain.fwhm_halfwidth())};
}

FilterSet regular_filters(std::size_t n, double lo_nm, double hi_nm) {
    require(n >= 1, "regular_filters: n must be at least 1");
    require(hi_nm > lo_nm, "regular_filters: empty wavelength range");
    const double fwhm = (hi_nm - lo_nm) / static_cast<double>(n);
    FilterSet set;
    for (std::size_t k = 0; k < n; ++k) set.filters.push_back({lo_nm + (static_cast<double>(k) + 0.5) * fwhm, fwhm});
    return set;
}

double mse(std::span<const double> truth, std::span<const double> estimate) {
    require(truth.size() == estimate.size(), "mse: shape mismatch");
    require(!truth.empty(), "mse: empty input");
    double acc = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double d = truth[k] - estimate[k];
        acc += d * d;
    }
    return acc / static_cast<double>(truth.size());
}

double psnr_from_mse(double mse_value, double max_value) {
    require(max_value > 0, "psnr: max_value must be positive");
    if (mse_value == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(max_value * max_value / mse_value);
}

double psnr(std::span<const double> truth, std::span<const double> estimate, double max_value) {
    require(max_value > 0, "psnr: max_value must be positive");
    return psnr_from_mse(mse(truth, estimate), max_value);
}

// ---------------------------------------------------------------------------

void write_filter_set(std::ostream& out, const FilterSet& set) {
    out << "# filters: " << set.size() << "\n";
    out << "center_nm,fwhm_nm\n";
    char buf[128];
    for (const auto& f : set.filters) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", f.center, f.fwhm);
        out << buf;
    }
}

FilterSet read_filter_set(std::istream& in) {
    FilterSet set;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "center_nm,fwhm_nm") fail_format("filter set: missing header");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail_format("filter set: malformed record '" + line + "'");
        FilterParams f;
        const auto a = std::from_chars(line.data(), line.data() + comma, f.center);
        const auto b = std::from_chars(line.data() + comma + 1, line.data() + line.size(), f.fwhm);
        if (a.ec != std::errc() || b.ec != std::errc() || a.ptr != line.data() + comma ||
            b.ptr != line.data() + line.size() || !(f.fwhm > 0) || !std::isfinite(f.center))
            fail_format("filter set: malformed record '" + line + "'");
        set.filters.push_back(f);
    }
    if (set.empty()) fail_format("filter set: no filters");
    return set;
}

void save_filter_set(const FilterSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path.string());
    write_filter_set(out, set);
}

FilterSet load_filter_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path.string());
    return read_filter_set(in);
}

FilterSet parse_filter_list(const std::string& text) {
    FilterSet set;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
        if (item.empty()) continue;
        const auto colon = item.find(':');
        FilterParams f;
        if (colon == std::string::npos) fail("filter list: expected center:fwhm, got '" + item + "'");
        const auto a = std::from_chars(item.data(), item.data() + colon, f.center);
        const auto b = std::from_chars(item.data() + colon + 1, item.data() + item.size(), f.fwhm);
        if (a.ec != std::errc() || b.ec != std::errc() || b.ptr != item.data() + item.size() || !(f.fwhm > 0))
            fail("filter list: malformed entry '" + item + "'");
        set.filters.push_back(f);
    }
    require(!set.empty(), "filter list is empty");
    return set;
}

}  // namespace mosaic
