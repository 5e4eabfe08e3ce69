#pragma once

#include "mosaic/cube.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace mosaic {

/// Gaussian passband: center wavelength and full width at half maximum, nm.
struct FilterParams {
    double center = 0.0;
    double fwhm = 0.0;
    friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

/// Filter parameters mapped affinely onto [-1, 1].
struct ScaledParams {
    double u_center = 0.0;
    double u_fwhm = 0.0;
    friend bool operator==(const ScaledParams&, const ScaledParams&) = default;
};

/// Admissible filter parameters.
struct ParamDomain {
    double center_min = 450.0;
    double center_max = 940.0;
    double fwhm_min = 490.0 / 39.0;
    double fwhm_max = 490.0;

    /// Centers span the grid; widths span one band spacing to the full range.
    static ParamDomain for_grid(const WavelengthGrid& grid);

    double center_halfwidth() const { return 0.5 * (center_max - center_min); }
    double fwhm_halfwidth() const { return 0.5 * (fwhm_max - fwhm_min); }
    bool contains(const FilterParams& f) const;
    void validate() const;
};

struct FilterSet {
    std::vector<FilterParams> filters;

    std::size_t size() const { return filters.size(); }
    bool empty() const { return filters.empty(); }
    const FilterParams& operator[](std::size_t i) const { return filters[i]; }
    FilterParams& operator[](std::size_t i) { return filters[i]; }
    friend bool operator==(const FilterSet&, const FilterSet&) = default;
};

/// Peak-normalized Gaussian: exp(-4 ln2 (lambda - center)^2 / fwhm^2).
Eigen::VectorXd transmission(const FilterParams& f, const WavelengthGrid& grid);

struct TransmissionGrad {
    Eigen::VectorXd d_center;
    Eigen::VectorXd d_fwhm;
};

TransmissionGrad transmission_grad(const FilterParams& f, const WavelengthGrid& grid);

ScaledParams scale(const FilterParams& f, const ParamDomain& domain);

/// Inputs outside [-1, 1] are clamped to the boundary.
FilterParams unscale(const ScaledParams& u, const ParamDomain& domain);

/// n identical passbands, spaced by their FWHM, spanning [lo, hi].
FilterSet regular_filters(std::size_t n, double lo_nm = 450.0, double hi_nm = 940.0);

double mse(std::span<const double> truth, std::span<const double> estimate);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(max^2 / mse); +inf when mse is zero.
double psnr_from_mse(double mse_value, double max_value = kDefaultMaxValue);
double psnr(std::span<const double> truth, std::span<const double> estimate, double max_value = kDefaultMaxValue);

// Design files: a comment line, a header, then "center_nm,fwhm_nm" records
// with six decimals.
void write_filter_set(std::ostream& out, const FilterSet& set);
FilterSet read_filter_set(std::istream& in);
void save_filter_set(const FilterSet& set, const std::filesystem::path& path);
FilterSet load_filter_set(const std::filesystem::path& path);

/// Parses "460:10,580:50" style lists.
FilterSet parse_filter_list(const std::string& text);

}  // namespace mosaic
