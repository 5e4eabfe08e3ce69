#pragma once

#include "mosaic/cube.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace mosaic {

/// Separable Bartlett-Hann window (a0 = 0.62, a1 = 0.48, a2 = 0.38).
Eigen::VectorXd bartlett_hann(std::size_t n);

/// |DFT(w * (img - mean))|^2 with the unnormalized forward transform, so
/// sum(power) = rows * cols * sum((w * (img - mean))^2).
Eigen::MatrixXd power_spectrum(const Eigen::MatrixXd& image);

struct RadialProfile {
    std::vector<double> radii;
    std::vector<double> power;
    std::vector<std::size_t> counts;
};

/// Mean power per integer-rounded radius from the zero frequency. Only
/// occupied bins are reported.
RadialProfile azimuthal_average(const Eigen::MatrixXd& power);

struct DistanceCurve {
    std::vector<double> distance;
    std::vector<double> mean_psnr;
    std::vector<std::size_t> counts;
    std::size_t infinite_pairs = 0;
    double baseline = 0.0;  // mean PSNR of each spectrum against the mean spectrum
    std::optional<double> crossover;  // first distance whose mean PSNR is below the baseline
};

DistanceCurve psnr_vs_distance(const HyperCube& cube, std::size_t max_pairs, std::uint64_t seed);

struct PcaResult {
    Eigen::MatrixXd components;  // bands x k, orthonormal columns, descending variance
    Eigen::VectorXd variances;
    Eigen::VectorXd variance_ratios;
    Eigen::VectorXd mean_spectrum;
};

/// Mean-centered covariance eigendecomposition of the columns of `spectra`
/// (bands x samples). Each component's largest-magnitude entry is positive.
/// `components == 0` keeps all of them.
PcaResult pca(const Eigen::MatrixXd& spectra, std::size_t components = 0);

/// Mean PSNR (over spectra) of the projection onto the first k components,
/// for k = 0 .. available components. Infinite values are skipped when
/// averaging; a curve point is infinite only if every spectrum is exact.
std::vector<double> psnr_vs_components(const Eigen::MatrixXd& spectra, const PcaResult& result,
                                       double max_value = kDefaultMaxValue);

/// Mean of the finite entries; +inf when none are finite.
double finite_mean(const std::vector<double>& values, std::size_t* infinite_count = nullptr);

}  // namespace mosaic
