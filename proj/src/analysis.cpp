#include "mosaic/analysis.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"
#include "mosaic/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

namespace mosaic {

Eigen::VectorXd bartlett_hann(std::size_t n) {
    require(n >= 2, "window length must be at least 2");
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / denom;
        w[static_cast<Eigen::Index>(i)] = 0.62 - 0.48 * std::abs(x - 0.5) - 0.38 * std::cos(2.0 * std::numbers::pi * x);
    }
    return w;
}

Eigen::MatrixXd power_spectrum(const Eigen::MatrixXd& image) {
    require(image.rows() >= 4 && image.cols() >= 4, "power_spectrum: image must be at least 4 x 4");
    const Eigen::Index rows = image.rows();
    const Eigen::Index cols = image.cols();
    const Eigen::VectorXd wr = bartlett_hann(static_cast<std::size_t>(rows));
    const Eigen::VectorXd wc = bartlett_hann(static_cast<std::size_t>(cols));
    const double mean = image.mean();

    using Complex = std::complex<double>;
    Eigen::MatrixXcd f(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) f(r, c) = (image(r, c) - mean) * wr[r] * wc[c];

    Eigen::FFT<double> fft;
    std::vector<Complex> in;
    std::vector<Complex> out;
    for (Eigen::Index r = 0; r < rows; ++r) {
        in.assign(cols, {});
        for (Eigen::Index c = 0; c < cols; ++c) in[c] = f(r, c);
        fft.fwd(out, in);
        for (Eigen::Index c = 0; c < cols; ++c) f(r, c) = out[c];
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
        in.assign(rows, {});
        for (Eigen::Index r = 0; r < rows; ++r) in[r] = f(r, c);
        fft.fwd(out, in);
        for (Eigen::Index r = 0; r < rows; ++r) f(r, c) = out[r];
    }
    return f.cwiseAbs2();
}

RadialProfile azimuthal_average(const Eigen::MatrixXd& power) {
    require(power.size() > 0, "azimuthal_average: empty input");
    const auto signed_freq = [](Eigen::Index k, Eigen::Index n) { return static_cast<double>(k <= n / 2 ? k : k - n); };
    std::map<long, std::pair<double, std::size_t>> bins;
    for (Eigen::Index r = 0; r < power.rows(); ++r)
        for (Eigen::Index c = 0; c < power.cols(); ++c) {
            const double fr = signed_freq(r, power.rows());
            const double fc = signed_freq(c, power.cols());
            auto& bin = bins[std::lround(std::sqrt(fr * fr + fc * fc))];
            bin.first += power(r, c);
            bin.second += 1;
        }
    RadialProfile profile;
    for (const auto& [radius, bin] : bins) {
        profile.radii.push_back(static_cast<double>(radius));
        profile.power.push_back(bin.first / static_cast<double>(bin.second));
        profile.counts.push_back(bin.second);
    }
    return profile;
}

double finite_mean(const std::vector<double>& values, std::size_t* infinite_count) {
    double acc = 0.0;
    std::size_t n = 0;
    std::size_t inf = 0;
    for (double v : values) {
        if (std::isinf(v)) {
            ++inf;
            continue;
        }
        acc += v;
        ++n;
    }
    if (infinite_count) *infinite_count = inf;
    return n == 0 ? kInfinitePsnr : acc / static_cast<double>(n);
}

DistanceCurve psnr_vs_distance(const HyperCube& cube, std::size_t max_pairs, std::uint64_t seed) {
    require(cube.pixels() >= 2, "psnr_vs_distance: need at least 2 pixels");
    require(max_pairs >= 1, "psnr_vs_distance: max_pairs must be positive");
    const double max_value = cube.max_value();
    const std::size_t bands = cube.bands();

    std::vector<double> mean_spec(bands, 0.0);
    for (std::size_t p = 0; p < cube.pixels(); ++p)
        for (std::size_t b = 0; b < bands; ++b) mean_spec[b] += cube.data()[p * bands + b];
    for (double& v : mean_spec) v /= static_cast<double>(cube.pixels());

    DistanceCurve curve;
    std::vector<double> base(cube.pixels());
    for (std::size_t p = 0; p < cube.pixels(); ++p)
        base[p] = psnr(cube.data().subspan(p * bands, bands), mean_spec, max_value);
    curve.baseline = finite_mean(base);

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, cube.pixels() - 1);
    std::map<long, std::pair<double, std::size_t>> bins;
    for (std::size_t i = 0; i < max_pairs; ++i) {
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) b = pick(rng);
        const double dr = static_cast<double>(a / cube.cols()) - static_cast<double>(b / cube.cols());
        const double dc = static_cast<double>(a % cube.cols()) - static_cast<double>(b % cube.cols());
        const double value = psnr(cube.data().subspan(a * bands, bands), cube.data().subspan(b * bands, bands), max_value);
        if (std::isinf(value)) {
            ++curve.infinite_pairs;
            continue;
        }
        auto& bin = bins[std::lround(std::hypot(dr, dc))];
        bin.first += value;
        bin.second += 1;
    }
    for (const auto& [d, bin] : bins) {
        curve.distance.push_back(static_cast<double>(d));
        curve.mean_psnr.push_back(bin.first / static_cast<double>(bin.second));
        curve.counts.push_back(bin.second);
    }
    for (std::size_t i = 0; i < curve.distance.size(); ++i)
        if (curve.mean_psnr[i] < curve.baseline) {
            curve.crossover = curve.distance[i];
            break;
        }
    return curve;
}

PcaResult pca(const Eigen::MatrixXd& spectra, std::size_t components) {
    const auto bands = spectra.rows();
    const auto n = spectra.cols();
    require(bands >= 2 && n >= 2, "pca: need at least 2 spectra of at least 2 bands");
    const std::size_t keep = components == 0 ? static_cast<std::size_t>(bands) : components;
    require(keep <= static_cast<std::size_t>(bands), "pca: more components requested than bands");
    require(keep <= static_cast<std::size_t>(n), "pca: fewer samples than requested components");

    PcaResult result;
    result.mean_spectrum = spectra.rowwise().mean();
    const Eigen::MatrixXd centered = spectra.colwise() - result.mean_spectrum;
    const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) fail_numerical("pca: eigendecomposition failed");

    const Eigen::VectorXd all = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double total = all.sum();
    if (!(total > 0)) fail_numerical("pca: spectra have zero variance");
    const auto k = static_cast<Eigen::Index>(keep);
    result.components = eig.eigenvectors().rowwise().reverse().leftCols(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index idx = 0;
        result.components.col(j).cwiseAbs().maxCoeff(&idx);
        if (result.components(idx, j) < 0) result.components.col(j) *= -1.0;
    }
    result.variances = all.head(k);
    result.variance_ratios = all.head(k) / total;
    return result;
}

std::vector<double> psnr_vs_components(const Eigen::MatrixXd& spectra, const PcaResult& result, double max_value) {
    require(spectra.rows() == result.mean_spectrum.size(), "psnr_vs_components: band count mismatch");
    const Eigen::MatrixXd centered = spectra.colwise() - result.mean_spectrum;
    const Eigen::MatrixXd coeffs = result.components.transpose() * centered;  // k x n
    std::vector<double> curve;
    Eigen::MatrixXd approx(spectra.rows(), spectra.cols());
    approx.colwise() = result.mean_spectrum;
    std::vector<double> per(static_cast<std::size_t>(spectra.cols()));
    for (Eigen::Index k = 0; k <= result.components.cols(); ++k) {
        if (k > 0) approx.noalias() += result.components.col(k - 1) * coeffs.row(k - 1);
        for (Eigen::Index i = 0; i < spectra.cols(); ++i) {
            const Eigen::VectorXd truth = spectra.col(i);
            const Eigen::VectorXd est = approx.col(i);
            per[static_cast<std::size_t>(i)] = psnr(std::span(truth.data(), truth.size()), std::span(est.data(), est.size()),
                                                   max_value);
        }
        curve.push_back(finite_mean(per));
    }
    return curve;
}

}  // namespace mosaic
