#include "helpers.hpp"

#include "mosaic/analysis.hpp"
#include "mosaic/error.hpp"
#include "mosaic/spectral.hpp"

#include <doctest.h>

#include <complex>
#include <numbers>
#include <random>

using namespace mosaic;

namespace {

Eigen::MatrixXd noise_image(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

double window_value(std::size_t i, std::size_t n) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    return 0.62 - 0.48 * std::abs(x - 0.5) - 0.38 * std::cos(2 * std::numbers::pi * x);
}

}  // namespace

TEST_CASE("bartlett-hann window shape") {
    const Eigen::VectorXd w = bartlett_hann(9);
    CHECK(std::abs(w[0]) < 1e-15);
    CHECK(std::abs(w[8]) < 1e-15);
    CHECK(w[4] == doctest::Approx(1.0));
    for (int i = 0; i < 9; ++i) CHECK(w[i] == doctest::Approx(w[8 - i]));
}

TEST_CASE("power spectrum matches a naive DFT and Parseval") {
    const Eigen::MatrixXd img = noise_image(6, 5, 1);
    const Eigen::MatrixXd p = power_spectrum(img);
    const double mean = img.mean();
    Eigen::MatrixXd tapered(6, 5);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 5; ++c) tapered(r, c) = (img(r, c) - mean) * window_value(r, 6) * window_value(c, 5);
    for (int u = 0; u < 6; ++u)
        for (int v = 0; v < 5; ++v) {
            std::complex<double> acc = 0;
            for (int r = 0; r < 6; ++r)
                for (int c = 0; c < 5; ++c)
                    acc += tapered(r, c) * std::polar(1.0, -2 * std::numbers::pi * (u * r / 6.0 + v * c / 5.0));
            CHECK(p(u, v) == doctest::Approx(std::norm(acc)).epsilon(1e-10));
        }
    CHECK(p.sum() == doctest::Approx(30.0 * tapered.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("constant image has zero power") {
    const Eigen::MatrixXd p = power_spectrum(Eigen::MatrixXd::Constant(8, 8, 3.5));
    CHECK(p.maxCoeff() < 1e-20);
}

TEST_CASE("azimuthal average of ones and bin counts") {
    const RadialProfile prof = azimuthal_average(Eigen::MatrixXd::Ones(8, 8));
    std::size_t total = 0;
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        CHECK(prof.power[i] == 1.0);
        total += prof.counts[i];
    }
    CHECK(total == 64);
    CHECK(prof.radii.front() == 0.0);
    CHECK(prof.counts.front() == 1);
    CHECK(prof.counts[1] == 8);  // axial neighbours plus diagonals rounded from sqrt(2)
}

TEST_CASE("1/f^2 field has a radial slope near -2") {
    const int n = 64;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> phase(0, 2 * std::numbers::pi);
    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(n, n);
    for (int kx = -n / 2 + 1; kx < n / 2; ++kx)
        for (int ky = 0; ky < n / 2; ++ky) {
            const double k = std::hypot(kx, ky);
            if (k == 0 || (ky == 0 && kx < 0)) continue;
            const double ph = phase(rng);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) img(r, c) += std::cos(2 * std::numbers::pi * (kx * r + ky * c) / n + ph) / k;
        }
    const RadialProfile prof = azimuthal_average(power_spectrum(img));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < prof.radii.size(); ++i)
        if (prof.radii[i] >= 4 && prof.radii[i] <= 24) {
            const double x = std::log(prof.radii[i]), y = std::log(prof.power[i]);
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
        }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("white noise radial profile is flat away from DC") {
    // Per-bin spread estimated from independent realizations.
    const std::size_t n = 64, reps = 24;
    std::vector<std::vector<double>> runs;
    RadialProfile prof;
    for (std::size_t k = 0; k < reps; ++k) {
        prof = azimuthal_average(power_spectrum(noise_image(n, n, 100 + k)));
        runs.push_back(prof.power);
    }
    const std::size_t bins = prof.radii.size();
    std::vector<double> mean(bins, 0.0), sd(bins, 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
        for (const auto& r : runs) mean[i] += r[i] / reps;
        for (const auto& r : runs) sd[i] += (r[i] - mean[i]) * (r[i] - mean[i]) / (reps - 1);
        sd[i] = std::sqrt(sd[i] / reps);
    }
    // Expected level for unit white noise under the separable taper.
    const Eigen::VectorXd w = bartlett_hann(n);
    const double level = w.squaredNorm() * w.squaredNorm();
    std::size_t outside = 0, checked = 0;
    for (std::size_t i = 0; i < bins; ++i) {
        if (prof.radii[i] < 2) continue;
        ++checked;
        if (std::abs(mean[i] - level) > 3.0 * sd[i]) ++outside;
    }
    // A 3-sigma band admits roughly 0.3% excursions.
    CHECK(outside <= 1 + checked / 100);
}

TEST_CASE("pca on known covariance and exact low rank") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    Eigen::MatrixXd s(3, 4000);
    for (int i = 0; i < 4000; ++i) s.col(i) << 10 + 2 * g(rng), 20 + g(rng), 30;
    const PcaResult r = pca(s);
    CHECK(r.variance_ratios[0] == doctest::Approx(0.8).epsilon(0.03));
    CHECK(r.variance_ratios[1] == doctest::Approx(0.2).epsilon(0.1));
    CHECK(r.variance_ratios[2] == doctest::Approx(0.0));
    CHECK(std::abs(r.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(r.components(0, 0) > 0);
    CHECK((r.components.transpose() * r.components - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK(r.mean_spectrum[2] == 30.0);

    Eigen::MatrixXd low = Eigen::MatrixXd::Zero(6, 50);
    for (int i = 0; i < 50; ++i) low.col(i) = (i % 7) * Eigen::VectorXd::LinSpaced(6, 1, 6) + (i % 3) * Eigen::VectorXd::Ones(6);
    const PcaResult lr = pca(low, 4);
    CHECK(lr.variance_ratios.head(2).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lr.components.cols() == 4);
    CHECK_THROWS_AS(pca(Eigen::MatrixXd::Constant(3, 5, 1.0)), Error);
    CHECK_THROWS_AS(pca(low, 7), Error);
}

TEST_CASE("psnr vs components is monotone and ends exact") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1e6);
    Eigen::MatrixXd s(5, 200);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    const PcaResult r = pca(s);
    const std::vector<double> curve = psnr_vs_components(s, r);
    REQUIRE(curve.size() == 6);
    for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] >= curve[k - 1]);
    CHECK(curve.back() > 250.0);
    Eigen::VectorXd centered_err = s.col(0) - r.mean_spectrum;
    const double k0 = psnr(std::span(s.col(0).data(), 5), std::span(r.mean_spectrum.data(), 5));
    CHECK(k0 == doctest::Approx(10 * std::log10(kDefaultMaxValue * kDefaultMaxValue / (centered_err.squaredNorm() / 5))));
}

TEST_CASE("psnr vs distance on a smooth field") {
    SynthSpec spec;
    spec.rows = 48;
    spec.cols = 48;
    spec.bands = 10;
    spec.correlation_length = 6.0;
    spec.seed = 3;
    const HyperCube cube = synth_cube(spec);
    const DistanceCurve a = psnr_vs_distance(cube, 4000, 9), b = psnr_vs_distance(cube, 4000, 9);
    CHECK(a.mean_psnr == b.mean_psnr);
    REQUIRE(a.distance.size() > 10);
    CHECK(a.mean_psnr.front() > a.baseline);
    REQUIRE(a.crossover.has_value());
    CHECK(*a.crossover > 1.0);
    std::size_t total = a.infinite_pairs;
    for (auto c : a.counts) total += c;
    CHECK(total == 4000);
    CHECK(finite_mean({1.0, kInfinitePsnr, 3.0}) == 2.0);
    CHECK(std::isinf(finite_mean({kInfinitePsnr})));
}
