#pragma once

#include "mosaic/cube.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

namespace testing_util {

// Independent HCUB writer, byte by byte.
inline std::vector<std::uint8_t> hcub_bytes(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands,
                                            const std::vector<double>& wavelengths, const std::vector<float>& payload) {
    std::vector<std::uint8_t> out{'H', 'C', 'U', 'B'};
    const auto put = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    };
    const std::uint32_t count = static_cast<std::uint32_t>(wavelengths.size());
    put(&rows, 4);
    put(&cols, 4);
    put(&bands, 4);
    put(&count, 4);
    for (double w : wavelengths) put(&w, 8);
    for (float v : payload) put(&v, 4);
    return out;
}

inline mosaic::HyperCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed,
                                     double scale = 1e6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> data(rows * cols * bands);
    for (auto& v : data) v = std::round(u(rng) * scale);
    return {rows, cols, mosaic::WavelengthGrid::uniform(450.0, 940.0, bands), std::move(data)};
}

// Gaussian passband written out independently of the library.
inline double gaussian(double lambda, double center, double fwhm) {
    const double d = lambda - center;
    return std::exp(-4.0 * std::log(2.0) * d * d / (fwhm * fwhm));
}

inline double rel_err(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace testing_util
