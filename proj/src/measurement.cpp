#include "mosaic/measurement.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mosaic {

void MeasurementSpec::validate() const {
    require(steps >= 1, "measurement: steps must be at least 1");
    require(snr > 0 && !std::isnan(snr), "measurement: snr must be positive");
}

Eigen::MatrixXd slot_transmissions(const LayoutPattern& layout, const WavelengthGrid& grid) {
    Eigen::MatrixXd t(grid.size(), layout.slot_count());
    for (std::size_t k = 0; k < layout.slot_count(); ++k) t.col(k) = transmission(layout.slot_params(k), grid);
    return t;
}

Eigen::MatrixXd forward_batch(const LayoutPattern& layout, const WavelengthGrid& grid, std::size_t steps,
                              const Eigen::MatrixXd& scenes) {
    require(steps >= 1, "forward: steps must be at least 1");
    const auto bands = static_cast<Eigen::Index>(grid.size());
    const std::size_t m_pixels = layout.pixels();
    require(static_cast<std::size_t>(scenes.rows()) == m_pixels * grid.size(),
            "forward: scene dims do not match the layout");
    const Eigen::MatrixXd t = slot_transmissions(layout, grid);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(steps * m_pixels), scenes.cols());
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t r = 0; r < layout.rows(); ++r) {
            for (std::size_t c = 0; c < layout.cols(); ++c) {
                const std::size_t m = r * layout.cols() + c;
                const auto k = static_cast<Eigen::Index>(s * m_pixels + m);
                y.row(k).noalias() =
                    t.col(slot_at(layout, r, c, s)).transpose() * scenes.middleRows(static_cast<Eigen::Index>(m) * bands, bands);
            }
        }
    }
    return y;
}

Frames forward(const HyperCube& patch, const LayoutPattern& layout, std::size_t steps) {
    require(patch.rows() == layout.rows() && patch.cols() == layout.cols(),
            "forward: patch is " + std::to_string(patch.rows()) + "x" + std::to_string(patch.cols()) +
                " but layout is " + std::to_string(layout.rows()) + "x" + std::to_string(layout.cols()));
    const Eigen::MatrixXd y = forward_batch(layout, patch.grid(), steps, patch.vector());
    return {steps, layout.rows(), layout.cols(), y.col(0)};
}

double noise_sigma(const Eigen::MatrixXd& frames, double snr) {
    require(snr > 0, "noise: snr must be positive");
    if (std::isinf(snr) || frames.size() == 0) return 0.0;
    return frames.cwiseAbs().mean() / snr;
}

void add_noise_inplace(Eigen::MatrixXd& frames, double snr, std::uint64_t seed) {
    const double sigma = noise_sigma(frames, snr);
    if (sigma == 0.0) return;
    for (Eigen::Index i = 0; i < frames.cols(); ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        std::normal_distribution<double> normal(0.0, sigma);
        for (Eigen::Index k = 0; k < frames.rows(); ++k) frames(k, i) += normal(rng);
    }
}

Frames add_noise(const Frames& frames, const MeasurementSpec& spec) {
    spec.validate();
    Eigen::MatrixXd y = frames.values;
    add_noise_inplace(y, spec.snr, spec.seed);
    return {frames.steps, frames.rows, frames.cols, y.col(0)};
}

Eigen::MatrixXd build_H(const LayoutPattern& layout, const WavelengthGrid& grid, std::size_t steps,
                        std::size_t max_entries) {
    require(steps >= 1, "build_H: steps must be at least 1");
    const std::size_t m_pixels = layout.pixels();
    const std::size_t bands = grid.size();
    const double entries = static_cast<double>(steps) * m_pixels * m_pixels * bands;
    require(entries <= static_cast<double>(max_entries),
            "build_H: " + std::to_string(static_cast<long double>(entries)) +
                " entries exceed the cap; use the matrix-free forward model");
    const Eigen::MatrixXd t = slot_transmissions(layout, grid);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps * m_pixels),
                                              static_cast<Eigen::Index>(m_pixels * bands));
    for (std::size_t s = 0; s < steps; ++s)
        for (std::size_t r = 0; r < layout.rows(); ++r)
            for (std::size_t c = 0; c < layout.cols(); ++c) {
                const std::size_t m = r * layout.cols() + c;
                h.row(static_cast<Eigen::Index>(s * m_pixels + m))
                    .segment(static_cast<Eigen::Index>(m * bands), static_cast<Eigen::Index>(bands)) =
                    t.col(slot_at(layout, r, c, s)).transpose();
            }
    return h;
}

double compression_ratio(std::size_t steps, std::size_t baseline_steps) {
    require(steps >= 1, "compression_ratio: steps must be at least 1");
    return static_cast<double>(baseline_steps) / static_cast<double>(steps);
}

void write_frames_csv(std::ostream& out, const Frames& frames) {
    out << "step,row,col,value\n";
    char buf[64];
    for (std::size_t s = 0; s < frames.steps; ++s)
        for (std::size_t r = 0; r < frames.rows; ++r)
            for (std::size_t c = 0; c < frames.cols; ++c) {
                std::snprintf(buf, sizeof buf, "%.9g", frames.at(s, r, c));
                out << s << "," << r << "," << c << "," << buf << "\n";
            }
}

}  // namespace mosaic
