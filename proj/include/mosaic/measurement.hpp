#pragma once

#include "mosaic/cube.hpp"
#include "mosaic/layout.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <limits>

namespace mosaic {

struct MeasurementSpec {
    std::size_t steps = 1;
    double snr = 100.0;  // infinity disables noise
    std::uint64_t seed = 0;

    void validate() const;
};

/// Detector intensities, serialized step-major then row-major.
struct Frames {
    std::size_t steps = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    Eigen::VectorXd values;

    double at(std::size_t s, std::size_t r, std::size_t c) const { return values[(s * rows + r) * cols + c]; }
};

/// Transmission of every layout slot, bands x slots.
Eigen::MatrixXd slot_transmissions(const LayoutPattern& layout, const WavelengthGrid& grid);

/// y[s, r, c] = sum_b T(r, c, s)[b] x[r, c, b], noise-free.
Frames forward(const HyperCube& patch, const LayoutPattern& layout, std::size_t steps);

/// Batched forward model. Each column of `scenes` is one serialized patch
/// with the layout's dims; the result has steps*pixels rows.
Eigen::MatrixXd forward_batch(const LayoutPattern& layout, const WavelengthGrid& grid, std::size_t steps,
                              const Eigen::MatrixXd& scenes);

/// Noise standard deviation for a block of frames: mean |y| / snr.
double noise_sigma(const Eigen::MatrixXd& frames, double snr);

/// Adds i.i.d. Gaussian noise with sigma = mean|y| / snr. Column i draws
/// from its own stream so results do not depend on evaluation order.
void add_noise_inplace(Eigen::MatrixXd& frames, double snr, std::uint64_t seed);
Frames add_noise(const Frames& frames, const MeasurementSpec& spec);

inline constexpr std::size_t kDefaultMatrixCap = std::size_t{1} << 27;

/// Explicit (steps*M) x (M*B) measurement matrix; refuses beyond `max_entries`.
Eigen::MatrixXd build_H(const LayoutPattern& layout, const WavelengthGrid& grid, std::size_t steps,
                        std::size_t max_entries = kDefaultMatrixCap);

double compression_ratio(std::size_t steps, std::size_t baseline_steps = 40);

/// Debug export: step,row,col,value.
void write_frames_csv(std::ostream& out, const Frames& frames);

}  // namespace mosaic
