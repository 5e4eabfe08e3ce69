#pragma once

#include "mosaic/cube.hpp"
#include "mosaic/measurement.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>

namespace mosaic {

struct ReconDims {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t bands = 0;
    std::size_t steps = 0;

    std::size_t outputs() const { return rows * cols * bands; }
    std::size_t inputs() const { return steps * rows * cols; }
    friend bool operator==(const ReconDims&, const ReconDims&) = default;
};

/// Bias-free linear map from serialized frames to a serialized cube.
struct LinearReconstructor {
    ReconDims dims;
    Eigen::MatrixXd weights;  // outputs x inputs

    std::size_t weight_count() const { return static_cast<std::size_t>(weights.size()); }
    friend bool operator==(const LinearReconstructor& a, const LinearReconstructor& b) {
        return a.dims == b.dims && a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
               a.weights == b.weights;
    }
};

LinearReconstructor init_zero(const ReconDims& dims);

/// Unclipped cube estimate; a linear map may leave the physical range.
struct CubeEstimate {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t bands = 0;
    Eigen::VectorXd values;  // (row, col, band) order

    double at(std::size_t r, std::size_t c, std::size_t b) const { return values[(r * cols + c) * bands + b]; }
};

CubeEstimate reconstruct(const LinearReconstructor& r, const Frames& y);

/// Batched estimate R * Y; columns are samples. No clipping.
Eigen::MatrixXd reconstruct_batch(const LinearReconstructor& r, const Eigen::MatrixXd& frames);

/// Ridge solution of  sum_i |x_i - R y_i|^2 + penalty |R|_F^2  with
/// penalty = l2_weight * n * outputs, which is the training objective
/// (mean per-entry MSE + l2_weight |R|^2) scaled by n * outputs.
/// Throws a numerical Error when the Gram matrix is rank deficient.
LinearReconstructor closed_form_reconstructor(const ReconDims& dims, const Eigen::MatrixXd& frames,
                                              const Eigen::MatrixXd& scenes, double l2_weight);

/// Moore-Penrose pseudo-inverse of a measurement matrix as a reconstructor.
LinearReconstructor pseudo_inverse_reconstructor(const ReconDims& dims, const Eigen::MatrixXd& h);

// RCON: "RCON", u32 rows, cols, bands, steps, then f64 weights row-major.
std::vector<std::uint8_t> encode_rcon(const LinearReconstructor& r);
LinearReconstructor read_rcon(std::span<const std::uint8_t> bytes);
void save_reconstructor(const LinearReconstructor& r, const std::filesystem::path& path);
LinearReconstructor load_reconstructor(const std::filesystem::path& path);

}  // namespace mosaic
