#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mosaic {

/// Dynamic-range ceiling for 32-bit imagery.
inline constexpr double kDefaultMaxValue = 4294967295.0;

// Band centers in nm; strictly increasing and uniformly spaced.
class WavelengthGrid {
public:
    WavelengthGrid() = default;
    explicit WavelengthGrid(std::vector<double> bands);

    static WavelengthGrid uniform(double first_nm, double last_nm, std::size_t count);

    std::size_t size() const { return bands_.size(); }
    double front() const { return bands_.front(); }
    double back() const { return bands_.back(); }
    double spacing() const { return (back() - front()) / static_cast<double>(size() - 1); }
    double operator[](std::size_t i) const { return bands_[i]; }
    std::span<const double> bands() const { return bands_; }

    friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

private:
    std::vector<double> bands_;
};

/// 40 bands, 450 nm to 940 nm inclusive.
WavelengthGrid default_grid();

/// Radiance cube stored (row, col, band) row-major. Immutable once built.
class HyperCube {
public:
    HyperCube() = default;
    HyperCube(std::size_t rows, std::size_t cols, WavelengthGrid grid, std::vector<double> data,
              double max_value = kDefaultMaxValue);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t bands() const { return grid_.size(); }
    std::size_t pixels() const { return rows_ * cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    const WavelengthGrid& grid() const { return grid_; }
    double max_value() const { return max_value_; }

    double at(std::size_t r, std::size_t c, std::size_t b) const {
        return data_[(r * cols_ + c) * bands() + b];
    }
    std::span<const double> spectrum(std::size_t r, std::size_t c) const {
        return {data_.data() + (r * cols_ + c) * bands(), bands()};
    }
    std::span<const double> data() const { return data_; }

    /// Serialized column vector in (row, col, band) order.
    Eigen::Map<const Eigen::VectorXd> vector() const {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }

    /// Copy of the rectangle [row0, row0+rows) x [col0, col0+cols).
    HyperCube region(std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) const;

    /// One band as a rows x cols image.
    Eigen::MatrixXd band_image(std::size_t band) const;

    /// Bands x pixels matrix of all spectra.
    Eigen::MatrixXd spectra_matrix() const;

    friend bool operator==(const HyperCube&, const HyperCube&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    WavelengthGrid grid_;
    double max_value_ = kDefaultMaxValue;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

enum class CubeFormat { flat_binary, csv_spectra };

/// HCUB layout: "HCUB", u32 rows, u32 cols, u32 bands, u32 band_count,
/// band_count f64 wavelengths, rows*cols*bands f32 payload. Little-endian.
HyperCube load_cube(const std::filesystem::path& path, CubeFormat format = CubeFormat::flat_binary);
HyperCube read_hcub(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_hcub(const HyperCube& cube);
void save_cube(const HyperCube& cube, const std::filesystem::path& path);

/// CSV spectra: one spectrum per row, no header. Produces an n x 1 x B cube.
/// When no grid is supplied a uniform 450-940 nm grid with B bands is used.
HyperCube read_csv_spectra(std::istream& in, const WavelengthGrid* grid = nullptr);

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::size_t rows = 64;
    std::size_t cols = 64;
    std::size_t bands = 40;
    std::size_t spectral_rank = 4;
    double correlation_length = 8.0;  // pixels
    double noise_floor = 1e-3;        // relative to the mean radiance
    double mean_radiance = 5.0e8;
    std::uint64_t seed = 0;
};

/// Sum of rank-many separable (spatial map x spectrum) terms plus white
/// noise, clipped at zero. Spatial maps are log-normal fields whose
/// underlying Gaussian field has correlation exp(-d^2 / (2 L^2)).
HyperCube synth_cube(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Partitioning and sampling
// ---------------------------------------------------------------------------

enum class SplitAxis { columns, rows };

/// Left part holds [0, train) along the axis, right part the remainder.
std::pair<HyperCube, HyperCube> split_columns(const HyperCube& cube, std::size_t train,
                                              SplitAxis axis = SplitAxis::columns);

/// Mirror (column flip) followed by quarter turns counter-clockwise.
struct Augmentation {
    bool mirror = false;
    int quarter_turns = 0;

    int code() const { return (mirror ? 4 : 0) + quarter_turns; }
    static Augmentation from_code(int code) { return {code >= 4, code % 4}; }
    friend bool operator==(const Augmentation&, const Augmentation&) = default;
};

HyperCube augment(const HyperCube& patch, Augmentation aug);

/// Column-per-sample matrix of serialized (rows, cols, bands) cubes.
struct SampleSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    WavelengthGrid grid;
    double max_value = kDefaultMaxValue;
    Eigen::MatrixXd values;

    std::size_t count() const { return static_cast<std::size_t>(values.cols()); }
    std::size_t dim() const { return rows * cols * grid.size(); }
    SampleSet subset(std::span<const std::size_t> indices) const;
    HyperCube sample(std::size_t i) const;
};

struct PatchOrigin {
    std::size_t row = 0;
    std::size_t col = 0;
    Augmentation augmentation;
};

struct PatchBatch {
    std::vector<HyperCube> patches;
    std::vector<PatchOrigin> origins;
    std::uint64_t seed = 0;

    std::size_t size() const { return patches.size(); }
    SampleSet to_samples() const;
};

/// n spectra drawn uniformly with replacement; returned as 1 x 1 samples.
SampleSet sample_spectra(const HyperCube& cube, std::size_t n, std::uint64_t seed);

PatchBatch sample_patches(const HyperCube& cube, std::size_t n, std::size_t size, bool augment,
                          std::uint64_t seed);

/// Every size x size patch at every anchor, without augmentation.
PatchBatch all_patches(const HyperCube& cube, std::size_t size);

/// Number of validation items: round(count * fraction), kept in [1, count-1].
std::size_t validation_count(std::size_t count, double val_fraction);

std::pair<SampleSet, SampleSet> train_val_split(const SampleSet& samples, double val_fraction,
                                                std::uint64_t seed);
std::pair<PatchBatch, PatchBatch> train_val_split(const PatchBatch& batch, double val_fraction,
                                                  std::uint64_t seed);

/// Replicates each 1 x 1 spectrum across a 1 x copies strip.
SampleSet replicate_spectra(const SampleSet& spectra, std::size_t copies);

}  // namespace mosaic
