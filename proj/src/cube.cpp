#include "mosaic/cube.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace mosaic {

static_assert(std::endian::native == std::endian::little, "HCUB I/O assumes a little-endian host");

WavelengthGrid::WavelengthGrid(std::vector<double> bands) : bands_(std::move(bands)) {
    require(bands_.size() >= 2, "wavelength grid needs at least 2 bands");
    for (std::size_t i = 1; i < bands_.size(); ++i) {
        require(std::isfinite(bands_[i]) && bands_[i] > bands_[i - 1],
                "wavelength grid must be strictly increasing (band " + std::to_string(i) + ")");
    }
    const double step = spacing();
    for (std::size_t i = 1; i < bands_.size(); ++i) {
        const double d = bands_[i] - bands_[i - 1];
        require(std::abs(d - step) <= 1e-9 * std::abs(step) + 1e-9 * std::abs(bands_[i]),
                "wavelength grid must be uniformly spaced (band " + std::to_string(i) + ")");
    }
}

WavelengthGrid WavelengthGrid::uniform(double first_nm, double last_nm, std::size_t count) {
    require(count >= 2, "wavelength grid needs at least 2 bands");
    require(last_nm > first_nm, "wavelength grid range must be increasing");
    std::vector<double> bands(count);
    const double step = (last_nm - first_nm) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) bands[i] = first_nm + step * static_cast<double>(i);
    bands.back() = last_nm;
    return WavelengthGrid(std::move(bands));
}

WavelengthGrid default_grid() { return WavelengthGrid::uniform(450.0, 940.0, 40); }

// ---------------------------------------------------------------------------

HyperCube::HyperCube(std::size_t rows, std::size_t cols, WavelengthGrid grid, std::vector<double> data,
                     double max_value)
    : rows_(rows), cols_(cols), grid_(std::move(grid)), max_value_(max_value), data_(std::move(data)) {
    require(rows_ >= 1 && cols_ >= 1, "cube must have at least one pixel");
    require(grid_.size() >= 2, "cube needs a wavelength grid");
    require(max_value_ > 0 && std::isfinite(max_value_), "cube max_value must be positive");
    require(data_.size() == rows_ * cols_ * grid_.size(),
            "cube payload has " + std::to_string(data_.size()) + " values, expected " +
                std::to_string(rows_ * cols_ * grid_.size()));
    // f32 storage can round 2^32-1 up by one ulp.
    const double ceiling = max_value_ * (1.0 + 0x1p-23);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const double v = data_[i];
        if (!std::isfinite(v) || v < 0.0 || v > ceiling) {
            const std::size_t b = i % bands();
            const std::size_t p = i / bands();
            fail("cube value out of range at (row " + std::to_string(p / cols_) + ", col " +
                 std::to_string(p % cols_) + ", band " + std::to_string(b) + ")");
        }
    }
}

HyperCube HyperCube::region(std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) const {
    require(rows >= 1 && cols >= 1 && row0 + rows <= rows_ && col0 + cols <= cols_, "region outside cube");
    std::vector<double> out;
    out.reserve(rows * cols * bands());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* begin = data_.data() + ((row0 + r) * cols_ + col0) * bands();
        out.insert(out.end(), begin, begin + cols * bands());
    }
    return HyperCube(rows, cols, grid_, std::move(out), max_value_);
}

Eigen::MatrixXd HyperCube::band_image(std::size_t band) const {
    require(band < bands(), "band index out of range");
    Eigen::MatrixXd img(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) img(r, c) = at(r, c, band);
    return img;
}

Eigen::MatrixXd HyperCube::spectra_matrix() const {
    return Eigen::Map<const Eigen::MatrixXd>(data_.data(), bands(), pixels());
}

// ---------------------------------------------------------------------------
// HCUB

namespace {

template <typename T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t& offset) {
    if (offset + sizeof(T) > bytes.size()) fail_format("HCUB: truncated header");
    T v;
    std::memcpy(&v, bytes.data() + offset, sizeof(T));
    offset += sizeof(T);
    return v;
}

template <typename T>
void write_le(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

HyperCube read_hcub(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "HCUB", 4) != 0) fail_format("HCUB: bad magic");
    std::size_t off = 4;
    const auto rows = read_le<std::uint32_t>(bytes, off);
    const auto cols = read_le<std::uint32_t>(bytes, off);
    const auto bands = read_le<std::uint32_t>(bytes, off);
    const auto band_count = read_le<std::uint32_t>(bytes, off);
    if (rows == 0 || cols == 0 || bands < 2) fail_format("HCUB: degenerate dimensions");
    if (band_count != bands)
        fail_format("HCUB: band_count " + std::to_string(band_count) + " disagrees with dims " +
                    std::to_string(bands));
    std::vector<double> wl(band_count);
    for (auto& w : wl) w = read_le<double>(bytes, off);

    const std::size_t n = std::size_t{rows} * cols * bands;
    const std::size_t payload = bytes.size() - off;
    if (payload != n * sizeof(float))
        fail_format("HCUB: dimension mismatch, payload holds " + std::to_string(payload / sizeof(float)) +
                    " values, header requires " + std::to_string(n));
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        float v;
        std::memcpy(&v, bytes.data() + off + i * sizeof(float), sizeof(float));
        if (!std::isfinite(v)) {
            const std::size_t p = i / bands;
            fail_format("HCUB: non-finite value at (row " + std::to_string(p / cols) + ", col " +
                        std::to_string(p % cols) + ", band " + std::to_string(i % bands) + ")");
        }
        data[i] = v;
    }
    WavelengthGrid grid;
    try {
        grid = WavelengthGrid(std::move(wl));
    } catch (const Error& e) {
        fail_format(std::string("HCUB: ") + e.what());
    }
    return HyperCube(rows, cols, std::move(grid), std::move(data));
}

std::vector<std::uint8_t> encode_hcub(const HyperCube& cube) {
    std::vector<std::uint8_t> out;
    out.reserve(20 + cube.bands() * 8 + cube.size() * 4);
    out.insert(out.end(), {'H', 'C', 'U', 'B'});
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cube.rows()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cube.cols()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cube.bands()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cube.bands()));
    for (double w : cube.grid().bands()) write_le<double>(out, w);
    for (double v : cube.data()) write_le<float>(out, static_cast<float>(v));
    return out;
}

void save_cube(const HyperCube& cube, const std::filesystem::path& path) {
    const auto bytes = encode_hcub(cube);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

HyperCube read_csv_spectra(std::istream& in, const WavelengthGrid* grid) {
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t width = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t fields = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            while (p < comma && *p == ' ') ++p;
            double v = 0;
            auto [ptr, ec] = std::from_chars(p, comma, v);
            while (ptr < comma && *ptr == ' ') ++ptr;
            if (ec != std::errc() || ptr != comma)
                fail_format("CSV: malformed number at row " + std::to_string(rows) + ", column " +
                            std::to_string(fields));
            if (!std::isfinite(v))
                fail_format("CSV: non-finite value at row " + std::to_string(rows) + ", column " +
                            std::to_string(fields));
            data.push_back(v);
            ++fields;
            p = comma + 1;
        }
        if (rows == 0) width = fields;
        if (fields != width)
            fail_format("CSV: row " + std::to_string(rows) + " has " + std::to_string(fields) +
                        " values, expected " + std::to_string(width));
        ++rows;
    }
    if (rows == 0) fail_format("CSV: no spectra");
    WavelengthGrid g = grid ? *grid : WavelengthGrid::uniform(450.0, 940.0, width);
    if (g.size() != width)
        fail_format("CSV: " + std::to_string(width) + " columns but grid has " + std::to_string(g.size()) +
                    " bands");
    return HyperCube(rows, 1, std::move(g), std::move(data));
}

HyperCube load_cube(const std::filesystem::path& path, CubeFormat format) {
    if (!std::filesystem::exists(path)) fail("no such file: " + path.string());
    if (format == CubeFormat::flat_binary) return read_hcub(read_file(path));
    std::ifstream in(path);
    if (!in) fail("cannot open " + path.string());
    return read_csv_spectra(in);
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

// Periodic separable convolution of a white field with a Gaussian kernel.
Eigen::MatrixXd smooth_field(Rng& rng, std::size_t rows, std::size_t cols, double corr_len) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd field(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) field(r, c) = normal(rng);
    if (corr_len > 0) {
        // Smoothing with std s gives an autocorrelation of std s*sqrt(2).
        const double s = corr_len / std::sqrt(2.0);
        const int radius = static_cast<int>(std::ceil(4.0 * s));
        std::vector<double> kernel(2 * radius + 1);
        for (int k = -radius; k <= radius; ++k) kernel[k + radius] = std::exp(-0.5 * k * k / (s * s));
        const auto wrap = [](long i, long n) { return static_cast<Eigen::Index>(((i % n) + n) % n); };
        Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                for (int k = -radius; k <= radius; ++k)
                    tmp(r, c) += kernel[k + radius] * field(wrap(long(r) + k, long(rows)), c);
        field.setZero();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                for (int k = -radius; k <= radius; ++k)
                    field(r, c) += kernel[k + radius] * tmp(r, wrap(long(c) + k, long(cols)));
    }
    const double mean = field.mean();
    field.array() -= mean;
    const double sd = std::sqrt(field.squaredNorm() / static_cast<double>(field.size()));
    if (sd > 0) field /= sd;
    return field;
}

// Positive, smooth spectrum: baseline plus a few Gaussian bumps.
Eigen::VectorXd base_spectrum(Rng& rng, std::size_t bands) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd s = Eigen::VectorXd::Constant(bands, 0.2 + 0.3 * unit(rng));
    for (int bump = 0; bump < 3; ++bump) {
        const double center = unit(rng) * static_cast<double>(bands - 1);
        const double width = 1.5 + unit(rng) * static_cast<double>(bands) / 4.0;
        const double height = 0.3 + unit(rng);
        for (std::size_t b = 0; b < bands; ++b) {
            const double d = (static_cast<double>(b) - center) / width;
            s[b] += height * std::exp(-0.5 * d * d);
        }
    }
    return s / s.mean();
}

}  // namespace

HyperCube synth_cube(const SynthSpec& spec) {
    require(spec.rows >= 1 && spec.cols >= 1, "synth: dims must be positive");
    require(spec.bands >= 2, "synth: need at least 2 bands");
    require(spec.spectral_rank >= 1 && spec.spectral_rank <= spec.bands, "synth: spectral_rank must be in [1, bands]");
    require(spec.correlation_length >= 0 && std::isfinite(spec.correlation_length),
            "synth: correlation length must be >= 0");
    require(spec.noise_floor >= 0, "synth: noise_floor must be >= 0");
    require(spec.mean_radiance > 0 && spec.mean_radiance < kDefaultMaxValue, "synth: mean_radiance out of range");

    const std::size_t pixels = spec.rows * spec.cols;
    Eigen::MatrixXd spectra(spec.bands, spec.spectral_rank);
    Eigen::MatrixXd maps(pixels, spec.spectral_rank);
    for (std::size_t k = 0; k < spec.spectral_rank; ++k) {
        Rng srng(derive_seed(spec.seed, {k, 1}));
        spectra.col(k) = base_spectrum(srng, spec.bands) * std::pow(0.5, static_cast<double>(k));
        Rng mrng(derive_seed(spec.seed, {k, 2}));
        const Eigen::MatrixXd field = smooth_field(mrng, spec.rows, spec.cols, spec.correlation_length);
        for (std::size_t r = 0; r < spec.rows; ++r)
            for (std::size_t c = 0; c < spec.cols; ++c) maps(r * spec.cols + c, k) = std::exp(0.4 * field(r, c));
    }
    Eigen::MatrixXd clean = spectra * maps.transpose();  // bands x pixels
    clean *= spec.mean_radiance / clean.mean();

    std::vector<double> data(pixels * spec.bands);
    Rng nrng(derive_seed(spec.seed, {0, 3}));
    std::normal_distribution<double> normal;
    const double sigma = spec.noise_floor * spec.mean_radiance;
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t b = 0; b < spec.bands; ++b) {
            double v = clean(b, p);
            if (sigma > 0) v += sigma * normal(nrng);
            data[p * spec.bands + b] = std::clamp(v, 0.0, kDefaultMaxValue);
        }
    }
    return HyperCube(spec.rows, spec.cols, WavelengthGrid::uniform(450.0, 940.0, spec.bands), std::move(data));
}

// ---------------------------------------------------------------------------
// Partitioning and sampling

std::pair<HyperCube, HyperCube> split_columns(const HyperCube& cube, std::size_t train, SplitAxis axis) {
    if (axis == SplitAxis::columns) {
        require(train > 0 && train < cube.cols(), "split: train_cols must be in (0, cols)");
        return {cube.region(0, 0, cube.rows(), train), cube.region(0, train, cube.rows(), cube.cols() - train)};
    }
    require(train > 0 && train < cube.rows(), "split: train_rows must be in (0, rows)");
    return {cube.region(0, 0, train, cube.cols()), cube.region(train, 0, cube.rows() - train, cube.cols())};
}

HyperCube augment(const HyperCube& patch, Augmentation aug) {
    require(aug.quarter_turns >= 0 && aug.quarter_turns < 4, "augmentation: quarter_turns must be in [0, 4)");
    std::size_t rows = patch.rows();
    std::size_t cols = patch.cols();
    const std::size_t bands = patch.bands();
    std::vector<double> cur(patch.data().begin(), patch.data().end());
    std::vector<double> next(cur.size());
    if (aug.mirror) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                std::copy_n(cur.data() + (r * cols + (cols - 1 - c)) * bands, bands,
                            next.data() + (r * cols + c) * bands);
        cur.swap(next);
    }
    for (int t = 0; t < aug.quarter_turns; ++t) {
        // Counter-clockwise: new(i, j) = old(j, cols-1-i), new dims cols x rows.
        for (std::size_t i = 0; i < cols; ++i)
            for (std::size_t j = 0; j < rows; ++j)
                std::copy_n(cur.data() + (j * cols + (cols - 1 - i)) * bands, bands,
                            next.data() + (i * rows + j) * bands);
        std::swap(rows, cols);
        cur.swap(next);
    }
    return HyperCube(rows, cols, patch.grid(), std::move(cur), patch.max_value());
}

SampleSet SampleSet::subset(std::span<const std::size_t> indices) const {
    SampleSet out{rows, cols, grid, max_value, Eigen::MatrixXd(values.rows(), indices.size())};
    for (std::size_t i = 0; i < indices.size(); ++i) out.values.col(i) = values.col(indices[i]);
    return out;
}

HyperCube SampleSet::sample(std::size_t i) const {
    require(i < count(), "sample index out of range");
    std::vector<double> v(values.col(i).data(), values.col(i).data() + values.rows());
    return HyperCube(rows, cols, grid, std::move(v), max_value);
}

SampleSet PatchBatch::to_samples() const {
    require(!patches.empty(), "patch batch is empty");
    const HyperCube& first = patches.front();
    SampleSet out{first.rows(), first.cols(), first.grid(), first.max_value(),
                  Eigen::MatrixXd(first.size(), patches.size())};
    for (std::size_t i = 0; i < patches.size(); ++i) {
        require(patches[i].rows() == first.rows() && patches[i].cols() == first.cols() &&
                    patches[i].grid() == first.grid(),
                "patch batch mixes shapes or grids");
        out.values.col(i) = patches[i].vector();
    }
    return out;
}

SampleSet sample_spectra(const HyperCube& cube, std::size_t n, std::uint64_t seed) {
    require(n > 0, "sample_spectra: n must be positive");
    require(!cube.empty(), "sample_spectra: empty cube");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, cube.pixels() - 1);
    SampleSet out{1, 1, cube.grid(), cube.max_value(), Eigen::MatrixXd(cube.bands(), n)};
    const Eigen::MatrixXd all = cube.spectra_matrix();
    for (std::size_t i = 0; i < n; ++i) out.values.col(i) = all.col(pick(rng));
    return out;
}

PatchBatch sample_patches(const HyperCube& cube, std::size_t n, std::size_t size, bool augment_patches,
                          std::uint64_t seed) {
    require(size >= 1 && size <= std::min(cube.rows(), cube.cols()), "sample_patches: patch larger than cube");
    const std::size_t anchors_r = cube.rows() - size + 1;
    const std::size_t anchors_c = cube.cols() - size + 1;
    const std::size_t variants = augment_patches ? 8 : 1;
    require(n <= anchors_r * anchors_c * variants,
            "sample_patches: " + std::to_string(n) + " patches requested but only " +
                std::to_string(anchors_r * anchors_c * variants) + " distinct patches exist");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick_r(0, anchors_r - 1);
    std::uniform_int_distribution<std::size_t> pick_c(0, anchors_c - 1);
    std::uniform_int_distribution<int> pick_aug(0, static_cast<int>(variants) - 1);
    std::set<std::tuple<std::size_t, std::size_t, int>> seen;
    PatchBatch batch;
    batch.seed = seed;
    batch.patches.reserve(n);
    while (batch.patches.size() < n) {
        const std::size_t r = pick_r(rng);
        const std::size_t c = pick_c(rng);
        const int code = pick_aug(rng);
        if (!seen.emplace(r, c, code).second) continue;
        const Augmentation aug = Augmentation::from_code(code);
        batch.patches.push_back(augment(cube.region(r, c, size, size), aug));
        batch.origins.push_back({r, c, aug});
    }
    return batch;
}

PatchBatch all_patches(const HyperCube& cube, std::size_t size) {
    require(size >= 1 && size <= std::min(cube.rows(), cube.cols()), "all_patches: patch larger than cube");
    PatchBatch batch;
    for (std::size_t r = 0; r + size <= cube.rows(); ++r)
        for (std::size_t c = 0; c + size <= cube.cols(); ++c) {
            batch.patches.push_back(cube.region(r, c, size, size));
            batch.origins.push_back({r, c, {}});
        }
    return batch;
}

std::size_t validation_count(std::size_t count, double val_fraction) {
    require(val_fraction > 0.0 && val_fraction < 1.0, "val_fraction must be in (0, 1)");
    require(count >= 2, "train/val split needs at least 2 items");
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(count) * val_fraction));
    return std::clamp<std::size_t>(k, 1, count - 1);
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, double val_fraction,
                                                                            std::uint64_t seed) {
    const std::size_t n_val = validation_count(count, val_fraction);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<long>(n_val));
    std::vector<std::size_t> train(idx.begin() + static_cast<long>(n_val), idx.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(val)};
}

}  // namespace

std::pair<SampleSet, SampleSet> train_val_split(const SampleSet& samples, double val_fraction, std::uint64_t seed) {
    require(samples.count() > 0, "train_val_split: empty input");
    auto [train, val] = split_indices(samples.count(), val_fraction, seed);
    return {samples.subset(train), samples.subset(val)};
}

std::pair<PatchBatch, PatchBatch> train_val_split(const PatchBatch& batch, double val_fraction, std::uint64_t seed) {
    require(batch.size() > 0, "train_val_split: empty input");
    auto [train, val] = split_indices(batch.size(), val_fraction, seed);
    const auto pick = [&](const std::vector<std::size_t>& idx) {
        PatchBatch out;
        out.seed = batch.seed;
        for (std::size_t i : idx) {
            out.patches.push_back(batch.patches[i]);
            out.origins.push_back(batch.origins[i]);
        }
        return out;
    };
    return {pick(train), pick(val)};
}

SampleSet replicate_spectra(const SampleSet& spectra, std::size_t copies) {
    require(spectra.rows == 1 && spectra.cols == 1, "replicate_spectra expects 1 x 1 samples");
    require(copies >= 1, "replicate_spectra: copies must be positive");
    const auto bands = static_cast<Eigen::Index>(spectra.grid.size());
    SampleSet out{1, copies, spectra.grid, spectra.max_value,
                  Eigen::MatrixXd(bands * static_cast<Eigen::Index>(copies), spectra.values.cols())};
    for (std::size_t k = 0; k < copies; ++k) out.values.middleRows(static_cast<Eigen::Index>(k) * bands, bands) = spectra.values;
    return out;
}

}  // namespace mosaic
