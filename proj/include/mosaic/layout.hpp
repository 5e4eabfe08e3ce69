#pragma once

#include "mosaic/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace mosaic {

enum class LayoutMode { indexed, continuous };

/// Per-pixel filter assignment on a rows x cols detector. Rows are the scan
/// direction. Indexed layouts reference an embedded FilterSet; continuous
/// layouts carry their own parameters per pixel.
class LayoutPattern {
public:
    LayoutPattern() = default;

    static LayoutPattern indexed(std::size_t rows, std::size_t cols, std::vector<std::size_t> indices,
                                 FilterSet filters);
    static LayoutPattern continuous(std::size_t rows, std::size_t cols, std::vector<FilterParams> params);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t pixels() const { return rows_ * cols_; }
    LayoutMode mode() const { return mode_; }
    bool is_indexed() const { return mode_ == LayoutMode::indexed; }

    const FilterSet& filters() const { return filters_; }
    const std::vector<std::size_t>& indices() const { return indices_; }
    const std::vector<FilterParams>& params() const { return params_; }

    std::size_t index_at(std::size_t r, std::size_t c) const { return indices_[r * cols_ + c]; }
    FilterParams filter_of(std::size_t r, std::size_t c) const;

    /// Number of independent parameter pairs: the filter count for indexed
    /// layouts, the pixel count for continuous ones.
    std::size_t slot_count() const { return is_indexed() ? filters_.size() : pixels(); }
    /// Slot of pixel (r, c) itself.
    std::size_t slot_of(std::size_t r, std::size_t c) const {
        return is_indexed() ? indices_[r * cols_ + c] : r * cols_ + c;
    }
    FilterParams slot_params(std::size_t slot) const { return is_indexed() ? filters_[slot] : params_[slot]; }
    /// Copy with every slot's parameters replaced.
    LayoutPattern with_slot_params(std::span<const FilterParams> params) const;

    friend bool operator==(const LayoutPattern&, const LayoutPattern&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    LayoutMode mode_ = LayoutMode::indexed;
    std::vector<std::size_t> indices_;
    FilterSet filters_;
    std::vector<FilterParams> params_;
};

/// Filter seen by detector pixel (r, c) at push-broom step s: the layout
/// slides one row per step and wraps around periodically.
FilterParams filter_at(const LayoutPattern& layout, std::size_t r, std::size_t c, std::size_t step);
std::size_t slot_at(const LayoutPattern& layout, std::size_t r, std::size_t c, std::size_t step);

/// Rows carry filter (r mod N); filters are sorted by ascending center.
LayoutPattern lvf_layout(const FilterSet& filters, std::size_t rows, std::size_t cols);

struct UnitCell {
    std::size_t cell_rows = 1;
    std::size_t cell_cols = 1;
    std::vector<std::size_t> assignment;  // cell_rows x cell_cols, row-major
    int skew = 0;

    std::size_t at(std::size_t r, std::size_t c) const { return assignment[r * cell_cols + c]; }
};

UnitCell squarish_unit_cell(std::size_t n_filters);
LayoutPattern squarish_layout(const FilterSet& filters, std::size_t rows, std::size_t cols);

/// Independent uniform (center, fwhm) per pixel.
LayoutPattern random_layout(std::size_t rows, std::size_t cols, const ParamDomain& domain, std::uint64_t seed);

/// Nearest filter in scaled parameter space; ties go to the lowest index.
std::size_t nearest_filter(const FilterParams& f, const FilterSet& filters, const ParamDomain& domain);
double scaled_distance(const FilterParams& a, const FilterParams& b, const ParamDomain& domain);
LayoutPattern snap_layout(const LayoutPattern& layout, const FilterSet& filters, const ParamDomain& domain);

// Text export: header lines then one record per pixel. Doubles are written
// in shortest round-trip form so reading back is bit-exact.
void write_layout(std::ostream& out, const LayoutPattern& layout);
LayoutPattern read_layout(std::istream& in);
void save_layout(const LayoutPattern& layout, const std::filesystem::path& path);
LayoutPattern load_layout(const std::filesystem::path& path);

}  // namespace mosaic
