#include "mosaic/layout.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mosaic {

LayoutPattern LayoutPattern::indexed(std::size_t rows, std::size_t cols, std::vector<std::size_t> indices,
                                     FilterSet filters) {
    require(rows >= 1 && cols >= 1, "layout: dims must be at least 1 x 1");
    require(!filters.empty(), "layout: empty filter set");
    require(indices.size() == rows * cols, "layout: index count does not match dims");
    for (std::size_t i : indices) require(i < filters.size(), "layout: filter index out of range");
    for (const auto& f : filters.filters) require(f.fwhm > 0, "layout: filter fwhm must be positive");
    LayoutPattern p;
    p.rows_ = rows;
    p.cols_ = cols;
    p.mode_ = LayoutMode::indexed;
    p.indices_ = std::move(indices);
    p.filters_ = std::move(filters);
    return p;
}

LayoutPattern LayoutPattern::continuous(std::size_t rows, std::size_t cols, std::vector<FilterParams> params) {
    require(rows >= 1 && cols >= 1, "layout: dims must be at least 1 x 1");
    require(params.size() == rows * cols, "layout: parameter count does not match dims");
    for (const auto& f : params) require(f.fwhm > 0, "layout: filter fwhm must be positive");
    LayoutPattern p;
    p.rows_ = rows;
    p.cols_ = cols;
    p.mode_ = LayoutMode::continuous;
    p.params_ = std::move(params);
    return p;
}

FilterParams LayoutPattern::filter_of(std::size_t r, std::size_t c) const {
    require(r < rows_ && c < cols_, "layout: pixel out of bounds");
    return is_indexed() ? filters_[indices_[r * cols_ + c]] : params_[r * cols_ + c];
}

LayoutPattern LayoutPattern::with_slot_params(std::span<const FilterParams> params) const {
    require(params.size() == slot_count(), "layout: slot parameter count mismatch");
    LayoutPattern p = *this;
    if (is_indexed())
        p.filters_.filters.assign(params.begin(), params.end());
    else
        p.params_.assign(params.begin(), params.end());
    return p;
}

FilterParams filter_at(const LayoutPattern& layout, std::size_t r, std::size_t c, std::size_t step) {
    require(r < layout.rows() && c < layout.cols(), "filter_at: pixel out of bounds");
    return layout.filter_of((r + step) % layout.rows(), c);
}

std::size_t slot_at(const LayoutPattern& layout, std::size_t r, std::size_t c, std::size_t step) {
    return layout.slot_of((r + step) % layout.rows(), c);
}

LayoutPattern lvf_layout(const FilterSet& filters, std::size_t rows, std::size_t cols) {
    require(!filters.empty(), "lvf_layout: empty filter set");
    FilterSet sorted = filters;
    std::stable_sort(sorted.filters.begin(), sorted.filters.end(),
                     [](const FilterParams& a, const FilterParams& b) { return a.center < b.center; });
    std::vector<std::size_t> idx(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        std::fill_n(idx.begin() + static_cast<long>(r * cols), cols, r % sorted.size());
    return LayoutPattern::indexed(rows, cols, std::move(idx), std::move(sorted));
}

UnitCell squarish_unit_cell(std::size_t n) {
    require(n >= 1, "squarish_unit_cell: need at least one filter");
    UnitCell cell;
    cell.cell_cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (cell.cell_cols * cell.cell_cols < n) ++cell.cell_cols;
    while (cell.cell_cols > 1 && (cell.cell_cols - 1) * (cell.cell_cols - 1) >= n) --cell.cell_cols;
    cell.cell_rows = (n + cell.cell_cols - 1) / cell.cell_cols;
    const std::size_t cells = cell.cell_rows * cell.cell_cols;
    cell.assignment.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) cell.assignment[i] = i % n;
    cell.skew = cells == n ? 1 : 0;
    return cell;
}

LayoutPattern squarish_layout(const FilterSet& filters, std::size_t rows, std::size_t cols) {
    require(!filters.empty(), "squarish_layout: empty filter set");
    const UnitCell cell = squarish_unit_cell(filters.size());
    std::vector<std::size_t> idx(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t shift = static_cast<std::size_t>(cell.skew) * (r / cell.cell_rows);
        for (std::size_t c = 0; c < cols; ++c)
            idx[r * cols + c] = cell.at(r % cell.cell_rows, (c + shift) % cell.cell_cols);
    }
    return LayoutPattern::indexed(rows, cols, std::move(idx), filters);
}

LayoutPattern random_layout(std::size_t rows, std::size_t cols, const ParamDomain& domain, std::uint64_t seed) {
    require(domain.center_min <= domain.center_max && domain.fwhm_min <= domain.fwhm_max && domain.fwhm_min > 0,
            "random_layout: invalid domain");
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<FilterParams> params(rows * cols);
    for (auto& p : params) {
        const double a = unit(rng);
        const double b = unit(rng);
        p.center = domain.center_min + a * (domain.center_max - domain.center_min);
        p.fwhm = domain.fwhm_min + b * (domain.fwhm_max - domain.fwhm_min);
    }
    return LayoutPattern::continuous(rows, cols, std::move(params));
}

double scaled_distance(const FilterParams& a, const FilterParams& b, const ParamDomain& domain) {
    const ScaledParams ua = scale(a, domain);
    const ScaledParams ub = scale(b, domain);
    return std::hypot(ua.u_center - ub.u_center, ua.u_fwhm - ub.u_fwhm);
}

std::size_t nearest_filter(const FilterParams& f, const FilterSet& filters, const ParamDomain& domain) {
    require(!filters.empty(), "nearest_filter: empty filter set");
    std::size_t best = 0;
    double best_d = scaled_distance(f, filters[0], domain);
    for (std::size_t k = 1; k < filters.size(); ++k) {
        const double d = scaled_distance(f, filters[k], domain);
        if (d < best_d) {
            best = k;
            best_d = d;
        }
    }
    return best;
}

LayoutPattern snap_layout(const LayoutPattern& layout, const FilterSet& filters, const ParamDomain& domain) {
    require(!filters.empty(), "snap_layout: empty filter set");
    std::vector<std::size_t> idx(layout.pixels());
    for (std::size_t r = 0; r < layout.rows(); ++r)
        for (std::size_t c = 0; c < layout.cols(); ++c)
            idx[r * layout.cols() + c] = nearest_filter(layout.filter_of(r, c), filters, domain);
    return LayoutPattern::indexed(layout.rows(), layout.cols(), std::move(idx), filters);
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail_format("layout: bad number '" + std::string(s) + "'");
    return v;
}

std::size_t parse_size(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail_format("layout: bad integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string expect_key(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) fail_format("layout: missing '" + key + "'");
    if (line.rfind(key + " ", 0) != 0) fail_format("layout: expected '" + key + "', got '" + line + "'");
    return line.substr(key.size() + 1);
}

}  // namespace

void write_layout(std::ostream& out, const LayoutPattern& layout) {
    out << "mosaic-layout 1\n";
    out << "rows " << layout.rows() << "\n";
    out << "cols " << layout.cols() << "\n";
    out << "mode " << (layout.is_indexed() ? "indexed" : "continuous") << "\n";
    out << "scan_axis rows\n";
    if (layout.is_indexed()) {
        out << "filters " << layout.filters().size() << "\n";
        for (const auto& f : layout.filters().filters) out << fmt_double(f.center) << "," << fmt_double(f.fwhm) << "\n";
    }
    out << "pixels " << layout.pixels() << "\n";
    for (std::size_t r = 0; r < layout.rows(); ++r) {
        for (std::size_t c = 0; c < layout.cols(); ++c) {
            out << r << "," << c << ",";
            if (layout.is_indexed()) {
                out << layout.index_at(r, c) << "\n";
            } else {
                const FilterParams f = layout.filter_of(r, c);
                out << fmt_double(f.center) << "," << fmt_double(f.fwhm) << "\n";
            }
        }
    }
}

LayoutPattern read_layout(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "mosaic-layout 1") fail_format("layout: bad magic line");
    const std::size_t rows = parse_size(expect_key(in, "rows"));
    const std::size_t cols = parse_size(expect_key(in, "cols"));
    const std::string mode = expect_key(in, "mode");
    if (mode != "indexed" && mode != "continuous") fail_format("layout: unknown mode '" + mode + "'");
    if (expect_key(in, "scan_axis") != "rows") fail_format("layout: only scan_axis rows is supported");
    if (rows == 0 || cols == 0) fail_format("layout: dims must be at least 1 x 1");
    const bool indexed = mode == "indexed";
    FilterSet filters;
    if (indexed) {
        const std::size_t n = parse_size(expect_key(in, "filters"));
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::getline(in, line)) fail_format("layout: truncated filter list");
            const auto f = split(line, ',');
            if (f.size() != 2) fail_format("layout: bad filter record '" + line + "'");
            filters.filters.push_back({parse_double(f[0]), parse_double(f[1])});
        }
    }
    const std::size_t count = parse_size(expect_key(in, "pixels"));
    if (count != rows * cols) fail_format("layout: pixel count disagrees with dims");
    std::vector<std::size_t> idx(indexed ? count : 0);
    std::vector<FilterParams> params(indexed ? 0 : count);
    std::vector<char> seen(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) fail_format("layout: truncated pixel records");
        const auto f = split(line, ',');
        if (f.size() != (indexed ? 3u : 4u)) fail_format("layout: bad pixel record '" + line + "'");
        const std::size_t r = parse_size(f[0]);
        const std::size_t c = parse_size(f[1]);
        if (r >= rows || c >= cols) fail_format("layout: pixel record out of bounds");
        const std::size_t p = r * cols + c;
        if (seen[p]++) fail_format("layout: duplicate pixel record");
        if (indexed)
            idx[p] = parse_size(f[2]);
        else
            params[p] = {parse_double(f[2]), parse_double(f[3])};
    }
    try {
        return indexed ? LayoutPattern::indexed(rows, cols, std::move(idx), std::move(filters))
                       : LayoutPattern::continuous(rows, cols, std::move(params));
    } catch (const Error& e) {
        fail_format(e.what());
    }
}

void save_layout(const LayoutPattern& layout, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path.string());
    write_layout(out, layout);
}

LayoutPattern load_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path.string());
    return read_layout(in);
}

}  // namespace mosaic
