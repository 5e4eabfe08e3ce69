#include "mosaic/reconstruct.hpp"

#include "mosaic/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mosaic {

LinearReconstructor init_zero(const ReconDims& dims) {
    require(dims.rows >= 1 && dims.cols >= 1 && dims.bands >= 1 && dims.steps >= 1,
            "reconstructor: dims must be positive");
    return {dims, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.outputs()),
                                        static_cast<Eigen::Index>(dims.inputs()))};
}

Eigen::MatrixXd reconstruct_batch(const LinearReconstructor& r, const Eigen::MatrixXd& frames) {
    require(frames.rows() == r.weights.cols(),
            "reconstruct: frames length " + std::to_string(frames.rows()) + " does not match reconstructor input " +
                std::to_string(r.weights.cols()));
    return r.weights * frames;
}

CubeEstimate reconstruct(const LinearReconstructor& r, const Frames& y) {
    require(static_cast<std::size_t>(y.values.size()) == r.dims.inputs(),
            "reconstruct: frames length " + std::to_string(y.values.size()) + " does not match reconstructor input " +
                std::to_string(r.dims.inputs()));
    return {r.dims.rows, r.dims.cols, r.dims.bands, r.weights * y.values};
}

LinearReconstructor closed_form_reconstructor(const ReconDims& dims, const Eigen::MatrixXd& frames,
                                              const Eigen::MatrixXd& scenes, double l2_weight) {
    require(frames.cols() >= 1 && frames.cols() == scenes.cols(), "closed form: need matching training pairs");
    require(static_cast<std::size_t>(frames.rows()) == dims.inputs() &&
                static_cast<std::size_t>(scenes.rows()) == dims.outputs(),
            "closed form: pair shapes do not match reconstructor dims");
    require(l2_weight >= 0, "closed form: l2_weight must be >= 0");
    const double n = static_cast<double>(frames.cols());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(frames.rows(), frames.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(frames);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    gram.diagonal().array() += l2_weight * n * static_cast<double>(dims.outputs());

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0) || d.minCoeff() <= 1e-12 * dmax)
        fail_numerical("closed form: Gram matrix is rank deficient (min pivot " + std::to_string(d.minCoeff()) +
                       ", max pivot " + std::to_string(dmax) + ")");
    const Eigen::MatrixXd rhs = frames * scenes.transpose();  // inputs x outputs
    LinearReconstructor r{dims, ldlt.solve(rhs).transpose()};
    if (!r.weights.allFinite()) fail_numerical("closed form: non-finite solution");
    return r;
}

LinearReconstructor pseudo_inverse_reconstructor(const ReconDims& dims, const Eigen::MatrixXd& h) {
    require(static_cast<std::size_t>(h.rows()) == dims.inputs() && static_cast<std::size_t>(h.cols()) == dims.outputs(),
            "pseudo inverse: H shape does not match reconstructor dims");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
    return {dims, cod.pseudoInverse()};
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& off) {
    if (off + sizeof(T) > bytes.size()) fail_format("RCON: truncated file");
    T v;
    std::memcpy(&v, bytes.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_rcon(const LinearReconstructor& r) {
    std::vector<std::uint8_t> out;
    out.reserve(20 + static_cast<std::size_t>(r.weights.size()) * 8);
    out.insert(out.end(), {'R', 'C', 'O', 'N'});
    for (std::size_t v : {r.dims.rows, r.dims.cols, r.dims.bands, r.dims.steps}) put(out, static_cast<std::uint32_t>(v));
    for (Eigen::Index i = 0; i < r.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < r.weights.cols(); ++j) put(out, r.weights(i, j));
    return out;
}

LinearReconstructor read_rcon(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "RCON", 4) != 0) fail_format("RCON: bad magic");
    std::size_t off = 4;
    ReconDims dims;
    dims.rows = get<std::uint32_t>(bytes, off);
    dims.cols = get<std::uint32_t>(bytes, off);
    dims.bands = get<std::uint32_t>(bytes, off);
    dims.steps = get<std::uint32_t>(bytes, off);
    if (dims.rows == 0 || dims.cols == 0 || dims.bands == 0 || dims.steps == 0) fail_format("RCON: zero dimension");
    const std::size_t n = dims.outputs() * dims.inputs();
    if (bytes.size() - off != n * sizeof(double))
        fail_format("RCON: payload holds " + std::to_string((bytes.size() - off) / sizeof(double)) +
                    " weights, header requires " + std::to_string(n));
    LinearReconstructor r = init_zero(dims);
    for (Eigen::Index i = 0; i < r.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < r.weights.cols(); ++j) {
            const double w = get<double>(bytes, off);
            if (!std::isfinite(w)) fail_format("RCON: non-finite weight");
            r.weights(i, j) = w;
        }
    return r;
}

void save_reconstructor(const LinearReconstructor& r, const std::filesystem::path& path) {
    const auto bytes = encode_rcon(r);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LinearReconstructor load_reconstructor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return read_rcon(bytes);
}

}  // namespace mosaic
