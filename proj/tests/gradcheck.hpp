#pragma once

#include "helpers.hpp"

#include "mosaic/train.hpp"

#include <algorithm>
#include <vector>

namespace testing_util {

struct GradCheckResult {
    std::vector<double> rel;  // one entry per checked parameter
    double worst = 0.0;
    double fraction_below(double tol) const {
        const auto n = std::count_if(rel.begin(), rel.end(), [&](double r) { return r < tol; });
        return rel.empty() ? 1.0 : static_cast<double>(n) / static_cast<double>(rel.size());
    }
};

// Central differences of evaluate_loss in scaled slot units and raw weights.
inline GradCheckResult check_gradients(const mosaic::Model& model, const mosaic::SampleSet& batch,
                                       std::uint64_t seed, const mosaic::GradientRequest& req, double h) {
    using namespace mosaic;
    const Gradients g = backward(model, batch, seed, req);
    GradCheckResult out;
    const auto loss = [&](const Model& m) { return evaluate_loss(m, batch, seed, req).total; };
    const auto record = [&](double analytic, double numeric) {
        out.rel.push_back(rel_err(analytic, numeric));
        out.worst = std::max(out.worst, out.rel.back());
    };
    if (req.reconstructor) {
        Model m = model;
        for (Eigen::Index i = 0; i < m.reconstructor.weights.size(); ++i) {
            const double w0 = model.reconstructor.weights.data()[i];
            m.reconstructor.weights.data()[i] = w0 + h;
            const double up = loss(m);
            m.reconstructor.weights.data()[i] = w0 - h;
            const double down = loss(m);
            m.reconstructor.weights.data()[i] = w0;
            record(g.reconstructor.data()[i], (up - down) / (2 * h));
        }
    }
    if (req.slots) {
        const std::size_t slots = model.layout.slot_count();
        std::vector<FilterParams> base(slots);
        for (std::size_t k = 0; k < slots; ++k) base[k] = model.layout.slot_params(k);
        for (std::size_t k = 0; k < slots; ++k)
            for (int axis = 0; axis < 2; ++axis) {
                const ScaledParams u = scale(base[k], model.domain);
                const auto shifted = [&](double d) {
                    ScaledParams v = u;
                    (axis == 0 ? v.u_center : v.u_fwhm) += d;
                    std::vector<FilterParams> p = base;
                    p[k] = unscale(v, model.domain);
                    Model m = model;
                    m.layout = model.layout.with_slot_params(p);
                    return loss(m);
                };
                record(g.slots[static_cast<Eigen::Index>(2 * k + axis)], (shifted(h) - shifted(-h)) / (2 * h));
            }
    }
    return out;
}

}  // namespace testing_util
