#include "mosaic/train.hpp"

#include "mosaic/error.hpp"
#include "mosaic/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

namespace mosaic {

void TrainConfig::validate() const {
    require(learning_rate > 0 && std::isfinite(learning_rate), "train: learning_rate must be positive");
    require(l2_weight >= 0 && std::isfinite(l2_weight), "train: l2_weight must be >= 0");
    require(batch_size >= 1, "train: batch_size must be at least 1");
    require(epochs >= 1, "train: epochs must be at least 1");
    require(val_fraction > 0 && val_fraction < 1, "train: val_fraction must be in (0, 1)");
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0, "train: invalid Adam constants");
    if (lorentzian.enabled) {
        require(lorentzian.width > 0, "train: Lorentzian width A must be positive");
        require(!lorentzian.targets.empty(), "train: Lorentzian regularizer needs targets");
        require(std::isfinite(lorentzian.alpha_reg), "train: alpha_reg must be finite");
    }
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
    require(params.size() == grads.size(), "adam: parameter/gradient size mismatch");
    require(static_cast<std::size_t>(state.m.size()) == params.size(), "adam: state size mismatch");
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.m[static_cast<Eigen::Index>(i)];
        double& v = state.v[static_cast<Eigen::Index>(i)];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        params[i] -= lr * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
    }
}

// ---------------------------------------------------------------------------

Model Model::make(LayoutPattern layout, const WavelengthGrid& grid, MeasurementSpec measurement) {
    measurement.validate();
    Model m;
    m.reconstructor = init_zero({layout.rows(), layout.cols(), grid.size(), measurement.steps});
    m.layout = std::move(layout);
    m.measurement = measurement;
    m.grid = grid;
    m.domain = ParamDomain::for_grid(grid);
    return m;
}

ReconDims Model::dims() const { return {layout.rows(), layout.cols(), grid.size(), measurement.steps}; }

void Model::validate() const {
    measurement.validate();
    domain.validate();
    require(reconstructor.dims == dims(), "model: reconstructor dims do not match layout and steps");
    require(static_cast<std::size_t>(reconstructor.weights.rows()) == dims().outputs() &&
                static_cast<std::size_t>(reconstructor.weights.cols()) == dims().inputs(),
            "model: reconstructor weight shape is inconsistent");
}

double l2_penalty(const LinearReconstructor& r, double l2_weight) {
    require(l2_weight >= 0, "l2_penalty: weight must be >= 0");
    if (l2_weight == 0.0) return 0.0;
    return l2_weight * r.weights.squaredNorm();
}

double lorentzian_penalty(std::span<const FilterParams> params, const FilterSet& targets, const ParamDomain& domain,
                          double width, double alpha_reg) {
    require(width > 0, "lorentzian: A must be positive");
    require(!targets.empty(), "lorentzian: no targets");
    const double a2 = width * width;
    std::vector<ScaledParams> st;
    for (const auto& t : targets.filters) st.push_back(scale(t, domain));
    double acc = 0.0;
    for (const auto& p : params) {
        const ScaledParams u = scale(p, domain);
        for (const auto& t : st) {
            const double dc = u.u_center - t.u_center;
            const double dw = u.u_fwhm - t.u_fwhm;
            acc += 1.0 - a2 / (dc * dc + dw * dw + a2);
        }
    }
    return alpha_reg * acc;
}

double lorentzian_penalty(const LayoutPattern& layout, const FilterSet& targets, const ParamDomain& domain,
                          double width, double alpha_reg) {
    std::vector<FilterParams> params(layout.slot_count());
    for (std::size_t k = 0; k < params.size(); ++k) params[k] = layout.slot_params(k);
    return lorentzian_penalty(params, targets, domain, width, alpha_reg);
}

namespace {

void check_batch(const Model& model, const SampleSet& batch) {
    require(batch.count() > 0, "empty batch");
    require(batch.rows == model.layout.rows() && batch.cols == model.layout.cols(),
            "batch patches are " + std::to_string(batch.rows) + "x" + std::to_string(batch.cols) + " but layout is " +
                std::to_string(model.layout.rows()) + "x" + std::to_string(model.layout.cols()));
    require(batch.grid == model.grid, "batch wavelength grid differs from the model grid");
}

Eigen::MatrixXd measure(const Model& model, const Eigen::MatrixXd& scenes, std::uint64_t noise_seed) {
    Eigen::MatrixXd y = forward_batch(model.layout, model.grid, model.measurement.steps, scenes);
    add_noise_inplace(y, model.measurement.snr, noise_seed);
    return y;
}

}  // namespace

double data_loss(const Model& model, const SampleSet& batch, std::uint64_t noise_seed) {
    check_batch(model, batch);
    const Eigen::MatrixXd y = measure(model, batch.values, noise_seed);
    const Eigen::MatrixXd e = batch.values - model.reconstructor.weights * y;
    return e.squaredNorm() / static_cast<double>(e.size());
}

Gradients backward(const Model& model, const SampleSet& batch, std::uint64_t noise_seed, const GradientRequest& req) {
    check_batch(model, batch);
    const Eigen::MatrixXd& x = batch.values;
    const Eigen::MatrixXd clean = forward_batch(model.layout, model.grid, model.measurement.steps, x);
    Eigen::MatrixXd y = clean;
    add_noise_inplace(y, model.measurement.snr, noise_seed);
    const Eigen::MatrixXd& w = model.reconstructor.weights;
    const Eigen::MatrixXd e = x - w * y;
    const double norm = 2.0 / static_cast<double>(e.size());

    Gradients g;
    g.loss.data_mse = e.squaredNorm() / static_cast<double>(e.size());
    g.loss.l2_term = l2_penalty(model.reconstructor, req.l2_weight);
    if (req.reconstructor) {
        g.reconstructor.noalias() = -norm * e * y.transpose();
        if (req.l2_weight > 0) g.reconstructor += 2.0 * req.l2_weight * w;
    }

    const LayoutPattern& layout = model.layout;
    const std::size_t slots = layout.slot_count();
    const bool lor = req.slots && req.lorentzian && req.lorentzian->enabled;
    if (lor)
        g.loss.lorentzian_term = lorentzian_penalty(layout, req.lorentzian->targets, model.domain,
                                                    req.lorentzian->width, req.lorentzian->alpha_reg);
    g.loss.total = g.loss.data_mse + g.loss.l2_term + g.loss.lorentzian_term;
    if (!req.slots) return g;

    g.slots = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * slots));
    const auto bands = static_cast<Eigen::Index>(model.grid.size());
    const std::size_t m_pixels = layout.pixels();
    Eigen::MatrixXd dy = -norm * (w.transpose() * e);
    // noise = sigma * z with sigma = mean|y| / snr, so sigma also depends on the transmissions.
    const double sigma = noise_sigma(clean, model.measurement.snr);
    if (sigma > 0) {
        const double dsigma = dy.cwiseProduct(y - clean).sum() / sigma;
        dy += (dsigma / (static_cast<double>(clean.size()) * model.measurement.snr)) * clean.cwiseSign();
    }
    Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(bands, static_cast<Eigen::Index>(slots));
    for (std::size_t s = 0; s < model.measurement.steps; ++s)
        for (std::size_t r = 0; r < layout.rows(); ++r)
            for (std::size_t c = 0; c < layout.cols(); ++c) {
                const std::size_t m = r * layout.cols() + c;
                const auto k = static_cast<Eigen::Index>(s * m_pixels + m);
                dt.col(static_cast<Eigen::Index>(slot_at(layout, r, c, s))).noalias() +=
                    x.middleRows(static_cast<Eigen::Index>(m) * bands, bands) * dy.row(k).transpose();
            }

    const double hc = model.domain.center_halfwidth();
    const double hw = model.domain.fwhm_halfwidth();
    std::vector<ScaledParams> targets;
    if (lor)
        for (const auto& t : req.lorentzian->targets.filters) targets.push_back(scale(t, model.domain));
    for (std::size_t k = 0; k < slots; ++k) {
        const FilterParams f = layout.slot_params(k);
        const TransmissionGrad tg = transmission_grad(f, model.grid);
        const auto col = dt.col(static_cast<Eigen::Index>(k));
        double gc = col.dot(tg.d_center) * hc;
        double gw = col.dot(tg.d_fwhm) * hw;
        const ScaledParams u = scale(f, model.domain);
        if (lor) {
            const double a2 = req.lorentzian->width * req.lorentzian->width;
            for (const auto& t : targets) {
                const double dc = u.u_center - t.u_center;
                const double dw = u.u_fwhm - t.u_fwhm;
                const double q = dc * dc + dw * dw + a2;
                const double coef = req.lorentzian->alpha_reg * 2.0 * a2 / (q * q);
                gc += coef * dc;
                gw += coef * dw;
            }
        }
        // A clamped parameter gets no gradient pushing it further outward.
        if ((u.u_center >= 1.0 && gc < 0) || (u.u_center <= -1.0 && gc > 0)) gc = 0.0;
        if ((u.u_fwhm >= 1.0 && gw < 0) || (u.u_fwhm <= -1.0 && gw > 0)) gw = 0.0;
        g.slots[static_cast<Eigen::Index>(2 * k)] = gc;
        g.slots[static_cast<Eigen::Index>(2 * k + 1)] = gw;
    }
    return g;
}

LossReport evaluate_loss(const Model& model, const SampleSet& samples, std::uint64_t noise_seed,
                         const GradientRequest& req) {
    LossReport rep;
    rep.data_mse = data_loss(model, samples, noise_seed);
    rep.l2_term = l2_penalty(model.reconstructor, req.l2_weight);
    if (req.slots && req.lorentzian && req.lorentzian->enabled)
        rep.lorentzian_term = lorentzian_penalty(model.layout, req.lorentzian->targets, model.domain,
                                                 req.lorentzian->width, req.lorentzian->alpha_reg);
    rep.total = rep.data_mse + rep.l2_term + rep.lorentzian_term;
    return rep;
}

std::uint64_t batch_noise_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch) {
    return derive_seed(seed, {0x6e6f697365ULL, epoch, batch});
}

std::uint64_t validation_noise_seed(std::uint64_t seed, std::size_t epoch) {
    return derive_seed(seed, {0x76616cULL, epoch});
}

TrainConfig resolve_config(const TrainConfig& config, const SampleSet& train_set) {
    TrainConfig out = config;
    if (out.lorentzian.enabled && out.lorentzian.alpha_reg < 0)
        out.lorentzian.alpha_reg = 1e-3 * train_set.values.squaredNorm() / static_cast<double>(train_set.values.size());
    return out;
}

TrainResult train(Model model, const SampleSet& data, const TrainConfig& config) {
    config.validate();
    auto [train_set, val_set] = train_val_split(data, config.val_fraction, derive_seed(config.seed, {0x73706c6974ULL}));
    return train(std::move(model), train_set, val_set, config);
}

TrainResult train(Model model, const SampleSet& train_set, const SampleSet& val_set, const TrainConfig& raw_config) {
    raw_config.validate();
    model.validate();
    check_batch(model, train_set);
    check_batch(model, val_set);
    const TrainConfig config = resolve_config(raw_config, train_set);

    const bool indexed = model.layout.is_indexed();
    if (indexed && config.trainable.layout)
        fail("train: an indexed layout cannot be optimized; use a continuous layout");
    if (!indexed && config.trainable.filters && !config.trainable.layout)
        fail("train: a continuous layout carries its filters per pixel; mark the layout trainable");
    const bool train_slots = indexed ? config.trainable.filters : config.trainable.layout;
    const bool train_recon = config.trainable.reconstructor;

    GradientRequest req;
    req.reconstructor = train_recon;
    req.slots = train_slots;
    req.l2_weight = config.l2_weight;
    req.lorentzian = &config.lorentzian;

    const std::size_t slots = model.layout.slot_count();
    std::vector<double> u;
    if (train_slots) {
        u.resize(2 * slots);
        for (std::size_t k = 0; k < slots; ++k) {
            const ScaledParams s = scale(model.layout.slot_params(k), model.domain);
            u[2 * k] = std::clamp(s.u_center, -1.0, 1.0);
            u[2 * k + 1] = std::clamp(s.u_fwhm, -1.0, 1.0);
        }
    }
    AdamState adam_r(train_recon ? static_cast<std::size_t>(model.reconstructor.weights.size()) : 0, config.beta1,
                     config.beta2, config.epsilon);
    AdamState adam_u(u.size(), config.beta1, config.beta2, config.epsilon);

    TrainResult result;
    result.model = model;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    const std::size_t n = train_set.count();
    const std::size_t n_batches = (n + config.batch_size - 1) / config.batch_size;
    std::vector<std::size_t> order(n);
    std::vector<FilterParams> slot_params(slots);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = scheduled_rate(config, epoch);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(config.seed, {0x73687566ULL, epoch}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        LossReport acc;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * config.batch_size;
            const std::size_t hi = std::min(n, lo + config.batch_size);
            const SampleSet batch = train_set.subset(std::span(order).subspan(lo, hi - lo));
            Gradients g = backward(model, batch, batch_noise_seed(config.seed, epoch, b), req);
            if (!std::isfinite(g.loss.total))
                fail_numerical("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(b));
            const double share = static_cast<double>(hi - lo) / static_cast<double>(n);
            acc.data_mse += g.loss.data_mse * share;
            acc.l2_term += g.loss.l2_term / static_cast<double>(n_batches);
            acc.lorentzian_term += g.loss.lorentzian_term / static_cast<double>(n_batches);

            if (train_recon)
                adam_step(adam_r, std::span(model.reconstructor.weights.data(), model.reconstructor.weights.size()),
                          std::span<const double>(g.reconstructor.data(), g.reconstructor.size()),
                          lr);
            if (train_slots) {
                adam_step(adam_u, u, std::span<const double>(g.slots.data(), g.slots.size()), lr);
                for (std::size_t k = 0; k < slots; ++k) {
                    u[2 * k] = std::clamp(u[2 * k], -1.0, 1.0);
                    u[2 * k + 1] = std::clamp(u[2 * k + 1], -1.0, 1.0);
                    slot_params[k] = unscale({u[2 * k], u[2 * k + 1]}, model.domain);
                }
                model.layout = model.layout.with_slot_params(slot_params);
            }
        }
        acc.total = acc.data_mse + acc.l2_term + acc.lorentzian_term;
        acc.epoch = epoch;
        acc.split = Split::train;
        result.history.push_back(acc);

        LossReport val = evaluate_loss(model, val_set, validation_noise_seed(config.seed, epoch), req);
        if (!std::isfinite(val.total))
            fail_numerical("non-finite validation loss at epoch " + std::to_string(epoch));
        val.epoch = epoch;
        val.split = Split::val;
        result.history.push_back(val);
        result.epochs_run = epoch;

        if (val.total < result.best_val_loss) {
            result.best_val_loss = val.total;
            result.best_epoch = epoch;
            result.model = model;
        } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
            break;
        }
    }
    return result;
}

double scheduled_rate(const TrainConfig& config, std::size_t epoch) {
    if (config.schedule == LrSchedule::constant || config.epochs <= 1) return config.learning_rate;
    const double t = static_cast<double>(epoch - 1) / static_cast<double>(config.epochs);
    return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void write_history_csv(std::ostream& out, const std::vector<LossReport>& history) {
    out << "epoch,split,total,data_mse,l2_term,lorentzian_term\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.split == Split::train ? "train" : "val",
                      r.total, r.data_mse, r.l2_term, r.lorentzian_term);
        out << buf;
    }
}

}  // namespace mosaic
