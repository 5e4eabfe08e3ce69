#pragma once

#include "mosaic/cube.hpp"
#include "mosaic/layout.hpp"
#include "mosaic/measurement.hpp"
#include "mosaic/reconstruct.hpp"
#include "mosaic/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace mosaic {

struct Trainability {
    bool filters = false;        // the embedded FilterSet of an indexed layout
    bool layout = false;         // per-pixel parameters of a continuous layout
    bool reconstructor = true;
};

struct LorentzianConfig {
    bool enabled = false;
    double alpha_reg = -1.0;  // negative: 1e-3 times the zero-reconstructor data loss
    double width = 0.05;      // A, in scaled units
    FilterSet targets;
};

/// Per-epoch learning-rate schedule. Cosine anneals from the base rate to
/// zero over the configured epoch budget.
enum class LrSchedule { constant, cosine };

struct TrainConfig {
    double learning_rate = 1e-3;
    LrSchedule schedule = LrSchedule::constant;
    double l2_weight = 0.0;
    LorentzianConfig lorentzian;
    std::size_t epochs = 200;
    std::size_t patience = 20;  // epochs without validation improvement; 0 disables
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    Trainability trainable;
    double val_fraction = 0.10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::size_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
        : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
          v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
          beta1(b1),
          beta2(b2),
          epsilon(eps) {}
};

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// Layout, reconstructor and measurement settings of one design.
struct Model {
    LayoutPattern layout;
    LinearReconstructor reconstructor;
    MeasurementSpec measurement;
    WavelengthGrid grid;
    ParamDomain domain;

    /// Zero-initialized reconstructor matching the layout and step count.
    static Model make(LayoutPattern layout, const WavelengthGrid& grid, MeasurementSpec measurement);
    void validate() const;
    ReconDims dims() const;
};

enum class Split { train, val };

struct LossReport {
    double total = 0.0;
    double data_mse = 0.0;
    double l2_term = 0.0;
    double lorentzian_term = 0.0;
    std::size_t epoch = 0;
    Split split = Split::train;
};

double l2_penalty(const LinearReconstructor& r, double l2_weight);

/// alpha * sum over slots and targets of 1 - A^2 / (d^2 + A^2), with d
/// the distance in scaled parameter space.
double lorentzian_penalty(const LayoutPattern& layout, const FilterSet& targets, const ParamDomain& domain,
                          double width, double alpha_reg);
double lorentzian_penalty(std::span<const FilterParams> params, const FilterSet& targets, const ParamDomain& domain,
                          double width, double alpha_reg);

/// Mean over samples of mse(x, R (H x + noise)); noise follows the model's snr.
double data_loss(const Model& model, const SampleSet& batch, std::uint64_t noise_seed);

/// Gradients of the total loss. Slot gradients are taken with respect to
/// scaled parameters, laid out (u_center, u_fwhm) per slot.
struct Gradients {
    Eigen::MatrixXd reconstructor;
    Eigen::VectorXd slots;
    LossReport loss;
};

/// Which parameter classes receive gradients and regularization.
struct GradientRequest {
    bool reconstructor = true;
    bool slots = false;
    double l2_weight = 0.0;
    const LorentzianConfig* lorentzian = nullptr;  // alpha must already be resolved
};

Gradients backward(const Model& model, const SampleSet& batch, std::uint64_t noise_seed, const GradientRequest& req);

/// Loss of the model on a sample set with one noise draw.
LossReport evaluate_loss(const Model& model, const SampleSet& samples, std::uint64_t noise_seed,
                         const GradientRequest& req);

struct TrainResult {
    Model model;  // parameters of the best validation epoch
    std::vector<LossReport> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::size_t epochs_run = 0;
};

TrainResult train(Model model, const SampleSet& data, const TrainConfig& config);
TrainResult train(Model model, const SampleSet& train_set, const SampleSet& val_set, const TrainConfig& config);

/// Learning rate used during a 1-based epoch.
double scheduled_rate(const TrainConfig& config, std::size_t epoch);

/// Resolves alpha_reg < 0 against the given training data.
TrainConfig resolve_config(const TrainConfig& config, const SampleSet& train_set);

/// Noise-seed streams used by the training loop.
std::uint64_t batch_noise_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch);
std::uint64_t validation_noise_seed(std::uint64_t seed, std::size_t epoch);

void write_history_csv(std::ostream& out, const std::vector<LossReport>& history);

}  // namespace mosaic
