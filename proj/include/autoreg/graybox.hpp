#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autoreg/fir_simpson.hpp"
#include "autoreg/signal.hpp"

namespace autoreg {

struct GrayBoxConfig {
    std::size_t hidden_width = 8;
    double learning_rate = 0.01;
    std::size_t epochs = 2000;
    std::uint64_t seed = 0;
    /// Uniform init half-width. Unset means 1/sqrt(fan_in) per layer.
    std::optional<double> init_scale;
    static constexpr std::size_t window = kFirTaps;

    void validate() const;
    friend bool operator==(const GrayBoxConfig&, const GrayBoxConfig&) = default;
};

/// z-score applied to pressure windows before they enter the empirical network.
struct NormStats {
    double mean = 0.0;
    double std = 1.0;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Serial gray-box model.
///
/// The empirical part is a one-hidden-layer tanh network mapping a standardized
/// 7-sample pressure window to 7 coefficients. The phenomenological part is the
/// FIR inner product of those coefficients with the unstandardized window. It
/// stores nothing, so training can only ever move W1, b1, W2 and b2.
struct GrayBoxModel {
    GrayBoxConfig config;
    NormStats norm_stats;
    std::vector<double> W1;  ///< hidden_width x 7, row-major
    std::vector<double> b1;  ///< hidden_width
    std::vector<double> W2;  ///< 7 x hidden_width, row-major
    std::vector<double> b2;  ///< 7

    std::size_t hidden_width() const { return b1.size(); }
    std::size_t parameter_count() const { return W1.size() + b1.size() + W2.size() + b2.size(); }

    /// Trainable parameters flattened in the order W1, b1, W2, b2.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    friend bool operator==(const GrayBoxModel&, const GrayBoxModel&) = default;
};

struct GrayBoxOutput {
    FirCoefficients coeffs;
    double v_hat = 0.0;
};

struct TrainingTrace {
    std::vector<double> losses;  ///< loss at the start of each epoch
    double final_loss = 0.0;     ///< loss after the last update
};

struct CoefficientSeries {
    std::vector<FirCoefficients> per_window;
    FirCoefficients summary;  ///< element-wise mean over windows
};

/// One training segment: normalized pressure and the velocity series it should reproduce.
using GrayBoxSegment = std::pair<SampledSignal, SampledSignal>;

GrayBoxModel gb_init(const GrayBoxConfig& config);

/// Returns the model with norm_stats taken from the mean and std of `abp`.
GrayBoxModel gb_fit_standardization(GrayBoxModel model, const SampledSignal& abp);

/// `p_window` is ordered newest first, matching FirCoefficients.
GrayBoxOutput gb_forward(const GrayBoxModel& model, std::span<const double, kFirTaps> p_window);

/// Output for every full window of `abp` (length n - 6).
SampledSignal gb_predict(const GrayBoxModel& model, const SampledSignal& abp);

/// Mean squared velocity error over all full windows of every segment.
double gb_loss(const GrayBoxModel& model, const std::vector<GrayBoxSegment>& segments);

/// Loss and its analytic gradient with respect to parameters() order.
std::pair<double, std::vector<double>> gb_loss_and_gradient(const GrayBoxModel& model,
                                                            const std::vector<GrayBoxSegment>& segments);

/// Full-batch gradient descent with the loss taken at the phenomenological output.
std::pair<GrayBoxModel, TrainingTrace> gb_train(GrayBoxModel model, const SampledSignal& abp,
                                                const SampledSignal& cbfv, const GrayBoxConfig& config);

/// Same as gb_train, but one model is fit across several subjects' windows.
std::pair<GrayBoxModel, TrainingTrace> gb_train_pooled(GrayBoxModel model,
                                                       const std::vector<GrayBoxSegment>& segments,
                                                       const GrayBoxConfig& config);

struct GradientComparison {
    std::vector<double> analytic;
    std::vector<double> numeric;
    double max_rel_error = 0.0;
};

GradientComparison gb_compare_gradients(const GrayBoxModel& model, const SampledSignal& abp,
                                        const SampledSignal& cbfv, double step = 1e-6);

/// Max relative error between the analytic gradient and central differences.
double gb_gradient_check(const GrayBoxModel& model, const SampledSignal& abp, const SampledSignal& cbfv);

CoefficientSeries gb_coefficients(const GrayBoxModel& model, const SampledSignal& abp);

inline constexpr const char* kGrayBoxVersion = "graybox-v1";

std::string gb_to_json(const GrayBoxModel& model);
GrayBoxModel gb_from_json(const std::string& text);

}  // namespace autoreg
