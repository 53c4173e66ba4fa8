#include "autoreg/graybox.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

namespace autoreg {

namespace {

constexpr std::size_t kWindow = kFirTaps;

using Window = std::array<double, kWindow>;

Window window_at(std::span<const double> p, std::size_t i)
{
    Window w;
    for (std::size_t k = 0; k < kWindow; ++k) {
        w[k] = p[i - k];
    }
    return w;
}

void check_segment(const GrayBoxSegment& seg)
{
    if (seg.first.size() != seg.second.size()) {
        throw Error("gray-box data: pressure and velocity lengths differ");
    }
    if (seg.first.size() < 2 * kWindow) {
        throw Error("gray-box data: need at least 14 samples");
    }
}

/// Activations kept for the backward pass.
struct ForwardCache {
    Window x;                    // standardized window
    std::vector<double> hidden;  // tanh activations
    FirCoefficients coeffs;
    double v_hat = 0.0;
};

void forward(const GrayBoxModel& m, std::span<const double, kWindow> w, ForwardCache& c)
{
    const std::size_t hw = m.hidden_width();
    for (std::size_t k = 0; k < kWindow; ++k) {
        c.x[k] = (w[k] - m.norm_stats.mean) / m.norm_stats.std;
    }
    c.hidden.resize(hw);
    for (std::size_t j = 0; j < hw; ++j) {
        double z = m.b1[j];
        for (std::size_t k = 0; k < kWindow; ++k) {
            z += m.W1[j * kWindow + k] * c.x[k];
        }
        c.hidden[j] = std::tanh(z);
    }
    for (std::size_t k = 0; k < kWindow; ++k) {
        double out = m.b2[k];
        for (std::size_t j = 0; j < hw; ++j) {
            out += m.W2[k * hw + j] * c.hidden[j];
        }
        c.coeffs.h[k] = out;
    }
    c.v_hat = fir_apply_window(c.coeffs, w);
}

std::size_t window_count(const std::vector<GrayBoxSegment>& segments)
{
    std::size_t n = 0;
    for (const auto& seg : segments) {
        check_segment(seg);
        n += seg.first.size() - (kWindow - 1);
    }
    if (n == 0) {
        throw Error("gray-box data: no training windows");
    }
    return n;
}

}  // namespace

void GrayBoxConfig::validate() const
{
    if (hidden_width == 0) {
        throw Error("hidden_width must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw Error("learning_rate must be finite and >= 0");
    }
    if (init_scale && (!(*init_scale > 0.0) || !std::isfinite(*init_scale))) {
        throw Error("init_scale must be positive");
    }
}

std::vector<double> GrayBoxModel::parameters() const
{
    std::vector<double> flat;
    flat.reserve(parameter_count());
    flat.insert(flat.end(), W1.begin(), W1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), W2.begin(), W2.end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    return flat;
}

void GrayBoxModel::set_parameters(std::span<const double> flat)
{
    if (flat.size() != parameter_count()) {
        throw Error("parameter vector has the wrong length");
    }
    auto it = flat.begin();
    for (auto* block : {&W1, &b1, &W2, &b2}) {
        std::copy_n(it, block->size(), block->begin());
        it += static_cast<std::ptrdiff_t>(block->size());
    }
}

GrayBoxModel gb_init(const GrayBoxConfig& config)
{
    config.validate();
    const std::size_t hw = config.hidden_width;
    const double scale1 = config.init_scale.value_or(1.0 / std::sqrt(static_cast<double>(kWindow)));
    const double scale2 = config.init_scale.value_or(1.0 / std::sqrt(static_cast<double>(hw)));

    std::mt19937_64 rng(config.seed);
    auto draw = [&rng](std::vector<double>& block, std::size_t n, double scale) {
        std::uniform_real_distribution<double> dist(-scale, scale);
        block.resize(n);
        for (double& w : block) {
            w = dist(rng);
        }
    };

    GrayBoxModel m;
    m.config = config;
    draw(m.W1, hw * kWindow, scale1);
    draw(m.b1, hw, scale1);
    draw(m.W2, kWindow * hw, scale2);
    draw(m.b2, kWindow, scale2);
    return m;
}

GrayBoxModel gb_fit_standardization(GrayBoxModel model, const SampledSignal& abp)
{
    double mean = 0.0;
    for (double x : abp.samples()) {
        mean += x;
    }
    mean /= static_cast<double>(abp.size());
    double var = 0.0;
    for (double x : abp.samples()) {
        var += (x - mean) * (x - mean);
    }
    var /= static_cast<double>(abp.size());
    const double sd = std::sqrt(var);
    model.norm_stats = {mean, sd > 0.0 ? sd : 1.0};
    return model;
}

GrayBoxOutput gb_forward(const GrayBoxModel& model, std::span<const double, kFirTaps> p_window)
{
    ForwardCache c;
    forward(model, p_window, c);
    return {c.coeffs, c.v_hat};
}

SampledSignal gb_predict(const GrayBoxModel& model, const SampledSignal& abp)
{
    if (abp.size() < kWindow) {
        throw Error("gray-box prediction needs at least 7 samples");
    }
    std::vector<double> out(abp.size() - (kWindow - 1));
    ForwardCache c;
    for (std::size_t i = kWindow - 1; i < abp.size(); ++i) {
        Window w = window_at(abp.samples(), i);
        forward(model, w, c);
        out[i - (kWindow - 1)] = c.v_hat;
    }
    return {std::move(out), abp.fs(), "graybox"};
}

double gb_loss(const GrayBoxModel& model, const std::vector<GrayBoxSegment>& segments)
{
    const std::size_t n = window_count(segments);
    double sum = 0.0;
    ForwardCache c;
    for (const auto& [p, v] : segments) {
        for (std::size_t i = kWindow - 1; i < p.size(); ++i) {
            Window w = window_at(p.samples(), i);
            forward(model, w, c);
            const double e = c.v_hat - v[i];
            sum += e * e;
        }
    }
    return sum / static_cast<double>(n);
}

std::pair<double, std::vector<double>> gb_loss_and_gradient(const GrayBoxModel& model,
                                                            const std::vector<GrayBoxSegment>& segments)
{
    const std::size_t n = window_count(segments);
    const std::size_t hw = model.hidden_width();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> gW1(model.W1.size(), 0.0);
    std::vector<double> gb1(hw, 0.0);
    std::vector<double> gW2(model.W2.size(), 0.0);
    std::vector<double> gb2(kWindow, 0.0);
    std::vector<double> dhidden(hw);

    double sum = 0.0;
    ForwardCache c;
    for (const auto& [p, v] : segments) {
        for (std::size_t i = kWindow - 1; i < p.size(); ++i) {
            Window w = window_at(p.samples(), i);
            forward(model, w, c);
            const double e = c.v_hat - v[i];
            sum += e * e;

            // Indirect training: the error enters at the FIR output, so the
            // coefficient gradient is the upstream error times the raw window.
            const double dv = 2.0 * e * inv_n;
            std::fill(dhidden.begin(), dhidden.end(), 0.0);
            for (std::size_t k = 0; k < kWindow; ++k) {
                const double dc = dv * w[k];
                gb2[k] += dc;
                for (std::size_t j = 0; j < hw; ++j) {
                    gW2[k * hw + j] += dc * c.hidden[j];
                    dhidden[j] += model.W2[k * hw + j] * dc;
                }
            }
            for (std::size_t j = 0; j < hw; ++j) {
                const double dz = dhidden[j] * (1.0 - c.hidden[j] * c.hidden[j]);
                gb1[j] += dz;
                for (std::size_t k = 0; k < kWindow; ++k) {
                    gW1[j * kWindow + k] += dz * c.x[k];
                }
            }
        }
    }

    std::vector<double> grad;
    grad.reserve(model.parameter_count());
    grad.insert(grad.end(), gW1.begin(), gW1.end());
    grad.insert(grad.end(), gb1.begin(), gb1.end());
    grad.insert(grad.end(), gW2.begin(), gW2.end());
    grad.insert(grad.end(), gb2.begin(), gb2.end());
    return {sum * inv_n, std::move(grad)};
}

std::pair<GrayBoxModel, TrainingTrace> gb_train_pooled(GrayBoxModel model,
                                                       const std::vector<GrayBoxSegment>& segments,
                                                       const GrayBoxConfig& config)
{
    config.validate();
    if (model.hidden_width() == 0 || model.W1.size() != model.hidden_width() * kWindow ||
        model.W2.size() != model.hidden_width() * kWindow || model.b2.size() != kWindow) {
        throw Error("gray-box model has inconsistent parameter shapes");
    }
    TrainingTrace trace;
    trace.losses.reserve(config.epochs);
    std::vector<double> params = model.parameters();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto [loss, grad] = gb_loss_and_gradient(model, segments);
        if (!std::isfinite(loss)) {
            throw Error("gray-box training diverged at epoch " + std::to_string(epoch));
        }
        trace.losses.push_back(loss);
        for (std::size_t q = 0; q < params.size(); ++q) {
            params[q] -= config.learning_rate * grad[q];
        }
        model.set_parameters(params);
    }
    trace.final_loss = gb_loss(model, segments);
    if (!std::isfinite(trace.final_loss)) {
        throw Error("gray-box training diverged at epoch " + std::to_string(config.epochs));
    }
    return {std::move(model), std::move(trace)};
}

std::pair<GrayBoxModel, TrainingTrace> gb_train(GrayBoxModel model, const SampledSignal& abp,
                                                const SampledSignal& cbfv, const GrayBoxConfig& config)
{
    return gb_train_pooled(std::move(model), {{abp, cbfv}}, config);
}

GradientComparison gb_compare_gradients(const GrayBoxModel& model, const SampledSignal& abp,
                                        const SampledSignal& cbfv, double step)
{
    const std::vector<GrayBoxSegment> segments{{abp, cbfv}};
    GradientComparison out;
    out.analytic = gb_loss_and_gradient(model, segments).second;
    out.numeric.resize(out.analytic.size());

    GrayBoxModel probe = model;
    std::vector<double> params = model.parameters();
    for (std::size_t q = 0; q < params.size(); ++q) {
        const double saved = params[q];
        params[q] = saved + step;
        probe.set_parameters(params);
        const double up = gb_loss(probe, segments);
        params[q] = saved - step;
        probe.set_parameters(params);
        const double down = gb_loss(probe, segments);
        params[q] = saved;
        out.numeric[q] = (up - down) / (2.0 * step);

        const double a = out.analytic[q];
        const double d = out.numeric[q];
        const double denom = std::max({std::abs(a), std::abs(d), 1e-12});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(a - d) / denom);
    }
    return out;
}

double gb_gradient_check(const GrayBoxModel& model, const SampledSignal& abp, const SampledSignal& cbfv)
{
    return gb_compare_gradients(model, abp, cbfv).max_rel_error;
}

CoefficientSeries gb_coefficients(const GrayBoxModel& model, const SampledSignal& abp)
{
    if (abp.size() < kWindow) {
        throw Error("gray-box coefficients need at least 7 samples");
    }
    CoefficientSeries out;
    out.per_window.reserve(abp.size() - (kWindow - 1));
    ForwardCache c;
    for (std::size_t i = kWindow - 1; i < abp.size(); ++i) {
        Window w = window_at(abp.samples(), i);
        forward(model, w, c);
        out.per_window.push_back(c.coeffs);
        for (std::size_t k = 0; k < kWindow; ++k) {
            out.summary.h[k] += c.coeffs.h[k];
        }
    }
    for (double& s : out.summary.h) {
        s /= static_cast<double>(out.per_window.size());
    }
    return out;
}

std::string gb_to_json(const GrayBoxModel& model)
{
    nlohmann::ordered_json j;
    j["version"] = kGrayBoxVersion;
    nlohmann::ordered_json cfg;
    cfg["hidden_width"] = model.config.hidden_width;
    cfg["learning_rate"] = model.config.learning_rate;
    cfg["epochs"] = model.config.epochs;
    cfg["seed"] = model.config.seed;
    cfg["init_scale"] = model.config.init_scale ? nlohmann::ordered_json(*model.config.init_scale)
                                                : nlohmann::ordered_json(nullptr);
    cfg["window"] = GrayBoxConfig::window;
    j["config"] = cfg;
    j["norm_stats"] = {{"mean", model.norm_stats.mean}, {"std", model.norm_stats.std}};
    j["W1"] = model.W1;
    j["b1"] = model.b1;
    j["W2"] = model.W2;
    j["b2"] = model.b2;
    return j.dump(2) + "\n";
}

GrayBoxModel gb_from_json(const std::string& text)
{
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("version").get<std::string>() != kGrayBoxVersion) {
            throw Error("unsupported gray-box model version");
        }
        GrayBoxModel m;
        const auto& cfg = j.at("config");
        m.config.hidden_width = cfg.at("hidden_width").get<std::size_t>();
        m.config.learning_rate = cfg.at("learning_rate").get<double>();
        m.config.epochs = cfg.at("epochs").get<std::size_t>();
        m.config.seed = cfg.at("seed").get<std::uint64_t>();
        if (!cfg.at("init_scale").is_null()) {
            m.config.init_scale = cfg.at("init_scale").get<double>();
        }
        if (cfg.at("window").get<std::size_t>() != kWindow) {
            throw Error("gray-box window must be 7");
        }
        m.config.validate();
        m.norm_stats.mean = j.at("norm_stats").at("mean").get<double>();
        m.norm_stats.std = j.at("norm_stats").at("std").get<double>();
        m.W1 = j.at("W1").get<std::vector<double>>();
        m.b1 = j.at("b1").get<std::vector<double>>();
        m.W2 = j.at("W2").get<std::vector<double>>();
        m.b2 = j.at("b2").get<std::vector<double>>();
        const std::size_t hw = m.config.hidden_width;
        if (m.W1.size() != hw * kWindow || m.b1.size() != hw || m.W2.size() != kWindow * hw ||
            m.b2.size() != kWindow) {
            throw Error("gray-box parameter arrays do not match hidden_width");
        }
        if (!(m.norm_stats.std > 0.0)) {
            throw Error("gray-box norm_stats.std must be positive");
        }
        for (double w : m.parameters()) {
            if (!std::isfinite(w)) {
                throw Error("gray-box parameters must be finite");
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed gray-box model JSON: ") + e.what());
    }
}

}  // namespace autoreg
