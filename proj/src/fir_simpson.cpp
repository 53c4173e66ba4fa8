#include "autoreg/fir_simpson.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <json.hpp>
#include <sstream>

namespace autoreg {

SampledSignal fir_predict(const FirCoefficients& h, const SampledSignal& p)
{
    if (p.size() < kFirTaps) {
        throw Error("FIR prediction needs at least 7 input samples");
    }
    auto x = p.samples();
    std::vector<double> out(p.size() - (kFirTaps - 1));
    for (std::size_t j = 0; j < out.size(); ++j) {
        const std::size_t i = j + kFirTaps - 1;
        double acc = 0.0;
        for (std::size_t k = 0; k < kFirTaps; ++k) {
            acc += h.h[k] * x[i - k];
        }
        out[j] = acc;
    }
    return {std::move(out), p.fs(), "fir"};
}

double fir_apply_window(const FirCoefficients& h, std::span<const double, kFirTaps> window)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < kFirTaps; ++k) {
        acc += h.h[k] * window[k];
    }
    return acc;
}

FirCoefficients fir_fit_pooled(const std::vector<std::pair<SampledSignal, SampledSignal>>& segments,
                               double ridge)
{
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw Error("ridge must be finite and >= 0");
    }
    std::size_t rows = 0;
    for (const auto& [p, v] : segments) {
        if (p.size() != v.size()) {
            throw Error("FIR fit needs input and output of equal length");
        }
        if (p.size() < 2 * kFirTaps) {
            throw Error("FIR fit needs at least 14 samples per segment");
        }
        rows += p.size() - (kFirTaps - 1);
    }
    if (rows == 0) {
        throw Error("FIR fit needs at least one segment");
    }
    const bool regularized = ridge > 0.0;
    const auto total_rows = static_cast<Eigen::Index>(rows + (regularized ? kFirTaps : 0));
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(total_rows, kFirTaps);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(total_rows);

    Eigen::Index r = 0;
    for (const auto& [p, v] : segments) {
        for (std::size_t i = kFirTaps - 1; i < p.size(); ++i, ++r) {
            for (std::size_t k = 0; k < kFirTaps; ++k) {
                design(r, static_cast<Eigen::Index>(k)) = p[i - k];
            }
            target(r) = v[i];
        }
    }
    if (regularized) {
        // Augmented rows sqrt(ridge) * I turn the ridge problem into plain least squares.
        const double s = std::sqrt(ridge);
        for (std::size_t k = 0; k < kFirTaps; ++k, ++r) {
            design(r, static_cast<Eigen::Index>(k)) = s;
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<Eigen::Index>(kFirTaps)) {
        throw Error("singular system; supply ridge > 0");
    }
    Eigen::VectorXd solution = qr.solve(target);

    FirCoefficients h;
    for (std::size_t k = 0; k < kFirTaps; ++k) {
        h.h[k] = solution(static_cast<Eigen::Index>(k));
        if (!std::isfinite(h.h[k])) {
            throw Error("FIR fit produced non-finite coefficients");
        }
    }
    return h;
}

FirCoefficients fir_fit(const SampledSignal& p, const SampledSignal& v, double ridge)
{
    return fir_fit_pooled({{p, v}}, ridge);
}

double fir_objective(const FirCoefficients& h, const SampledSignal& p, const SampledSignal& v,
                     double ridge)
{
    SampledSignal pred = fir_predict(h, p);
    double sum = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        const double d = v[j + kFirTaps - 1] - pred[j];
        sum += d * d;
    }
    for (double c : h.h) {
        sum += ridge * c * c;
    }
    return sum;
}

std::string fir_to_json(const FirCoefficients& h)
{
    return nlohmann::json(h.h).dump();
}

std::string fir_to_csv(const FirCoefficients& h)
{
    std::string out;
    for (std::size_t k = 0; k < kFirTaps; ++k) {
        if (k != 0) {
            out += ',';
        }
        nlohmann::json j = h.h[k];
        out += j.dump();
    }
    return out;
}

FirCoefficients fir_parse(const std::string& text)
{
    FirCoefficients h;
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("malformed coefficient JSON: ") + e.what());
        }
        if (!j.is_array() || j.size() != kFirTaps) {
            throw Error("coefficient JSON must be an array of 7 numbers");
        }
        for (std::size_t k = 0; k < kFirTaps; ++k) {
            if (!j[k].is_number()) {
                throw Error("coefficient JSON must be an array of 7 numbers");
            }
            h.h[k] = j[k].get<double>();
        }
        return h;
    }
    std::istringstream row(text);
    std::string field;
    std::size_t k = 0;
    while (std::getline(row, field, ',')) {
        if (k >= kFirTaps) {
            throw Error("coefficient CSV row must hold exactly 7 values");
        }
        const auto b = field.find_first_not_of(" \t\r\n");
        const auto e = field.find_last_not_of(" \t\r\n");
        const char* first = b == std::string::npos ? field.data() : field.data() + b;
        const char* last = b == std::string::npos ? first : field.data() + e + 1;
        auto [ptr, ec] = std::from_chars(first, last, h.h[k]);
        if (first == last || ec != std::errc{} || ptr != last || !std::isfinite(h.h[k])) {
            throw Error("malformed coefficient value '" + field + "'");
        }
        ++k;
    }
    if (k != kFirTaps) {
        throw Error("coefficient CSV row must hold exactly 7 values");
    }
    for (double c : h.h) {
        if (!std::isfinite(c)) {
            throw Error("coefficients must be finite");
        }
    }
    return h;
}

}  // namespace autoreg
