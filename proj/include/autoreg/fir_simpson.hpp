#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autoreg/signal.hpp"

namespace autoreg {

inline constexpr std::size_t kFirTaps = 7;

/// Impulse response h[0..6]; h[k] weights the sample k steps in the past.
struct FirCoefficients {
    std::array<double, kFirTaps> h{};

    friend bool operator==(const FirCoefficients&, const FirCoefficients&) = default;
};

/// Output j is sum_k h[k] * p[j + 6 - k]; the first 6 samples have no full window and are dropped.
SampledSignal fir_predict(const FirCoefficients& h, const SampledSignal& p);

/// Dot product of h with one window ordered newest first.
double fir_apply_window(const FirCoefficients& h, std::span<const double, kFirTaps> window_newest_first);

/// Least-squares (optionally ridge) identification of h from input p and output v.
FirCoefficients fir_fit(const SampledSignal& p, const SampledSignal& v, double ridge = 0.0);

/// Pooled fit: one shared h over windows drawn from every (p, v) segment. Windows never
/// straddle two segments.
FirCoefficients fir_fit_pooled(const std::vector<std::pair<SampledSignal, SampledSignal>>& segments,
                               double ridge = 0.0);

/// Sum of squared residuals plus the ridge penalty, as minimized by fir_fit.
double fir_objective(const FirCoefficients& h, const SampledSignal& p, const SampledSignal& v,
                     double ridge = 0.0);

std::string fir_to_json(const FirCoefficients& h);
std::string fir_to_csv(const FirCoefficients& h);
/// Accepts either a JSON array of 7 numbers or one CSV row of 7 values.
FirCoefficients fir_parse(const std::string& text);

}  // namespace autoreg
