#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "autoreg/aaslid_tiecks.hpp"
#include "autoreg/signal.hpp"

namespace autoreg {

enum class FitMetric { mse, correlation };

std::string_view to_string(FitMetric metric);
FitMetric parse_fit_metric(std::string_view text);

struct AriEstimate {
    int ari = 0;
    /// MSE of the selected template, or its Pearson correlation.
    double score = 0.0;
    std::array<double, kAriLevels> per_template_scores{};
    FitMetric metric = FitMetric::mse;
};

/// Samples excluded from the comparison at either end of the series.
struct MatchWindow {
    std::size_t trim_start = 0;
    std::size_t trim_end = 0;
};

/// Assigns the ARI of the best-fitting template. Ties go to the lower ARI.
AriEstimate classify(const SampledSignal& v_measured, const std::vector<SampledSignal>& templates,
                     FitMetric metric, MatchWindow window = {});

struct StateChangeReport {
    std::string subject_id;
    int ari_normo = 0;
    int ari_hyper = 0;
    int delta = 0;
    bool exceeds_limit = false;
    bool anomalous_increase = false;
};

/// Largest tolerated |ARI change| between the two states.
inline constexpr int kStateChangeLimit = 2;

StateChangeReport compare_states(const AriEstimate& normo, const AriEstimate& hyper,
                                 std::string subject_id);

}  // namespace autoreg
