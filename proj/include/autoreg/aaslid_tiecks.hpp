#pragma once

#include <array>
#include <utility>
#include <vector>

#include "autoreg/signal.hpp"

namespace autoreg {

/// Gain K, damping D and time constant T (seconds) of the second-order regulator.
struct ATParameters {
    double K;
    double D;
    double T;

    void validate() const;
    friend bool operator==(const ATParameters&, const ATParameters&) = default;
};

struct ATState {
    double x1 = 0.0;
    double x2 = 0.0;
};

inline constexpr int kAriLevels = 10;

struct AriTemplateRow {
    int ari;
    ATParameters params;
};

/// The ten (K, D, T) rows that define the ARI scale, ordered ARI 0..9.
class AriTemplateTable {
public:
    /// The canonical table.
    static const AriTemplateTable& standard();

    /// Advanced: user-supplied rows. Each row is validated; ari fields must run 0..9.
    explicit AriTemplateTable(std::array<AriTemplateRow, kAriLevels> rows);

    const std::array<AriTemplateRow, kAriLevels>& rows() const { return rows_; }
    const ATParameters& params(int ari) const;

private:
    std::array<AriTemplateRow, kAriLevels> rows_;
};

/// One discrete step. Returns the updated state and the normalized velocity at time t.
std::pair<ATState, double> at_step(ATState state, double dp_prev, const ATParameters& params,
                                   double fs);

/// Simulates from rest with dP(-1) = 0; output has the input's length and fs.
SampledSignal at_simulate(const SampledSignal& dp, const ATParameters& params);

std::vector<SampledSignal> generate_templates(const SampledSignal& dp,
                                              const AriTemplateTable& table = AriTemplateTable::standard());

}  // namespace autoreg
