#include "autoreg/aaslid_tiecks.hpp"

#include <cmath>
#include <string>

namespace autoreg {

void ATParameters::validate() const
{
    if (!(T > 0.0) || !(D > 0.0) || !(K >= 0.0 && K <= 1.0) || !std::isfinite(T) ||
        !std::isfinite(D)) {
        throw Error("invalid A-T parameters: need T > 0, D > 0, 0 <= K <= 1");
    }
}

const AriTemplateTable& AriTemplateTable::standard()
{
    static const AriTemplateTable table({{
        {0, {0.00, 1.70, 2.00}},
        {1, {0.20, 1.60, 2.00}},
        {2, {0.40, 1.50, 2.00}},
        {3, {0.60, 1.15, 2.00}},
        {4, {0.80, 0.90, 2.00}},
        {5, {0.90, 0.75, 1.90}},
        {6, {0.94, 0.65, 1.60}},
        {7, {0.96, 0.55, 1.20}},
        {8, {0.97, 0.52, 0.87}},
        {9, {0.98, 0.50, 0.65}},
    }});
    return table;
}

AriTemplateTable::AriTemplateTable(std::array<AriTemplateRow, kAriLevels> rows) : rows_(rows)
{
    for (int k = 0; k < kAriLevels; ++k) {
        if (rows_[static_cast<std::size_t>(k)].ari != k) {
            throw Error("template table rows must be ordered ARI 0..9");
        }
        rows_[static_cast<std::size_t>(k)].params.validate();
    }
}

const ATParameters& AriTemplateTable::params(int ari) const
{
    if (ari < 0 || ari >= kAriLevels) {
        throw Error("ARI out of range: " + std::to_string(ari));
    }
    return rows_[static_cast<std::size_t>(ari)].params;
}

std::pair<ATState, double> at_step(ATState state, double dp_prev, const ATParameters& params,
                                   double fs)
{
    const double ft = fs * params.T;
    ATState next;
    next.x1 = state.x1 + (dp_prev - state.x2) / ft;
    next.x2 = state.x2 + (state.x1 - 2.0 * params.D * state.x2) / ft;
    const double v = 1.0 + dp_prev - params.K * next.x2;
    return {next, v};
}

SampledSignal at_simulate(const SampledSignal& dp, const ATParameters& params)
{
    params.validate();
    std::vector<double> v(dp.size());
    ATState state;
    double dp_prev = 0.0;
    for (std::size_t t = 0; t < dp.size(); ++t) {
        auto [next, vt] = at_step(state, dp_prev, params, dp.fs());
        state = next;
        v[t] = vt;
        dp_prev = dp[t];
    }
    return {std::move(v), dp.fs(), "velocity"};
}

std::vector<SampledSignal> generate_templates(const SampledSignal& dp, const AriTemplateTable& table)
{
    std::vector<SampledSignal> out;
    out.reserve(kAriLevels);
    for (const auto& row : table.rows()) {
        SampledSignal curve = at_simulate(dp, row.params);
        out.emplace_back(std::vector<double>(curve.samples().begin(), curve.samples().end()),
                         curve.fs(), "ARI" + std::to_string(row.ari));
    }
    return out;
}

}  // namespace autoreg
