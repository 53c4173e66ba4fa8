#include "autoreg/ari_classifier.hpp"

#include <cmath>
#include <cstdlib>
#include <span>

namespace autoreg {

namespace {

double mean_squared_error(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

double mean_of(std::span<const double> a)
{
    double sum = 0.0;
    for (double x : a) {
        sum += x;
    }
    return sum / static_cast<double>(a.size());
}

bool is_constant(std::span<const double> a)
{
    for (double x : a) {
        if (x != a.front()) {
            return false;
        }
    }
    return true;
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    if (is_constant(a) || is_constant(b)) {
        throw Error("undefined correlation: zero-variance signal");
    }
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw Error("undefined correlation: zero-variance signal");
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::string_view to_string(FitMetric metric)
{
    return metric == FitMetric::mse ? "mse" : "correlation";
}

FitMetric parse_fit_metric(std::string_view text)
{
    if (text == "mse") {
        return FitMetric::mse;
    }
    if (text == "correlation") {
        return FitMetric::correlation;
    }
    throw Error("unknown metric '" + std::string(text) + "'");
}

AriEstimate classify(const SampledSignal& v_measured, const std::vector<SampledSignal>& templates,
                     FitMetric metric, MatchWindow window)
{
    if (templates.size() != kAriLevels) {
        throw Error("classification needs exactly 10 templates");
    }
    const std::size_t n = v_measured.size();
    for (const auto& t : templates) {
        if (t.size() != n || t.fs() != v_measured.fs()) {
            throw Error("templates and measured velocity must share length and fs");
        }
    }
    if (window.trim_start + window.trim_end + 2 > n) {
        throw Error("comparison window must keep at least 2 samples");
    }
    const std::size_t count = n - window.trim_start - window.trim_end;
    auto measured = v_measured.samples().subspan(window.trim_start, count);

    AriEstimate est;
    est.metric = metric;
    for (int k = 0; k < kAriLevels; ++k) {
        auto tmpl = templates[static_cast<std::size_t>(k)].samples().subspan(window.trim_start, count);
        est.per_template_scores[static_cast<std::size_t>(k)] =
            metric == FitMetric::mse ? mean_squared_error(measured, tmpl) : pearson(measured, tmpl);
    }

    int best = 0;
    for (int k = 1; k < kAriLevels; ++k) {
        const double s = est.per_template_scores[static_cast<std::size_t>(k)];
        const double b = est.per_template_scores[static_cast<std::size_t>(best)];
        if (metric == FitMetric::mse ? s < b : s > b) {
            best = k;
        }
    }
    est.ari = best;
    est.score = est.per_template_scores[static_cast<std::size_t>(best)];
    return est;
}

StateChangeReport compare_states(const AriEstimate& normo, const AriEstimate& hyper,
                                 std::string subject_id)
{
    StateChangeReport r;
    r.subject_id = std::move(subject_id);
    r.ari_normo = normo.ari;
    r.ari_hyper = hyper.ari;
    r.delta = hyper.ari - normo.ari;
    r.exceeds_limit = std::abs(r.delta) > kStateChangeLimit;
    r.anomalous_increase = r.delta > 0;
    return r;
}

}  // namespace autoreg
