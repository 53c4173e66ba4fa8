#include "autoreg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "autoreg/aaslid_tiecks.hpp"

namespace autoreg {

namespace {

constexpr std::size_t kDropped = kFirTaps - 1;

SampledSignal plus_one(const SampledSignal& deviation, std::string label)
{
    std::vector<double> v(deviation.samples().begin(), deviation.samples().end());
    for (double& x : v) {
        x += 1.0;
    }
    return {std::move(v), deviation.fs(), std::move(label)};
}

std::vector<SampledSignal> drop_leading(const std::vector<SampledSignal>& curves, std::size_t count)
{
    std::vector<SampledSignal> out;
    out.reserve(curves.size());
    for (const auto& c : curves) {
        out.push_back(c.slice(count, c.size() - count));
    }
    return out;
}

}  // namespace

std::string_view estimator_name(const EstimatorChoice& estimator)
{
    switch (estimator.index()) {
    case 0:
        return "measured";
    case 1:
        return "fir";
    default:
        return "graybox";
    }
}

NormalizedRecord normalize_record(const SubjectRecord& record, const PipelineOptions& options)
{
    NormalizationParams params = options.norm.value_or(
        NormalizationParams(baseline_mean(record.abp, options.baseline_window), options.crcp));
    const double vbase = baseline_mean(record.cbfv, options.baseline_window);
    if (!(vbase > 0.0)) {
        throw Error("subject '" + record.id + "': velocity baseline must be positive");
    }
    std::vector<double> v(record.cbfv.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = record.cbfv[i] / vbase;
    }
    return {normalize_pressure(record.abp, params), SampledSignal(std::move(v), record.cbfv.fs(), "velocity"),
            params, vbase};
}

SampledSignal velocity_deviation(const NormalizedRecord& normalized)
{
    std::vector<double> dev(normalized.velocity.samples().begin(), normalized.velocity.samples().end());
    for (double& x : dev) {
        x -= 1.0;
    }
    return {std::move(dev), normalized.velocity.fs(), "velocity_deviation"};
}

FirCoefficients fit_record_fir(const SubjectRecord& record, double ridge, const PipelineOptions& options)
{
    NormalizedRecord n = normalize_record(record, options);
    return fir_fit(n.dp, velocity_deviation(n), ridge);
}

std::pair<GrayBoxModel, TrainingTrace> train_record_graybox(const SubjectRecord& record,
                                                            const GrayBoxConfig& config,
                                                            const PipelineOptions& options)
{
    NormalizedRecord n = normalize_record(record, options);
    GrayBoxModel model = gb_fit_standardization(gb_init(config), n.dp);
    return gb_train(std::move(model), n.dp, velocity_deviation(n), config);
}

AriEstimate estimate_ari(const SubjectRecord& record, const EstimatorChoice& estimator,
                         const PipelineOptions& options)
{
    NormalizedRecord n = normalize_record(record, options);
    std::vector<SampledSignal> templates = generate_templates(n.dp);

    if (std::holds_alternative<MeasuredVelocity>(estimator)) {
        return classify(n.velocity, templates, options.metric);
    }
    SampledSignal estimate = std::holds_alternative<FirEstimator>(estimator)
                                 ? plus_one(fir_predict(std::get<FirEstimator>(estimator).h, n.dp), "fir")
                                 : plus_one(gb_predict(std::get<GrayBoxEstimator>(estimator).model, n.dp),
                                            "graybox");
    return classify(estimate, drop_leading(templates, kDropped), options.metric);
}

CohortSummary summarize(const std::vector<StateChangeReport>& rows)
{
    CohortSummary s;
    for (const auto& r : rows) {
        s.exceeds_limit += r.exceeds_limit ? 1 : 0;
        s.anomalous_increase += r.anomalous_increase ? 1 : 0;
    }
    return s;
}

bool subject_id_less(const std::string& a, const std::string& b)
{
    std::size_t i = 0;
    std::size_t j = 0;
    auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    while (i < a.size() && j < b.size()) {
        if (digit(a[i]) && digit(b[j])) {
            std::size_t ie = i;
            std::size_t je = j;
            while (ie < a.size() && digit(a[ie])) {
                ++ie;
            }
            while (je < b.size() && digit(b[je])) {
                ++je;
            }
            std::string_view na(a.data() + i, ie - i);
            std::string_view nb(b.data() + j, je - j);
            while (na.size() > 1 && na.front() == '0') {
                na.remove_prefix(1);
            }
            while (nb.size() > 1 && nb.front() == '0') {
                nb.remove_prefix(1);
            }
            if (na.size() != nb.size()) {
                return na.size() < nb.size();
            }
            if (na != nb) {
                return na < nb;
            }
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) {
                return a[i] < b[j];
            }
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) {
        return (a.size() - i) < (b.size() - j);
    }
    return a < b;
}

CohortReport evaluate_cohort(const std::vector<SubjectPair>& pairs, const EstimatorFactory& estimator,
                             const PipelineOptions& options)
{
    CohortReport report;
    for (const auto& pair : pairs) {
        if (pair.normo.id != pair.hyper.id) {
            throw Error("unmatched pair: '" + pair.normo.id + "' vs '" + pair.hyper.id + "'");
        }
        if (pair.normo.state != CapnicState::normocapnia || pair.hyper.state != CapnicState::hypercapnia) {
            throw Error("unmatched pair: subject '" + pair.normo.id + "' needs one record per state");
        }
        AriEstimate normo = estimate_ari(pair.normo, estimator(pair.normo), options);
        AriEstimate hyper = estimate_ari(pair.hyper, estimator(pair.hyper), options);
        report.rows.push_back(compare_states(normo, hyper, pair.normo.id));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const auto& a, const auto& b) { return subject_id_less(a.subject_id, b.subject_id); });
    report.summary = summarize(report.rows);
    return report;
}

CohortReport evaluate_cohort(const std::vector<SubjectPair>& pairs, const EstimatorChoice& estimator,
                             const PipelineOptions& options)
{
    return evaluate_cohort(pairs, EstimatorFactory([&estimator](const SubjectRecord&) { return estimator; }),
                           options);
}

std::string report_to_json(const CohortReport& report)
{
    nlohmann::ordered_json j;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({
            {"subject", r.subject_id},
            {"ari_normo", r.ari_normo},
            {"ari_hyper", r.ari_hyper},
            {"delta", r.delta},
            {"exceeds_limit", r.exceeds_limit},
            {"anomalous_increase", r.anomalous_increase},
        });
    }
    j["rows"] = rows;
    j["summary"] = {
        {"subjects", report.rows.size()},
        {"exceeds_limit", report.summary.exceeds_limit},
        {"anomalous_increase", report.summary.anomalous_increase},
    };
    return j.dump(2) + "\n";
}

std::string report_to_table(const CohortReport& report)
{
    std::ostringstream out;
    const std::size_t n = report.rows.size();
    const std::size_t left = (n + 1) / 2;
    auto cells = [&out](const StateChangeReport& r) {
        out << std::setw(7) << r.subject_id << std::setw(7) << r.ari_normo << std::setw(7) << r.ari_hyper;
    };
    out << "Subject  Normo  Hyper    Subject  Normo  Hyper\n";
    for (std::size_t i = 0; i < left; ++i) {
        cells(report.rows[i]);
        if (i + left < n) {
            out << "    ";
            cells(report.rows[i + left]);
        }
        out << '\n';
    }
    out << '\n';
    out << "subjects: " << n << '\n';
    out << "exceeds_limit (|delta| > " << kStateChangeLimit << "): " << report.summary.exceeds_limit << '\n';
    out << "anomalous_increase (delta > 0): " << report.summary.anomalous_increase;
    bool first = true;
    for (const auto& r : report.rows) {
        if (r.anomalous_increase) {
            out << (first ? " [" : ", ") << r.subject_id;
            first = false;
        }
    }
    out << (first ? "" : "]") << '\n';
    return out.str();
}

std::string estimate_to_json(const AriEstimate& estimate, std::string_view estimator)
{
    nlohmann::ordered_json j;
    j["ari"] = estimate.ari;
    j["score"] = estimate.score;
    j["metric"] = std::string(to_string(estimate.metric));
    j["estimator"] = std::string(estimator);
    j["per_template_scores"] = estimate.per_template_scores;
    return j.dump(2) + "\n";
}

}  // namespace autoreg
