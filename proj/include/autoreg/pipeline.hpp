#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "autoreg/ari_classifier.hpp"
#include "autoreg/datagen.hpp"
#include "autoreg/fir_simpson.hpp"
#include "autoreg/graybox.hpp"
#include "autoreg/signal.hpp"

namespace autoreg {

struct MeasuredVelocity {};

struct FirEstimator {
    FirCoefficients h;
};

struct GrayBoxEstimator {
    GrayBoxModel model;
};

/// Where the velocity compared against the templates comes from.
using EstimatorChoice = std::variant<MeasuredVelocity, FirEstimator, GrayBoxEstimator>;

std::string_view estimator_name(const EstimatorChoice& estimator);

struct PipelineOptions {
    FitMetric metric = FitMetric::mse;
    /// Explicit normalization; unset means p_base = baseline_mean(abp, baseline_window).
    std::optional<NormalizationParams> norm;
    double crcp = 0.0;
    TimeWindow baseline_window{0.0, 5.0};
};

/// Normalized pressure dP and velocity scaled to a unit baseline.
struct NormalizedRecord {
    SampledSignal dp;
    SampledSignal velocity;
    NormalizationParams params;
    double velocity_baseline;
};

NormalizedRecord normalize_record(const SubjectRecord& record, const PipelineOptions& options = {});

/// Velocity deviation (velocity - 1) that the FIR and gray-box estimators model from dP.
SampledSignal velocity_deviation(const NormalizedRecord& normalized);

/// Per-record FIR identification on (dP, velocity - 1).
FirCoefficients fit_record_fir(const SubjectRecord& record, double ridge = 0.0,
                               const PipelineOptions& options = {});

/// Initializes, standardizes and trains a per-record gray-box model.
std::pair<GrayBoxModel, TrainingTrace> train_record_graybox(const SubjectRecord& record,
                                                            const GrayBoxConfig& config,
                                                            const PipelineOptions& options = {});

AriEstimate estimate_ari(const SubjectRecord& record, const EstimatorChoice& estimator,
                         const PipelineOptions& options = {});

struct CohortSummary {
    std::size_t exceeds_limit = 0;
    std::size_t anomalous_increase = 0;
};

struct CohortReport {
    std::vector<StateChangeReport> rows;
    CohortSummary summary;
};

/// Picks an estimator for one record, e.g. a per-subject fit.
using EstimatorFactory = std::function<EstimatorChoice(const SubjectRecord&)>;

CohortReport evaluate_cohort(const std::vector<SubjectPair>& pairs, const EstimatorChoice& estimator,
                             const PipelineOptions& options = {});
CohortReport evaluate_cohort(const std::vector<SubjectPair>& pairs, const EstimatorFactory& estimator,
                             const PipelineOptions& options = {});

/// Tallies recomputed from rows.
CohortSummary summarize(const std::vector<StateChangeReport>& rows);

/// Natural ordering of subject ids ("2" before "10").
bool subject_id_less(const std::string& a, const std::string& b);

std::string report_to_json(const CohortReport& report);
/// Two side-by-side Subject/Normo/Hyper column groups followed by the summary.
std::string report_to_table(const CohortReport& report);

std::string estimate_to_json(const AriEstimate& estimate, std::string_view estimator);

}  // namespace autoreg
