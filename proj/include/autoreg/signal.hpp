#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace autoreg {

/// Raised for every contract violation and data error in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniformly sampled real-valued series. Immutable once built.
class SampledSignal {
public:
    SampledSignal(std::vector<double> samples, double fs, std::string label = {});

    std::span<const double> samples() const& { return samples_; }
    std::span<const double> samples() const&& = delete;
    double operator[](std::size_t i) const { return samples_[i]; }
    std::size_t size() const { return samples_.size(); }
    double fs() const { return fs_; }
    const std::string& label() const { return label_; }

    /// Timestamp of sample i, in seconds from the first sample.
    double time_at(std::size_t i) const { return static_cast<double>(i) / fs_; }
    double duration() const { return static_cast<double>(samples_.size()) / fs_; }

    /// Copy of samples [first, first + count) with the same fs and label.
    SampledSignal slice(std::size_t first, std::size_t count) const;

    friend bool operator==(const SampledSignal&, const SampledSignal&) = default;

private:
    std::vector<double> samples_;
    double fs_;
    std::string label_;
};

enum class CapnicState { normocapnia, hypercapnia };

std::string_view to_string(CapnicState state);
CapnicState parse_capnic_state(std::string_view text);

/// One recording session: ABP (mmHg) and CBFV (cm/s) on a shared time grid.
struct SubjectRecord {
    SubjectRecord(std::string id, CapnicState state, SampledSignal abp, SampledSignal cbfv);

    std::string id;
    CapnicState state;
    SampledSignal abp;
    SampledSignal cbfv;
};

/// Baseline pressure and critical closing pressure, both in mmHg.
struct NormalizationParams {
    NormalizationParams(double p_base, double crcp = 0.0);

    double p_base;
    double crcp;
};

/// Half-open time interval [start, end) in seconds.
struct TimeWindow {
    double start = 0.0;
    double end = 5.0;
};

SubjectRecord load_subject_csv(std::istream& in, std::string id, CapnicState state,
                               std::optional<double> fs_override = std::nullopt);

/// Writes the `time,abp,cbfv` format with 9 significant digits per value.
void write_subject_csv(std::ostream& out, const SubjectRecord& record);

/// Shortest-form decimal with at most 9 significant digits, locale independent.
std::string format_decimal(double value);

double baseline_mean(const SampledSignal& signal, TimeWindow window);

/// dP(t) = (P(t) - p_base) / (p_base - crcp).
SampledSignal normalize_pressure(const SampledSignal& abp, const NormalizationParams& params);

}  // namespace autoreg
