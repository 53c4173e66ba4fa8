#include "autoreg/signal.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace autoreg {

namespace {

constexpr double kGridJitter = 1e-6;

double parse_field(std::string_view field, std::size_t line_no)
{
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw Error("malformed CSV: cannot parse '" + std::string(field) + "' on line " +
                    std::to_string(line_no));
    }
    if (!std::isfinite(value)) {
        throw Error("NaN field on line " + std::to_string(line_no));
    }
    return value;
}

}  // namespace

SampledSignal::SampledSignal(std::vector<double> samples, double fs, std::string label)
    : samples_(std::move(samples)), fs_(fs), label_(std::move(label))
{
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
        throw Error("sampling frequency must be positive and finite");
    }
    if (samples_.empty()) {
        throw Error("signal must contain at least one sample");
    }
    for (double s : samples_) {
        if (!std::isfinite(s)) {
            throw Error("signal '" + label_ + "' contains a non-finite sample");
        }
    }
}

SampledSignal SampledSignal::slice(std::size_t first, std::size_t count) const
{
    if (first + count > samples_.size()) {
        throw Error("slice out of range");
    }
    auto begin = samples_.begin() + static_cast<std::ptrdiff_t>(first);
    return {std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count)), fs_, label_};
}

std::string_view to_string(CapnicState state)
{
    return state == CapnicState::normocapnia ? "normocapnia" : "hypercapnia";
}

CapnicState parse_capnic_state(std::string_view text)
{
    if (text == "normocapnia" || text == "normo") {
        return CapnicState::normocapnia;
    }
    if (text == "hypercapnia" || text == "hyper") {
        return CapnicState::hypercapnia;
    }
    throw Error("unknown capnic state '" + std::string(text) + "'");
}

SubjectRecord::SubjectRecord(std::string id_, CapnicState state_, SampledSignal abp_,
                             SampledSignal cbfv_)
    : id(std::move(id_)), state(state_), abp(std::move(abp_)), cbfv(std::move(cbfv_))
{
    if (abp.size() != cbfv.size()) {
        throw Error("subject '" + id + "': abp and cbfv lengths differ");
    }
    if (abp.fs() != cbfv.fs()) {
        throw Error("subject '" + id + "': abp and cbfv sampling frequencies differ");
    }
}

NormalizationParams::NormalizationParams(double p_base_, double crcp_) : p_base(p_base_), crcp(crcp_)
{
    if (!std::isfinite(p_base) || !std::isfinite(crcp) || !(p_base > crcp)) {
        throw Error("normalization requires p_base > crcp");
    }
}

std::string format_decimal(double value)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                   std::chars_format::general, 9);
    if (ec != std::errc{}) {
        throw Error("cannot format value");
    }
    return {buf.data(), ptr};
}

SubjectRecord load_subject_csv(std::istream& in, std::string id, CapnicState state,
                               std::optional<double> fs_override)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("malformed CSV: missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "time,abp,cbfv") {
        throw Error("malformed CSV: header must be 'time,abp,cbfv'");
    }

    std::vector<double> time;
    std::vector<double> abp;
    std::vector<double> cbfv;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::array<std::string_view, 3> fields;
        std::string_view rest = line;
        std::size_t count = 0;
        while (true) {
            auto comma = rest.find(',');
            if (count < fields.size()) {
                fields[count] = rest.substr(0, comma);
            }
            ++count;
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (count != 3) {
            throw Error("mismatched column count on line " + std::to_string(line_no));
        }
        time.push_back(parse_field(fields[0], line_no));
        abp.push_back(parse_field(fields[1], line_no));
        cbfv.push_back(parse_field(fields[2], line_no));
    }
    if (time.empty()) {
        throw Error("malformed CSV: no data rows");
    }

    std::optional<double> fs = fs_override;
    if (time.size() >= 2) {
        std::vector<double> steps(time.size() - 1);
        for (std::size_t i = 1; i < time.size(); ++i) {
            steps[i - 1] = time[i] - time[i - 1];
        }
        std::vector<double> sorted = steps;
        auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
        std::nth_element(sorted.begin(), mid, sorted.end());
        double median = *mid;
        if (sorted.size() % 2 == 0) {
            double lower = *std::max_element(sorted.begin(), mid);
            median = 0.5 * (median + lower);
        }
        for (double dt : steps) {
            if (!(dt > 0.0) || !(median > 0.0) || std::abs(dt - median) > kGridJitter * median) {
                throw Error("non-uniform time grid");
            }
        }
        if (!fs) {
            // The writer keeps 9 significant digits; finer fs digits are noise.
            std::string text = format_decimal(1.0 / median);
            fs = parse_field(text, 0);
        }
    }
    if (!fs) {
        throw Error("cannot infer sampling frequency from a single row; supply an override");
    }
    return {std::move(id), state, SampledSignal(std::move(abp), *fs, "abp"),
            SampledSignal(std::move(cbfv), *fs, "cbfv")};
}

void write_subject_csv(std::ostream& out, const SubjectRecord& record)
{
    out << "time,abp,cbfv\n";
    for (std::size_t i = 0; i < record.abp.size(); ++i) {
        out << format_decimal(record.abp.time_at(i)) << ',' << format_decimal(record.abp[i]) << ','
            << format_decimal(record.cbfv[i]) << '\n';
    }
}

double baseline_mean(const SampledSignal& signal, TimeWindow window)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        double t = signal.time_at(i);
        if (t >= window.start && t < window.end) {
            sum += signal[i];
            ++count;
        }
    }
    if (count == 0) {
        throw Error("empty baseline window");
    }
    return sum / static_cast<double>(count);
}

SampledSignal normalize_pressure(const SampledSignal& abp, const NormalizationParams& params)
{
    const double scale = params.p_base - params.crcp;
    std::vector<double> dp(abp.size());
    for (std::size_t i = 0; i < abp.size(); ++i) {
        dp[i] = (abp[i] - params.p_base) / scale;
    }
    return {std::move(dp), abp.fs(), "dP"};
}

}  // namespace autoreg
