#include "autoreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

#include "autoreg/aaslid_tiecks.hpp"

namespace autoreg {

namespace {

std::vector<double> pressure_samples(const SynthSpec& spec, std::mt19937_64& rng)
{
    const std::size_t n = spec.sample_count();
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fs;
        p[i] = t < spec.step_time ? spec.baseline_pressure
                                  : spec.baseline_pressure * (1.0 - spec.step_drop);
    }
    if (spec.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma * spec.baseline_pressure);
        for (double& x : p) {
            x += noise(rng);
        }
    }
    return p;
}

SynthSpec with(const SynthSpec& base, int ari, CapnicState state, std::uint64_t seed)
{
    SynthSpec s = base;
    s.true_ari = ari;
    s.state = state;
    s.seed = seed;
    return s;
}

}  // namespace

void SynthSpec::validate() const
{
    if (!(fs > 0.0) || !std::isfinite(fs) || !(duration > 0.0) || !std::isfinite(duration)) {
        throw Error("synth spec: fs and duration must be positive");
    }
    if (!(step_time > 0.0 && step_time < duration)) {
        throw Error("synth spec: need 0 < step_time < duration");
    }
    if (!(step_drop >= 0.0 && step_drop < 1.0)) {
        throw Error("synth spec: need 0 <= step_drop < 1");
    }
    if (!(baseline_pressure > 0.0) || !std::isfinite(baseline_pressure)) {
        throw Error("synth spec: baseline_pressure must be positive");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw Error("synth spec: noise_sigma must be >= 0");
    }
    if (true_ari < 0 || true_ari >= kAriLevels) {
        throw Error("synth spec: true_ari must be in 0..9");
    }
    if (sample_count() < 2) {
        throw Error("synth spec: fewer than 2 samples");
    }
}

std::size_t SynthSpec::sample_count() const
{
    return static_cast<std::size_t>(std::llround(duration * fs));
}

SampledSignal synth_pressure(const SynthSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    return {pressure_samples(spec, rng), spec.fs, "abp"};
}

SubjectRecord synth_subject(const SynthSpec& spec, std::string id)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    SampledSignal abp(pressure_samples(spec, rng), spec.fs, "abp");

    SynthSpec clean = spec;
    clean.noise_sigma = 0.0;
    std::mt19937_64 unused(spec.seed);
    SampledSignal core(pressure_samples(clean, unused), spec.fs, "abp");
    SampledSignal dp = normalize_pressure(core, NormalizationParams(spec.baseline_pressure, 0.0));
    SampledSignal v = at_simulate(dp, AriTemplateTable::standard().params(spec.true_ari));

    std::vector<double> cbfv(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        cbfv[i] = kBaselineVelocity * v[i];
    }
    if (spec.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma * kBaselineVelocity);
        for (double& x : cbfv) {
            x += noise(rng);
        }
    }
    return {std::move(id), spec.state, std::move(abp), SampledSignal(std::move(cbfv), spec.fs, "cbfv")};
}

SubjectRecord synth_fir_subject(const SynthSpec& spec, const FirCoefficients& h, std::string id)
{
    SampledSignal abp = synth_pressure(spec);
    SampledSignal dp = normalize_pressure(abp, NormalizationParams(spec.baseline_pressure, 0.0));

    // Zero history before the first sample, as in the A-T simulation.
    std::vector<double> cbfv(dp.size());
    for (std::size_t i = 0; i < dp.size(); ++i) {
        double dev = 0.0;
        for (std::size_t k = 0; k < kFirTaps && k <= i; ++k) {
            dev += h.h[k] * dp[i - k];
        }
        cbfv[i] = kBaselineVelocity * (1.0 + dev);
    }
    return {std::move(id), spec.state, std::move(abp), SampledSignal(std::move(cbfv), spec.fs, "cbfv")};
}

CohortPlan plan_cohort(std::size_t n_subjects, const std::set<int>& hyper_drop_choices,
                       std::optional<std::size_t> anomaly_index, std::uint64_t seed, const SynthSpec& base)
{
    if (n_subjects == 0) {
        throw Error("cohort needs at least one subject");
    }
    if (hyper_drop_choices.empty() || *hyper_drop_choices.begin() < 0) {
        throw Error("hyper drop choices must be a non-empty set of non-negative integers");
    }
    if (anomaly_index && *anomaly_index >= n_subjects) {
        throw Error("anomaly_index out of range");
    }
    const std::vector<int> drops(hyper_drop_choices.begin(), hyper_drop_choices.end());
    std::mt19937_64 rng(seed);
    CohortPlan plan;
    plan.base = base;
    for (std::size_t i = 0; i < n_subjects; ++i) {
        const bool anomalous = anomaly_index && *anomaly_index == i;
        // An anomalous subject must have room to increase.
        std::uniform_int_distribution<int> normo_dist(6, anomalous ? 8 : 9);
        std::uniform_int_distribution<std::size_t> drop_dist(0, drops.size() - 1);
        CohortEntry e;
        e.id = std::to_string(i + 1);
        e.ari_normo = normo_dist(rng);
        const int drop = drops[drop_dist(rng)];
        e.ari_hyper = anomalous ? e.ari_normo + 1 : std::max(0, e.ari_normo - drop);
        e.seed_normo = rng();
        e.seed_hyper = rng();
        plan.subjects.push_back(e);
    }
    return plan;
}

CohortPlan plan_from_pairs(const std::vector<std::pair<int, int>>& pairs, std::uint64_t seed,
                           const SynthSpec& base)
{
    std::mt19937_64 rng(seed);
    CohortPlan plan;
    plan.base = base;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [normo, hyper] = pairs[i];
        if (normo < 0 || normo >= kAriLevels || hyper < 0 || hyper >= kAriLevels) {
            throw Error("planted ARI out of range 0..9");
        }
        CohortEntry e;
        e.id = std::to_string(i + 1);
        e.ari_normo = normo;
        e.ari_hyper = hyper;
        e.seed_normo = rng();
        e.seed_hyper = rng();
        plan.subjects.push_back(e);
    }
    return plan;
}

std::vector<SubjectPair> synth_cohort(const CohortPlan& plan)
{
    std::vector<SubjectPair> out;
    out.reserve(plan.subjects.size());
    for (const auto& e : plan.subjects) {
        out.push_back({synth_subject(with(plan.base, e.ari_normo, CapnicState::normocapnia, e.seed_normo), e.id),
                       synth_subject(with(plan.base, e.ari_hyper, CapnicState::hypercapnia, e.seed_hyper), e.id)});
    }
    return out;
}

std::vector<SubjectPair> synth_cohort(std::size_t n_subjects, const std::set<int>& hyper_drop_choices,
                                      std::optional<std::size_t> anomaly_index, std::uint64_t seed)
{
    return synth_cohort(plan_cohort(n_subjects, hyper_drop_choices, anomaly_index, seed));
}

CohortManifest make_manifest(const CohortPlan& plan)
{
    CohortManifest m;
    m.base = plan.base;
    for (const auto& e : plan.subjects) {
        m.records.push_back({e.id, CapnicState::normocapnia, e.ari_normo, e.seed_normo, e.id + "_normo.csv"});
        m.records.push_back({e.id, CapnicState::hypercapnia, e.ari_hyper, e.seed_hyper, e.id + "_hyper.csv"});
    }
    return m;
}

std::string manifest_to_json(const CohortManifest& manifest)
{
    nlohmann::ordered_json j;
    j["version"] = kCohortManifestVersion;
    j["spec"] = {
        {"fs", manifest.base.fs},
        {"duration", manifest.base.duration},
        {"step_time", manifest.base.step_time},
        {"step_drop", manifest.base.step_drop},
        {"baseline_pressure", manifest.base.baseline_pressure},
        {"noise_sigma", manifest.base.noise_sigma},
    };
    auto records = nlohmann::ordered_json::array();
    for (const auto& r : manifest.records) {
        records.push_back({
            {"id", r.id},
            {"state", std::string(to_string(r.state))},
            {"ari", r.ari},
            {"seed", r.seed},
            {"file", r.file},
        });
    }
    j["records"] = records;
    return j.dump(2) + "\n";
}

CohortManifest manifest_from_json(const std::string& text)
{
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("version").get<std::string>() != kCohortManifestVersion) {
            throw Error("unsupported cohort manifest version");
        }
        CohortManifest m;
        const auto& s = j.at("spec");
        m.base.fs = s.at("fs").get<double>();
        m.base.duration = s.at("duration").get<double>();
        m.base.step_time = s.at("step_time").get<double>();
        m.base.step_drop = s.at("step_drop").get<double>();
        m.base.baseline_pressure = s.at("baseline_pressure").get<double>();
        m.base.noise_sigma = s.at("noise_sigma").get<double>();
        for (const auto& r : j.at("records")) {
            ManifestEntry e;
            e.id = r.at("id").get<std::string>();
            e.state = parse_capnic_state(r.at("state").get<std::string>());
            e.ari = r.at("ari").get<int>();
            e.seed = r.at("seed").get<std::uint64_t>();
            e.file = r.at("file").get<std::string>();
            m.records.push_back(std::move(e));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed cohort manifest: ") + e.what());
    }
}

}  // namespace autoreg
