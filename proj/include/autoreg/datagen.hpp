#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "autoreg/fir_simpson.hpp"
#include "autoreg/signal.hpp"

namespace autoreg {

/// Step-pressure subject recipe. noise_sigma is relative: pressure noise is
/// noise_sigma * baseline_pressure, velocity noise is noise_sigma * 60 cm/s.
struct SynthSpec {
    double fs = 10.0;
    double duration = 60.0;
    double step_time = 5.0;
    double step_drop = 0.2;
    double baseline_pressure = 100.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    int true_ari = 0;
    CapnicState state = CapnicState::normocapnia;

    void validate() const;
    std::size_t sample_count() const;
};

inline constexpr double kBaselineVelocity = 60.0;

SampledSignal synth_pressure(const SynthSpec& spec);

/// Subject whose CBFV follows the A-T template of spec.true_ari.
SubjectRecord synth_subject(const SynthSpec& spec, std::string id = "synth");

/// Subject whose velocity deviation is a planted FIR response to its own
/// (possibly noisy) normalized pressure; no velocity noise is added.
SubjectRecord synth_fir_subject(const SynthSpec& spec, const FirCoefficients& h, std::string id = "fir");

struct SubjectPair {
    SubjectRecord normo;
    SubjectRecord hyper;
};

/// Planted ARIs and noise seed for one subject of a cohort.
struct CohortEntry {
    std::string id;
    int ari_normo = 0;
    int ari_hyper = 0;
    std::uint64_t seed_normo = 0;
    std::uint64_t seed_hyper = 0;
};

struct CohortPlan {
    SynthSpec base;
    std::vector<CohortEntry> subjects;
};

/// Draws normo ARIs from 6..9 and drops from `hyper_drop_choices`; the subject at
/// `anomaly_index` (0-based) gets hyper = normo + 1 instead.
CohortPlan plan_cohort(std::size_t n_subjects, const std::set<int>& hyper_drop_choices,
                       std::optional<std::size_t> anomaly_index, std::uint64_t seed,
                       const SynthSpec& base = {});

/// Plan from explicit (normo, hyper) ARI pairs; ids are "1", "2", ...
CohortPlan plan_from_pairs(const std::vector<std::pair<int, int>>& pairs, std::uint64_t seed,
                           const SynthSpec& base = {});

std::vector<SubjectPair> synth_cohort(const CohortPlan& plan);

std::vector<SubjectPair> synth_cohort(std::size_t n_subjects, const std::set<int>& hyper_drop_choices,
                                      std::optional<std::size_t> anomaly_index, std::uint64_t seed);

/// One record of a cohort manifest: where its CSV lives and what was planted.
struct ManifestEntry {
    std::string id;
    CapnicState state = CapnicState::normocapnia;
    int ari = 0;
    std::uint64_t seed = 0;
    std::string file;
};

struct CohortManifest {
    SynthSpec base;
    std::vector<ManifestEntry> records;
};

inline constexpr const char* kCohortManifestVersion = "cohort-v1";

/// Two entries per subject, files named "<id>_normo.csv" / "<id>_hyper.csv".
CohortManifest make_manifest(const CohortPlan& plan);
std::string manifest_to_json(const CohortManifest& manifest);
CohortManifest manifest_from_json(const std::string& text);

}  // namespace autoreg
