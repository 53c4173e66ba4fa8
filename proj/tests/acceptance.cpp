// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "autoreg/aaslid_tiecks.hpp"
#include "autoreg/cli.hpp"
#include "autoreg/pipeline.hpp"
#include "test_support.hpp"

using namespace autoreg;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

/// Within-one-step count measured on the first run of criterion 2, kept as a regression floor.
constexpr int kFrozenWithinOne = 100;

Verdict template_round_trip()
{
    Verdict v;
    for (std::uint64_t seed : {0u, 1u}) {
        for (int k = 0; k < kAriLevels; ++k) {
            SynthSpec spec;
            spec.true_ari = k;
            spec.seed = seed;
            AriEstimate est = estimate_ari(synth_subject(spec), MeasuredVelocity{});
            v.require(est.ari == k, "ARI " + std::to_string(k) + " recovered as " + std::to_string(est.ari));
            // Scaling by the 60 cm/s baseline and back leaves only rounding error.
            v.require(est.score <= 1e-30, "ARI " + std::to_string(k) + " mse " + std::to_string(est.score));
        }
    }
    return v;
}

Verdict noise_tolerance()
{
    Verdict v;
    int within = 0;
    for (int k = 0; k < kAriLevels; ++k) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SynthSpec spec;
            spec.true_ari = k;
            spec.noise_sigma = 0.01;
            spec.seed = seed;
            within += std::abs(estimate_ari(synth_subject(spec), MeasuredVelocity{}).ari - k) <= 1 ? 1 : 0;
        }
    }
    v.detail = std::to_string(within) + "/100 within one step";
    v.require(within >= 95, v.detail);
    v.require(within >= kFrozenWithinOne, v.detail + ", below frozen " + std::to_string(kFrozenWithinOne));
    return v;
}

Verdict at_properties()
{
    Verdict v;
    const auto& table = AriTemplateTable::standard();
    SampledSignal zero = test::constant(0.0, 600);
    for (const auto& row : table.rows()) {
        SampledSignal rest = at_simulate(zero, row.params);
        for (double x : rest.samples()) {
            v.require(x == 1.0, "rest state left 1 for ARI " + std::to_string(row.ari));
        }
    }

    SampledSignal x = test::gaussian(600, 1, 0.1);
    SampledSignal y = test::gaussian(600, 2, 0.1);
    const double a = 1.7;
    const double b = -0.6;
    std::vector<double> mix(600);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        mix[i] = a * x[i] + b * y[i];
    }
    SampledSignal m(mix, 10.0);
    for (const auto& row : table.rows()) {
        SampledSignal vx = at_simulate(x, row.params);
        SampledSignal vy = at_simulate(y, row.params);
        SampledSignal vm = at_simulate(m, row.params);
        double worst = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < mix.size(); ++i) {
            const double expected = a * (vx[i] - 1.0) + b * (vy[i] - 1.0);
            worst = std::max(worst, std::abs((vm[i] - 1.0) - expected));
            scale = std::max(scale, std::abs(expected));
        }
        v.require(worst <= 1e-12 * scale, "superposition off for ARI " + std::to_string(row.ari));
    }

    SampledSignal step = test::step_dp();
    SampledSignal v0 = at_simulate(step, table.params(0));
    SampledSignal v9 = at_simulate(step, table.params(9));
    const double end0 = std::abs(v0[v0.size() - 1] - 1.0);
    const double end9 = std::abs(v9[v9.size() - 1] - 1.0);
    v.require(end9 < end0, "ARI 9 does not regulate better than ARI 0");
    return v;
}

Verdict fir_identification()
{
    Verdict v;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed + 1000);
        std::uniform_real_distribution<double> tap(-1.0, 1.0);
        FirCoefficients truth;
        for (double& c : truth.h) {
            c = tap(rng);
        }
        SampledSignal p = test::gaussian(500, seed);
        SampledSignal out = fir_predict(truth, p);
        std::vector<double> aligned(p.size(), 0.0);
        for (std::size_t j = 0; j < out.size(); ++j) {
            aligned[j + kFirTaps - 1] = out[j];
        }
        FirCoefficients fit = fir_fit(p, SampledSignal(aligned, p.fs()));
        const double err = test::max_abs_diff(fit.h, truth.h);
        v.require(err < 1e-6, "seed " + std::to_string(seed) + " tap error " + std::to_string(err));
    }

    SampledSignal flat = test::constant(1.5, 80);
    SampledSignal w = test::constant(0.3, 80);
    bool threw = false;
    try {
        fir_fit(flat, w, 0.0);
    } catch (const Error&) {
        threw = true;
    }
    v.require(threw, "constant pressure accepted without ridge");
    try {
        FirCoefficients h = fir_fit(flat, w, 1e-3);
        for (double c : h.h) {
            v.require(std::isfinite(c), "ridge fit is not finite");
        }
    } catch (const Error& e) {
        v.require(false, std::string("ridge fit failed: ") + e.what());
    }
    return v;
}

std::pair<SampledSignal, SampledSignal> planted_fir_data(std::uint64_t seed, double noise)
{
    SynthSpec spec;
    spec.noise_sigma = noise;
    spec.seed = seed;
    FirCoefficients h{{0.05, 0.9, 0.1, -0.05, -0.1, -0.15, -0.2}};
    SubjectRecord rec = synth_fir_subject(spec, h);
    NormalizedRecord n = normalize_record(rec);
    return {n.dp, velocity_deviation(n)};
}

Verdict graybox_gradients()
{
    Verdict v;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto [dp, dev] = planted_fir_data(seed + 40, 0.02);
        GrayBoxConfig cfg;
        cfg.seed = seed;
        GrayBoxModel m = gb_fit_standardization(gb_init(cfg), dp);
        const double err = gb_gradient_check(m, dp, dev);
        v.require(err < 1e-5, "seed " + std::to_string(seed) + " relative error " + std::to_string(err));
    }

    auto [dp, dev] = planted_fir_data(7, 0.02);
    GrayBoxConfig cfg;
    cfg.seed = 7;
    cfg.epochs = 200;
    GrayBoxModel before = gb_fit_standardization(gb_init(cfg), dp);
    GrayBoxModel after = gb_train(before, dp, dev, cfg).first;
    auto jb = nlohmann::json::parse(gb_to_json(before));
    auto ja = nlohmann::json::parse(gb_to_json(after));
    std::set<std::string> changed;
    for (auto it = jb.begin(); it != jb.end(); ++it) {
        if (!ja.contains(it.key()) || ja.at(it.key()) != it.value()) {
            changed.insert(it.key());
        }
    }
    v.require(ja.size() == jb.size(), "serialized keys changed");
    for (const auto& key : changed) {
        v.require(key == "W1" || key == "b1" || key == "W2" || key == "b2", "training changed '" + key + "'");
    }
    v.require(!changed.empty(), "training changed nothing");
    return v;
}

Verdict graybox_training()
{
    Verdict v;
    auto [dp, dev] = planted_fir_data(3, 0.0);
    GrayBoxConfig cfg;
    cfg.seed = 3;
    GrayBoxModel init = gb_fit_standardization(gb_init(cfg), dp);
    auto [model, trace] = gb_train(init, dp, dev, cfg);
    std::ostringstream ratio;
    ratio << "loss " << trace.losses.front() << " -> " << trace.final_loss;
    v.detail = ratio.str();
    v.require(trace.final_loss < 0.5 * trace.losses.front(), v.detail);

    GrayBoxConfig still = cfg;
    still.learning_rate = 0.0;
    still.epochs = 50;
    GrayBoxModel same = gb_train(init, dp, dev, still).first;
    v.require(same == init && gb_to_json(same) == gb_to_json(init), "learning rate 0 moved the model");
    return v;
}

Verdict cohort_fixture()
{
    Verdict v;
    CohortReport report = evaluate_cohort(synth_cohort(plan_from_pairs(test::kFixturePairs, 2024)), MeasuredVelocity{});
    v.require(report.rows.size() == 16, "row count");
    for (std::size_t i = 0; i < report.rows.size() && i < 16; ++i) {
        const auto& r = report.rows[i];
        v.require(r.subject_id == std::to_string(i + 1), "row order");
        v.require(r.ari_normo == test::kFixturePairs[i].first && r.ari_hyper == test::kFixturePairs[i].second,
                  "subject " + r.subject_id + " pair differs");
        v.require(r.anomalous_increase == (i == 13), "anomaly flag on subject " + r.subject_id);
    }
    v.require(report.summary.anomalous_increase == 1, "anomalous increase count");
    v.require(report.summary.exceeds_limit == 0, "exceeds_limit count");
    const std::string table = report_to_table(report);
    v.require(table.find("anomalous_increase (delta > 0): 1 [14]") != std::string::npos, "table summary");
    return v;
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli_run(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

/// Concatenated contents of every file under `dir`, in path order.
std::string snapshot(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
        all += fs::relative(f, dir).string() + "\n" + test::slurp(f);
    }
    return all;
}

Verdict cli_determinism()
{
    Verdict v;
    const fs::path root = test::scratch_dir("acceptance_determinism");
    const fs::path data = root / "data";
    fs::create_directories(data);
    const std::string subject = (data / "subject.csv").string();
    const std::string slow = (data / "slow.csv").string();
    const std::string cohort = (data / "cohort").string();
    const std::string random_cohort = (data / "random").string();
    const std::string coeffs = (data / "h.json").string();
    const std::string model = (data / "model.json").string();
    const std::string pairs = AUTOREG_FIXTURES "/cohort_pairs.json";

    auto setup = [&](const std::vector<std::string>& args) {
        CliRun r = cli_run(args);
        v.require(r.code == 0, "setup failed: " + r.err);
    };
    setup({"--seed", "4", "--out", subject, "synth", "--ari", "6", "--noise", "0.01"});
    setup({"--seed", "5", "--fs", "2", "--out", slow, "synth", "--ari", "5", "--noise", "0.01"});
    setup({"--seed", "6", "--out", cohort, "synth", "--pairs", pairs});
    setup({"--out", coeffs, "fit-fir", "--input", slow});
    setup({"--seed", "1", "--out", model, "train", "--input", slow, "--epochs", "200"});

    // Each command writes to <run>/out (or a directory for cohort synthesis).
    const std::vector<std::vector<std::string>> commands{
        {"templates"},
        {"--format", "json", "--fs", "4", "templates", "--duration", "30", "--noise", "0.01"},
        {"templates", "--input", subject},
        {"--seed", "9", "synth", "--ari", "3", "--noise", "0.02"},
        {"--seed", "9", "synth", "--subjects", "5", "--anomaly", "1", "--noise", "0.01"},
        {"--seed", "9", "synth", "--pairs", pairs},
        {"classify", "--input", subject},
        {"classify", "--input", subject, "--metric", "correlation"},
        {"classify", "--input", slow, "--estimator", "fir"},
        {"classify", "--input", slow, "--estimator", "fir", "--coefficients", coeffs},
        {"classify", "--input", slow, "--estimator", "graybox", "--model", model},
        {"fit-fir", "--input", slow},
        {"--format", "csv", "fit-fir", "--input", slow, "--ridge", "0.01"},
        {"--seed", "2", "train", "--input", slow, "--epochs", "100"},
        {"cohort", "--manifest", cohort + "/manifest.json"},
        {"--format", "json", "cohort", "--manifest", cohort + "/manifest.json", "--metric", "correlation"},
        {"cohort", "--manifest", cohort + "/manifest.json", "--estimator", "fir", "--coefficients", coeffs},
        {"--seed", "3", "cohort", "--manifest", cohort + "/manifest.json", "--estimator", "graybox", "--epochs",
         "20"},
    };

    for (std::size_t c = 0; c < commands.size(); ++c) {
        std::string outputs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = root / ("run" + std::to_string(c) + "_" + std::to_string(rep));
            fs::create_directories(dir);
            std::vector<std::string> args{"--out", (dir / "out").string()};
            args.insert(args.end(), commands[c].begin(), commands[c].end());
            CliRun r = cli_run(args);
            v.require(r.code == 0, "command " + std::to_string(c) + " failed: " + r.err);
            outputs[rep] = r.out + r.err + snapshot(dir);
        }
        v.require(!outputs[0].empty() && outputs[0] == outputs[1], "command " + std::to_string(c) + " differs");
    }
    v.detail = std::to_string(commands.size()) + " commands";
    return v;
}

struct Criterion {
    int number;
    std::string name;
    std::function<Verdict()> check;
    double time_limit_s;  // 0 means no limit
};

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "template round trip", template_round_trip, 1.0},
        {2, "noise tolerance", noise_tolerance, 10.0},
        {3, "A-T model properties", at_properties, 0.0},
        {4, "FIR identification", fir_identification, 0.0},
        {5, "gray-box gradients and immutability", graybox_gradients, 0.0},
        {6, "gray-box training", graybox_training, 0.0},
        {7, "cohort report fixture", cohort_fixture, 5.0},
        {8, "CLI determinism", cli_determinism, 0.0},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v.ok = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && elapsed >= c.time_limit_s) {
            v.ok = false;
            v.detail = "took " + std::to_string(elapsed) + " s, limit " + std::to_string(c.time_limit_s) + " s";
        }
        failures += v.ok ? 0 : 1;
        std::ostringstream line;
        line << (v.ok ? "PASS" : "FAIL") << "  " << c.number << "  " << c.name;
        line.precision(3);
        line << "  (" << std::fixed << elapsed << " s";
        if (!v.detail.empty()) {
            line << "; " << v.detail;
        }
        line << ")";
        std::cout << line.str() << '\n';
    }
    return failures == 0 ? 0 : 1;
}
