#include <doctest.h>

#include <json.hpp>

#include "autoreg/datagen.hpp"
#include "autoreg/graybox.hpp"
#include "test_support.hpp"

using namespace autoreg;

namespace {

const FirCoefficients kPlantedA{{0.05, 0.9, 0.1, -0.05, -0.1, -0.15, -0.2}};
const FirCoefficients kPlantedB{{0.0, 0.6, 0.3, 0.1, 0.0, -0.1, -0.3}};

/// Normalized pressure and velocity deviation of a planted-FIR synthetic subject.
std::pair<SampledSignal, SampledSignal> planted_data(const FirCoefficients& h, std::uint64_t seed)
{
    SynthSpec spec;
    spec.noise_sigma = 0.02;
    spec.seed = seed;
    SubjectRecord rec = synth_fir_subject(spec, h);
    SampledSignal dp = normalize_pressure(rec.abp, NormalizationParams(spec.baseline_pressure));
    std::vector<double> dev(rec.cbfv.size());
    for (std::size_t i = 0; i < dev.size(); ++i) {
        dev[i] = rec.cbfv[i] / kBaselineVelocity - 1.0;
    }
    return {dp, SampledSignal(dev, dp.fs())};
}

GrayBoxModel zero_model(std::size_t hidden = 8)
{
    GrayBoxConfig cfg;
    cfg.hidden_width = hidden;
    GrayBoxModel m = gb_init(cfg);
    std::vector<double> zeros(m.parameter_count(), 0.0);
    m.set_parameters(zeros);
    return m;
}

}  // namespace

TEST_CASE("gb_init is seeded and bounded")
{
    GrayBoxConfig cfg;
    cfg.seed = 42;
    GrayBoxModel a = gb_init(cfg);
    GrayBoxModel b = gb_init(cfg);
    CHECK(a == b);
    CHECK(a.W1.size() == 56);
    CHECK(a.b1.size() == 8);
    CHECK(a.W2.size() == 56);
    CHECK(a.b2.size() == 7);
    CHECK(a.parameter_count() == 127);

    cfg.seed = 43;
    CHECK(gb_init(cfg).parameters() != a.parameters());

    const double bound1 = 1.0 / std::sqrt(7.0);
    const double bound2 = 1.0 / std::sqrt(8.0);
    for (double w : a.W1) {
        CHECK(std::abs(w) <= bound1);
    }
    for (double w : a.W2) {
        CHECK(std::abs(w) <= bound2);
    }

    cfg.init_scale = 0.01;
    for (double w : gb_init(cfg).parameters()) {
        CHECK(std::abs(w) <= 0.01);
    }
    cfg.hidden_width = 0;
    CHECK_THROWS_AS(gb_init(cfg), Error);
}

TEST_CASE("gb_forward")
{
    const std::array<double, 7> window{0.3, -0.1, 0.2, 0.05, -0.4, 0.0, 0.7};
    SUBCASE("all-zero parameters")
    {
        GrayBoxOutput out = gb_forward(zero_model(), window);
        CHECK(out.v_hat == 0.0);
        for (double c : out.coeffs.h) {
            CHECK(c == 0.0);
        }
    }
    SUBCASE("constant identity tap")
    {
        GrayBoxConfig cfg;
        cfg.seed = 9;
        GrayBoxModel m = gb_init(cfg);
        std::fill(m.W2.begin(), m.W2.end(), 0.0);
        m.b2 = {1, 0, 0, 0, 0, 0, 0};
        CHECK(gb_forward(m, window).v_hat == window[0]);
    }
    SUBCASE("serial composition equals coefficients then FIR")
    {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            GrayBoxConfig cfg;
            cfg.seed = seed;
            GrayBoxModel m = gb_init(cfg);
            m.norm_stats = {0.1, 0.3};
            SampledSignal p = test::gaussian(7, seed + 5, 0.2);
            // fir_predict wants oldest first; the gray-box window is newest first.
            std::array<double, 7> w;
            for (std::size_t k = 0; k < 7; ++k) {
                w[k] = p[6 - k];
            }
            GrayBoxOutput out = gb_forward(m, w);
            SampledSignal two_step = fir_predict(out.coeffs, p);
            REQUIRE(two_step.size() == 1);
            CHECK(std::abs(out.v_hat - two_step[0]) <= 1e-12);
        }
    }
}

TEST_CASE("analytic gradients match central differences for a 10-seed suite")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto [dp, dev] = planted_data(kPlantedA, 500 + seed);
        GrayBoxConfig cfg;
        cfg.seed = seed;
        GrayBoxModel m = gb_fit_standardization(gb_init(cfg), dp);
        const double err = gb_gradient_check(m, dp, dev);
        CHECK(err < 1e-5);
    }
}

TEST_CASE("gradient check on all-zero data is exactly zero")
{
    GrayBoxConfig cfg;
    cfg.seed = 3;
    GrayBoxModel m = gb_init(cfg);
    SampledSignal zero = test::constant(0.0, 60);
    m = gb_fit_standardization(m, zero);
    GradientComparison g = gb_compare_gradients(m, zero, zero);
    for (std::size_t q = 0; q < g.analytic.size(); ++q) {
        CHECK(g.analytic[q] == 0.0);
        CHECK(g.numeric[q] == 0.0);
    }
    CHECK(g.max_rel_error == 0.0);
}

TEST_CASE("a hidden unit with no outgoing weights receives no gradient")
{
    auto [dp, dev] = planted_data(kPlantedB, 77);
    GrayBoxConfig cfg;
    cfg.seed = 5;
    GrayBoxModel m = gb_fit_standardization(gb_init(cfg), dp);
    const std::size_t hw = m.hidden_width();
    const std::size_t unit = 3;
    for (std::size_t k = 0; k < 7; ++k) {
        m.W2[k * hw + unit] = 0.0;
    }
    GradientComparison g = gb_compare_gradients(m, dp, dev);
    const std::size_t b1_offset = m.W1.size();
    for (std::size_t col = 0; col < 7; ++col) {
        CHECK(g.analytic[unit * 7 + col] == 0.0);
        CHECK(g.numeric[unit * 7 + col] == 0.0);
    }
    CHECK(g.analytic[b1_offset + unit] == 0.0);
    CHECK(g.numeric[b1_offset + unit] == 0.0);

    // Other units still learn.
    CHECK(g.analytic[0] != 0.0);
    CHECK(g.max_rel_error < 1e-5);
}

TEST_CASE("gb_train")
{
    auto [dp, dev] = planted_data(kPlantedA, 900);
    GrayBoxConfig cfg;
    cfg.seed = 11;
    GrayBoxModel init = gb_fit_standardization(gb_init(cfg), dp);

    SUBCASE("zero learning rate is a no-op")
    {
        GrayBoxConfig still = cfg;
        still.learning_rate = 0.0;
        still.epochs = 25;
        auto [model, trace] = gb_train(init, dp, dev, still);
        CHECK(model == init);
        CHECK(gb_to_json(model) == gb_to_json(init));
        REQUIRE(trace.losses.size() == 25);
        for (double l : trace.losses) {
            CHECK(l == trace.losses.front());
        }
        CHECK(trace.final_loss == trace.losses.front());
    }
    SUBCASE("default hyperparameters at least halve the loss")
    {
        auto [model, trace] = gb_train(init, dp, dev, cfg);
        REQUIRE(trace.losses.size() == cfg.epochs);
        for (double l : trace.losses) {
            REQUIRE(std::isfinite(l));
        }
        CHECK(trace.final_loss < 0.5 * trace.losses.front());
    }
    SUBCASE("a tiny step barely moves the loss")
    {
        GrayBoxConfig tiny = cfg;
        tiny.learning_rate = 1e-9;
        tiny.epochs = 1;
        auto [model, trace] = gb_train(init, dp, dev, tiny);
        CHECK(std::abs(trace.final_loss - trace.losses[0]) <= 1e-6 * trace.losses[0]);
    }
    SUBCASE("divergence is reported with its epoch")
    {
        GrayBoxConfig wild = cfg;
        wild.learning_rate = 1e8;
        CHECK_THROWS_WITH_AS(gb_train(init, dp, dev, wild), doctest::Contains("diverged at epoch"), Error);
    }
    SUBCASE("zero epochs returns the input")
    {
        GrayBoxConfig none = cfg;
        none.epochs = 0;
        auto [model, trace] = gb_train(init, dp, dev, none);
        CHECK(model == init);
        CHECK(trace.losses.empty());
    }
    SUBCASE("training is deterministic")
    {
        GrayBoxConfig short_run = cfg;
        short_run.epochs = 200;
        auto a = gb_train(init, dp, dev, short_run);
        auto b = gb_train(init, dp, dev, short_run);
        CHECK(a.first == b.first);
        CHECK(a.second.losses == b.second.losses);
    }
    SUBCASE("short inputs are rejected")
    {
        CHECK_THROWS_AS(gb_train(init, dp.slice(0, 13), dev.slice(0, 13), cfg), Error);
        CHECK_THROWS_AS(gb_train(init, dp.slice(0, 20), dev.slice(0, 21), cfg), Error);
    }
}

TEST_CASE("training only touches the empirical parameters")
{
    auto [dp, dev] = planted_data(kPlantedB, 901);
    GrayBoxConfig cfg;
    cfg.seed = 12;
    cfg.epochs = 300;
    GrayBoxModel before = gb_fit_standardization(gb_init(cfg), dp);
    GrayBoxModel after = gb_train(before, dp, dev, cfg).first;

    auto jb = nlohmann::json::parse(gb_to_json(before));
    auto ja = nlohmann::json::parse(gb_to_json(after));
    std::set<std::string> changed;
    for (auto it = jb.begin(); it != jb.end(); ++it) {
        if (ja.at(it.key()) != it.value()) {
            changed.insert(it.key());
        }
    }
    CHECK(ja.size() == jb.size());
    CHECK(changed == std::set<std::string>{"W1", "W2", "b1", "b2"});
}

TEST_CASE("pooled training fits one model over several subjects")
{
    auto a = planted_data(kPlantedA, 1);
    auto b = planted_data(kPlantedA, 2);
    GrayBoxConfig cfg;
    cfg.seed = 2;
    cfg.epochs = 500;
    GrayBoxModel m = gb_fit_standardization(gb_init(cfg), a.first);
    auto [model, trace] = gb_train_pooled(m, {a, b}, cfg);
    CHECK(trace.final_loss < trace.losses.front());
    CHECK(gb_loss(model, {a, b}) == trace.final_loss);
}

TEST_CASE("gb_coefficients")
{
    SUBCASE("constant-coefficient model")
    {
        GrayBoxConfig cfg;
        cfg.seed = 1;
        GrayBoxModel m = gb_init(cfg);
        std::fill(m.W2.begin(), m.W2.end(), 0.0);
        CoefficientSeries s = gb_coefficients(m, test::gaussian(30, 4));
        CHECK(s.per_window.size() == 24);
        for (const auto& c : s.per_window) {
            CHECK(std::vector<double>(c.h.begin(), c.h.end()) == m.b2);
        }
        for (std::size_t k = 0; k < 7; ++k) {
            CHECK(s.summary.h[k] == doctest::Approx(m.b2[k]).epsilon(1e-14));
        }
    }
    SUBCASE("window count")
    {
        GrayBoxModel m = gb_init({});
        CHECK(gb_coefficients(m, test::gaussian(7, 1)).per_window.size() == 1);
        CHECK_THROWS_AS(gb_coefficients(m, test::gaussian(6, 1)), Error);
    }
    SUBCASE("subjects with different planted responses get different summaries")
    {
        auto a = planted_data(kPlantedA, 31);
        auto b = planted_data(kPlantedB, 32);
        GrayBoxConfig cfg;
        cfg.seed = 8;
        auto ma = gb_train(gb_fit_standardization(gb_init(cfg), a.first), a.first, a.second, cfg).first;
        auto mb = gb_train(gb_fit_standardization(gb_init(cfg), b.first), b.first, b.second, cfg).first;
        auto sa = gb_coefficients(ma, a.first).summary;
        auto sb = gb_coefficients(mb, b.first).summary;
        CHECK(test::max_abs_diff(sa.h, sb.h) > 1e-3);
    }
}

TEST_CASE("model JSON")
{
    GrayBoxConfig cfg;
    cfg.seed = 17;
    cfg.hidden_width = 5;
    cfg.init_scale = 0.2;
    GrayBoxModel m = gb_init(cfg);
    m.norm_stats = {-0.07, 0.09};
    const std::string text = gb_to_json(m);
    CHECK(text.find("\"graybox-v1\"") != std::string::npos);
    CHECK(gb_from_json(text) == m);
    CHECK(gb_to_json(gb_from_json(text)) == text);

    auto j = nlohmann::json::parse(text);
    j["version"] = "graybox-v0";
    CHECK_THROWS_AS(gb_from_json(j.dump()), Error);
    j = nlohmann::json::parse(text);
    j["W1"].erase(0);
    CHECK_THROWS_AS(gb_from_json(j.dump()), Error);
    CHECK_THROWS_AS(gb_from_json("{"), Error);
}
