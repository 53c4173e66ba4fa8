#include "autoreg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "autoreg/aaslid_tiecks.hpp"
#include "autoreg/datagen.hpp"
#include "autoreg/pipeline.hpp"

namespace autoreg::cli {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out;
    std::string format;
    std::optional<double> fs;
    double crcp = 0.0;
    double baseline_window = 5.0;
};

struct SynthShape {
    double duration = 60.0;
    double step_time = 5.0;
    double step_drop = 0.2;
    double baseline_pressure = 100.0;
    double noise = 0.0;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const GlobalOptions& g, const std::string& text, std::ostream& out)
{
    if (g.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(g.out, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error("cannot write '" + g.out + "'");
    }
    file << text;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error("cannot write '" + path.string() + "'");
    }
    file << text;
}

std::string resolve_format(const GlobalOptions& g, std::initializer_list<const char*> allowed,
                           const std::string& command)
{
    if (g.format.empty()) {
        return *allowed.begin();
    }
    for (const char* a : allowed) {
        if (g.format == a) {
            return g.format;
        }
    }
    throw Error("--format " + g.format + " is not supported by '" + command + "'");
}

PipelineOptions pipeline_options(const GlobalOptions& g, const std::string& metric)
{
    if (!(g.baseline_window > 0.0)) {
        throw Error("--baseline-window must be positive");
    }
    PipelineOptions o;
    o.metric = parse_fit_metric(metric);
    o.crcp = g.crcp;
    o.baseline_window = {0.0, g.baseline_window};
    return o;
}

SubjectRecord load_record(const std::string& path, const std::string& id, const std::string& state,
                          std::optional<double> fs_override)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    return load_subject_csv(in, id, parse_capnic_state(state), fs_override);
}

SynthSpec synth_spec(const GlobalOptions& g, const SynthShape& shape)
{
    SynthSpec spec;
    spec.fs = g.fs.value_or(10.0);
    spec.duration = shape.duration;
    spec.step_time = shape.step_time;
    spec.step_drop = shape.step_drop;
    spec.baseline_pressure = shape.baseline_pressure;
    spec.noise_sigma = shape.noise;
    spec.seed = g.seed;
    return spec;
}

void add_shape_options(CLI::App* cmd, SynthShape& shape)
{
    cmd->add_option("--duration", shape.duration, "Record length in seconds");
    cmd->add_option("--step-time", shape.step_time, "Pressure step onset in seconds");
    cmd->add_option("--step-drop", shape.step_drop, "Fractional pressure drop at the step");
    cmd->add_option("--baseline-pressure", shape.baseline_pressure, "Pre-step pressure in mmHg");
    cmd->add_option("--noise", shape.noise, "Relative Gaussian noise sigma");
}

std::string templates_csv(const std::vector<SampledSignal>& templates)
{
    std::string out = "time";
    for (int k = 0; k < kAriLevels; ++k) {
        out += ",ARI" + std::to_string(k);
    }
    out += '\n';
    const auto& first = templates.front();
    for (std::size_t i = 0; i < first.size(); ++i) {
        out += format_decimal(first.time_at(i));
        for (const auto& t : templates) {
            out += ',';
            out += format_decimal(t[i]);
        }
        out += '\n';
    }
    return out;
}

std::string templates_json(const std::vector<SampledSignal>& templates)
{
    nlohmann::ordered_json j;
    j["fs"] = templates.front().fs();
    auto curves = nlohmann::ordered_json::array();
    for (const auto& t : templates) {
        curves.push_back(std::vector<double>(t.samples().begin(), t.samples().end()));
    }
    j["templates"] = curves;
    return j.dump() + "\n";
}

std::string trace_csv(const TrainingTrace& trace)
{
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < trace.losses.size(); ++e) {
        out += std::to_string(e) + ',' + format_decimal(trace.losses[e]) + '\n';
    }
    out += std::to_string(trace.losses.size()) + ',' + format_decimal(trace.final_loss) + '\n';
    return out;
}

std::set<int> parse_drops(const std::string& text)
{
    std::set<int> drops;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            drops.insert(std::stoi(item));
        } catch (const std::exception&) {
            throw Error("malformed --drops list '" + text + "'");
        }
    }
    return drops;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text)
{
    try {
        auto j = nlohmann::json::parse(text);
        std::vector<std::pair<int, int>> pairs;
        for (const auto& p : j) {
            if (!p.is_array() || p.size() != 2) {
                throw Error("each planted pair must be [normo, hyper]");
            }
            pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
        }
        return pairs;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed pairs file: ") + e.what());
    }
}

void write_cohort(const CohortPlan& plan, const fs::path& dir)
{
    fs::create_directories(dir);
    CohortManifest manifest = make_manifest(plan);
    std::vector<SubjectPair> pairs = synth_cohort(plan);
    for (std::size_t s = 0; s < pairs.size(); ++s) {
        for (const SubjectRecord* rec : {&pairs[s].normo, &pairs[s].hyper}) {
            const auto& entry = manifest.records[2 * s + (rec == &pairs[s].hyper ? 1 : 0)];
            std::ostringstream csv;
            write_subject_csv(csv, *rec);
            write_text(dir / entry.file, csv.str());
        }
    }
    write_text(dir / "manifest.json", manifest_to_json(manifest));
}

std::vector<SubjectPair> load_cohort(const std::string& manifest_path, std::optional<double> fs_override)
{
    CohortManifest manifest = manifest_from_json(read_file(manifest_path));
    const fs::path dir = fs::path(manifest_path).parent_path();
    std::map<std::string, std::optional<SubjectRecord>> normo;
    std::map<std::string, std::optional<SubjectRecord>> hyper;
    std::vector<std::string> order;
    for (const auto& e : manifest.records) {
        std::string path = (dir / e.file).string();
        auto& slot = e.state == CapnicState::normocapnia ? normo[e.id] : hyper[e.id];
        if (slot) {
            throw Error("manifest lists subject '" + e.id + "' twice for one state");
        }
        slot = load_record(path, e.id, std::string(to_string(e.state)), fs_override);
        if (std::find(order.begin(), order.end(), e.id) == order.end()) {
            order.push_back(e.id);
        }
    }
    std::vector<SubjectPair> pairs;
    for (const auto& id : order) {
        if (!normo[id] || !hyper[id]) {
            throw Error("unmatched pair: subject '" + id + "' lacks one state");
        }
        pairs.push_back({std::move(*normo[id]), std::move(*hyper[id])});
    }
    return pairs;
}

GrayBoxConfig graybox_config(std::size_t hidden, double lr, std::size_t epochs, std::optional<double> init_scale,
                             std::uint64_t seed)
{
    GrayBoxConfig c;
    c.hidden_width = hidden;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.init_scale = init_scale;
    c.seed = seed;
    c.validate();
    return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cerebral autoregulation index estimation from arterial blood pressure", "autoreg"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed (fallback: AUTOREG_SEED)");
    app.add_option("--out", g.out, "Output path (default: stdout)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));
    app.add_option("--fs", g.fs, "Sampling frequency in Hz")->check(CLI::PositiveNumber);
    app.add_option("--crcp", g.crcp, "Critical closing pressure in mmHg");
    app.add_option("--baseline-window", g.baseline_window, "Baseline window length in seconds from t = 0");

    std::string input;
    std::string metric = "mse";
    std::string estimator = "measured";
    std::string coefficients_path;
    std::string model_path;
    std::string subject_id = "subject";
    std::string state = "normocapnia";
    double ridge = 0.0;
    SynthShape shape;

    auto* templates_cmd = app.add_subcommand("templates", "Write the ten A-T template curves");
    templates_cmd->add_option("--input", input, "Subject CSV supplying the pressure");
    add_shape_options(templates_cmd, shape);

    auto* classify_cmd = app.add_subcommand("classify", "Assign an ARI to a subject CSV");
    classify_cmd->add_option("--input", input, "Subject CSV")->required();
    classify_cmd->add_option("--metric", metric)->check(CLI::IsMember({"mse", "correlation"}));
    classify_cmd->add_option("--estimator", estimator)->check(CLI::IsMember({"measured", "fir", "graybox"}));
    classify_cmd->add_option("--coefficients", coefficients_path, "FIR coefficients (JSON array or CSV row)");
    classify_cmd->add_option("--model", model_path, "Gray-box model JSON");
    classify_cmd->add_option("--ridge", ridge, "Ridge penalty when fitting FIR on the record");
    classify_cmd->add_option("--id", subject_id);
    classify_cmd->add_option("--state", state);

    auto* fit_cmd = app.add_subcommand("fit-fir", "Identify 7-tap FIR coefficients from a subject CSV");
    fit_cmd->add_option("--input", input, "Subject CSV")->required();
    fit_cmd->add_option("--ridge", ridge, "Ridge penalty (>= 0)");

    std::size_t hidden = 8;
    double lr = 0.01;
    std::size_t epochs = 2000;
    std::optional<double> init_scale;
    std::string trace_path;
    auto* train_cmd = app.add_subcommand("train", "Train a per-subject gray-box model");
    train_cmd->add_option("--input", input, "Subject CSV")->required();
    train_cmd->add_option("--hidden", hidden, "Hidden layer width");
    train_cmd->add_option("--lr", lr, "Learning rate");
    train_cmd->add_option("--epochs", epochs, "Full-batch epochs");
    train_cmd->add_option("--init-scale", init_scale, "Uniform init half-width");
    train_cmd->add_option("--trace", trace_path, "Write per-epoch losses as CSV");

    int ari = 0;
    std::size_t n_subjects = 0;
    std::optional<std::size_t> anomaly;
    std::string drops = "0,1,2";
    std::string pairs_path;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic subjects or cohorts");
    synth_cmd->add_option("--ari", ari, "Planted ARI for a single subject")->check(CLI::Range(0, 9));
    synth_cmd->add_option("--id", subject_id);
    synth_cmd->add_option("--state", state);
    synth_cmd->add_option("--subjects", n_subjects, "Generate a random cohort of N subjects into --out DIR");
    synth_cmd->add_option("--anomaly", anomaly, "0-based index of the subject whose ARI increases");
    synth_cmd->add_option("--drops", drops, "Comma-separated hypercapnic ARI drops");
    synth_cmd->add_option("--pairs", pairs_path, "JSON [[normo, hyper], ...] planted cohort into --out DIR");
    add_shape_options(synth_cmd, shape);

    std::string manifest_path;
    auto* cohort_cmd = app.add_subcommand("cohort", "Evaluate a cohort manifest");
    cohort_cmd->add_option("--manifest", manifest_path, "Cohort manifest JSON")->required();
    cohort_cmd->add_option("--metric", metric)->check(CLI::IsMember({"mse", "correlation"}));
    cohort_cmd->add_option("--estimator", estimator)->check(CLI::IsMember({"measured", "fir", "graybox"}));
    cohort_cmd->add_option("--coefficients", coefficients_path, "Common FIR coefficients");
    cohort_cmd->add_option("--model", model_path, "Common gray-box model");
    cohort_cmd->add_option("--ridge", ridge);
    cohort_cmd->add_option("--epochs", epochs, "Per-record gray-box training epochs");
    cohort_cmd->add_option("--hidden", hidden);
    cohort_cmd->add_option("--lr", lr);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (seed_opt->count() == 0) {
            if (const char* env = std::getenv("AUTOREG_SEED")) {
                try {
                    std::size_t used = 0;
                    g.seed = std::stoull(env, &used);
                    if (env[used] != '\0') {
                        throw Error("");
                    }
                } catch (const std::exception&) {
                    throw Error(std::string("AUTOREG_SEED is not an unsigned integer: '") + env + "'");
                }
            }
        }

        if (*templates_cmd) {
            const std::string format = resolve_format(g, {"csv", "json"}, "templates");
            PipelineOptions opts = pipeline_options(g, "mse");
            SampledSignal dp = [&] {
                if (!input.empty()) {
                    SubjectRecord rec = load_record(input, subject_id, state, g.fs);
                    return normalize_record(rec, opts).dp;
                }
                SynthSpec spec = synth_spec(g, shape);
                SampledSignal abp = synth_pressure(spec);
                return normalize_pressure(abp, NormalizationParams(baseline_mean(abp, opts.baseline_window), g.crcp));
            }();
            auto templates = generate_templates(dp);
            emit(g, format == "csv" ? templates_csv(templates) : templates_json(templates), out);
        } else if (*classify_cmd) {
            resolve_format(g, {"json"}, "classify");
            PipelineOptions opts = pipeline_options(g, metric);
            if (estimator == "graybox" && model_path.empty()) {
                throw Error("--estimator graybox requires --model");
            }
            SubjectRecord rec = load_record(input, subject_id, state, g.fs);
            EstimatorChoice choice = MeasuredVelocity{};
            if (estimator == "fir") {
                choice = FirEstimator{coefficients_path.empty() ? fit_record_fir(rec, ridge, opts)
                                                                : fir_parse(read_file(coefficients_path))};
            } else if (estimator == "graybox") {
                choice = GrayBoxEstimator{gb_from_json(read_file(model_path))};
            }
            emit(g, estimate_to_json(estimate_ari(rec, choice, opts), estimator), out);
        } else if (*fit_cmd) {
            const std::string format = resolve_format(g, {"json", "csv"}, "fit-fir");
            PipelineOptions opts = pipeline_options(g, "mse");
            SubjectRecord rec = load_record(input, subject_id, state, g.fs);
            FirCoefficients h = fit_record_fir(rec, ridge, opts);
            emit(g, (format == "json" ? fir_to_json(h) : fir_to_csv(h)) + "\n", out);
        } else if (*train_cmd) {
            resolve_format(g, {"json"}, "train");
            PipelineOptions opts = pipeline_options(g, "mse");
            GrayBoxConfig cfg = graybox_config(hidden, lr, epochs, init_scale, g.seed);
            SubjectRecord rec = load_record(input, subject_id, state, g.fs);
            auto [model, trace] = train_record_graybox(rec, cfg, opts);
            if (!trace_path.empty()) {
                write_text(trace_path, trace_csv(trace));
            }
            emit(g, gb_to_json(model), out);
        } else if (*synth_cmd) {
            SynthSpec spec = synth_spec(g, shape);
            if (n_subjects > 0 || !pairs_path.empty()) {
                resolve_format(g, {"json"}, "synth");
                if (g.out.empty()) {
                    throw Error("cohort generation requires --out DIR");
                }
                if (n_subjects > 0 && !pairs_path.empty()) {
                    throw Error("--subjects and --pairs are mutually exclusive");
                }
                spec.validate();
                CohortPlan plan = !pairs_path.empty()
                                      ? plan_from_pairs(parse_pairs(read_file(pairs_path)), g.seed, spec)
                                      : plan_cohort(n_subjects, parse_drops(drops), anomaly, g.seed, spec);
                write_cohort(plan, g.out);
            } else {
                resolve_format(g, {"csv"}, "synth");
                spec.true_ari = ari;
                spec.state = parse_capnic_state(state);
                SubjectRecord rec = synth_subject(spec, subject_id);
                std::ostringstream csv;
                write_subject_csv(csv, rec);
                emit(g, csv.str(), out);
            }
        } else if (*cohort_cmd) {
            const std::string format = resolve_format(g, {"table", "json"}, "cohort");
            PipelineOptions opts = pipeline_options(g, metric);
            GrayBoxConfig cfg = graybox_config(hidden, lr, epochs, std::nullopt, g.seed);
            std::vector<SubjectPair> pairs = load_cohort(manifest_path, g.fs);

            EstimatorFactory factory = [](const SubjectRecord&) -> EstimatorChoice { return MeasuredVelocity{}; };
            if (estimator == "fir") {
                if (!coefficients_path.empty()) {
                    FirCoefficients h = fir_parse(read_file(coefficients_path));
                    factory = [h](const SubjectRecord&) -> EstimatorChoice { return FirEstimator{h}; };
                } else {
                    factory = [&](const SubjectRecord& r) -> EstimatorChoice {
                        return FirEstimator{fit_record_fir(r, ridge, opts)};
                    };
                }
            } else if (estimator == "graybox") {
                if (!model_path.empty()) {
                    GrayBoxModel m = gb_from_json(read_file(model_path));
                    factory = [m](const SubjectRecord&) -> EstimatorChoice { return GrayBoxEstimator{m}; };
                } else {
                    factory = [&](const SubjectRecord& r) -> EstimatorChoice {
                        return GrayBoxEstimator{train_record_graybox(r, cfg, opts).first};
                    };
                }
            }
            CohortReport report = evaluate_cohort(pairs, factory, opts);
            emit(g, format == "table" ? report_to_table(report) : report_to_json(report), out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace autoreg::cli
