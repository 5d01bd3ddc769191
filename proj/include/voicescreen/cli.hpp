#pragma once

// Command-line surface: simulate, segment, extract, cv, sweep, report.
// Exit codes: 0 success, 1 validation error (flags, config, manifest),
// 2 runtime error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voicescreen/cohort.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/eval.hpp"
#include "voicescreen/features.hpp"
#include "voicescreen/manifest.hpp"
#include "voicescreen/pipeline.hpp"
#include "voicescreen/segmenter.hpp"

namespace voicescreen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kSeedEnv = "VOICESCREEN_SEED";

/// Process environment the CLI reads; tests pass their own.
struct Environment {
    std::optional<std::string> seed;

    static Environment from_process() {
        Environment e;
        if (const char* s = std::getenv(kSeedEnv)) e.seed = s;
        return e;
    }
};

using ojson = nlohmann::ordered_json;

namespace detail {

inline std::uint64_t parse_seed(const std::string& text, const std::string& source) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used, 0);
        if (used == text.size() && !text.empty() && text[0] != '-') return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::BadFlag, source + ": \"" + text + "\" is not an unsigned 64-bit seed");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, path.string() + " does not exist");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    const auto p = std::filesystem::path(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    write_file_atomic(p, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

inline std::string fmt_metric(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

/// Flags shared by every pipeline subcommand. A flag overrides the config
/// file only when given; the seed resolves flag > environment > config.
struct PipelineFlags {
    std::string config_path;
    std::vector<std::string> scenarios;
    double t = 0.0, min_voiced = 0.0, threshold_db = 0.0, min_region_ms = 0.0, lr = 0.0, l2 = 0.0;
    int n = 0, epochs = 0, batch = 0, hidden = 0, folds = 0;
    bool allow_overlap = false;
    std::string feature, model, seed;
    std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> setters;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* sub) {
        sub->add_option("--config", config_path, "Pipeline config JSON, or a report whose run should be repeated");
        auto bind = [&](CLI::Option* o, std::function<void(PipelineConfig&)> set) { setters.emplace_back(o, std::move(set)); };
        bind(sub->add_option("--scenario", scenarios, "Scenario filter (repeatable): interview, chatbot, reading, synthetic"),
             [this](PipelineConfig& c) {
                 c.scenarios.clear();
                 for (const auto& s : scenarios) {
                     const auto parsed = parse_scenario(s);
                     if (!parsed) fail(ErrorCode::BadFlag, "--scenario: unknown scenario \"" + s + "\"");
                     c.scenarios.push_back(*parsed);
                 }
             });
        bind(sub->add_option("--t", t, "Clip duration T in seconds"), [this](PipelineConfig& c) { c.sampling.clip_duration_s = t; });
        bind(sub->add_option("--n", n, "Clips per participant N"), [this](PipelineConfig& c) { c.sampling.clip_count = n; });
        bind(sub->add_option("--min-voiced", min_voiced, "Minimum voiced coverage of a clip"),
             [this](PipelineConfig& c) { c.sampling.min_voiced_ratio = min_voiced; });
        bind(sub->add_flag("--allow-overlap", allow_overlap, "Let clips of one recording overlap"),
             [this](PipelineConfig& c) { c.sampling.allow_overlap = allow_overlap; });
        bind(sub->add_option("--threshold-db", threshold_db, "Activity threshold relative to the loud-frame level"),
             [this](PipelineConfig& c) { c.threshold_db = threshold_db; });
        bind(sub->add_option("--min-region-ms", min_region_ms, "Shortest voiced region kept"),
             [this](PipelineConfig& c) { c.min_region_ms = min_region_ms; });
        bind(sub->add_option("--feature", feature, "is09, egemaps-lite or embedding"), [this](PipelineConfig& c) {
            const auto parsed = feat::parse_feature_set(feature);
            if (!parsed) fail(ErrorCode::BadFlag, "--feature: unknown feature set \"" + feature + "\"");
            c.feature_set = *parsed;
        });
        bind(sub->add_option("--model", model, "mlp or svm"), [this](PipelineConfig& c) {
            const auto parsed = model::parse_model_kind(model);
            if (!parsed) fail(ErrorCode::BadFlag, "--model: expected mlp or svm, got \"" + model + "\"");
            c.model = *parsed;
        });
        bind(sub->add_option("--lr", lr, "MLP learning rate"), [this](PipelineConfig& c) { c.train.learning_rate = lr; });
        bind(sub->add_option("--epochs", epochs, "Training epochs"), [this](PipelineConfig& c) { c.train.epochs = epochs; });
        bind(sub->add_option("--batch", batch, "Mini-batch size"), [this](PipelineConfig& c) { c.train.batch_size = batch; });
        bind(sub->add_option("--l2", l2, "L2 penalty (SVM lambda)"), [this](PipelineConfig& c) { c.train.l2 = l2; });
        bind(sub->add_option("--hidden", hidden, "MLP hidden units"), [this](PipelineConfig& c) { c.train.hidden_dim = hidden; });
        bind(sub->add_option("--folds", folds, "Cross-validation folds"), [this](PipelineConfig& c) { c.folds = folds; });
        seed_opt = sub->add_option("--seed", seed, std::string("Global seed (overrides ") + kSeedEnv + ")");
    }

    PipelineConfig resolve(const Environment& env) const {
        PipelineConfig c;
        if (!config_path.empty()) {
            auto j = read_json(config_path);
            if (j.contains("reproducibility")) j = j["reproducibility"].value("pipeline", nlohmann::json::object());
            c = pipeline_from_json(j);
        }
        if (env.seed) c.seed = parse_seed(*env.seed, kSeedEnv);
        for (const auto& [opt, set] : setters) {
            if (opt->count() > 0) set(c);
        }
        if (seed_opt->count() > 0) c.seed = parse_seed(seed, "--seed");
        try {
            c.validate();
        } catch (const Error& e) {
            fail(ErrorCode::BadFlag, e.what());
        }
        return c;
    }
};

inline ojson repro_block(const PipelineConfig& c) { return eval::reproducibility_json(c); }

// ---------------------------------------------------------------------------

struct SimulateArgs {
    int n = 20, n_depressed = 0, n_healthy = 0, jobs = 1;
    double effect = 1.0, duration = 120.0;
    std::string seed, out;
    CLI::Option *nd = nullptr, *nh = nullptr, *seed_opt = nullptr;
};

inline int cmd_simulate(const SimulateArgs& a, const Environment& env, std::ostream& out) {
    cohort::CohortConfig cc;
    cc.n_depressed = a.nd->count() ? a.n_depressed : a.n;
    cc.n_healthy = a.nh->count() ? a.n_healthy : a.n;
    cc.effect_size = a.effect;
    cc.recording_duration_s = a.duration;
    cc.seed = 0;
    if (env.seed) cc.seed = parse_seed(*env.seed, kSeedEnv);
    if (a.seed_opt->count()) cc.seed = parse_seed(a.seed, "--seed");
    if (cc.n_depressed < 1 || cc.n_healthy < 1) fail(ErrorCode::BadFlag, "each class needs at least one participant");
    if (!(a.effect >= 0.0 && a.effect <= 1.0)) fail(ErrorCode::BadFlag, "--effect must lie in [0, 1]");
    if (!(a.duration >= 2.0)) fail(ErrorCode::BadFlag, "--duration must be at least 2 s");
    const auto m = cohort::generate_cohort(cc, a.out, a.jobs);
    ojson j;
    j["version"] = 1;
    j["reproducibility"] = ojson{{"tool_version", VOICESCREEN_VERSION},
                                 {"cohort",
                                  {{"n_depressed", cc.n_depressed},
                                   {"n_healthy", cc.n_healthy},
                                   {"effect_size", cc.effect_size},
                                   {"recording_duration_s", cc.recording_duration_s},
                                   {"sample_rate", cc.sample_rate},
                                   {"seed", cc.seed}}}};
    write_text((std::filesystem::path(a.out) / "cohort.json").string(), j.dump(2) + "\n", out);
    out << "wrote " << m.participants.size() << " participants to " << a.out << "\n";
    return kExitOk;
}

struct InputArgs {
    std::string manifest, wav, participant, out;
    int jobs = 1;
};

inline seg::ClipSamplingConfig cell_sampling(const PipelineConfig& c) {
    auto s = c.sampling;
    s.seed = eval::sampling_seed(c.seed, s.clip_duration_s, s.clip_count);
    return s;
}

inline int cmd_segment(const InputArgs& a, const PipelineConfig& c, std::ostream& out, std::ostream& err) {
    const auto sampling = cell_sampling(c);
    std::string lines;
    auto exclusions = ojson::array();
    auto plan_one = [&](const std::string& pid, std::span<const seg::RecordingView> views) {
        try {
            for (const auto& p : seg::plan_clips(pid, views, sampling)) {
                lines += seg::inventory_entry(p, sampling.clip_duration_s).dump() + "\n";
            }
        } catch (const Error& e) {
            err << "warning: " << e.what() << "\n";
            exclusions.push_back(ojson{{"id", pid}, {"reason", e.what()}});
        }
    };
    if (!a.wav.empty()) {
        const auto buf = load_wav_canonical(a.wav);
        const auto regions = seg::detect_voiced_regions(buf, c.threshold_db, c.min_region_ms);
        const std::string stem = std::filesystem::path(a.wav).stem().string();
        const seg::RecordingView view(stem, buf, regions);
        plan_one(a.participant.empty() ? stem : a.participant, std::span(&view, 1));
    } else {
        const auto m = parse_manifest(a.manifest);
        const auto analysis = eval::analyze_dataset(m, c, a.jobs, false);
        for (const auto& pa : analysis.participants) {
            if (!pa.error.empty()) {
                err << "warning: " << pa.error << "\n";
                exclusions.push_back(ojson{{"id", pa.id}, {"reason", pa.error}});
                continue;
            }
            std::vector<seg::RecordingView> views;
            for (const auto& r : pa.recordings) views.emplace_back(r.recording_id, r.n_samples, r.sample_rate, r.regions);
            plan_one(pa.id, views);
        }
    }
    write_text(a.out, lines, out);
    if (!a.out.empty() && a.out != "-") {
        ojson meta{{"version", 1}, {"exclusions", exclusions}, {"reproducibility", repro_block(c)}};
        meta["reproducibility"]["sampling_seed"] = sampling.seed;
        write_text(a.out + ".meta.json", meta.dump(2) + "\n", out);
    }
    return kExitOk;
}

inline int cmd_extract(const InputArgs& a, const PipelineConfig& c, std::ostream& out) {
    ojson j;
    j["version"] = 1;
    j["feature_set"] = feat::to_string(c.feature_set);
    j["names"] = feat::feature_names(c.feature_set);
    if (!a.wav.empty()) {
        if (c.feature_set == feat::FeatureSetId::Embedding) {
            fail(ErrorCode::BadFlag, "--wav needs a descriptor feature set; embeddings come from a manifest");
        }
        const auto fv = feat::extract(c.feature_set, dsp::compute_llds(load_wav_canonical(a.wav)));
        j["source"] = a.wav;
        j["quality_flag"] = fv.quality_flag;
        j["values"] = fv.values;
    } else {
        const auto m = parse_manifest(a.manifest);
        const auto analysis = eval::analyze_dataset(m, c, a.jobs);
        const auto cell = eval::build_cell(analysis, m, c, cell_sampling(c), a.jobs);
        auto clips = ojson::array();
        for (const auto& p : cell.participants) {
            for (const auto& clip : p.clips) {
                clips.push_back(ojson{{"clip_id", clip.clip_id},
                                      {"participant_id", p.id},
                                      {"label", p.label ? "depressed" : "healthy"},
                                      {"quality_flag", clip.quality_flag},
                                      {"overlap_flag", clip.overlap_flag},
                                      {"values", clip.values}});
            }
        }
        j["clips"] = std::move(clips);
        j["exclusions"] = eval::exclusions_json(cell.exclusions);
    }
    j["reproducibility"] = repro_block(c);
    write_text(a.out, j.dump(2) + "\n", out);
    return kExitOk;
}

struct RunArgs {
    std::string manifest, out, audit, csv, md;
    std::vector<double> ts;
    std::vector<int> ns;
    bool unconstrained = false;
    int jobs = 1;
};

inline void write_audit(const std::string& path, const eval::AuditLog& log, std::ostream& out) {
    if (!path.empty()) write_text(path, eval::audit_json(log).dump(2) + "\n", out);
}

inline int cmd_cv(const RunArgs& a, const PipelineConfig& c, std::ostream& out, std::ostream& err) {
    const auto m = parse_manifest(a.manifest);
    eval::AuditLog audit;
    eval::RunOptions opt;
    opt.jobs = a.jobs;
    opt.audit = &audit;
    const auto report = eval::run_cross_validation(m, c, opt);
    write_text(a.out, eval::cv_report_json(report).dump(2) + "\n", out);
    write_audit(a.audit, audit, out);
    const auto& r = report.metrics;
    err << "accuracy " << fmt_metric(r.accuracy) << "  sensitivity " << fmt_metric(r.sensitivity) << "  specificity "
        << fmt_metric(r.specificity) << "  precision " << fmt_metric(r.precision) << "  (" << r.counts.total()
        << " participants, " << report.exclusions.size() << " excluded)\n";
    return kExitOk;
}

inline int cmd_sweep(const RunArgs& a, const PipelineConfig& c, std::ostream& out, std::ostream& err) {
    const auto m = parse_manifest(a.manifest);
    auto grid = eval::paper_grid();
    if (!a.ts.empty()) grid.ts = a.ts;
    if (!a.ns.empty()) grid.ns = a.ns;
    if (a.unconstrained) grid.constraints.clear();
    eval::AuditLog audit;
    eval::RunOptions opt;
    opt.jobs = a.jobs;
    opt.audit = &audit;
    const auto sweep = eval::run_sweep(m, c, grid, opt);
    const auto j = eval::sweep_json(sweep);
    write_text(a.out, j.dump(2) + "\n", out);
    write_audit(a.audit, audit, out);
    const auto rows = eval::table_rows(j);
    if (!a.csv.empty()) write_text(a.csv, eval::render_csv(rows), out);
    if (!a.md.empty()) write_text(a.md, eval::render_markdown(rows), out);
    std::size_t done = 0;
    for (const auto& cell : sweep.cells) done += cell.report.has_value();
    err << done << " of " << sweep.cells.size() << " cells evaluated\n";
    return kExitOk;
}

struct ReportArgs {
    std::string in, format = "markdown", out;
};

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
    const auto rows = eval::table_rows(read_json(a.in));
    write_text(a.out, a.format == "csv" ? eval::render_csv(rows) : eval::render_markdown(rows), out);
    return kExitOk;
}

}  // namespace detail

/// Parses `args` (without the program name) and runs the subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const Environment& env = Environment::from_process()) {
    using namespace detail;
    CLI::App app{"Speech-based depression screening: clip sampling, acoustic features, "
                 "participant-level cross-validation.",
                 "voicescreen"};
    app.set_version_flag("--version", VOICESCREEN_VERSION);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a labelled synthetic voice cohort");
    simulate->add_option("--n", sim.n, "Participants per class")->capture_default_str();
    sim.nd = simulate->add_option("--n-depressed", sim.n_depressed, "Depressed-like participants (overrides --n)");
    sim.nh = simulate->add_option("--n-healthy", sim.n_healthy, "Healthy participants (overrides --n)");
    simulate->add_option("--effect", sim.effect, "Class effect size d in [0, 1]")->capture_default_str();
    simulate->add_option("--duration", sim.duration, "Recording length in seconds")->capture_default_str();
    sim.seed_opt = simulate->add_option("--seed", sim.seed, "Generator seed");
    simulate->add_option("--jobs", sim.jobs, "Worker threads")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output directory")->required();

    InputArgs seg_args, ext_args;
    PipelineFlags seg_flags, ext_flags, cv_flags, sweep_flags;
    auto* segment = app.add_subcommand("segment", "Detect voiced regions and list the sampled clips as JSON lines");
    auto* extract = app.add_subcommand("extract", "Compute clip feature vectors");
    for (auto [sub, ia, flags] : {std::tuple{segment, &seg_args, &seg_flags}, std::tuple{extract, &ext_args, &ext_flags}}) {
        auto* m = sub->add_option("--manifest", ia->manifest, "Dataset manifest");
        auto* w = sub->add_option("--wav", ia->wav, "Single recording instead of a manifest");
        m->excludes(w);
        sub->add_option("--participant", ia->participant, "Participant id for --wav (default: file stem)");
        sub->add_option("--out", ia->out, "Output file (default: stdout)");
        sub->add_option("--jobs", ia->jobs, "Worker threads")->capture_default_str();
        flags->attach(sub);
    }

    RunArgs cv_args, sweep_args;
    auto* cv = app.add_subcommand("cv", "Participant-stratified cross-validation");
    auto* sweep = app.add_subcommand("sweep", "Cross-validation over a T x N grid");
    for (auto [sub, ra, flags] : {std::tuple{cv, &cv_args, &cv_flags}, std::tuple{sweep, &sweep_args, &sweep_flags}}) {
        sub->add_option("--manifest", ra->manifest, "Dataset manifest")->required();
        sub->add_option("--out", ra->out, "Report JSON (default: stdout)");
        sub->add_option("--audit", ra->audit, "Write the fit-call audit log here");
        sub->add_option("--jobs", ra->jobs, "Worker threads")->capture_default_str();
        flags->attach(sub);
    }
    sweep->add_option("--ts", sweep_args.ts, "Clip durations (default 5,10,15,20)")->delimiter(',');
    sweep->add_option("--ns", sweep_args.ns, "Clip counts (default 1,3,5,7,11)")->delimiter(',');
    sweep->add_flag("--unconstrained", sweep_args.unconstrained, "Evaluate every T x N pair");
    sweep->add_option("--csv", sweep_args.csv, "Also write the table as CSV");
    sweep->add_option("--md", sweep_args.md, "Also write the table as Markdown");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "Render a cv or sweep report as a CSV or Markdown table");
    report->add_option("--in", rep.in, "Report JSON")->required();
    report->add_option("--format", rep.format, "csv or markdown")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    report->add_option("--out", rep.out, "Output file (default: stdout)");

    if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.get_subcommand_no_throw(args[0])) {
        err << to_string(ErrorCode::UnknownCommand) << ": \"" << args[0] << "\"\n" << app.help();
        return kExitValidation;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        if (rc == 0) return kExitOk;
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, env, out);
        if (segment->parsed() || extract->parsed()) {
            const bool is_segment = segment->parsed();
            const auto& ia = is_segment ? seg_args : ext_args;
            if (ia.manifest.empty() && ia.wav.empty()) {
                err << "one of --manifest or --wav is required\n" << (is_segment ? segment : extract)->help();
                return kExitValidation;
            }
            const auto c = (is_segment ? seg_flags : ext_flags).resolve(env);
            return is_segment ? cmd_segment(ia, c, out, err) : cmd_extract(ia, c, out);
        }
        if (cv->parsed()) return cmd_cv(cv_args, cv_flags.resolve(env), out, err);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_flags.resolve(env), out, err);
        if (report->parsed()) return cmd_report(rep, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

inline int run_cli(int argc, char** argv) {
    return run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace voicescreen::cli
