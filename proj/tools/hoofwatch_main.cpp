#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "hoofwatch/config.hpp"
#include "hoofwatch/evaluate.hpp"
#include "hoofwatch/synthherd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hoofwatch;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string behavior, lesions, profiles;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

config::RunConfig effective_config(const CliOptions& cli) {
    config::RunConfig cfg;
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw Error("missing_file", "cannot open config file " + cli.config_path);
        cfg.load(in);
    }
    if (!cli.behavior.empty()) cfg.set("paths.behavior", cli.behavior);
    if (!cli.lesions.empty()) cfg.set("paths.lesions", cli.lesions);
    if (!cli.profiles.empty()) cfg.set("paths.profiles", cli.profiles);
    if (cli.seed) cfg.set("seed", std::to_string(*cli.seed));
    if (cli.jobs) cfg.set("jobs", std::to_string(*cli.jobs));
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_failed", "cannot write " + path.string());
    out << content;
}

json provenance(const config::RunConfig& cfg, bool with_inputs = true) {
    json j = {{"tool", "hoofwatch"},
              {"seed", cfg.get_u64("seed")},
              {"config_digest", cfg.digest()}};
    if (with_inputs)
        j["inputs"] = {{"behavior", cfg.get_string("paths.behavior")},
                       {"lesions", cfg.get_string("paths.lesions")},
                       {"profiles", cfg.get_string("paths.profiles")}};
    return j;
}

evaluate::HerdData load_inputs(const config::RunConfig& cfg) {
    evaluate::HerdData data;
    auto open = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("missing_file", "cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    {
        std::istringstream in(open(cfg.get_string("paths.behavior")));
        data.behavior = herd::parse_behavior(in);
    }
    {
        std::istringstream in(open(cfg.get_string("paths.lesions")));
        data.lesions = herd::parse_lesions(in);
    }
    {
        std::istringstream in(open(cfg.get_string("paths.profiles")));
        data.profiles = herd::parse_profiles(in);
    }
    return data;
}

json rejections_json(const std::vector<herd::Rejection>& rejections) {
    json arr = json::array();
    for (const auto& r : rejections) arr.push_back({{"cow_id", r.cow_id}, {"reason", r.reason}});
    return arr;
}

int cmd_synth(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto files = synth::generate_csv(config::make_synth_config(cfg));
    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    write_file(out / "behavior.csv", files.behavior_csv);
    write_file(out / "lesions.csv", files.lesions_csv);
    write_file(out / "profiles.csv", files.profiles_csv);
    json meta = provenance(cfg, false);
    meta["outputs"] = {"behavior.csv", "lesions.csv", "profiles.csv"};
    write_file(out / "synth.meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << (out / "behavior.csv").string() << ", lesions.csv, profiles.csv\n";
    return 0;
}

int cmd_validate(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto data = load_inputs(cfg);
    auto cohort = evaluate::build_cohort(data, config::make_match_options(cfg));

    json report = provenance(cfg);
    report["schema_version"] = 1;
    report["status"] = "ok";
    report["rows"] = {{"behavior", data.behavior.size()},
                      {"lesions", data.lesions.size()},
                      {"profiles", data.profiles.size()}};
    report["episodes"] = {{"enrolled", cohort.derivation.enrolled.size()},
                          {"rejected", rejections_json(cohort.derivation.rejected)}};
    report["matching"] = {{"matched", cohort.matched.size()},
                          {"unmatched", rejections_json(cohort.matching.unmatched)}};

    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    write_file(out / "validation_report.json", report.dump(2) + "\n");
    write_file(out / "rejections.json", rejections_json(cohort.derivation.rejected).dump(2) + "\n");
    std::cout << "ok: " << cohort.derivation.enrolled.size() << " enrolled, "
              << cohort.matched.size() << " matched, " << cohort.derivation.rejected.size()
              << " rejected\n";
    return 0;
}

int cmd_correlate(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto data = load_inputs(cfg);
    auto cohort = evaluate::build_cohort(data, config::make_match_options(cfg));
    featurize::DetectionOptions options{cfg.get_bool("detect.include_day0")};
    auto matrix = featurize::detection_matrix(cohort.matched, cohort.index, options);

    // Features plus the target as a final column, so the matrix also shows
    // each feature against the label.
    Eigen::MatrixXd with_label(matrix.rows(), matrix.cols() + 1);
    with_label.leftCols(matrix.cols()) = matrix.values;
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
        with_label(i, matrix.cols()) = matrix.labels[static_cast<std::size_t>(i)];
    auto names = matrix.feature_names;
    names.push_back("dd_label");

    auto corr = featurize::pearson_matrix(with_label);
    std::ostringstream os;
    write_matrix_csv(os, names, corr);

    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    write_file(out / "correlation.csv", os.str());
    write_file(out / "correlation.meta.json", provenance(cfg).dump(2) + "\n");

    std::ostringstream features;
    write_matrix_csv(features, matrix.feature_names, matrix.values);
    write_file(out / "detection_features.csv", features.str());
    std::ostringstream labels;
    labels << "cow_id,dd_label\n";
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
        labels << matrix.group_ids[static_cast<std::size_t>(i)] << ','
               << matrix.labels[static_cast<std::size_t>(i)] << '\n';
    write_file(out / "detection_labels.csv", labels.str());
    write_file(out / "detection_features.meta.json", provenance(cfg).dump(2) + "\n");
    std::cout << "wrote " << (out / "correlation.csv").string() << " (" << names.size() << "x"
              << names.size() << ")\n";
    return 0;
}

int cmd_detect(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto data = load_inputs(cfg);
    auto cohort = evaluate::build_cohort(data, config::make_match_options(cfg));

    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    std::ofstream log_stream(out / "search_log.jsonl", std::ios::binary);
    automl::LogSink log = [&](const json& entry) { log_stream << entry.dump() << "\n"; };

    automl::TrainedPipeline model;
    auto report = evaluate::run_detection(cohort, config::make_detection_config(cfg), log, &model);

    json report_json = report.to_json();
    report_json.update(provenance(cfg));
    write_file(out / "detection_report.json", report_json.dump(2) + "\n");

    featurize::DetectionOptions options{cfg.get_bool("detect.include_day0")};
    json model_json = automl::trained_to_json(model, featurize::detection_feature_names(options));
    model_json.update(provenance(cfg));
    write_file(out / "model.json", model_json.dump(2) + "\n");

    std::cout << "pipeline: " << report.best.canonical() << "\n"
              << "cv_mean=" << report.cv.mean << " cv_std=" << report.cv.stddev
              << " test_accuracy=" << report.test_accuracy
              << " lower_bound_95=" << report.lower_bound_95 << "\n";
    return 0;
}

int cmd_importance(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto data = load_inputs(cfg);
    auto cohort = evaluate::build_cohort(data, config::make_match_options(cfg));
    featurize::DetectionOptions options{cfg.get_bool("detect.include_day0")};
    auto matrix = featurize::detection_matrix(cohort.matched, cohort.index, options);

    auto entries = evaluate::channel_importance(config::make_pipeline(cfg), matrix,
                                                cfg.get_int("importance.k"), cfg.get_u64("seed"),
                                                cfg.get_int("jobs"));
    std::ostringstream os;
    evaluate::write_importance_csv(os, entries);

    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    write_file(out / "importance.csv", os.str());
    write_file(out / "importance.meta.json", provenance(cfg).dump(2) + "\n");
    for (const auto& e : entries)
        std::cout << herd::kChannelNames[static_cast<int>(e.channel)] << " " << e.importance << "\n";
    return 0;
}

int cmd_sweep(const CliOptions& cli) {
    auto cfg = effective_config(cli);
    auto data = load_inputs(cfg);
    auto cohort = evaluate::build_cohort(data, config::make_match_options(cfg));

    auto grid = evaluate::run_sweep(cohort, config::make_sweep_config(cfg));
    std::ostringstream os;
    evaluate::write_sweep_csv(os, grid);

    fs::create_directories(cli.out_dir);
    fs::path out(cli.out_dir);
    write_file(out / "sweep.csv", os.str());
    json meta = provenance(cfg);
    meta["train_n"] = grid.train_n;
    meta["test_n"] = grid.test_n;
    write_file(out / "sweep.meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << (out / "sweep.csv").string() << "\n" << os.str();
    return 0;
}

int cmd_defaults(const CliOptions& cli) {
    // With no overrides this prints the pure defaults; with --config/--seed it
    // shows the effective configuration a run would use.
    std::cout << effective_config(cli).render();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hoofwatch: detect and forecast digital dermatitis from behavior-sensor data"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions cli;
    app.add_option("--config", cli.config_path, "flat key=value config file")->capture_default_str();
    app.add_option("--out", cli.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", cli.seed, "master seed (overrides config)");
    app.add_option("--jobs", cli.jobs, "worker threads (overrides config)");
    app.add_option("--behavior", cli.behavior, "behavior.csv path (overrides config)");
    app.add_option("--lesions", cli.lesions, "lesions.csv path (overrides config)");
    app.add_option("--profiles", cli.profiles, "profiles.csv path (overrides config)");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic herd dataset");
    auto* validate_cmd = app.add_subcommand("validate", "validate inputs and report enrollment");
    auto* correlate_cmd = app.add_subcommand("correlate", "feature/label Pearson correlation CSV");
    auto* detect_cmd = app.add_subcommand("detect", "run the day-0 detection study");
    auto* importance_cmd = app.add_subcommand("importance", "drop-one-channel importance CSV");
    auto* sweep_cmd = app.add_subcommand("sweep", "lag x window accuracy sweep CSV");
    auto* defaults_cmd = app.add_subcommand("defaults", "print the default configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // --help exits 0, anything else is usage
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(cli);
        if (validate_cmd->parsed()) return cmd_validate(cli);
        if (correlate_cmd->parsed()) return cmd_correlate(cli);
        if (detect_cmd->parsed()) return cmd_detect(cli);
        if (importance_cmd->parsed()) return cmd_importance(cli);
        if (sweep_cmd->parsed()) return cmd_sweep(cli);
        if (defaults_cmd->parsed()) return cmd_defaults(cli);
    } catch (const Error& e) {
        bool usage = e.code() == "unknown_config_key" || e.code() == "bad_config";
        json err = {{"error", {{"code", e.code()}, {"message", e.what()}, {"line", e.line()}}}};
        std::cout << err.dump(2) << "\n";
        if (!usage) {
            std::error_code ec;
            fs::create_directories(cli.out_dir, ec);
            if (!ec) {
                std::ofstream out(fs::path(cli.out_dir) / "error_report.json", std::ios::binary);
                out << err.dump(2) << "\n";
            }
        }
        return usage ? 2 : 1;
    } catch (const std::exception& e) {
        json err = {{"error", {{"code", "internal_error"}, {"message", e.what()}}}};
        std::cout << err.dump(2) << "\n";
        return 1;
    }
    return 2;
}
