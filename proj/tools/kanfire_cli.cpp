#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kanfire/error.hpp"
#include "kanfire/log.hpp"
#include "kanfire/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool verbose = false;
};

kanfire::PipelineConfig load(const CommonOptions& opts) {
    if (opts.config.empty()) throw kanfire::InvalidArgument("--config is required");
    auto config = kanfire::load_config(opts.config);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.out) config.output_dir = *opts.out;
    if (opts.threads) {
        if (*opts.threads < 1) throw kanfire::InvalidArgument("--threads must be at least 1");
        config.threads = *opts.threads;
    }
    return config;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required) {
    auto* c = cmd->add_option("--config", opts.config, "Pipeline configuration (JSON)");
    if (config_required) c->required();
    cmd->add_option("--seed", opts.seed, "Override the configured seed");
    cmd->add_option("--out", opts.out, "Override the output directory");
    cmd->add_option("--threads", opts.threads, "Worker threads for prediction and scans");
    cmd->add_flag("--verbose,-v", opts.verbose, "Log stage timings and progress");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Burned-area mapping and wildfire impact assessment"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::optional<std::string> model_path, mask_path, reports_dir, metrics_path;

    auto* train = app.add_subcommand("train", "Sample, train and evaluate the classifier");
    add_common(train, opts, true);

    auto* predict = app.add_subcommand("predict", "Map burned pixels and summarise areas");
    add_common(predict, opts, true);
    predict->add_option("--model", model_path, "Model file (default: <out>/model.ckan)");

    auto* assess = app.add_subcommand("assess", "Overlay the burn mask on impact layers");
    add_common(assess, opts, true);
    assess->add_option("--mask", mask_path, "Mask header (default: <out>/mask.hdr)");

    auto* report = app.add_subcommand("report", "Render the consolidated report");
    add_common(report, opts, false);
    report->add_option("--reports", reports_dir, "Directory of per-fire reports (default: <out>/reports)");
    report->add_option("--metrics", metrics_path, "Metrics file (default: looked up next to the reports)");

    CLI11_PARSE(app, argc, argv);
    kanfire::log::set_level(opts.verbose ? kanfire::log::Level::info : kanfire::log::Level::warn);

    try {
        if (train->parsed()) {
            const auto config = load(opts);
            const auto m = kanfire::cmd_train(config);
            std::printf("overall_accuracy %.4f  kappa %.4f  f1_burned %.4f\n", m.overall_accuracy, m.kappa,
                        m.f1_burned);
            std::printf("model written to %s\n", (config.output_dir / kanfire::kModelFile).string().c_str());
        } else if (predict->parsed()) {
            const auto config = load(opts);
            std::optional<fs::path> model;
            if (model_path) model = *model_path;
            for (const auto& a : kanfire::cmd_predict(config, model)) {
                std::printf("%s: %zu pixels, %.2f ha, %zu components\n", a.fire_name.c_str(), a.burned_pixels,
                            a.burned_hectares, a.component_count);
            }
        } else if (assess->parsed()) {
            const auto config = load(opts);
            std::optional<fs::path> mask;
            if (mask_path) mask = *mask_path;
            const auto reports = kanfire::cmd_assess(config, mask);
            std::printf("%zu fire report(s) written to %s\n", reports.size(),
                        (config.output_dir / kanfire::kReportsDir).string().c_str());
        } else if (report->parsed()) {
            fs::path dir;
            fs::path out_dir;
            if (reports_dir) {
                dir = *reports_dir;
                out_dir = opts.out ? fs::path(*opts.out) : dir.parent_path();
            } else {
                const auto config = load(opts);
                dir = config.output_dir / kanfire::kReportsDir;
                out_dir = config.output_dir;
            }
            std::optional<fs::path> metrics;
            if (metrics_path) metrics = *metrics_path;
            const auto written = kanfire::cmd_report(dir, metrics, out_dir / kanfire::kReportFile);
            std::printf("report written to %s\n", written.string().c_str());
        }
    } catch (const kanfire::Error& e) {
        std::fprintf(stderr, "kanfire: error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "kanfire: internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}
