#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hexheat/demo.hpp"
#include "hexheat/errors.hpp"
#include "hexheat/kernels.hpp"
#include "hexheat/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON")
        ->required();
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--jobs", opts.jobs, "worker count for the fit stage");
    cmd->add_flag("--verbose", opts.verbose, "log stage progress to stderr");
}

hexheat::PipelineConfig load(const CommonOptions& opts) {
    hexheat::PipelineConfig cfg =
        hexheat::PipelineConfig::load_file(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.jobs) cfg.jobs = *opts.jobs;
    if (opts.verbose) cfg.verbose = true;
    return cfg;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const hexheat::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const hexheat::IngestError*>(&e)) return 3;
    if (dynamic_cast<const hexheat::NumericError*>(&e)) return 4;
    if (dynamic_cast<const hexheat::ServiceError*>(&e)) return 5;
    return 1;
}

int run_labeled(const std::string& stage, const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "[stage:%s] error: %s\n", stage.c_str(),
                     e.what());
        return exit_code_for(e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hexagon-grid surface temperature analytics"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string run_stage_name;
    CLI::App* run = app.add_subcommand(
        "run", "run the full pipeline (or one stage via --stage)");
    add_common(run, run_opts);
    run->add_option("--stage", run_stage_name,
                    "run a single stage: indices|grid|geocode|aggregate|fit|"
                    "report");

    std::array<CommonOptions, 6> stage_opts;
    for (std::size_t i = 0; i < hexheat::kStageNames.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(
            hexheat::kStageNames[i],
            std::string("run the ") + hexheat::kStageNames[i] + " stage");
        add_common(cmd, stage_opts[i]);
    }

    hexheat::DemoSpec demo_spec;
    std::string demo_dir = "demo";
    CLI::App* demo = app.add_subcommand(
        "demo", "generate the bundled synthetic dataset and its config");
    demo->add_option("--dir", demo_dir, "target directory");
    demo->add_option("--rows", demo_spec.rows, "raster rows");
    demo->add_option("--cols", demo_spec.cols, "raster cols");
    demo->add_option("--cell-size", demo_spec.cell_size, "meters per cell");
    demo->add_option("--buildings", demo_spec.building_count,
                     "building record count");
    demo->add_option("--seed", demo_spec.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    if (demo->parsed()) {
        return run_labeled("demo", [&] {
            const std::string cfg = hexheat::generate_demo(demo_spec, demo_dir);
            std::printf("%s\n", cfg.c_str());
        });
    }

    if (run->parsed()) {
        return run_labeled(
            run_stage_name.empty() ? "run" : run_stage_name, [&] {
                const hexheat::PipelineConfig cfg = load(run_opts);
                if (cfg.verbose) {
                    std::fprintf(stderr, "[hexheat] kernel lane: %s\n",
                                 hexheat::kernels::lane_name(
                                     hexheat::kernels::active_lane()));
                }
                if (run_stage_name.empty()) {
                    const hexheat::SelectionReport report =
                        hexheat::run_pipeline(cfg);
                    std::printf("chosen model: %s\n",
                                report.justification.c_str());
                } else {
                    hexheat::run_stage(cfg, run_stage_name);
                }
            });
    }

    for (std::size_t i = 0; i < hexheat::kStageNames.size(); ++i) {
        const std::string name = hexheat::kStageNames[i];
        if (app.get_subcommand(name)->parsed()) {
            return run_labeled(name, [&] {
                hexheat::run_stage(load(stage_opts[i]), name);
            });
        }
    }
    return 0;
}
