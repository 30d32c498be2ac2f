#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "hexheat/demo.hpp"
#include "hexheat/errors.hpp"
#include "hexheat/kernels.hpp"
#include "hexheat/pipeline.hpp"

using namespace hexheat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    TempDir() {
        path = fs::temp_directory_path() /
               ("hexheat_pipe_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter_++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path path;
    static inline int counter_ = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    }
    return out;
}

PipelineConfig small_demo_config(const fs::path& dir) {
    DemoSpec spec;
    spec.rows = 150;
    spec.cols = 150;
    spec.cell_size = 20.0;
    spec.building_count = 250;
    spec.seed = 7;
    const std::string config_path = generate_demo(spec, dir.string());
    PipelineConfig cfg = PipelineConfig::load_file(config_path);
    cfg.diameters = {600, 400};
    return cfg;
}

} // namespace

TEST_CASE("run_pipeline produces the full artifact tree and the report") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    const SelectionReport report = run_pipeline(cfg);

    CHECK(report.rows.size() == 2 * 3); // 2 diameters x 3 models
    CHECK(!report.justification.empty());

    const fs::path out(cfg.output_dir);
    for (const char* f :
         {"indices/lst.asc", "indices/ndvi.asc", "indices/ndwi.asc",
          "grids/d600.json", "grids/d400.json",
          "geocode/buildings_geocoded.csv", "geocode/rejections.csv",
          "d600/features.csv", "d600/hex_lst.geojson", "d600/fit_ols.json",
          "d600/fit_sar.json", "d600/fit_sem.json", "d400/features.csv",
          "report.csv", "report.txt"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    CHECK(!fs::exists(out / "RUN_INCOMPLETE"));

    // report.csv has one line per (diameter, model) plus the header
    const std::string csv = slurp(out / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("stage-by-stage execution is byte-identical to run_pipeline") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);

    PipelineConfig whole = cfg;
    whole.output_dir = (tmp.path / "out_whole").string();
    run_pipeline(whole);

    PipelineConfig staged = cfg;
    staged.output_dir = (tmp.path / "out_staged").string();
    for (const char* stage : kStageNames) {
        run_stage(staged, stage);
    }

    const auto a = tree_bytes(whole.output_dir);
    const auto b = tree_bytes(staged.output_dir);
    REQUIRE(a.size() == b.size());
    for (const auto& [rel, bytes] : a) {
        REQUIRE_MESSAGE(b.count(rel) == 1, rel);
        REQUIRE_MESSAGE(b.at(rel) == bytes, rel);
    }
}

TEST_CASE("same config and seed twice gives byte-identical outputs") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);

    PipelineConfig first = cfg;
    first.output_dir = (tmp.path / "out1").string();
    run_pipeline(first);
    PipelineConfig second = cfg;
    second.output_dir = (tmp.path / "out2").string();
    run_pipeline(second);

    CHECK(tree_bytes(first.output_dir) == tree_bytes(second.output_dir));
}

TEST_CASE("config validation fails before any computation") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);

    PipelineConfig missing = cfg;
    missing.output_dir = (tmp.path / "never").string();
    missing.bands.thermal_dn = (tmp.path / "no_such.asc").string();
    CHECK_THROWS_WITH_AS(run_pipeline(missing),
                         doctest::Contains("thermal"), ConfigError);
    CHECK(!fs::exists(missing.output_dir)); // nothing was written

    PipelineConfig bad_diameter = cfg;
    bad_diameter.diameters = {600, -5};
    CHECK_THROWS_AS(run_pipeline(bad_diameter), ConfigError);

    PipelineConfig no_models = cfg;
    no_models.model_kinds.clear();
    CHECK_THROWS_AS(run_pipeline(no_models), ConfigError);

    CHECK_THROWS_AS(run_stage(cfg, "nonsense"), ConfigError);
}

TEST_CASE("a failing stage leaves the RUN_INCOMPLETE marker behind") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    cfg.output_dir = (tmp.path / "out_fail").string();
    // aggregate before indices/grid: inputs are missing
    CHECK_THROWS_AS(run_stage(cfg, "aggregate"), IngestError);
    CHECK(fs::exists(fs::path(cfg.output_dir) / "RUN_INCOMPLETE"));
}

TEST_CASE("fit documents round-trip through JSON") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    run_pipeline(cfg);

    const fs::path path = fs::path(cfg.output_dir) / "d600" / "fit_sem.json";
    const FitDocument doc = load_fit_document(path.string());
    CHECK(doc.kind == ModelKind::sem);
    CHECK(doc.diameter == 600.0);
    CHECK(doc.n > 10);
    CHECK(doc.k == 11);
    CHECK(doc.param_count == doc.k + 2);
    REQUIRE(doc.spatial.has_value());
    CHECK(doc.spatial->name == "lambda");
    CHECK(doc.residuals.size() == doc.n);
    CHECK(doc.aic == doctest::Approx(2.0 * double(doc.param_count) -
                                     2.0 * doc.log_likelihood));

    // save -> load preserves bytes
    const fs::path copy = tmp.path / "copy.json";
    save_fit_document(doc, copy.string());
    CHECK(slurp(path) == slurp(copy));
}

TEST_CASE("parallel fit stage matches the sequential one") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);

    PipelineConfig seq = cfg;
    seq.output_dir = (tmp.path / "seq").string();
    seq.jobs = 1;
    run_pipeline(seq);

    PipelineConfig par = cfg;
    par.output_dir = (tmp.path / "par").string();
    par.jobs = 4;
    run_pipeline(par);

    CHECK(tree_bytes(seq.output_dir) == tree_bytes(par.output_dir));
}

TEST_CASE("dwelling-unit totals never exceed the geocoded building sum") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    run_pipeline(cfg);

    double building_total = 0.0;
    for (const auto& b : load_buildings_file(
             (fs::path(cfg.output_dir) / "geocode" /
              "buildings_geocoded.csv")
                 .string())) {
        building_total += b.dwelling_units;
    }
    for (const char* dir : {"d600", "d400"}) {
        const FeatureTable table = read_feature_csv_file(
            (fs::path(cfg.output_dir) / dir / "features.csv").string());
        double hex_total = 0.0;
        for (const auto& row : table.rows) {
            hex_total += row.total_dwelling_units;
        }
        CHECK(hex_total <= building_total + 1e-9);
        CHECK(hex_total > 0.0);
    }
}

TEST_CASE("HEXHEAT_CACHE_DIR overrides the configured cache directory") {
    TempDir tmp;
    const PipelineConfig cfg = small_demo_config(tmp.path);
    const std::string config_path = (tmp.path / "config.json").string();

    ::setenv("HEXHEAT_CACHE_DIR", "/tmp/hexheat_env_cache", 1);
    const PipelineConfig reloaded = PipelineConfig::load_file(config_path);
    ::unsetenv("HEXHEAT_CACHE_DIR");
    CHECK(reloaded.geocode.cache_dir == "/tmp/hexheat_env_cache");
    CHECK(cfg.geocode.cache_dir != reloaded.geocode.cache_dir);
}

TEST_CASE("configured NDVI extrema override the scene statistics") {
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    cfg.ndvi_min = -0.5;
    cfg.ndvi_max = 0.9;
    run_stage(cfg, "indices");
    CHECK(fs::exists(fs::path(cfg.output_dir) / "indices" / "lst.asc"));

    PipelineConfig bad = cfg;
    bad.ndvi_min = 0.9;
    bad.ndvi_max = 0.9;
    CHECK_THROWS_AS(run_stage(bad, "indices"), ConfigError);
}

#ifdef HEXHEAT_CLI_PATH
TEST_CASE("indices outputs are byte-identical across kernel lanes") {
    if (!kernels::lane_supported(kernels::Lane::avx2)) {
        MESSAGE("AVX2 unavailable; lane comparison skipped");
        return;
    }
    TempDir tmp;
    PipelineConfig cfg = small_demo_config(tmp.path);
    const std::string cli = HEXHEAT_CLI_PATH;
    const std::string config = (tmp.path / "config.json").string();

    auto run_lane = [&](const std::string& lane, const std::string& outdir) {
        const std::string cmd = "HEXHEAT_SIMD=" + lane + " " + cli +
                                " indices --config " + config +
                                " >/dev/null 2>&1";
        REQUIRE(std::system(cmd.c_str()) == 0);
        fs::rename(fs::path(cfg.output_dir) / "indices", tmp.path / outdir);
    };
    run_lane("scalar", "indices_scalar");
    run_lane("avx2", "indices_avx2");
    for (const char* f : {"lst.asc", "ndvi.asc", "ndwi.asc"}) {
        CHECK(slurp(tmp.path / "indices_scalar" / f) ==
              slurp(tmp.path / "indices_avx2" / f));
    }
}

TEST_CASE("CLI smoke test: demo, staged run, exit codes") {
    TempDir tmp;
    const std::string cli = HEXHEAT_CLI_PATH;
    const std::string dir = (tmp.path / "cli_demo").string();

    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };

    CHECK(run("demo --dir " + dir +
              " --rows 100 --cols 100 --cell-size 25 --buildings 150") == 0);
    const std::string config = dir + "/config.json";
    CHECK(run("indices --config " + config) == 0);
    CHECK(run("grid --config " + config) == 0);
    CHECK(run("geocode --config " + config) == 0);
    CHECK(run("aggregate --config " + config) == 0);
    CHECK(run("fit --config " + config + " --jobs 2") == 0);
    CHECK(run("report --config " + config) == 0);
    CHECK(fs::exists(fs::path(dir) / "out" / "report.txt"));

    // config error -> exit 2; missing config file is also a config error
    CHECK(run("run --config " + dir + "/absent.json") == 2);
    // unknown stage name -> config error
    CHECK(run("run --config " + config + " --stage bogus") == 2);
}
#endif
