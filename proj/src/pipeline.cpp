#include "hexheat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hexheat/errors.hpp"
#include "hexheat/features.hpp"
#include "hexheat/hexgrid.hpp"
#include "hexheat/raster.hpp"
#include "hexheat/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace hexheat {

namespace {

std::string diameter_dirname(double d) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "d%g", d);
    return buf;
}

fs::path out_path(const PipelineConfig& cfg, const std::string& rel) {
    return fs::path(cfg.output_dir) / rel;
}

void log_line(const PipelineConfig& cfg, const std::string& msg) {
    if (!cfg.verbose) return;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    std::fprintf(stderr, "[hexheat] %s\n", msg.c_str());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestError("cannot open output file: " + path.string());
    }
    writer(out);
    if (!out) {
        throw IngestError("failed writing output file: " + path.string());
    }
}

// ---- config -------------------------------------------------------------

std::string resolve_path(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    const fs::path path(p);
    return path.is_absolute() ? path.string() : (base / path).string();
}

PipelineConfig parse_config(const json& doc, const fs::path& base) {
    PipelineConfig cfg;
    try {
        const auto& bands = doc.at("bands");
        cfg.bands.red = resolve_path(base, bands.at("red").get<std::string>());
        cfg.bands.nir = resolve_path(base, bands.at("nir").get<std::string>());
        cfg.bands.green =
            resolve_path(base, bands.at("green").get<std::string>());
        cfg.bands.swir =
            resolve_path(base, bands.at("swir").get<std::string>());
        cfg.bands.thermal_dn =
            resolve_path(base, bands.at("thermal_dn").get<std::string>());
        cfg.population_path =
            resolve_path(base, doc.at("population").get<std::string>());
        cfg.buildings_path =
            resolve_path(base, doc.at("buildings").get<std::string>());

        const auto& rad = doc.at("radiometric");
        cfg.radiometric.m_l = rad.at("m_l").get<double>();
        cfg.radiometric.a_l = rad.at("a_l").get<double>();
        cfg.radiometric.k1 = rad.at("k1").get<double>();
        cfg.radiometric.k2 = rad.at("k2").get<double>();
        if (rad.contains("wavelength")) {
            cfg.radiometric.wavelength = rad.at("wavelength").get<double>();
        }
        if (rad.contains("rho_planck")) {
            cfg.radiometric.rho_planck = rad.at("rho_planck").get<double>();
        }

        if (doc.contains("ndvi_min") && !doc.at("ndvi_min").is_null()) {
            cfg.ndvi_min = doc.at("ndvi_min").get<double>();
        }
        if (doc.contains("ndvi_max") && !doc.at("ndvi_max").is_null()) {
            cfg.ndvi_max = doc.at("ndvi_max").get<double>();
        }
        if (doc.contains("lst_celsius")) {
            cfg.lst_celsius = doc.at("lst_celsius").get<bool>();
        }
        if (doc.contains("diameters")) {
            cfg.diameters = doc.at("diameters").get<std::vector<double>>();
        }
        if (doc.contains("models")) {
            cfg.model_kinds.clear();
            for (const auto& name : doc.at("models")) {
                cfg.model_kinds.push_back(
                    model_kind_from_name(name.get<std::string>()));
            }
        }
        if (doc.contains("geocode")) {
            const auto& geo = doc.at("geocode");
            if (geo.contains("base_url")) {
                cfg.geocode.base_url = geo.at("base_url").get<std::string>();
            }
            if (geo.contains("rate_limit_per_s")) {
                cfg.geocode.rate_limit_per_s =
                    geo.at("rate_limit_per_s").get<double>();
            }
            if (geo.contains("max_concurrency")) {
                cfg.geocode.max_concurrency =
                    geo.at("max_concurrency").get<std::size_t>();
            }
            if (geo.contains("cache_dir")) {
                cfg.geocode.cache_dir = resolve_path(
                    base, geo.at("cache_dir").get<std::string>());
            }
            if (geo.contains("max_retries")) {
                cfg.geocode.max_retries = geo.at("max_retries").get<int>();
            }
        }
        cfg.output_dir =
            resolve_path(base, doc.at("output_dir").get<std::string>());
        if (doc.contains("seed")) {
            cfg.seed = doc.at("seed").get<std::uint64_t>();
        }
        if (doc.contains("jobs")) cfg.jobs = doc.at("jobs").get<int>();
        if (doc.contains("export_weights")) {
            cfg.export_weights = doc.at("export_weights").get<bool>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

} // namespace

PipelineConfig PipelineConfig::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    PipelineConfig cfg =
        parse_config(doc, fs::absolute(fs::path(path)).parent_path());
    if (const char* env = std::getenv("HEXHEAT_CACHE_DIR")) {
        cfg.geocode.cache_dir = env;
    }
    return cfg;
}

void PipelineConfig::validate() const {
    const auto require_file = [](const std::string& p, const char* what) {
        if (p.empty()) {
            throw ConfigError(std::string("config: missing path for ") + what);
        }
        if (!fs::exists(p)) {
            throw ConfigError(std::string("config: ") + what +
                              " path does not exist: " + p);
        }
    };
    require_file(bands.red, "red band");
    require_file(bands.nir, "nir band");
    require_file(bands.green, "green band");
    require_file(bands.swir, "swir band");
    require_file(bands.thermal_dn, "thermal band");
    require_file(population_path, "population raster");
    require_file(buildings_path, "building CSV");
    if (output_dir.empty()) {
        throw ConfigError("config: output_dir is required");
    }
    if (diameters.empty()) {
        throw ConfigError("config: at least one hexagon diameter is required");
    }
    for (double d : diameters) {
        if (!(d > 0.0)) {
            throw ConfigError("config: diameters must be > 0");
        }
    }
    if (model_kinds.empty()) {
        throw ConfigError("config: at least one model kind is required");
    }
    if (jobs < 1) {
        throw ConfigError("config: jobs must be >= 1");
    }
    radiometric.validate();
    if (ndvi_min && ndvi_max && !(*ndvi_max > *ndvi_min)) {
        throw ConfigError("config: ndvi_max must exceed ndvi_min");
    }
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
    ordered_json doc;
    doc["bands"] = {{"red", cfg.bands.red},
                    {"nir", cfg.bands.nir},
                    {"green", cfg.bands.green},
                    {"swir", cfg.bands.swir},
                    {"thermal_dn", cfg.bands.thermal_dn}};
    doc["population"] = cfg.population_path;
    doc["buildings"] = cfg.buildings_path;
    doc["radiometric"] = {{"m_l", cfg.radiometric.m_l},
                          {"a_l", cfg.radiometric.a_l},
                          {"k1", cfg.radiometric.k1},
                          {"k2", cfg.radiometric.k2},
                          {"wavelength", cfg.radiometric.wavelength},
                          {"rho_planck", cfg.radiometric.rho_planck}};
    doc["ndvi_min"] = cfg.ndvi_min ? ordered_json(*cfg.ndvi_min)
                                   : ordered_json(nullptr);
    doc["ndvi_max"] = cfg.ndvi_max ? ordered_json(*cfg.ndvi_max)
                                   : ordered_json(nullptr);
    doc["lst_celsius"] = cfg.lst_celsius;
    doc["diameters"] = cfg.diameters;
    ordered_json models = ordered_json::array();
    for (ModelKind kind : cfg.model_kinds) {
        models.push_back(model_kind_name(kind));
    }
    doc["models"] = std::move(models);
    doc["geocode"] = {{"base_url", cfg.geocode.base_url},
                      {"rate_limit_per_s", cfg.geocode.rate_limit_per_s},
                      {"max_concurrency", cfg.geocode.max_concurrency},
                      {"cache_dir", cfg.geocode.cache_dir},
                      {"max_retries", cfg.geocode.max_retries}};
    doc["output_dir"] = cfg.output_dir;
    doc["seed"] = cfg.seed;
    doc["jobs"] = cfg.jobs;
    doc["export_weights"] = cfg.export_weights;
    write_file(fs::path(path),
               [&](std::ostream& out) { out << doc.dump(1, '\t') << '\n'; });
}

// ---- fit documents ------------------------------------------------------

namespace {

ordered_json coefficient_to_json(const Coefficient& c) {
    return {{"name", c.name},
            {"estimate", c.estimate},
            {"std_error", c.std_error},
            {"p_value", c.p_value},
            {"significance", c.significance}};
}

Coefficient coefficient_from_json(const json& j) {
    Coefficient c;
    c.name = j.at("name").get<std::string>();
    c.estimate = j.at("estimate").get<double>();
    c.std_error = j.at("std_error").is_null()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : j.at("std_error").get<double>();
    c.p_value = j.at("p_value").get<double>();
    c.significance = j.at("significance").get<double>();
    return c;
}

ordered_json diagnostic_to_json(const DiagnosticResult& d) {
    return {{"statistic", d.statistic},
            {"z_score", d.z_score},
            {"chi2_df", d.chi2_df},
            {"p_value", d.p_value},
            {"significance", d.significance}};
}

DiagnosticResult diagnostic_from_json(const json& j) {
    DiagnosticResult d;
    d.statistic = j.at("statistic").get<double>();
    d.z_score = j.at("z_score").get<double>();
    d.chi2_df = j.at("chi2_df").get<double>();
    d.p_value = j.at("p_value").get<double>();
    d.significance = j.at("significance").get<double>();
    return d;
}

} // namespace

void save_fit_document(const FitDocument& doc, const std::string& path) {
    ordered_json j;
    j["diameter"] = doc.diameter;
    j["model"] = model_kind_name(doc.kind);
    j["n"] = doc.n;
    j["k"] = doc.k;
    j["param_count"] = doc.param_count;
    j["dropped_cells"] = doc.dropped_cells;
    ordered_json coeffs = ordered_json::array();
    for (const auto& c : doc.coefficients) {
        ordered_json cj = coefficient_to_json(c);
        if (std::isnan(c.std_error)) cj["std_error"] = nullptr;
        coeffs.push_back(std::move(cj));
    }
    j["coefficients"] = std::move(coeffs);
    if (doc.spatial) {
        ordered_json sj = coefficient_to_json(*doc.spatial);
        if (std::isnan(doc.spatial->std_error)) sj["std_error"] = nullptr;
        j["spatial"] = std::move(sj);
    } else {
        j["spatial"] = nullptr;
    }
    j["sigma2"] = doc.sigma2;
    j["log_likelihood"] = doc.log_likelihood;
    j["aic"] = doc.aic;
    j["r2"] = doc.r2;
    j["adjusted_r2"] = doc.adjusted_r2;
    j["moran"] = diagnostic_to_json(doc.moran);
    j["lm_lag"] = doc.lm_lag ? diagnostic_to_json(*doc.lm_lag)
                             : ordered_json(nullptr);
    j["lm_error"] = doc.lm_error ? diagnostic_to_json(*doc.lm_error)
                                 : ordered_json(nullptr);
    j["residuals"] = doc.residuals;
    write_file(fs::path(path),
               [&](std::ostream& out) { out << j.dump(1, '\t') << '\n'; });
}

FitDocument load_fit_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open fit document: " + path);
    }
    json j;
    try {
        in >> j;
        FitDocument doc;
        doc.diameter = j.at("diameter").get<double>();
        doc.kind = model_kind_from_name(j.at("model").get<std::string>());
        doc.n = j.at("n").get<std::size_t>();
        doc.k = j.at("k").get<std::size_t>();
        doc.param_count = j.at("param_count").get<std::size_t>();
        doc.dropped_cells = j.at("dropped_cells").get<std::size_t>();
        for (const auto& cj : j.at("coefficients")) {
            doc.coefficients.push_back(coefficient_from_json(cj));
        }
        if (!j.at("spatial").is_null()) {
            doc.spatial = coefficient_from_json(j.at("spatial"));
        }
        doc.sigma2 = j.at("sigma2").get<double>();
        doc.log_likelihood = j.at("log_likelihood").get<double>();
        doc.aic = j.at("aic").get<double>();
        doc.r2 = j.at("r2").get<double>();
        doc.adjusted_r2 = j.at("adjusted_r2").get<double>();
        doc.moran = diagnostic_from_json(j.at("moran"));
        if (!j.at("lm_lag").is_null()) {
            doc.lm_lag = diagnostic_from_json(j.at("lm_lag"));
        }
        if (!j.at("lm_error").is_null()) {
            doc.lm_error = diagnostic_from_json(j.at("lm_error"));
        }
        doc.residuals = j.at("residuals").get<std::vector<double>>();
        return doc;
    } catch (const json::exception& e) {
        throw IngestError("fit document " + path + ": " + e.what());
    }
}

// ---- stages -------------------------------------------------------------

namespace {

void stage_indices(const PipelineConfig& cfg) {
    const RasterGrid red = read_ascii_grid_file(cfg.bands.red);
    const RasterGrid nir = read_ascii_grid_file(cfg.bands.nir);
    const RasterGrid green = read_ascii_grid_file(cfg.bands.green);
    const RasterGrid swir = read_ascii_grid_file(cfg.bands.swir);
    const RasterGrid thermal = read_ascii_grid_file(cfg.bands.thermal_dn);

    const RasterGrid ndvi = normalized_difference(nir, red);
    const RasterGrid ndwi = normalized_difference(green, swir);

    const RasterGrid radiance = toa_radiance(thermal, cfg.radiometric);
    const RasterGrid bt = brightness_temperature(radiance, cfg.radiometric);
    double lo, hi;
    if (cfg.ndvi_min && cfg.ndvi_max) {
        lo = *cfg.ndvi_min;
        hi = *cfg.ndvi_max;
    } else {
        const GridStats stats = grid_stats(ndvi);
        lo = cfg.ndvi_min.value_or(stats.min);
        hi = cfg.ndvi_max.value_or(stats.max);
    }
    const RasterGrid pv = vegetation_proportion(ndvi, lo, hi);
    const RasterGrid eps = emissivity(pv);
    const RasterGrid lst =
        land_surface_temperature(bt, eps, cfg.radiometric, cfg.lst_celsius);

    write_file(out_path(cfg, "indices/ndvi.asc"),
               [&](std::ostream& o) { write_ascii_grid(ndvi, o); });
    write_file(out_path(cfg, "indices/ndwi.asc"),
               [&](std::ostream& o) { write_ascii_grid(ndwi, o); });
    write_file(out_path(cfg, "indices/lst.asc"),
               [&](std::ostream& o) { write_ascii_grid(lst, o); });
    log_line(cfg, "indices: wrote ndvi.asc, ndwi.asc, lst.asc");
}

BoundingBox raster_extent(const RasterGrid& g) {
    return BoundingBox{
        g.origin_x(), g.origin_y(),
        g.origin_x() + static_cast<double>(g.cols()) * g.cell_size(),
        g.origin_y() + static_cast<double>(g.rows()) * g.cell_size()};
}

void stage_grid(const PipelineConfig& cfg) {
    const RasterGrid thermal = read_ascii_grid_file(cfg.bands.thermal_dn);
    const BoundingBox bbox = raster_extent(thermal);
    for (double d : cfg.diameters) {
        const HexGrid grid(bbox, d); // validates the diameter
        ordered_json doc = {
            {"diameter", grid.diameter()},
            {"bbox",
             {{"min_x", bbox.min_x},
              {"min_y", bbox.min_y},
              {"max_x", bbox.max_x},
              {"max_y", bbox.max_y}}},
            {"cell_area", grid.cell_area()}};
        write_file(out_path(cfg, "grids/" + diameter_dirname(d) + ".json"),
                   [&](std::ostream& o) { o << doc.dump(1, '\t') << '\n'; });
    }
    log_line(cfg, "grid: wrote " + std::to_string(cfg.diameters.size()) +
                      " grid descriptors");
}

HexGrid load_grid(const PipelineConfig& cfg, double diameter) {
    const fs::path path =
        out_path(cfg, "grids/" + diameter_dirname(diameter) + ".json");
    std::ifstream in(path);
    if (!in) {
        throw IngestError("missing grid descriptor (run the grid stage "
                          "first): " + path.string());
    }
    try {
        json doc;
        in >> doc;
        const auto& b = doc.at("bbox");
        return HexGrid(BoundingBox{b.at("min_x").get<double>(),
                                   b.at("min_y").get<double>(),
                                   b.at("max_x").get<double>(),
                                   b.at("max_y").get<double>()},
                       doc.at("diameter").get<double>());
    } catch (const json::exception& e) {
        throw IngestError("grid descriptor " + path.string() + ": " +
                          e.what());
    }
}

void stage_geocode(const PipelineConfig& cfg) {
    std::vector<BuildingRecord> records =
        load_buildings_file(cfg.buildings_path);
    GeocodeConfig geo = cfg.geocode;
    if (geo.cache_dir.empty()) {
        geo.cache_dir = out_path(cfg, "geocode_cache").string();
    }
    GeocodeClient client(geo);
    GeocodeOutcome outcome = client.geocode(std::move(records));

    std::vector<BuildingRecord> located;
    located.reserve(outcome.records.size());
    for (auto& r : outcome.records) {
        if (r.location) located.push_back(std::move(r));
    }
    write_file(out_path(cfg, "geocode/buildings_geocoded.csv"),
               [&](std::ostream& o) { write_buildings_csv(located, o); });
    write_file(out_path(cfg, "geocode/rejections.csv"), [&](std::ostream& o) {
        write_rejections_csv(outcome.rejections, o);
    });
    log_line(cfg, "geocode: " + std::to_string(located.size()) +
                      " located, " + std::to_string(outcome.rejections.size()) +
                      " rejected, " + std::to_string(outcome.cache_hits) +
                      " cache hits");
}

void aggregate_one_diameter(const PipelineConfig& cfg, const RasterGrid& lst,
                            const RasterGrid& ndvi, const RasterGrid& ndwi,
                            const RasterGrid& population,
                            const std::vector<BuildingRecord>& buildings,
                            double diameter) {
    const HexGrid grid = load_grid(cfg, diameter);

    const auto lst_agg = aggregate_raster(grid, lst, AggregateStat::mean);
    const auto ndvi_agg = aggregate_raster(grid, ndvi, AggregateStat::mean);
    const auto ndwi_agg = aggregate_raster(grid, ndwi, AggregateStat::mean);
    const auto pop_agg =
        aggregate_raster(grid, population, AggregateStat::sum);

    std::vector<std::pair<GeoPoint, std::vector<double>>> points;
    points.reserve(buildings.size());
    for (const auto& b : buildings) {
        if (!b.location) continue;
        const auto attrs = b.attribute_vector();
        points.emplace_back(*b.location,
                            std::vector<double>(attrs.begin(), attrs.end()));
    }
    const auto building_sums = aggregate_points(grid, points);

    const FeatureTable table = assemble_feature_table(
        grid, lst_agg, ndvi_agg, ndwi_agg, pop_agg, building_sums);

    const std::string dir = diameter_dirname(diameter);
    write_file(out_path(cfg, dir + "/features.csv"),
               [&](std::ostream& o) { write_feature_csv(table, o); });
    write_file(out_path(cfg, dir + "/hex_lst.geojson"), [&](std::ostream& o) {
        write_hex_geojson(grid, lst_agg, "lst", o);
    });
    write_file(out_path(cfg, dir + "/hex_ndvi.geojson"),
               [&](std::ostream& o) {
                   write_hex_geojson(grid, ndvi_agg, "ndvi", o);
               });
    write_file(out_path(cfg, dir + "/hex_ndwi.geojson"),
               [&](std::ostream& o) {
                   write_hex_geojson(grid, ndwi_agg, "ndwi", o);
               });
    log_line(cfg, "aggregate: " + dir + " -> " +
                      std::to_string(table.rows.size()) + " feature rows");
}

void stage_aggregate(const PipelineConfig& cfg) {
    const RasterGrid lst =
        read_ascii_grid_file(out_path(cfg, "indices/lst.asc").string());
    const RasterGrid ndvi =
        read_ascii_grid_file(out_path(cfg, "indices/ndvi.asc").string());
    const RasterGrid ndwi =
        read_ascii_grid_file(out_path(cfg, "indices/ndwi.asc").string());
    const RasterGrid population = read_ascii_grid_file(cfg.population_path);
    const std::vector<BuildingRecord> buildings = load_buildings_file(
        out_path(cfg, "geocode/buildings_geocoded.csv").string());
    for (double d : cfg.diameters) {
        aggregate_one_diameter(cfg, lst, ndvi, ndwi, population, buildings,
                               d);
    }
}

void fit_one_diameter(const PipelineConfig& cfg, double diameter) {
    const std::string dir = diameter_dirname(diameter);
    const FeatureTable full = read_feature_csv_file(
        out_path(cfg, dir + "/features.csv").string());

    std::vector<HexCellId> cells;
    cells.reserve(full.rows.size());
    for (const auto& r : full.rows) cells.push_back(r.cell);
    const SpatialWeights weights = build_weights(cells);

    // Keep the table aligned with the retained (non-isolated) cells.
    FeatureTable table;
    if (weights.dropped.empty()) {
        table = full;
    } else {
        std::unordered_set<HexCellId> dropped(weights.dropped.begin(),
                                              weights.dropped.end());
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < full.rows.size(); ++i) {
            if (!dropped.count(full.rows[i].cell)) keep.push_back(i);
        }
        table = select_rows(full, keep);
        log_line(cfg, "fit: " + dir + " dropped " +
                          std::to_string(weights.dropped.size()) +
                          " isolated cells");
    }

    const DesignMatrix design = design_from_features(table);

    // The LM diagnostics are score tests on the OLS residuals, so an OLS
    // fit is computed even when only spatial models were requested.
    const ModelFit ols = fit_ols(design);
    const auto lm_lag = lm_lag_test(ols, design, weights);
    const auto lm_error = lm_error_test(ols, design, weights);

    const auto make_doc = [&](const ModelFit& fit) {
        FitDocument doc;
        doc.diameter = diameter;
        doc.kind = fit.kind;
        doc.n = fit.n;
        doc.k = fit.k;
        doc.param_count = fit.param_count;
        doc.dropped_cells = weights.dropped.size();
        doc.coefficients = fit.coefficients;
        doc.spatial = fit.spatial;
        doc.sigma2 = fit.sigma2;
        doc.log_likelihood = fit.log_likelihood;
        doc.aic = fit.aic;
        doc.r2 = fit.r2;
        doc.adjusted_r2 = fit.adjusted_r2;
        std::vector<double> residuals(
            fit.residuals.data(), fit.residuals.data() + fit.residuals.size());
        doc.moran = morans_i(residuals, weights);
        doc.lm_lag = lm_lag;
        doc.lm_error = lm_error;
        doc.residuals = std::move(residuals);
        return doc;
    };

    for (ModelKind kind : cfg.model_kinds) {
        ModelFit fit;
        switch (kind) {
            case ModelKind::ols: fit = ols; break;
            case ModelKind::sar: fit = fit_sar(design, weights); break;
            case ModelKind::sem: fit = fit_sem(design, weights); break;
        }
        const FitDocument doc = make_doc(fit);
        save_fit_document(
            doc, out_path(cfg, dir + "/fit_" +
                                   std::string(model_kind_name(kind)) +
                                   ".json")
                     .string());
    }
    if (cfg.export_weights) {
        write_file(out_path(cfg, dir + "/weights.csv"), [&](std::ostream& o) {
            write_weights_csv(weights, o);
        });
    }
    log_line(cfg, "fit: " + dir + " done (n=" + std::to_string(weights.n) +
                      ")");
}

void stage_fit(const PipelineConfig& cfg) {
    const std::size_t jobs = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.jobs), cfg.diameters.size());
    if (jobs <= 1) {
        for (double d : cfg.diameters) fit_one_diameter(cfg, d);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    const auto work = [&] {
        while (true) {
            const std::size_t i =
                cursor.fetch_add(1, std::memory_order_relaxed);
            if (i >= cfg.diameters.size()) return;
            try {
                fit_one_diameter(cfg, cfg.diameters[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                cursor.store(cfg.diameters.size(),
                             std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

SelectionReport stage_report(const PipelineConfig& cfg) {
    std::vector<ReportRow> rows;
    for (double d : cfg.diameters) {
        for (ModelKind kind : cfg.model_kinds) {
            const FitDocument doc = load_fit_document(
                out_path(cfg, diameter_dirname(d) + "/fit_" +
                                  std::string(model_kind_name(kind)) +
                                  ".json")
                    .string());
            ReportRow row;
            row.diameter = doc.diameter;
            row.kind = doc.kind;
            row.n = doc.n;
            row.r2 = doc.r2;
            row.adjusted_r2 = doc.adjusted_r2;
            row.log_likelihood = doc.log_likelihood;
            row.aic = doc.aic;
            row.moran = doc.moran;
            row.lm_lag = doc.lm_lag;
            row.lm_error = doc.lm_error;
            row.spatial = doc.spatial;
            row.coefficients = doc.coefficients;
            rows.push_back(std::move(row));
        }
    }
    SelectionReport report = build_selection_report(std::move(rows));
    write_file(out_path(cfg, "report.csv"),
               [&](std::ostream& o) { write_report_csv(report, o); });
    write_file(out_path(cfg, "report.txt"),
               [&](std::ostream& o) { write_report_text(report, o); });
    log_line(cfg, "report: chosen " + report.justification);
    return report;
}

class RunMarker {
public:
    explicit RunMarker(const PipelineConfig& cfg)
        : path_(out_path(cfg, "RUN_INCOMPLETE")) {
        write_file(path_, [](std::ostream& o) {
            o << "a run is in progress or failed; outputs may be partial\n";
        });
    }
    void complete() { fs::remove(path_); }
    ~RunMarker() = default; // marker intentionally stays behind on failure

private:
    fs::path path_;
};

} // namespace

void run_stage(const PipelineConfig& cfg, const std::string& stage) {
    cfg.validate();
    RunMarker marker(cfg);
    if (stage == "indices") {
        stage_indices(cfg);
    } else if (stage == "grid") {
        stage_grid(cfg);
    } else if (stage == "geocode") {
        stage_geocode(cfg);
    } else if (stage == "aggregate") {
        stage_aggregate(cfg);
    } else if (stage == "fit") {
        stage_fit(cfg);
    } else if (stage == "report") {
        stage_report(cfg);
    } else {
        throw ConfigError("unknown stage: '" + stage + "'");
    }
    marker.complete();
}

SelectionReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    RunMarker marker(cfg);
    stage_indices(cfg);
    stage_grid(cfg);
    stage_geocode(cfg);
    stage_aggregate(cfg);
    stage_fit(cfg);
    SelectionReport report = stage_report(cfg);
    marker.complete();
    return report;
}

} // namespace hexheat
