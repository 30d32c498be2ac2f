#include "hexheat/demo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hexheat/errors.hpp"
#include "hexheat/features.hpp"
#include "hexheat/indices.hpp"
#include "hexheat/pipeline.hpp"
#include "hexheat/raster.hpp"
#include "hexheat/rng.hpp"

namespace fs = std::filesystem;

namespace hexheat {

namespace {

constexpr double kNodata = -9999.0;

// Landsat-8-style thermal calibration for the synthetic scene.
constexpr double kDemoML = 3.342e-4;
constexpr double kDemoAL = 0.1;
constexpr double kDemoK1 = 774.8853;
constexpr double kDemoK2 = 1321.0789;

struct Bump {
    double x, y, radius, amplitude;
};

// Sum of Gaussian bumps, the building block of every smooth field.
class BumpField {
public:
    BumpField(Rng& rng, std::size_t count, double min_x, double max_x,
              double min_y, double max_y, double min_radius,
              double max_radius, double amplitude) {
        bumps_.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            bumps_.push_back(Bump{
                rng.uniform(min_x, max_x), rng.uniform(min_y, max_y),
                rng.uniform(min_radius, max_radius),
                amplitude * (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                    rng.uniform(0.5, 1.0)});
        }
    }

    double at(double x, double y) const {
        double v = 0.0;
        for (const auto& b : bumps_) {
            const double dx = (x - b.x) / b.radius;
            const double dy = (y - b.y) / b.radius;
            const double d2 = dx * dx + dy * dy;
            if (d2 < 12.0) v += b.amplitude * std::exp(-0.5 * d2);
        }
        return v;
    }

private:
    std::vector<Bump> bumps_;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

std::string generate_demo(const DemoSpec& spec, const std::string& dir_in) {
    if (spec.rows == 0 || spec.cols == 0 || !(spec.cell_size > 0.0)) {
        throw ConfigError("demo: rows, cols and cell_size must be positive");
    }
    fs::create_directories(dir_in);
    const std::string dir = fs::absolute(dir_in).string();

    const std::size_t rows = spec.rows, cols = spec.cols;
    const std::size_t cell_count = rows * cols;
    const double width = static_cast<double>(cols) * spec.cell_size;
    const double height = static_cast<double>(rows) * spec.cell_size;
    const double cx = spec.origin_x + width / 2.0;
    const double cy = spec.origin_y + height / 2.0;
    const double ax = 0.42 * width;  // island semi-axes
    const double ay = 0.36 * height;

    Rng rng(spec.seed);
    const BumpField veg_bumps(rng, 12, spec.origin_x, spec.origin_x + width,
                              spec.origin_y, spec.origin_y + height,
                              0.08 * width, 0.22 * width, 0.30);
    const BumpField wet_bumps(rng, 10, spec.origin_x, spec.origin_x + width,
                              spec.origin_y, spec.origin_y + height,
                              0.06 * width, 0.18 * width, 0.25);
    // Smooth field nobody measures; it drives the spatially correlated
    // error that makes the error-model world.
    const BumpField hidden_heat(rng, 24, spec.origin_x,
                                spec.origin_x + width, spec.origin_y,
                                spec.origin_y + height, 0.03 * width,
                                0.09 * width, 1.0);

    // Lakes: high moisture, no vegetation, cooler.
    struct Lake {
        double x, y, radius;
    };
    std::vector<Lake> lakes;
    for (int i = 0; i < 4; ++i) {
        lakes.push_back(Lake{cx + rng.uniform(-0.6, 0.6) * ax,
                             cy + rng.uniform(-0.6, 0.6) * ay,
                             rng.uniform(0.02, 0.05) * width});
    }
    // Town centers: population and buildings cluster here.
    struct Town {
        double x, y;
    };
    std::vector<Town> towns;
    for (int i = 0; i < 6; ++i) {
        towns.push_back(Town{cx + rng.uniform(-0.7, 0.7) * ax,
                             cy + rng.uniform(-0.7, 0.7) * ay});
    }

    const auto inside_island = [&](double x, double y) {
        const double ex = (x - cx) / ax;
        const double ey = (y - cy) / ay;
        return ex * ex + ey * ey <= 1.0;
    };

    // Buildings first so their heat bumps can enter the surface field.
    std::vector<BuildingRecord> buildings;
    buildings.reserve(spec.building_count);
    Rng brng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    while (buildings.size() < spec.building_count) {
        const Town& town = towns[brng.integer(towns.size())];
        const double x = town.x + 900.0 * brng.normal();
        const double y = town.y + 900.0 * brng.normal();
        if (!inside_island(x, y)) continue;
        BuildingRecord b;
        char addr[64];
        std::snprintf(addr, sizeof(addr), "BLK %04zu DEMO AVE %zu",
                      buildings.size() + 1, 1 + buildings.size() % 12);
        b.address_key = addr;
        b.location = GeoPoint{x, y};
        b.height_storeys =
            4 + static_cast<int>(brng.uniform() * brng.uniform() * 36.0);
        b.dwelling_units =
            b.height_storeys * (8 + static_cast<int>(brng.uniform() * 14.0));
        b.residential_flag = brng.uniform() < 0.92 ? 1 : 0;
        b.commercial_flag = brng.uniform() < 0.25 ? 1 : 0;
        b.market_hawker_flag = brng.uniform() < 0.08 ? 1 : 0;
        b.multistorey_carpark_flag = brng.uniform() < 0.22 ? 1 : 0;
        b.precinct_pavilion_flag = brng.uniform() < 0.06 ? 1 : 0;
        b.miscellaneous_flag = brng.uniform() < 0.12 ? 1 : 0;
        buildings.push_back(std::move(b));
    }

    // Stamp a Gaussian bump of the given sigma onto a raster; bounded to
    // 3 sigma so stamping stays cheap.
    std::vector<double> building_heat(cell_count, 0.0);
    const auto stamp = [&](std::vector<double>& field, double px, double py,
                           double sigma, double amp) {
        const int reach =
            static_cast<int>(std::ceil(3.0 * sigma / spec.cell_size));
        const long col0 =
            static_cast<long>((px - spec.origin_x) / spec.cell_size);
        const long row0 = static_cast<long>(rows) - 1 -
                          static_cast<long>((py - spec.origin_y) /
                                            spec.cell_size);
        for (long dr = -reach; dr <= reach; ++dr) {
            for (long dc = -reach; dc <= reach; ++dc) {
                const long r = row0 + dr, c = col0 + dc;
                if (r < 0 || c < 0 || r >= static_cast<long>(rows) ||
                    c >= static_cast<long>(cols)) {
                    continue;
                }
                const double ddx = static_cast<double>(dc) * spec.cell_size;
                const double ddy = static_cast<double>(dr) * spec.cell_size;
                const double d2 = (ddx * ddx + ddy * ddy) / (sigma * sigma);
                field[static_cast<std::size_t>(r) * cols +
                      static_cast<std::size_t>(c)] +=
                    amp * std::exp(-0.5 * d2);
            }
        }
    };

    // Building heat: commercial blocks warm their surroundings, tall blocks
    // shade theirs.
    for (const auto& b : buildings) {
        const double amp = 0.35 * b.commercial_flag +
                           0.25 * b.market_hawker_flag -
                           0.012 * b.height_storeys -
                           0.004 * (b.dwelling_units / 10.0);
        stamp(building_heat, b.location->x, b.location->y, 60.0, amp);
    }

    // Short-range thermal texture so hexagon means keep realistic scatter
    // even where hundreds of pixels average out the per-pixel noise.
    std::vector<double> texture_heat(cell_count, 0.0);
    Rng trng(spec.seed ^ 0x517cc1b727220a95ull);
    const std::size_t texture_bumps = cell_count / 1200;
    for (std::size_t i = 0; i < texture_bumps; ++i) {
        const double px = trng.uniform(spec.origin_x, spec.origin_x + width);
        const double py = trng.uniform(spec.origin_y, spec.origin_y + height);
        const double sigma = trng.uniform(40.0, 140.0);
        const double amp = (trng.uniform() < 0.5 ? -1.0 : 1.0) *
                           trng.uniform(0.5, 1.5);
        stamp(texture_heat, px, py, sigma, amp);
    }

    std::vector<double> red(cell_count, kNodata), nir(cell_count, kNodata),
        green(cell_count, kNodata), swir(cell_count, kNodata),
        population(cell_count, kNodata), lst_target(cell_count, kNodata),
        ndvi(cell_count, kNodata);

    Rng prng(spec.seed ^ 0xdeadbeefcafef00dull);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double x =
                spec.origin_x + (static_cast<double>(c) + 0.5) * spec.cell_size;
            const double y = spec.origin_y +
                             (static_cast<double>(rows - r) - 0.5) *
                                 spec.cell_size;
            const std::size_t i = r * cols + c;
            if (!inside_island(x, y)) continue;
            double veg = clamp01(0.52 + veg_bumps.at(x, y) +
                                 0.12 * ((y - cy) / ay));
            double wet = clamp01(0.35 + wet_bumps.at(x, y));
            for (const auto& lake : lakes) {
                const double dx = x - lake.x, dy = y - lake.y;
                if (dx * dx + dy * dy < lake.radius * lake.radius) {
                    veg = 0.05;
                    wet = 0.95;
                }
            }
            const double urban = clamp01(1.0 - veg);

            red[i] = std::clamp(0.28 - 0.20 * veg + 0.015 * prng.normal(),
                                0.02, 0.60);
            nir[i] = std::clamp(0.15 + 0.45 * veg + 0.015 * prng.normal(),
                                0.02, 0.90);
            green[i] = std::clamp(0.10 + 0.12 * wet + 0.008 * prng.normal(),
                                  0.02, 0.50);
            swir[i] = std::clamp(0.32 - 0.26 * wet + 0.008 * prng.normal(),
                                 0.02, 0.60);
            ndvi[i] = (nir[i] - red[i]) / (nir[i] + red[i]);

            double town_pull = 0.0;
            for (const auto& town : towns) {
                const double dx = (x - town.x) / 1500.0;
                const double dy = (y - town.y) / 1500.0;
                town_pull += std::exp(-0.5 * (dx * dx + dy * dy));
            }
            population[i] =
                std::max(0.0, 38.0 * urban * town_pull +
                                  1.5 * prng.uniform());

            lst_target[i] = 24.0 + 6.0 * urban - 3.5 * veg - 1.5 * wet +
                            hidden_heat.at(x, y) + building_heat[i] +
                            texture_heat[i] + 0.45 * prng.normal();
        }
    }

    // Invert the surface-temperature chain so the pipeline recovers the
    // planted LST (up to DN quantization).
    double ndvi_min = 1.0, ndvi_max = -1.0;
    for (std::size_t i = 0; i < cell_count; ++i) {
        if (ndvi[i] == kNodata) continue;
        ndvi_min = std::min(ndvi_min, ndvi[i]);
        ndvi_max = std::max(ndvi_max, ndvi[i]);
    }
    const RadiometricConstants constants{kDemoML, kDemoAL, kDemoK1, kDemoK2};
    std::vector<double> thermal(cell_count, kNodata);
    for (std::size_t i = 0; i < cell_count; ++i) {
        if (lst_target[i] == kNodata) continue;
        const double t = (ndvi[i] - ndvi_min) / (ndvi_max - ndvi_min);
        const double pv = std::min(t * t, 1.0);
        const double eps = 0.004 * pv + 0.986;
        const double lst_k = lst_target[i] + 273.15;
        const double cfac =
            (constants.wavelength / constants.rho_planck) * std::log(eps);
        const double bt = lst_k / (1.0 - cfac * lst_k);
        const double radiance =
            constants.k1 / (std::exp(constants.k2 / bt) - 1.0);
        thermal[i] = std::round((radiance - constants.a_l) / constants.m_l);
    }

    const auto write_raster = [&](const char* name,
                                  std::vector<double> values) {
        const RasterGrid grid(rows, cols, spec.origin_x, spec.origin_y,
                              spec.cell_size, kNodata, std::move(values));
        write_ascii_grid_file(grid, (fs::path(dir) / name).string());
    };
    write_raster("red.asc", std::move(red));
    write_raster("nir.asc", std::move(nir));
    write_raster("green.asc", std::move(green));
    write_raster("swir.asc", std::move(swir));
    write_raster("thermal_dn.asc", std::move(thermal));
    write_raster("population.asc", std::move(population));

    {
        std::ofstream out(fs::path(dir) / "buildings.csv", std::ios::binary);
        if (!out) {
            throw IngestError("demo: cannot write buildings.csv");
        }
        write_buildings_csv(buildings, out);
    }

    PipelineConfig cfg;
    cfg.bands.red = (fs::path(dir) / "red.asc").string();
    cfg.bands.nir = (fs::path(dir) / "nir.asc").string();
    cfg.bands.green = (fs::path(dir) / "green.asc").string();
    cfg.bands.swir = (fs::path(dir) / "swir.asc").string();
    cfg.bands.thermal_dn = (fs::path(dir) / "thermal_dn.asc").string();
    cfg.population_path = (fs::path(dir) / "population.asc").string();
    cfg.buildings_path = (fs::path(dir) / "buildings.csv").string();
    cfg.radiometric = constants;
    cfg.output_dir = (fs::path(dir) / "out").string();
    cfg.seed = spec.seed;
    cfg.jobs = 2;
    const std::string config_path = (fs::path(dir) / "config.json").string();
    save_config(cfg, config_path);
    return config_path;
}

} // namespace hexheat
