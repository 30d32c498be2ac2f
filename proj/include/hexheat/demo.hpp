#pragma once

#include <cstdint>
#include <string>

namespace hexheat {

/// Parameters of the bundled synthetic scene. The defaults produce the
/// full-size demo: a 10 km x 10 km island with planted vegetation, moisture
/// and heat structure, around 2000 buildings, and a config covering the six
/// standard hexagon diameters.
struct DemoSpec {
    std::size_t rows = 1000;
    std::size_t cols = 1000;
    double cell_size = 10.0;      // meters
    double origin_x = 300000.0;   // arbitrary planar offset
    double origin_y = 140000.0;
    std::size_t building_count = 2000;
    std::uint64_t seed = 42;
};

/// Write the demo inputs (band rasters, population raster, building CSV)
/// and a ready-to-run config.json into `dir`. Returns the config path.
std::string generate_demo(const DemoSpec& spec, const std::string& dir);

} // namespace hexheat
