#include "hexheat/hexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hexheat/errors.hpp"

namespace hexheat {

namespace {
constexpr double kSqrt3 = std::numbers::sqrt3;
}

HexGrid::HexGrid(BoundingBox bbox, double diameter)
    : bbox_(bbox), diameter_(diameter), circumradius_(diameter / kSqrt3) {
    if (!(diameter > 0.0)) {
        throw NumericError("HexGrid: diameter must be > 0");
    }
    if (!(bbox.max_x > bbox.min_x) || !(bbox.max_y > bbox.min_y)) {
        throw NumericError("HexGrid: degenerate bounding box");
    }
    origin_ = GeoPoint{bbox.min_x, bbox.min_y};
}

double HexGrid::cell_area() const {
    return (kSqrt3 / 2.0) * diameter_ * diameter_;
}

HexCellId HexGrid::locate(GeoPoint p) const {
    const double x = (p.x - origin_.x) / circumradius_;
    const double y = (p.y - origin_.y) / circumradius_;
    // Fractional axial coordinates for pointy-top cells.
    const double qf = (kSqrt3 / 3.0) * x - (1.0 / 3.0) * y;
    const double rf = (2.0 / 3.0) * y;

    // Cube rounding: round each cube coordinate, then repair the one with
    // the largest rounding error so q + r + s == 0 again.
    double rq = std::round(qf);
    double rr = std::round(rf);
    double rs = std::round(-qf - rf);
    const double dq = std::abs(rq - qf);
    const double dr = std::abs(rr - rf);
    const double ds = std::abs(rs - (-qf - rf));
    if (dq > dr && dq > ds) {
        rq = -rr - rs;
    } else if (dr > ds) {
        rr = -rq - rs;
    }
    return HexCellId{static_cast<std::int32_t>(rq),
                     static_cast<std::int32_t>(rr)};
}

GeoPoint HexGrid::cell_center(HexCellId cell) const {
    const double q = static_cast<double>(cell.q);
    const double r = static_cast<double>(cell.r);
    return GeoPoint{origin_.x + diameter_ * (q + r / 2.0),
                    origin_.y + 1.5 * circumradius_ * r};
}

std::array<GeoPoint, 6> HexGrid::cell_polygon(HexCellId cell) const {
    const GeoPoint c = cell_center(cell);
    std::array<GeoPoint, 6> corners;
    for (int k = 0; k < 6; ++k) {
        const double angle =
            std::numbers::pi / 180.0 * (60.0 * k + 30.0);
        corners[static_cast<std::size_t>(k)] =
            GeoPoint{c.x + circumradius_ * std::cos(angle),
                     c.y + circumradius_ * std::sin(angle)};
    }
    return corners;
}

namespace {

struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;
};

bool extents_overlap(const BoundingBox& a, const RasterGrid& r) {
    const double rx0 = r.origin_x();
    const double ry0 = r.origin_y();
    const double rx1 = rx0 + static_cast<double>(r.cols()) * r.cell_size();
    const double ry1 = ry0 + static_cast<double>(r.rows()) * r.cell_size();
    return rx0 < a.max_x && rx1 > a.min_x && ry0 < a.max_y && ry1 > a.min_y;
}

} // namespace

std::vector<HexAggregate> aggregate_raster(const HexGrid& grid,
                                           const RasterGrid& raster,
                                           AggregateStat stat) {
    if (!extents_overlap(grid.bbox(), raster)) {
        throw NumericError("aggregate_raster: raster extent is disjoint from "
                           "the hex grid bounding box");
    }
    std::unordered_map<HexCellId, Accumulator> acc;
    const auto& values = raster.values();
    for (std::size_t row = 0; row < raster.rows(); ++row) {
        for (std::size_t col = 0; col < raster.cols(); ++col) {
            const double v = values[row * raster.cols() + col];
            if (raster.is_nodata(v)) continue;
            auto& slot = acc[grid.locate(raster.cell_center(row, col))];
            slot.sum += v;
            ++slot.count;
        }
    }
    std::vector<HexAggregate> out;
    out.reserve(acc.size());
    for (const auto& [cell, a] : acc) {
        const double value = stat == AggregateStat::mean
                                 ? a.sum / static_cast<double>(a.count)
                                 : a.sum;
        out.push_back(HexAggregate{cell, value, a.count});
    }
    std::sort(out.begin(), out.end(),
              [](const HexAggregate& a, const HexAggregate& b) {
                  return a.cell < b.cell;
              });
    return out;
}

std::vector<HexVectorAggregate> aggregate_points(
    const HexGrid& grid,
    const std::vector<std::pair<GeoPoint, std::vector<double>>>& points) {
    std::unordered_map<HexCellId, HexVectorAggregate> acc;
    std::size_t arity = points.empty() ? 0 : points.front().second.size();
    for (const auto& [p, attrs] : points) {
        if (attrs.size() != arity) {
            throw IngestError("aggregate_points: ragged attribute vectors (" +
                              std::to_string(attrs.size()) + " vs " +
                              std::to_string(arity) + ")");
        }
        const HexCellId cell = grid.locate(p);
        auto& slot = acc[cell];
        if (slot.sums.empty()) {
            slot.cell = cell;
            slot.sums.assign(arity, 0.0);
        }
        for (std::size_t i = 0; i < arity; ++i) slot.sums[i] += attrs[i];
        ++slot.contributing_count;
    }
    std::vector<HexVectorAggregate> out;
    out.reserve(acc.size());
    for (auto& [cell, agg] : acc) out.push_back(std::move(agg));
    std::sort(out.begin(), out.end(),
              [](const HexVectorAggregate& a, const HexVectorAggregate& b) {
                  return a.cell < b.cell;
              });
    return out;
}

void write_hex_csv(const std::vector<HexAggregate>& aggregates,
                   std::ostream& out) {
    std::string text = "q,r,value,count\n";
    char buf[64];
    for (const auto& a : aggregates) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%zu\n", a.cell.q,
                      a.cell.r, a.value, a.contributing_count);
        text += buf;
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_hex_geojson(const HexGrid& grid,
                       const std::vector<HexAggregate>& aggregates,
                       const std::string& value_name, std::ostream& out) {
    nlohmann::ordered_json features = nlohmann::ordered_json::array();
    for (const auto& a : aggregates) {
        const auto corners = grid.cell_polygon(a.cell);
        nlohmann::ordered_json ring = nlohmann::ordered_json::array();
        for (const auto& c : corners) ring.push_back({c.x, c.y});
        ring.push_back({corners[0].x, corners[0].y});
        nlohmann::ordered_json feature = {
            {"type", "Feature"},
            {"geometry",
             {{"type", "Polygon"},
              {"coordinates", nlohmann::ordered_json::array({ring})}}},
            {"properties",
             {{"q", a.cell.q},
              {"r", a.cell.r},
              {value_name, a.value},
              {"count", a.contributing_count}}}};
        features.push_back(std::move(feature));
    }
    // Coordinates are in the working planar CRS (meters), not WGS84; the
    // note travels with the file since GeoJSON has no CRS member anymore.
    nlohmann::ordered_json doc = {
        {"type", "FeatureCollection"},
        {"crs_note", "coordinates are planar meters in the input CRS"},
        {"features", std::move(features)}};
    out << doc.dump(1, '\t') << '\n';
}

} // namespace hexheat
