#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "hexheat/raster.hpp"

namespace hexheat {

/// Axial address of a hexagon.
struct HexCellId {
    std::int32_t q = 0;
    std::int32_t r = 0;

    friend bool operator==(const HexCellId&, const HexCellId&) = default;
    friend auto operator<=>(const HexCellId&, const HexCellId&) = default;
};

/// The six shared-edge neighbor offsets of any axial cell.
inline constexpr std::array<HexCellId, 6> kHexNeighborOffsets = {
    HexCellId{+1, 0}, HexCellId{-1, 0}, HexCellId{0, +1},
    HexCellId{0, -1}, HexCellId{+1, -1}, HexCellId{-1, +1}};

struct BoundingBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
};

/// Regular pointy-top hexagonal tessellation. `diameter` is the flat-to-flat
/// width of a cell; the circumradius is diameter / sqrt(3). Cell (0,0) is
/// centered on the lower-left corner of the bounding box, so identical
/// inputs always produce identical cell ids. The tessellation itself covers
/// the whole plane; the bbox records the analysis extent.
class HexGrid {
public:
    HexGrid(BoundingBox bbox, double diameter);

    double diameter() const { return diameter_; }
    double circumradius() const { return circumradius_; }
    const BoundingBox& bbox() const { return bbox_; }
    GeoPoint origin() const { return origin_; }

    /// Area of one cell, (sqrt(3)/2) * diameter^2.
    double cell_area() const;

    /// The unique cell containing p, via fractional axial coordinates and
    /// cube rounding. Boundary points resolve deterministically.
    HexCellId locate(GeoPoint p) const;

    /// Center of a cell in planar coordinates.
    GeoPoint cell_center(HexCellId cell) const;

    /// The six corner points of a cell, counter-clockwise, starting at the
    /// 30-degree vertex. Ring is not closed.
    std::array<GeoPoint, 6> cell_polygon(HexCellId cell) const;

private:
    BoundingBox bbox_;
    double diameter_;
    double circumradius_;
    GeoPoint origin_;
};

/// Per-hexagon scalar aggregate of raster pixels.
struct HexAggregate {
    HexCellId cell;
    double value = 0.0;
    std::size_t contributing_count = 0;
};

/// Per-hexagon component-wise sums of point attribute vectors.
struct HexVectorAggregate {
    HexCellId cell;
    std::vector<double> sums;
    std::size_t contributing_count = 0;
};

enum class AggregateStat { mean, sum };

/// Assign every non-nodata pixel to the hexagon containing its center and
/// reduce per hexagon. Hexagons with no contributing pixels are omitted;
/// output is sorted by (q, r). Throws NumericError when the raster extent
/// and grid bbox are disjoint.
std::vector<HexAggregate> aggregate_raster(const HexGrid& grid,
                                           const RasterGrid& raster,
                                           AggregateStat stat);

/// Component-wise sums of attribute vectors per hexagon. All attribute
/// vectors must share one arity; hexagons with no points are omitted.
std::vector<HexVectorAggregate> aggregate_points(
    const HexGrid& grid,
    const std::vector<std::pair<GeoPoint, std::vector<double>>>& points);

/// CSV export: header "q,r,value,count" then one row per aggregate.
void write_hex_csv(const std::vector<HexAggregate>& aggregates,
                   std::ostream& out);

/// GeoJSON FeatureCollection of hexagon polygons in the working planar CRS,
/// one feature per aggregate with q, r, value and count properties.
void write_hex_geojson(const HexGrid& grid,
                       const std::vector<HexAggregate>& aggregates,
                       const std::string& value_name, std::ostream& out);

} // namespace hexheat

template <>
struct std::hash<hexheat::HexCellId> {
    std::size_t operator()(const hexheat::HexCellId& c) const noexcept {
        const std::uint64_t packed =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.q))
             << 32) |
            static_cast<std::uint32_t>(c.r);
        return std::hash<std::uint64_t>{}(packed);
    }
};
