#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hexheat {

/// A point in the working planar CRS, meters.
struct GeoPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Georeferenced single-band raster.
///
/// Values are stored row-major with row 0 as the northernmost row, so
/// (row 0, col 0) is the northwest cell. (origin_x, origin_y) is the
/// lower-left corner of the grid extent. Cells equal to the `nodata`
/// sentinel are missing and excluded from statistics and aggregation.
/// Immutable after construction; safe to share across threads.
class RasterGrid {
public:
    RasterGrid(std::size_t rows, std::size_t cols, double origin_x,
               double origin_y, double cell_size, double nodata,
               std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t cell_count() const { return values_.size(); }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    double cell_size() const { return cell_size_; }
    double nodata() const { return nodata_; }
    const std::vector<double>& values() const { return values_; }

    double at(std::size_t row, std::size_t col) const {
        check_bounds(row, col);
        return values_[row * cols_ + col];
    }

    bool is_nodata(double v) const { return v == nodata_; }

    /// Center of the (row, col) cell in planar coordinates.
    GeoPoint cell_center(std::size_t row, std::size_t col) const;

    /// True when the two grids cover the same cells: equal dimensions,
    /// origin and cell size.
    bool same_geometry(const RasterGrid& other) const;

    /// A new grid with identical georeferencing but different values.
    RasterGrid with_values(std::vector<double> values) const;

private:
    void check_bounds(std::size_t row, std::size_t col) const;

    std::size_t rows_;
    std::size_t cols_;
    double origin_x_;
    double origin_y_;
    double cell_size_;
    double nodata_;
    std::vector<double> values_;
};

struct GridStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::size_t valid_count = 0;
};

/// Statistics over non-nodata cells. Throws NumericError if every cell
/// is nodata.
GridStats grid_stats(const RasterGrid& grid);

/// Parse an ESRI ASCII Grid. Header keywords (ncols, nrows, xllcorner,
/// yllcorner, cellsize, NODATA_value) are case-insensitive; NODATA_value
/// is optional and defaults to -9999. The first data row in the stream is
/// the northernmost row. Malformed headers, value-count mismatches and
/// non-numeric tokens raise IngestError with the offending line number.
RasterGrid read_ascii_grid(std::istream& in);
RasterGrid read_ascii_grid_file(const std::string& path);

/// Write an ESRI ASCII Grid. Values are printed with 17 significant
/// digits so that read_ascii_grid(write_ascii_grid(g)) reproduces g
/// bit-for-bit.
void write_ascii_grid(const RasterGrid& grid, std::ostream& out);
void write_ascii_grid_file(const RasterGrid& grid, const std::string& path);

} // namespace hexheat
