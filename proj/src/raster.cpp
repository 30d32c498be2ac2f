#include "hexheat/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hexheat/errors.hpp"

namespace hexheat {

RasterGrid::RasterGrid(std::size_t rows, std::size_t cols, double origin_x,
                       double origin_y, double cell_size, double nodata,
                       std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      origin_x_(origin_x),
      origin_y_(origin_y),
      cell_size_(cell_size),
      nodata_(nodata),
      values_(std::move(values)) {
    if (rows_ == 0 || cols_ == 0) {
        throw NumericError("RasterGrid: rows and cols must be positive");
    }
    if (!(cell_size_ > 0.0)) {
        throw NumericError("RasterGrid: cell_size must be > 0");
    }
    if (!std::isfinite(nodata_)) {
        throw NumericError("RasterGrid: nodata sentinel must be finite");
    }
    if (values_.size() != rows_ * cols_) {
        throw NumericError("RasterGrid: values length " +
                           std::to_string(values_.size()) +
                           " != rows*cols = " + std::to_string(rows_ * cols_));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw NumericError("RasterGrid: non-finite cell value");
        }
    }
}

void RasterGrid::check_bounds(std::size_t row, std::size_t col) const {
    if (row >= rows_ || col >= cols_) {
        throw std::out_of_range("RasterGrid: cell (" + std::to_string(row) +
                                "," + std::to_string(col) +
                                ") outside " + std::to_string(rows_) + "x" +
                                std::to_string(cols_) + " grid");
    }
}

GeoPoint RasterGrid::cell_center(std::size_t row, std::size_t col) const {
    check_bounds(row, col);
    return GeoPoint{
        origin_x_ + (static_cast<double>(col) + 0.5) * cell_size_,
        origin_y_ +
            (static_cast<double>(rows_ - row) - 0.5) * cell_size_};
}

bool RasterGrid::same_geometry(const RasterGrid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           origin_x_ == other.origin_x_ && origin_y_ == other.origin_y_ &&
           cell_size_ == other.cell_size_;
}

RasterGrid RasterGrid::with_values(std::vector<double> values) const {
    return RasterGrid(rows_, cols_, origin_x_, origin_y_, cell_size_, nodata_,
                      std::move(values));
}

GridStats grid_stats(const RasterGrid& grid) {
    GridStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double v : grid.values()) {
        if (grid.is_nodata(v)) continue;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
        ++s.valid_count;
    }
    if (s.valid_count == 0) {
        throw NumericError("grid_stats: every cell is nodata");
    }
    s.mean = sum / static_cast<double>(s.valid_count);
    return s;
}

namespace {

// Whitespace-token scanner that tracks line numbers for error reporting.
class TokenScanner {
public:
    explicit TokenScanner(const std::string& text) : text_(text) {}

    // Next whitespace-delimited token, or nullopt at end of input.
    std::optional<std::string> next() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ >= text_.size()) return std::nullopt;
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::size_t line() const { return line_; }

    void rewind(std::size_t token_length) { pos_ -= token_length; }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return s;
}

double parse_number(const std::string& token, std::size_t line,
                    const char* what) {
    const char* begin = token.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + token.size()) {
        throw IngestError("line " + std::to_string(line) +
                          ": non-numeric token '" + token + "' for " + what);
    }
    return v;
}

long parse_count(const std::string& token, std::size_t line,
                 const char* what) {
    double v = parse_number(token, line, what);
    long n = static_cast<long>(v);
    if (v != static_cast<double>(n) || n <= 0) {
        throw IngestError("line " + std::to_string(line) + ": " + what +
                          " must be a positive integer, got '" + token + "'");
    }
    return n;
}

} // namespace

RasterGrid read_ascii_grid(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    TokenScanner scan(text);

    std::optional<long> ncols, nrows;
    std::optional<double> xll, yll, cellsize;
    double nodata = -9999.0;

    // Header: keyword/value pairs until the first non-keyword token.
    while (true) {
        auto tok = scan.next();
        if (!tok) {
            throw IngestError("line " + std::to_string(scan.line()) +
                              ": missing raster data after header");
        }
        const std::string key = lower(*tok);
        const std::size_t key_line = scan.line();
        bool known = key == "ncols" || key == "nrows" || key == "xllcorner" ||
                     key == "yllcorner" || key == "cellsize" ||
                     key == "nodata_value";
        if (!known) {
            scan.rewind(tok->size());
            break;
        }
        auto val = scan.next();
        if (!val) {
            throw IngestError("line " + std::to_string(key_line) +
                              ": header keyword '" + *tok + "' has no value");
        }
        if (key == "ncols") {
            ncols = parse_count(*val, key_line, "ncols");
        } else if (key == "nrows") {
            nrows = parse_count(*val, key_line, "nrows");
        } else if (key == "xllcorner") {
            xll = parse_number(*val, key_line, "xllcorner");
        } else if (key == "yllcorner") {
            yll = parse_number(*val, key_line, "yllcorner");
        } else if (key == "cellsize") {
            cellsize = parse_number(*val, key_line, "cellsize");
            if (!(*cellsize > 0.0)) {
                throw IngestError("line " + std::to_string(key_line) +
                                  ": cellsize must be > 0");
            }
        } else {
            nodata = parse_number(*val, key_line, "NODATA_value");
            if (!std::isfinite(nodata)) {
                throw IngestError("line " + std::to_string(key_line) +
                                  ": NODATA_value must be finite");
            }
        }
    }

    for (const auto& [present, name] :
         {std::pair{ncols.has_value(), "ncols"},
          std::pair{nrows.has_value(), "nrows"},
          std::pair{xll.has_value(), "xllcorner"},
          std::pair{yll.has_value(), "yllcorner"},
          std::pair{cellsize.has_value(), "cellsize"}}) {
        if (!present) {
            throw IngestError(std::string("malformed header: missing ") +
                              name);
        }
    }

    const std::size_t expected =
        static_cast<std::size_t>(*nrows) * static_cast<std::size_t>(*ncols);
    std::vector<double> values;
    values.reserve(expected);
    while (auto tok = scan.next()) {
        if (values.size() == expected) {
            throw IngestError("line " + std::to_string(scan.line()) +
                              ": trailing token '" + *tok + "' after " +
                              std::to_string(expected) + " values");
        }
        double v = parse_number(*tok, scan.line(), "cell value");
        if (!std::isfinite(v)) {
            throw IngestError("line " + std::to_string(scan.line()) +
                              ": non-finite cell value '" + *tok + "'");
        }
        values.push_back(v);
    }
    if (values.size() != expected) {
        throw IngestError("line " + std::to_string(scan.line()) +
                          ": expected " + std::to_string(expected) +
                          " values, found " + std::to_string(values.size()));
    }

    return RasterGrid(static_cast<std::size_t>(*nrows),
                      static_cast<std::size_t>(*ncols), *xll, *yll, *cellsize,
                      nodata, std::move(values));
}

RasterGrid read_ascii_grid_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open raster file: " + path);
    }
    try {
        return read_ascii_grid(in);
    } catch (const IngestError& e) {
        throw IngestError(path + ": " + e.what());
    }
}

namespace {

void format_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace

void write_ascii_grid(const RasterGrid& grid, std::ostream& out) {
    std::string text;
    text.reserve(grid.cell_count() * 20 + 128);
    text += "ncols " + std::to_string(grid.cols()) + "\n";
    text += "nrows " + std::to_string(grid.rows()) + "\n";
    text += "xllcorner ";
    format_number(text, grid.origin_x());
    text += "\nyllcorner ";
    format_number(text, grid.origin_y());
    text += "\ncellsize ";
    format_number(text, grid.cell_size());
    text += "\nNODATA_value ";
    format_number(text, grid.nodata());
    text += "\n";
    const auto& v = grid.values();
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            if (c != 0) text += ' ';
            format_number(text, v[r * grid.cols() + c]);
        }
        text += '\n';
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_ascii_grid_file(const RasterGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestError("cannot open output raster file: " + path);
    }
    write_ascii_grid(grid, out);
    if (!out) {
        throw IngestError("failed writing raster file: " + path);
    }
}

} // namespace hexheat
