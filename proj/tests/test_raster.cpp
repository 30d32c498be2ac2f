#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hexheat/errors.hpp"
#include "hexheat/raster.hpp"
#include "hexheat/rng.hpp"

using namespace hexheat;

namespace {

RasterGrid parse(const std::string& text) {
    std::istringstream in(text);
    return read_ascii_grid(in);
}

RasterGrid random_grid(Rng& rng) {
    const std::size_t rows = 1 + rng.integer(8);
    const std::size_t cols = 1 + rng.integer(8);
    std::vector<double> values(rows * cols);
    for (auto& v : values) {
        v = rng.uniform() < 0.15 ? -9999.0
                                 : rng.uniform(-1e6, 1e6) * rng.uniform();
    }
    return RasterGrid(rows, cols, rng.uniform(-1e5, 1e5),
                      rng.uniform(-1e5, 1e5), rng.uniform(0.5, 120.0),
                      -9999.0, std::move(values));
}

bool identical(const RasterGrid& a, const RasterGrid& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           a.origin_x() == b.origin_x() && a.origin_y() == b.origin_y() &&
           a.cell_size() == b.cell_size() && a.nodata() == b.nodata() &&
           a.values() == b.values();
}

} // namespace

TEST_CASE("read_ascii_grid parses a simple grid") {
    const RasterGrid g = parse(
        "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
        "1 2\n3 4\n");
    CHECK(g.rows() == 2);
    CHECK(g.cols() == 2);
    CHECK(g.values() == std::vector<double>{1, 2, 3, 4});
    CHECK(g.nodata() == -9999.0);
}

TEST_CASE("read_ascii_grid accepts case-insensitive, reordered header") {
    const RasterGrid g = parse(
        "NROWS 1\nNCOLS 2\nXLLCORNER 10\nYLLCORNER 20\nCELLSIZE 5\n"
        "NODATA_VALUE -1\n7 -1\n");
    CHECK(g.origin_x() == 10.0);
    CHECK(g.nodata() == -1.0);
    CHECK(g.is_nodata(g.at(0, 1)));
}

TEST_CASE("read_ascii_grid reports value-count mismatch with line number") {
    CHECK_THROWS_WITH_AS(
        parse("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
              "1 2 3\n"),
        doctest::Contains("expected 4 values, found 3"), IngestError);
    CHECK_THROWS_WITH_AS(
        parse("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
              "1 2\n"),
        doctest::Contains("trailing token"), IngestError);
}

TEST_CASE("read_ascii_grid reports non-numeric tokens with line number") {
    CHECK_THROWS_WITH_AS(
        parse("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
              "1 abc\n"),
        doctest::Contains("line 6"), IngestError);
    CHECK_THROWS_AS(
        parse("ncols x\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\n1\n"),
        IngestError);
    CHECK_THROWS_WITH_AS(
        parse("nrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\n1\n"),
        doctest::Contains("missing ncols"), IngestError);
}

TEST_CASE("write_ascii_grid emits one data line per row and the sentinel") {
    const RasterGrid g(1, 1, 0, 0, 30, -9999, {5});
    std::ostringstream out;
    write_ascii_grid(g, out);
    CHECK(out.str() ==
          "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\n"
          "NODATA_value -9999\n5\n");

    const RasterGrid h(1, 2, 0, 0, 30, -9999, {1, -9999});
    std::ostringstream out2;
    write_ascii_grid(h, out2);
    CHECK(out2.str().find("1 -9999\n") != std::string::npos);
}

TEST_CASE("round-trip read(write(g)) reproduces g bit-for-bit") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const RasterGrid g = random_grid(rng);
        std::ostringstream out;
        write_ascii_grid(g, out);
        std::istringstream in(out.str());
        const RasterGrid back = read_ascii_grid(in);
        REQUIRE(identical(g, back));
    }
}

TEST_CASE("cell_center matches the closed form") {
    const RasterGrid g1(1, 1, 0, 0, 30, -9999, {1});
    CHECK(g1.cell_center(0, 0).x == doctest::Approx(15.0));
    CHECK(g1.cell_center(0, 0).y == doctest::Approx(15.0));

    // 2x2 grid, cell (0,1): x = 0 + 1.5*100, y = 0 + (2-0-0.5)*100
    const RasterGrid g2(2, 2, 0, 0, 100, -9999, {1, 2, 3, 4});
    CHECK(g2.cell_center(0, 1).x == doctest::Approx(150.0));
    CHECK(g2.cell_center(0, 1).y == doctest::Approx(150.0));

    CHECK_THROWS_AS(g2.cell_center(5, 0), std::out_of_range);
}

TEST_CASE("corner cell centers lie strictly inside the bounding box") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const RasterGrid g = random_grid(rng);
        const double x1 = g.origin_x() +
                          static_cast<double>(g.cols()) * g.cell_size();
        const double y1 = g.origin_y() +
                          static_cast<double>(g.rows()) * g.cell_size();
        for (auto [r, c] : {std::pair<std::size_t, std::size_t>{0, 0},
                            {0, g.cols() - 1},
                            {g.rows() - 1, 0},
                            {g.rows() - 1, g.cols() - 1}}) {
            const GeoPoint p = g.cell_center(r, c);
            CHECK(p.x > g.origin_x());
            CHECK(p.x < x1);
            CHECK(p.y > g.origin_y());
            CHECK(p.y < y1);
        }
    }
}

TEST_CASE("grid_stats skips nodata and satisfies its identities") {
    const RasterGrid g(2, 2, 0, 0, 30, -9999, {1, 2, 3, -9999});
    const GridStats s = grid_stats(g);
    CHECK(s.min == 1.0);
    CHECK(s.max == 3.0);
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.valid_count == 3);

    const RasterGrid constant(2, 2, 0, 0, 30, -9999, {7, 7, 7, 7});
    const GridStats cs = grid_stats(constant);
    CHECK(cs.min == 7.0);
    CHECK(cs.max == 7.0);
    CHECK(cs.mean == 7.0);

    const RasterGrid empty(1, 2, 0, 0, 30, -9999, {-9999, -9999});
    CHECK_THROWS_AS(grid_stats(empty), NumericError);
}

TEST_CASE("grid_stats mean bounded by min/max; counts partition the grid") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const RasterGrid g = random_grid(rng);
        std::size_t nodata_count = 0;
        for (double v : g.values()) {
            if (g.is_nodata(v)) ++nodata_count;
        }
        if (nodata_count == g.cell_count()) continue;
        const GridStats s = grid_stats(g);
        CHECK(s.mean >= s.min);
        CHECK(s.mean <= s.max);
        CHECK(s.valid_count + nodata_count == g.rows() * g.cols());
    }
}

TEST_CASE("constructor enforces invariants") {
    CHECK_THROWS_AS(RasterGrid(1, 2, 0, 0, 30, -9999, {1}), NumericError);
    CHECK_THROWS_AS(RasterGrid(1, 1, 0, 0, 0.0, -9999, {1}), NumericError);
    CHECK_THROWS_AS(RasterGrid(1, 1, 0, 0, 30, -9999,
                               {std::numeric_limits<double>::infinity()}),
                    NumericError);
}
