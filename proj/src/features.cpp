#include "hexheat/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "csv.hpp"
#include "hexheat/errors.hpp"

namespace hexheat {

const std::array<const char*, 11> FeatureTable::kVariableNames = {
    "ndvi",
    "ndwi",
    "total_population",
    "total_height",
    "total_dwelling_units",
    "total_residential",
    "total_commercial",
    "total_market_hawker",
    "total_multistorey_carpark",
    "total_precinct_pavilion",
    "total_miscellaneous",
};

std::array<double, 8> BuildingRecord::attribute_vector() const {
    return {static_cast<double>(height_storeys),
            static_cast<double>(dwelling_units),
            static_cast<double>(residential_flag),
            static_cast<double>(commercial_flag),
            static_cast<double>(market_hawker_flag),
            static_cast<double>(multistorey_carpark_flag),
            static_cast<double>(precinct_pavilion_flag),
            static_cast<double>(miscellaneous_flag)};
}

namespace {

constexpr std::array<const char*, 9> kRequiredBuildingColumns = {
    "address",      "height_storeys",      "dwelling_units",
    "residential",  "commercial",          "market_hawker",
    "multistorey_carpark", "precinct_pavilion", "miscellaneous",
};

double parse_double_field(const std::string& field, std::size_t line,
                          const std::string& column) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (field.empty() || end != begin + field.size() || !std::isfinite(v)) {
        throw IngestError("line " + std::to_string(line) + ", column '" +
                          column + "': expected a number, got '" + field +
                          "'");
    }
    return v;
}

int parse_count_field(const std::string& field, std::size_t line,
                      const std::string& column) {
    const double v = parse_double_field(field, line, column);
    const int n = static_cast<int>(v);
    if (v != static_cast<double>(n) || n < 0) {
        throw IngestError("line " + std::to_string(line) + ", column '" +
                          column + "': expected a non-negative integer, got '" +
                          field + "'");
    }
    return n;
}

int parse_flag_field(const std::string& field, std::size_t line,
                     const std::string& column) {
    const int v = parse_count_field(field, line, column);
    if (v != 0 && v != 1) {
        throw IngestError("line " + std::to_string(line) + ", column '" +
                          column + "': flag must be 0 or 1, got '" + field +
                          "'");
    }
    return v;
}

} // namespace

std::vector<BuildingRecord> load_buildings(std::istream& in) {
    std::string line;
    if (!csv::read_line(in, line)) {
        throw IngestError("building CSV: missing header row");
    }
    const std::vector<std::string> header = csv::split_line(line, 1);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : kRequiredBuildingColumns) {
        if (!col.count(required)) {
            throw IngestError(std::string("building CSV: missing required "
                                          "column '") + required + "'");
        }
    }
    const bool has_xy = col.count("x") && col.count("y");

    std::vector<BuildingRecord> records;
    std::size_t line_no = 1;
    while (csv::read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = csv::split_line(line, line_no);
        if (f.size() != header.size()) {
            throw IngestError("line " + std::to_string(line_no) + ": " +
                              std::to_string(f.size()) + " fields, header has " +
                              std::to_string(header.size()));
        }
        BuildingRecord r;
        r.address_key = f[col["address"]];
        r.height_storeys =
            parse_count_field(f[col["height_storeys"]], line_no,
                              "height_storeys");
        r.dwelling_units =
            parse_count_field(f[col["dwelling_units"]], line_no,
                              "dwelling_units");
        r.residential_flag =
            parse_flag_field(f[col["residential"]], line_no, "residential");
        r.commercial_flag =
            parse_flag_field(f[col["commercial"]], line_no, "commercial");
        r.market_hawker_flag =
            parse_flag_field(f[col["market_hawker"]], line_no,
                             "market_hawker");
        r.multistorey_carpark_flag =
            parse_flag_field(f[col["multistorey_carpark"]], line_no,
                             "multistorey_carpark");
        r.precinct_pavilion_flag =
            parse_flag_field(f[col["precinct_pavilion"]], line_no,
                             "precinct_pavilion");
        r.miscellaneous_flag =
            parse_flag_field(f[col["miscellaneous"]], line_no,
                             "miscellaneous");
        if (has_xy && !f[col["x"]].empty() && !f[col["y"]].empty()) {
            r.location = GeoPoint{
                parse_double_field(f[col["x"]], line_no, "x"),
                parse_double_field(f[col["y"]], line_no, "y")};
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<BuildingRecord> load_buildings_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open building CSV: " + path);
    }
    try {
        return load_buildings(in);
    } catch (const IngestError& e) {
        throw IngestError(path + ": " + e.what());
    }
}

void write_buildings_csv(const std::vector<BuildingRecord>& records,
                         std::ostream& out) {
    std::string text =
        "address,x,y,height_storeys,dwelling_units,residential,commercial,"
        "market_hawker,multistorey_carpark,precinct_pavilion,miscellaneous\n";
    char buf[96];
    for (const auto& r : records) {
        text += csv::escape(r.address_key);
        if (r.location) {
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", r.location->x,
                          r.location->y);
            text += buf;
        } else {
            text += ",,";
        }
        std::snprintf(buf, sizeof(buf), ",%d,%d,%d,%d,%d,%d,%d,%d\n",
                      r.height_storeys, r.dwelling_units, r.residential_flag,
                      r.commercial_flag, r.market_hawker_flag,
                      r.multistorey_carpark_flag, r.precinct_pavilion_flag,
                      r.miscellaneous_flag);
        text += buf;
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

namespace {

template <typename Agg>
void check_grid_consistency(const HexGrid& grid, const std::vector<Agg>& aggs,
                            const char* what) {
    const BoundingBox& b = grid.bbox();
    const double slack = grid.diameter();
    for (const auto& a : aggs) {
        const GeoPoint c = grid.cell_center(a.cell);
        if (c.x < b.min_x - slack || c.x > b.max_x + slack ||
            c.y < b.min_y - slack || c.y > b.max_y + slack) {
            throw NumericError(std::string("assemble_feature_table: ") + what +
                               " aggregate cell (" + std::to_string(a.cell.q) +
                               "," + std::to_string(a.cell.r) +
                               ") lies outside the grid extent; aggregates "
                               "are from a mismatched grid");
        }
    }
}

} // namespace

FeatureTable assemble_feature_table(
    const HexGrid& grid, const std::vector<HexAggregate>& lst,
    const std::vector<HexAggregate>& ndvi,
    const std::vector<HexAggregate>& ndwi,
    const std::vector<HexAggregate>& population,
    const std::vector<HexVectorAggregate>& building_sums) {
    check_grid_consistency(grid, lst, "lst");
    check_grid_consistency(grid, ndvi, "ndvi");
    check_grid_consistency(grid, ndwi, "ndwi");
    check_grid_consistency(grid, population, "population");
    check_grid_consistency(grid, building_sums, "building");

    const auto index = [](const std::vector<HexAggregate>& aggs) {
        std::unordered_map<HexCellId, double> m;
        m.reserve(aggs.size());
        for (const auto& a : aggs) m.emplace(a.cell, a.value);
        return m;
    };
    const auto ndvi_by_cell = index(ndvi);
    const auto ndwi_by_cell = index(ndwi);
    const auto pop_by_cell = index(population);
    std::unordered_map<HexCellId, const HexVectorAggregate*> buildings_by_cell;
    for (const auto& b : building_sums) {
        if (b.sums.size() != 8) {
            throw NumericError("assemble_feature_table: building sums must "
                               "have 8 attributes, got " +
                               std::to_string(b.sums.size()));
        }
        buildings_by_cell.emplace(b.cell, &b);
    }

    FeatureTable table;
    table.rows.reserve(lst.size());
    for (const auto& a : lst) { // lst aggregates arrive sorted by (q, r)
        const auto vi = ndvi_by_cell.find(a.cell);
        const auto wi = ndwi_by_cell.find(a.cell);
        if (vi == ndvi_by_cell.end() || wi == ndwi_by_cell.end()) {
            continue; // raster coverage gap
        }
        FeatureRow row;
        row.cell = a.cell;
        row.lst = a.value;
        row.ndvi = vi->second;
        row.ndwi = wi->second;
        const auto pi = pop_by_cell.find(a.cell);
        row.total_population = pi == pop_by_cell.end() ? 0.0 : pi->second;
        if (const auto bi = buildings_by_cell.find(a.cell);
            bi != buildings_by_cell.end()) {
            const auto& s = bi->second->sums;
            row.total_height = s[0];
            row.total_dwelling_units = s[1];
            row.total_residential = s[2];
            row.total_commercial = s[3];
            row.total_market_hawker = s[4];
            row.total_multistorey_carpark = s[5];
            row.total_precinct_pavilion = s[6];
            row.total_miscellaneous = s[7];
        }
        table.rows.push_back(row);
    }
    return table;
}

namespace {

const char* kFeatureHeader =
    "q,r,lst,ndvi,ndwi,total_population,total_height,total_dwelling_units,"
    "total_residential,total_commercial,total_market_hawker,"
    "total_multistorey_carpark,total_precinct_pavilion,total_miscellaneous";

} // namespace

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
    std::string text = kFeatureHeader;
    text += "\n";
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        text += buf;
    };
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d", r.cell.q, r.cell.r);
        text += buf;
        num(r.lst);
        num(r.ndvi);
        num(r.ndwi);
        num(r.total_population);
        num(r.total_height);
        num(r.total_dwelling_units);
        num(r.total_residential);
        num(r.total_commercial);
        num(r.total_market_hawker);
        num(r.total_multistorey_carpark);
        num(r.total_precinct_pavilion);
        num(r.total_miscellaneous);
        text += "\n";
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

FeatureTable read_feature_csv(std::istream& in) {
    std::string line;
    if (!csv::read_line(in, line) || line != kFeatureHeader) {
        throw IngestError("feature CSV: unexpected header");
    }
    FeatureTable table;
    std::size_t line_no = 1;
    while (csv::read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = csv::split_line(line, line_no);
        if (f.size() != 14) {
            throw IngestError("feature CSV line " + std::to_string(line_no) +
                              ": expected 14 fields, got " +
                              std::to_string(f.size()));
        }
        FeatureRow r;
        r.cell.q = static_cast<std::int32_t>(
            parse_double_field(f[0], line_no, "q"));
        r.cell.r = static_cast<std::int32_t>(
            parse_double_field(f[1], line_no, "r"));
        double* fields[] = {&r.lst,
                            &r.ndvi,
                            &r.ndwi,
                            &r.total_population,
                            &r.total_height,
                            &r.total_dwelling_units,
                            &r.total_residential,
                            &r.total_commercial,
                            &r.total_market_hawker,
                            &r.total_multistorey_carpark,
                            &r.total_precinct_pavilion,
                            &r.total_miscellaneous};
        for (std::size_t i = 0; i < 12; ++i) {
            *fields[i] = parse_double_field(f[i + 2], line_no,
                                            i < 1 ? "lst" : "value");
        }
        table.rows.push_back(r);
    }
    return table;
}

FeatureTable read_feature_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open feature CSV: " + path);
    }
    try {
        return read_feature_csv(in);
    } catch (const IngestError& e) {
        throw IngestError(path + ": " + e.what());
    }
}

DesignMatrix design_from_features(const FeatureTable& table) {
    std::vector<std::string> names(FeatureTable::kVariableNames.begin(),
                                   FeatureTable::kVariableNames.end());
    std::vector<std::vector<double>> columns(names.size());
    std::vector<double> response;
    response.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        response.push_back(r.lst);
        const double values[] = {r.ndvi,
                                 r.ndwi,
                                 r.total_population,
                                 r.total_height,
                                 r.total_dwelling_units,
                                 r.total_residential,
                                 r.total_commercial,
                                 r.total_market_hawker,
                                 r.total_multistorey_carpark,
                                 r.total_precinct_pavilion,
                                 r.total_miscellaneous};
        for (std::size_t i = 0; i < columns.size(); ++i) {
            columns[i].push_back(values[i]);
        }
    }
    return DesignMatrix::build(std::move(names), columns,
                               std::move(response));
}

FeatureTable select_rows(const FeatureTable& table,
                         const std::vector<std::size_t>& indices) {
    FeatureTable out;
    out.rows.reserve(indices.size());
    for (std::size_t i : indices) {
        out.rows.push_back(table.rows.at(i));
    }
    return out;
}

} // namespace hexheat
