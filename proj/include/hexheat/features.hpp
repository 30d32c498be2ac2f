#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hexheat/hexgrid.hpp"
#include "hexheat/models.hpp"

namespace hexheat {

/// One building record from the residential building CSV. Flags are binary
/// amenity indicators; `location` is absent until geocoded.
struct BuildingRecord {
    std::string address_key;
    std::optional<GeoPoint> location;
    int height_storeys = 0;
    int dwelling_units = 0;
    int residential_flag = 0;
    int commercial_flag = 0;
    int market_hawker_flag = 0;
    int multistorey_carpark_flag = 0;
    int precinct_pavilion_flag = 0;
    int miscellaneous_flag = 0;

    /// The 8 summed attributes in feature-column order: height, dwelling
    /// units, then the six flags.
    std::array<double, 8> attribute_vector() const;
};

/// Column names of the building CSV. `x` and `y` are optional (records
/// without them are geocoded); all other columns are required.
std::vector<BuildingRecord> load_buildings(std::istream& in);
std::vector<BuildingRecord> load_buildings_file(const std::string& path);

/// Canonical CSV form of building records (the geocode stage output).
void write_buildings_csv(const std::vector<BuildingRecord>& records,
                         std::ostream& out);

/// One hexagon observation: LST plus the independent variables of the
/// regression roster.
struct FeatureRow {
    HexCellId cell;
    double lst = 0.0;
    double ndvi = 0.0;
    double ndwi = 0.0;
    double total_population = 0.0;
    double total_height = 0.0;
    double total_dwelling_units = 0.0;
    double total_residential = 0.0;
    double total_commercial = 0.0;
    double total_market_hawker = 0.0;
    double total_multistorey_carpark = 0.0;
    double total_precinct_pavilion = 0.0;
    double total_miscellaneous = 0.0;
};

struct FeatureTable {
    std::vector<FeatureRow> rows; // sorted by (q, r)

    /// Independent-variable names, in CSV column order.
    static const std::array<const char*, 11> kVariableNames;
};

/// Join the per-hex aggregates into the observation table. Rows are emitted
/// only for hexagons with an LST value; hexagons missing NDVI or NDWI
/// coverage are excluded; missing population and building sums are zero.
/// Aggregate cells far outside the grid bbox raise NumericError (aggregates
/// from a mismatched grid).
FeatureTable assemble_feature_table(
    const HexGrid& grid, const std::vector<HexAggregate>& lst,
    const std::vector<HexAggregate>& ndvi,
    const std::vector<HexAggregate>& ndwi,
    const std::vector<HexAggregate>& population,
    const std::vector<HexVectorAggregate>& building_sums);

/// CSV with the fixed column order
/// q,r,lst,ndvi,ndwi,total_population,...,total_miscellaneous.
void write_feature_csv(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_csv(std::istream& in);
FeatureTable read_feature_csv_file(const std::string& path);

/// Regression design over the table: response LST, the 11 independent
/// variables as regressors.
DesignMatrix design_from_features(const FeatureTable& table);

/// Subset of rows by index, preserving order (used after isolated cells are
/// dropped from the weights).
FeatureTable select_rows(const FeatureTable& table,
                         const std::vector<std::size_t>& indices);

} // namespace hexheat
