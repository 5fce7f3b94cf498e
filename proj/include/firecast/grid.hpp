#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "firecast/dates.hpp"

namespace firecast {

/// Miles per degree of latitude under the flat equirectangular approximation.
inline constexpr double kMilesPerDegreeLat = 69.0;

enum class IndicatorId {
    temperature,  // deg C
    dew_point,    // deg C
    wind_speed,   // knots/hour
    pm25,         // ug/m^3
    pm10,         // ug/m^3
    co,           // ppm
    no2,          // ppb
    elevation,    // dimensionless (static geo channel)
    ndvi,         // dimensionless (static geo channel)
    fire_label,   // dimensionless
};

const char* indicator_name(IndicatorId id);
const char* indicator_unit(IndicatorId id);
std::optional<IndicatorId> indicator_from_name(const std::string& name);

/// True for the seven measured dynamic indicators (not geo channels, not labels).
bool is_measured_indicator(IndicatorId id);

enum class Transform { none, log2p1, fourth_root };

const char* transform_name(Transform t);
std::optional<Transform> transform_from_name(const std::string& name);

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Raster geometry over a geographic bounding box. Row 0 sits at the
/// lat_max edge, column 0 at the lon_min edge. Immutable once built.
struct GridSpec {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;
    double cell_size_miles = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    static constexpr std::size_t kDefaultCellCap = std::size_t{1} << 24;

    /// Derives rows/cols from the box and cell size (flat approximation:
    /// 1 mile latitude = 1/69 degree, longitude scaled by cos(mid-latitude)).
    static GridSpec from_bounds(double lat_min, double lat_max, double lon_min, double lon_max,
                                double cell_size_miles, std::size_t cell_cap = kDefaultCellCap);

    /// Explicit geometry; validates the same invariants.
    static GridSpec with_dims(double lat_min, double lat_max, double lon_min, double lon_max,
                              double cell_size_miles, std::size_t rows, std::size_t cols,
                              std::size_t cell_cap = kDefaultCellCap);

    /// California at 1.4-mile cells: 32.5-42.0 N, -124.5 to -114.0 E.
    static GridSpec california(double cell_size_miles = 1.4);

    std::size_t cell_count() const { return rows * cols; }
    double lat_step() const { return (lat_max - lat_min) / static_cast<double>(rows); }
    double lon_step() const { return (lon_max - lon_min) / static_cast<double>(cols); }
    double mid_lat() const { return 0.5 * (lat_min + lat_max); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Maps a point to its cell, or nullopt when the point lies outside the box.
std::optional<CellIndex> cell_of(const GridSpec& spec, double lat, double lon);

/// Geographic midpoint of a cell. Throws std::out_of_range on bad indices.
LatLon cell_center(const GridSpec& spec, std::size_t row, std::size_t col);

/// Flat-approximation distance in miles, longitude scaled by cos of the
/// spec's mid-latitude so it is consistent with the grid geometry.
double distance_miles(const GridSpec& spec, const LatLon& a, const LatLon& b);

/// One indicator's gridded values for one day. values is rows*cols
/// row-major float32, all finite.
struct RasterFrame {
    GridSpec spec;
    IndicatorId indicator = IndicatorId::temperature;
    Date date;
    std::vector<float> values;
    Transform transform_applied = Transform::none;

    RasterFrame() = default;
    RasterFrame(GridSpec s, IndicatorId ind, Date d, std::vector<float> vals,
                Transform t = Transform::none);

    float at(std::size_t row, std::size_t col) const { return values[row * spec.cols + col]; }
    float& at(std::size_t row, std::size_t col) { return values[row * spec.cols + col]; }

    /// Re-checks the struct invariants (size match, all values finite).
    void validate() const;
};

/// Binary grid file: magic "WFGRID01", LE u32 rows, LE u32 cols, then
/// rows*cols LE float32 row-major. A JSON sidecar at path + ".json"
/// carries GridSpec, indicator, date and transform. Deterministic:
/// identical frames produce byte-identical files.
void write_grid(const RasterFrame& frame, const std::string& path);
RasterFrame read_grid(const std::string& path);

/// Parse failures name the offending field.
struct GridFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace firecast
