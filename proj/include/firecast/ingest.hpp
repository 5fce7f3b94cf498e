#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "firecast/dates.hpp"
#include "firecast/grid.hpp"

namespace firecast {

/// One sensor measurement. Values are raw physical units (no transform).
struct SensorReading {
    std::string site_id;
    double lat = 0.0;
    double lon = 0.0;
    Date date;
    IndicatorId indicator = IndicatorId::temperature;
    double value = 0.0;
};

/// One satellite fire detection with its radiative power.
struct FireRecord {
    double lat = 0.0;
    double lon = 0.0;
    Date date;
    double frp = 0.0;
};

/// Structural CSV failure (bad header, unparseable date, broken row).
/// Carries the 1-based line number.
struct CsvError : std::runtime_error {
    CsvError(std::size_t line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
    std::size_t line;
};

/// Row-level accounting for one parse pass. Rejected rows are counted and
/// the first few are described; structural errors throw CsvError instead.
struct ParseReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<std::string> notes;  // capped; one entry per rejected row kind

    void note(std::size_t line_no, const std::string& why);
};

/// Parses `date,site_id,latitude,longitude,parameter,value,unit` rows.
/// Unknown parameters and non-finite values are skipped and counted in the
/// report; a missing/wrong header or an unparseable date is fatal.
std::vector<SensorReading> parse_readings(std::istream& in, ParseReport& report);
std::vector<SensorReading> parse_readings_file(const std::string& path, ParseReport& report);

/// Parses `date,latitude,longitude,frp` rows. Negative FRP rows are
/// skipped and counted; header/date problems are fatal.
std::vector<FireRecord> parse_fires(std::istream& in, ParseReport& report);
std::vector<FireRecord> parse_fires_file(const std::string& path, ParseReport& report);

/// One site's aggregate for a day.
struct SiteDailyValue {
    std::string site_id;
    double lat = 0.0;
    double lon = 0.0;
    double value = 0.0;  // arithmetic mean of the day's readings
};

/// Per-site arithmetic mean of all readings matching (indicator, date).
/// Sites with no readings that day are simply absent. First-seen order.
std::vector<SiteDailyValue> daily_aggregate(const std::vector<SensorReading>& readings,
                                            IndicatorId indicator, const Date& date);

/// A point sample feeding interpolation.
struct StationSample {
    double lat = 0.0;
    double lon = 0.0;
    double value = 0.0;
};

struct IdwOptions {
    double power = 2.0;
    double exact_eps_miles = 1e-9;  // closer than this: take the station value
};

/// Inverse-distance-weighted field over the grid. Cell values are convex
/// combinations of the inputs (clamped to the input extrema); a cell whose
/// center coincides with a station takes that station's value exactly.
RasterFrame interpolate(const GridSpec& spec, const std::vector<StationSample>& points,
                        IndicatorId indicator, const Date& date, const IdwOptions& opt = {});

/// y = log2(x + 1), recorded in transform_applied. Rejects negatives,
/// naming the first offending cell.
RasterFrame transform_log2p1(const RasterFrame& frame);

/// y = x^(1/4), recorded in transform_applied. Rejects negatives.
RasterFrame transform_fourth_root(const RasterFrame& frame);

/// NO2 ppb -> ug/m3 at 25 C / 1 atm.
inline double no2_ppb_to_ugm3(double ppb) { return ppb * 1.88; }

/// Buckets one day's fire records into (binary label, fourth-root-of-
/// summed-FRP weight). Records outside the grid are ignored.
std::pair<RasterFrame, RasterFrame> rasterize_fires(const GridSpec& spec,
                                                    const std::vector<FireRecord>& records,
                                                    const Date& date);

}  // namespace firecast
