#include "firecast/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace firecast {

namespace {

constexpr char kGridMagic[8] = {'W', 'F', 'G', 'R', 'I', 'D', '0', '1'};

struct IndicatorInfo {
    IndicatorId id;
    const char* name;
    const char* unit;
};

constexpr IndicatorInfo kIndicators[] = {
    {IndicatorId::temperature, "temperature", "degC"},
    {IndicatorId::dew_point, "dew_point", "degC"},
    {IndicatorId::wind_speed, "wind_speed", "knots/hour"},
    {IndicatorId::pm25, "pm25", "ug/m3"},
    {IndicatorId::pm10, "pm10", "ug/m3"},
    {IndicatorId::co, "co", "ppm"},
    {IndicatorId::no2, "no2", "ppb"},
    {IndicatorId::elevation, "elevation", "dimensionless"},
    {IndicatorId::ndvi, "ndvi", "dimensionless"},
    {IndicatorId::fire_label, "fire_label", "dimensionless"},
};

void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

const char* indicator_name(IndicatorId id) {
    for (const auto& e : kIndicators)
        if (e.id == id) return e.name;
    return "unknown";
}

const char* indicator_unit(IndicatorId id) {
    for (const auto& e : kIndicators)
        if (e.id == id) return e.unit;
    return "unknown";
}

std::optional<IndicatorId> indicator_from_name(const std::string& name) {
    for (const auto& e : kIndicators)
        if (name == e.name) return e.id;
    return std::nullopt;
}

bool is_measured_indicator(IndicatorId id) {
    switch (id) {
        case IndicatorId::temperature:
        case IndicatorId::dew_point:
        case IndicatorId::wind_speed:
        case IndicatorId::pm25:
        case IndicatorId::pm10:
        case IndicatorId::co:
        case IndicatorId::no2:
            return true;
        default:
            return false;
    }
}

const char* transform_name(Transform t) {
    switch (t) {
        case Transform::none: return "none";
        case Transform::log2p1: return "log2p1";
        case Transform::fourth_root: return "fourth_root";
    }
    return "none";
}

std::optional<Transform> transform_from_name(const std::string& name) {
    if (name == "none") return Transform::none;
    if (name == "log2p1") return Transform::log2p1;
    if (name == "fourth_root") return Transform::fourth_root;
    return std::nullopt;
}

static void check_common(double lat_min, double lat_max, double lon_min, double lon_max,
                         double cell_size_miles) {
    if (!(lat_min < lat_max)) throw std::invalid_argument("GridSpec: lat_min must be < lat_max");
    if (!(lon_min < lon_max)) throw std::invalid_argument("GridSpec: lon_min must be < lon_max");
    if (!(cell_size_miles > 0.0))
        throw std::invalid_argument("GridSpec: cell_size_miles must be > 0");
}

GridSpec GridSpec::from_bounds(double lat_min, double lat_max, double lon_min, double lon_max,
                               double cell_size_miles, std::size_t cell_cap) {
    check_common(lat_min, lat_max, lon_min, lon_max, cell_size_miles);
    const double lat_miles = (lat_max - lat_min) * kMilesPerDegreeLat;
    const double mid_lat_rad = 0.5 * (lat_min + lat_max) * M_PI / 180.0;
    const double lon_miles = (lon_max - lon_min) * kMilesPerDegreeLat * std::cos(mid_lat_rad);
    const auto rows = static_cast<std::size_t>(std::ceil(lat_miles / cell_size_miles));
    const auto cols = static_cast<std::size_t>(std::ceil(lon_miles / cell_size_miles));
    return with_dims(lat_min, lat_max, lon_min, lon_max, cell_size_miles, rows, cols, cell_cap);
}

GridSpec GridSpec::with_dims(double lat_min, double lat_max, double lon_min, double lon_max,
                             double cell_size_miles, std::size_t rows, std::size_t cols,
                             std::size_t cell_cap) {
    check_common(lat_min, lat_max, lon_min, lon_max, cell_size_miles);
    if (rows < 1 || cols < 1) throw std::invalid_argument("GridSpec: rows and cols must be >= 1");
    if (rows > cell_cap / cols)
        throw std::invalid_argument("GridSpec: rows*cols exceeds the cell cap (" +
                                    std::to_string(cell_cap) + ")");
    GridSpec s;
    s.lat_min = lat_min;
    s.lat_max = lat_max;
    s.lon_min = lon_min;
    s.lon_max = lon_max;
    s.cell_size_miles = cell_size_miles;
    s.rows = rows;
    s.cols = cols;
    return s;
}

GridSpec GridSpec::california(double cell_size_miles) {
    return from_bounds(32.5, 42.0, -124.5, -114.0, cell_size_miles);
}

std::optional<CellIndex> cell_of(const GridSpec& spec, double lat, double lon) {
    if (lat < spec.lat_min || lat > spec.lat_max || lon < spec.lon_min || lon > spec.lon_max)
        return std::nullopt;
    auto row = static_cast<std::size_t>((spec.lat_max - lat) / spec.lat_step());
    auto col = static_cast<std::size_t>((lon - spec.lon_min) / spec.lon_step());
    if (row >= spec.rows) row = spec.rows - 1;  // lat == lat_min edge
    if (col >= spec.cols) col = spec.cols - 1;  // lon == lon_max edge
    return CellIndex{row, col};
}

LatLon cell_center(const GridSpec& spec, std::size_t row, std::size_t col) {
    if (row >= spec.rows || col >= spec.cols)
        throw std::out_of_range("cell_center: index (" + std::to_string(row) + "," +
                                std::to_string(col) + ") outside " + std::to_string(spec.rows) +
                                "x" + std::to_string(spec.cols) + " grid");
    return LatLon{spec.lat_max - (static_cast<double>(row) + 0.5) * spec.lat_step(),
                  spec.lon_min + (static_cast<double>(col) + 0.5) * spec.lon_step()};
}

double distance_miles(const GridSpec& spec, const LatLon& a, const LatLon& b) {
    const double dlat = (a.lat - b.lat) * kMilesPerDegreeLat;
    const double dlon =
        (a.lon - b.lon) * kMilesPerDegreeLat * std::cos(spec.mid_lat() * M_PI / 180.0);
    return std::sqrt(dlat * dlat + dlon * dlon);
}

RasterFrame::RasterFrame(GridSpec s, IndicatorId ind, Date d, std::vector<float> vals, Transform t)
    : spec(s), indicator(ind), date(d), values(std::move(vals)), transform_applied(t) {
    validate();
}

void RasterFrame::validate() const {
    if (values.size() != spec.cell_count())
        throw std::invalid_argument("RasterFrame: expected " + std::to_string(spec.cell_count()) +
                                    " values, got " + std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw std::invalid_argument("RasterFrame: non-finite value at flat index " +
                                        std::to_string(i));
}

void write_grid(const RasterFrame& frame, const std::string& path) {
    frame.validate();

    std::string buf;
    buf.reserve(16 + frame.values.size() * 4);
    buf.append(kGridMagic, sizeof(kGridMagic));
    put_u32_le(buf, static_cast<std::uint32_t>(frame.spec.rows));
    put_u32_le(buf, static_cast<std::uint32_t>(frame.spec.cols));
    for (float v : frame.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32_le(buf, bits);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_grid: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_grid: short write to " + path);
    out.close();

    nlohmann::json side;
    side["schema"] = "wfgrid-sidecar-v1";
    side["grid"] = {{"lat_min", frame.spec.lat_min},       {"lat_max", frame.spec.lat_max},
                    {"lon_min", frame.spec.lon_min},       {"lon_max", frame.spec.lon_max},
                    {"cell_size_miles", frame.spec.cell_size_miles},
                    {"rows", frame.spec.rows},             {"cols", frame.spec.cols}};
    side["indicator"] = indicator_name(frame.indicator);
    side["date"] = frame.date.iso();
    side["transform"] = transform_name(frame.transform_applied);

    std::ofstream jout(path + ".json", std::ios::binary | std::ios::trunc);
    if (!jout) throw std::runtime_error("write_grid: cannot open " + path + ".json");
    jout << side.dump(2) << "\n";
}

RasterFrame read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GridFormatError("read_grid: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 || std::memcmp(buf.data(), kGridMagic, 8) != 0)
        throw GridFormatError("read_grid: bad magic in " + path +
                              " (expected \"WFGRID01\")");
    if (buf.size() < 16)
        throw GridFormatError("read_grid: truncated header (rows/cols) in " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    const std::uint32_t rows = get_u32_le(p + 8);
    const std::uint32_t cols = get_u32_le(p + 12);
    const std::size_t want = 16 + static_cast<std::size_t>(rows) * cols * 4;
    if (buf.size() != want)
        throw GridFormatError("read_grid: value block length mismatch in " + path + " (expected " +
                              std::to_string(want) + " bytes for " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", got " + std::to_string(buf.size()) + ")");

    std::ifstream jin(path + ".json");
    if (!jin) throw GridFormatError("read_grid: missing sidecar " + path + ".json");
    nlohmann::json side;
    try {
        jin >> side;
    } catch (const nlohmann::json::exception& e) {
        throw GridFormatError("read_grid: unparseable sidecar " + path + ".json: " + e.what());
    }

    auto field = [&](const nlohmann::json& j, const char* name) -> const nlohmann::json& {
        if (!j.contains(name))
            throw GridFormatError(std::string("read_grid: sidecar missing field \"") + name +
                                  "\" in " + path + ".json");
        return j.at(name);
    };

    const auto& g = field(side, "grid");
    GridSpec spec = GridSpec::with_dims(
        field(g, "lat_min").get<double>(), field(g, "lat_max").get<double>(),
        field(g, "lon_min").get<double>(), field(g, "lon_max").get<double>(),
        field(g, "cell_size_miles").get<double>(), field(g, "rows").get<std::size_t>(),
        field(g, "cols").get<std::size_t>());
    if (spec.rows != rows || spec.cols != cols)
        throw GridFormatError("read_grid: sidecar rows/cols disagree with binary header in " +
                              path);

    auto ind = indicator_from_name(field(side, "indicator").get<std::string>());
    if (!ind)
        throw GridFormatError("read_grid: unknown indicator \"" +
                              side.at("indicator").get<std::string>() + "\" in " + path + ".json");
    auto tr = transform_from_name(field(side, "transform").get<std::string>());
    if (!tr)
        throw GridFormatError("read_grid: unknown transform \"" +
                              side.at("transform").get<std::string>() + "\" in " + path + ".json");
    Date date;
    try {
        date = Date::parse(field(side, "date").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw GridFormatError(std::string("read_grid: bad date field: ") + e.what());
    }

    std::vector<float> values(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t bits = get_u32_le(p + 16 + i * 4);
        float v;
        std::memcpy(&v, &bits, 4);
        values[i] = v;
    }

    return RasterFrame(spec, *ind, date, std::move(values), *tr);
}

}  // namespace firecast
