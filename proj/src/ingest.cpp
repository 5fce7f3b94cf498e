#include "firecast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "firecast/logging.hpp"

namespace firecast {

namespace {

constexpr std::size_t kMaxNotes = 32;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(t, &used);
        return used == t.size();
    } catch (const std::exception&) {
        return false;
    }
}

// Reads non-blank lines, verifying the exact header first. Returns false
// when the stream is exhausted.
class CsvReader {
public:
    CsvReader(std::istream& in, const std::string& expected_header) : in_(in) {
        std::string line;
        if (!std::getline(in_, line))
            throw CsvError(1, "missing header; expected \"" + expected_header + "\"");
        ++line_no_;
        std::string got = trim(line);
        if (!got.empty() && got.back() == '\r') got.pop_back();
        if (got != expected_header)
            throw CsvError(1, "bad header \"" + got + "\"; expected \"" + expected_header + "\"");
    }

    bool next(std::vector<std::string>& fields, std::size_t expected_fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (trim(line).empty()) continue;
            fields = split_csv_line(line);
            if (fields.size() != expected_fields)
                throw CsvError(line_no_, "expected " + std::to_string(expected_fields) +
                                             " fields, got " + std::to_string(fields.size()));
            return true;
        }
        return false;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

Date parse_date_or_throw(const std::string& s, std::size_t line_no) {
    try {
        return Date::parse(trim(s));
    } catch (const std::invalid_argument& e) {
        throw CsvError(line_no, std::string("bad date: ") + e.what());
    }
}

}  // namespace

void ParseReport::note(std::size_t line_no, const std::string& why) {
    ++rejected;
    if (notes.size() < kMaxNotes)
        notes.push_back("line " + std::to_string(line_no) + ": " + why);
}

std::vector<SensorReading> parse_readings(std::istream& in, ParseReport& report) {
    CsvReader reader(in, "date,site_id,latitude,longitude,parameter,value,unit");
    std::vector<SensorReading> out;
    std::vector<std::string> f;
    while (reader.next(f, 7)) {
        const std::size_t ln = reader.line_no();
        SensorReading r;
        r.date = parse_date_or_throw(f[0], ln);
        r.site_id = trim(f[1]);
        if (r.site_id.empty()) {
            report.note(ln, "empty site_id");
            continue;
        }
        if (!parse_double(f[2], r.lat) || !parse_double(f[3], r.lon)) {
            report.note(ln, "unparseable coordinates \"" + f[2] + "\",\"" + f[3] + "\"");
            continue;
        }
        auto ind = indicator_from_name(trim(f[4]));
        if (!ind || !is_measured_indicator(*ind)) {
            report.note(ln, "unknown parameter \"" + trim(f[4]) + "\"");
            continue;
        }
        r.indicator = *ind;
        if (!parse_double(f[5], r.value) || !std::isfinite(r.value)) {
            report.note(ln, "non-finite value \"" + trim(f[5]) + "\"");
            continue;
        }
        ++report.accepted;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SensorReading> parse_readings_file(const std::string& path, ParseReport& report) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open sensor CSV: " + path);
    return parse_readings(in, report);
}

std::vector<FireRecord> parse_fires(std::istream& in, ParseReport& report) {
    CsvReader reader(in, "date,latitude,longitude,frp");
    std::vector<FireRecord> out;
    std::vector<std::string> f;
    while (reader.next(f, 4)) {
        const std::size_t ln = reader.line_no();
        FireRecord r;
        r.date = parse_date_or_throw(f[0], ln);
        if (!parse_double(f[1], r.lat) || !parse_double(f[2], r.lon)) {
            report.note(ln, "unparseable coordinates \"" + f[1] + "\",\"" + f[2] + "\"");
            continue;
        }
        if (!parse_double(f[3], r.frp) || !std::isfinite(r.frp) || r.frp < 0.0) {
            report.note(ln, "bad frp \"" + trim(f[3]) + "\"");
            continue;
        }
        ++report.accepted;
        out.push_back(r);
    }
    return out;
}

std::vector<FireRecord> parse_fires_file(const std::string& path, ParseReport& report) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open fire CSV: " + path);
    return parse_fires(in, report);
}

std::vector<SiteDailyValue> daily_aggregate(const std::vector<SensorReading>& readings,
                                            IndicatorId indicator, const Date& date) {
    struct Acc {
        std::size_t index;
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::vector<SiteDailyValue> out;
    std::unordered_map<std::string, Acc> by_site;
    for (const auto& r : readings) {
        if (r.indicator != indicator || !(r.date == date)) continue;
        auto [it, inserted] = by_site.try_emplace(r.site_id, Acc{out.size()});
        if (inserted) out.push_back({r.site_id, r.lat, r.lon, 0.0});
        it->second.sum += r.value;
        ++it->second.n;
    }
    for (auto& [site, acc] : by_site)
        out[acc.index].value = acc.sum / static_cast<double>(acc.n);
    return out;
}

RasterFrame interpolate(const GridSpec& spec, const std::vector<StationSample>& points,
                        IndicatorId indicator, const Date& date, const IdwOptions& opt) {
    if (points.empty())
        throw std::invalid_argument("interpolate: empty point list for " +
                                    std::string(indicator_name(indicator)) + " " + date.iso());
    if (!(opt.power > 0))
        throw std::invalid_argument("interpolate: power must be positive");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
        if (!std::isfinite(p.value))
            throw std::invalid_argument("interpolate: non-finite station value");
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
    }

    RasterFrame frame;
    frame.spec = spec;
    frame.indicator = indicator;
    frame.date = date;
    frame.transform_applied = Transform::none;
    frame.values.resize(spec.cell_count());

    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const LatLon center = cell_center(spec, r, c);
            double wsum = 0.0, vsum = 0.0;
            double best_d = std::numeric_limits<double>::infinity();
            double best_v = 0.0;
            for (const auto& p : points) {
                const double d = distance_miles(spec, center, {p.lat, p.lon});
                if (d < best_d) {
                    best_d = d;
                    best_v = p.value;
                }
                const double w = 1.0 / std::pow(std::max(d, opt.exact_eps_miles), opt.power);
                wsum += w;
                vsum += w * p.value;
            }
            double v = (best_d < opt.exact_eps_miles) ? best_v : vsum / wsum;
            v = std::clamp(v, lo, hi);
            frame.values[r * spec.cols + c] = static_cast<float>(v);
        }
    }
    return frame;
}

namespace {

RasterFrame apply_pointwise(const RasterFrame& frame, Transform tag, const char* op,
                            double (*fn)(double)) {
    frame.validate();
    if (frame.transform_applied != Transform::none)
        throw std::invalid_argument(std::string(op) + ": frame already carries transform " +
                                    std::string(transform_name(frame.transform_applied)));
    RasterFrame out = frame;
    out.transform_applied = tag;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double x = out.values[i];
        if (x < 0.0)
            throw std::invalid_argument(
                std::string(op) + ": negative value " + std::to_string(x) + " at cell (" +
                std::to_string(i / frame.spec.cols) + "," + std::to_string(i % frame.spec.cols) +
                ") of " + std::string(indicator_name(frame.indicator)) + " " + frame.date.iso());
        out.values[i] = static_cast<float>(fn(x));
    }
    return out;
}

}  // namespace

RasterFrame transform_log2p1(const RasterFrame& frame) {
    return apply_pointwise(frame, Transform::log2p1, "transform_log2p1",
                           +[](double x) { return std::log2(x + 1.0); });
}

RasterFrame transform_fourth_root(const RasterFrame& frame) {
    return apply_pointwise(frame, Transform::fourth_root, "transform_fourth_root",
                           +[](double x) { return std::pow(x, 0.25); });
}

std::pair<RasterFrame, RasterFrame> rasterize_fires(const GridSpec& spec,
                                                    const std::vector<FireRecord>& records,
                                                    const Date& date) {
    RasterFrame label;
    label.spec = spec;
    label.indicator = IndicatorId::fire_label;
    label.date = date;
    label.transform_applied = Transform::none;
    label.values.assign(spec.cell_count(), 0.f);

    std::vector<double> frp_sum(spec.cell_count(), 0.0);
    std::size_t outside = 0;
    for (const auto& rec : records) {
        if (!(rec.date == date)) continue;
        auto cell = cell_of(spec, rec.lat, rec.lon);
        if (!cell) {
            ++outside;
            continue;
        }
        const std::size_t i = cell->row * spec.cols + cell->col;
        label.values[i] = 1.f;
        frp_sum[i] += rec.frp;
    }
    if (outside > 0)
        FIRECAST_LOG_DEBUG("rasterize_fires %s: %zu records outside the grid", date.iso().c_str(),
                           outside);

    RasterFrame weight = label;
    weight.transform_applied = Transform::fourth_root;
    for (std::size_t i = 0; i < frp_sum.size(); ++i)
        weight.values[i] = static_cast<float>(std::pow(frp_sum[i], 0.25));
    return {std::move(label), std::move(weight)};
}

}  // namespace firecast
