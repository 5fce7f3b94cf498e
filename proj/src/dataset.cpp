#include "firecast/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "firecast/logging.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace firecast {

namespace {

void check_spec(const GridSpec& want, const RasterFrame& f, const char* what) {
    f.validate();
    if (!(f.spec == want))
        throw std::invalid_argument(std::string("FrameSet: ") + what + " frame " +
                                    std::string(indicator_name(f.indicator)) + " " + f.date.iso() +
                                    " uses a different grid spec");
}

json spec_to_json(const GridSpec& s) {
    return json{{"lat_min", s.lat_min},     {"lat_max", s.lat_max},
                {"lon_min", s.lon_min},     {"lon_max", s.lon_max},
                {"cell_size_miles", s.cell_size_miles},
                {"rows", s.rows},           {"cols", s.cols}};
}

GridSpec spec_from_json(const json& j) {
    return GridSpec::with_dims(j.at("lat_min").get<double>(), j.at("lat_max").get<double>(),
                               j.at("lon_min").get<double>(), j.at("lon_max").get<double>(),
                               j.at("cell_size_miles").get<double>(),
                               j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
}

}  // namespace

void FrameSet::validate() const {
    for (const auto& [date, by_ind] : frames)
        for (const auto& [ind, f] : by_ind) {
            check_spec(spec, f, "dynamic");
            if (!(f.date == date) || f.indicator != ind)
                throw std::invalid_argument("FrameSet: frame keyed (" + date.iso() + "," +
                                            std::string(indicator_name(ind)) +
                                            ") carries mismatched metadata");
        }
    for (const auto& [ind, f] : static_frames) check_spec(spec, f, "static");
    for (const auto& [date, f] : labels) {
        check_spec(spec, f, "label");
        for (std::size_t i = 0; i < f.values.size(); ++i)
            if (f.values[i] != 0.f && f.values[i] != 1.f)
                throw std::invalid_argument("FrameSet: label " + date.iso() + " cell " +
                                            std::to_string(i) + " is " +
                                            std::to_string(f.values[i]) + ", not binary");
    }
    for (const auto& [date, f] : weights) check_spec(spec, f, "weight");
}

std::pair<std::vector<SequenceSample>, WindowReport> build_windows(
    const FrameSet& data, const std::vector<IndicatorId>& channels, std::size_t window_days,
    std::size_t horizon_days) {
    if (window_days < 1) throw std::invalid_argument("build_windows: window_days must be >= 1");
    if (horizon_days < 1) throw std::invalid_argument("build_windows: horizon_days must be >= 1");
    if (channels.empty()) throw std::invalid_argument("build_windows: no channels requested");
    data.validate();

    std::vector<SequenceSample> samples;
    WindowReport report;
    for (const auto& [target, label] : data.labels) {
        SequenceSample s;
        s.spec = data.spec;
        s.target_date = target;
        s.label = label;
        bool complete = true;
        for (std::size_t t = 0; t < window_days && complete; ++t) {
            // oldest day first: target - horizon - (window_days-1) + t
            const Date day = target.plus_days(-static_cast<std::int64_t>(horizon_days) -
                                              static_cast<std::int64_t>(window_days - 1 - t));
            auto day_it = data.frames.find(day);
            std::vector<RasterFrame> row;
            for (IndicatorId ch : channels) {
                const RasterFrame* frame = nullptr;
                if (day_it != data.frames.end())
                    if (auto f = day_it->second.find(ch); f != day_it->second.end())
                        frame = &f->second;
                if (!frame) {
                    report.skipped.push_back(target.iso() + ": missing " +
                                             std::string(indicator_name(ch)) + " on " + day.iso());
                    complete = false;
                    break;
                }
                row.push_back(*frame);
            }
            if (complete) s.window.push_back(std::move(row));
        }
        if (!complete) continue;
        for (const auto& [ind, f] : data.static_frames) s.static_channels.push_back(f);
        if (auto w = data.weights.find(target); w != data.weights.end()) s.weight = w->second;
        ++report.emitted;
        samples.push_back(std::move(s));
    }
    return {std::move(samples), std::move(report)};
}

void save_dataset(const FrameSet& data, const std::string& dir) {
    data.validate();
    fs::create_directories(dir);
    json manifest;
    manifest["schema"] = "wfdataset-v1";
    manifest["grid"] = spec_to_json(data.spec);

    std::vector<std::string> channel_names;
    {
        // union of indicators across days, insertion by enum order via map key order
        std::map<IndicatorId, bool> seen;
        for (const auto& [date, by_ind] : data.frames)
            for (const auto& [ind, f] : by_ind) seen[ind] = true;
        for (const auto& [ind, _] : seen) channel_names.push_back(std::string(indicator_name(ind)));
    }
    manifest["channels"] = channel_names;

    std::vector<std::string> dates;
    for (const auto& [date, _] : data.frames) dates.push_back(date.iso());
    manifest["frame_dates"] = dates;
    std::vector<std::string> label_dates;
    for (const auto& [date, _] : data.labels) label_dates.push_back(date.iso());
    manifest["label_dates"] = label_dates;
    std::vector<std::string> statics;
    for (const auto& [ind, _] : data.static_frames)
        statics.push_back(std::string(indicator_name(ind)));
    manifest["static_channels"] = statics;
    manifest["has_weights"] = !data.weights.empty();

    for (const auto& [date, by_ind] : data.frames)
        for (const auto& [ind, f] : by_ind) {
            fs::path p = fs::path(dir) / "frames" / indicator_name(ind) / (date.iso() + ".grid");
            fs::create_directories(p.parent_path());
            write_grid(f, p.string());
        }
    for (const auto& [ind, f] : data.static_frames) {
        fs::path p = fs::path(dir) / "static" / (std::string(indicator_name(ind)) + ".grid");
        fs::create_directories(p.parent_path());
        write_grid(f, p.string());
    }
    for (const auto& [date, f] : data.labels) {
        fs::path p = fs::path(dir) / "labels" / (date.iso() + ".grid");
        fs::create_directories(p.parent_path());
        write_grid(f, p.string());
    }
    for (const auto& [date, f] : data.weights) {
        fs::path p = fs::path(dir) / "weights" / (date.iso() + ".grid");
        fs::create_directories(p.parent_path());
        write_grid(f, p.string());
    }

    std::ofstream out(fs::path(dir) / "dataset.json", std::ios::trunc);
    out << manifest.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("save_dataset: cannot write manifest in " + dir);
}

FrameSet load_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "dataset.json");
    if (!in.good())
        throw std::runtime_error("load_dataset: missing manifest " + dir + "/dataset.json");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_dataset: bad manifest JSON: " + std::string(e.what()));
    }
    if (manifest.value("schema", "") != "wfdataset-v1")
        throw std::runtime_error("load_dataset: unsupported schema \"" +
                                 manifest.value("schema", "") + "\"");
    FrameSet data;
    data.spec = spec_from_json(manifest.at("grid"));

    for (const auto& ch : manifest.at("channels")) {
        const std::string name = ch.get<std::string>();
        auto ind = indicator_from_name(name);
        if (!ind) throw std::runtime_error("load_dataset: unknown channel \"" + name + "\"");
        for (const auto& d : manifest.at("frame_dates")) {
            fs::path p = fs::path(dir) / "frames" / name / (d.get<std::string>() + ".grid");
            if (!fs::exists(p)) continue;  // sparse coverage is legal; windows handle gaps
            RasterFrame f = read_grid(p.string());
            data.frames[f.date][f.indicator] = std::move(f);
        }
    }
    for (const auto& ch : manifest.at("static_channels")) {
        fs::path p = fs::path(dir) / "static" / (ch.get<std::string>() + ".grid");
        RasterFrame f = read_grid(p.string());
        data.static_frames[f.indicator] = std::move(f);
    }
    for (const auto& d : manifest.at("label_dates")) {
        fs::path p = fs::path(dir) / "labels" / (d.get<std::string>() + ".grid");
        RasterFrame f = read_grid(p.string());
        data.labels[f.date] = std::move(f);
    }
    if (manifest.value("has_weights", false)) {
        for (const auto& d : manifest.at("label_dates")) {
            fs::path p = fs::path(dir) / "weights" / (d.get<std::string>() + ".grid");
            if (!fs::exists(p)) continue;
            RasterFrame f = read_grid(p.string());
            data.weights[f.date] = std::move(f);
        }
    }
    data.validate();
    return data;
}

}  // namespace firecast
