#include "firecast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace firecast {

namespace {

// Hand-rolled draws on top of mt19937_64 so datasets are reproducible
// across standard libraries (std distributions are implementation-defined).
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& rng) {
    // Box-Muller, cosine branch only: two draws per variate, no cache.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Smooth standardized field: a handful of Gaussian bumps, then shifted and
// scaled to mean 0 / sd 1 over the grid.
std::vector<double> smooth_pattern(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    constexpr int kBumps = 5;
    struct Bump {
        double r, c, sigma, amp;
    };
    std::vector<Bump> bumps;
    const double n = static_cast<double>(std::max(rows, cols));
    for (int b = 0; b < kBumps; ++b) {
        Bump bump;
        bump.r = uniform01(rng) * static_cast<double>(rows);
        bump.c = uniform01(rng) * static_cast<double>(cols);
        bump.sigma = n / 8.0 + uniform01(rng) * (n / 3.0 - n / 8.0);
        bump.amp = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + uniform01(rng) * 0.5);
        bumps.push_back(bump);
    }
    std::vector<double> field(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            for (const auto& b : bumps) {
                const double dr = static_cast<double>(r) - b.r;
                const double dc = static_cast<double>(c) - b.c;
                v += b.amp * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
            }
            field[r * cols + c] = v;
        }
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double sd = std::sqrt(std::max(var, 1e-12));
    for (double& v : field) v = (v - mean) / sd;
    return field;
}

// Nearest-rank pooled quantile (sorted copy; index ceil(q*N)-1).
double pooled_quantile(std::vector<float> values, double q) {
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto idx = static_cast<std::int64_t>(std::ceil(q * n)) - 1;
    idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(values.size()) - 1);
    return values[static_cast<std::size_t>(idx)];
}

RasterFrame blank_frame(const GridSpec& spec, IndicatorId ind, const Date& date) {
    RasterFrame f;
    f.spec = spec;
    f.indicator = ind;
    f.date = date;
    f.transform_applied = Transform::none;
    f.values.assign(spec.cell_count(), 0.f);
    return f;
}

struct ChannelModel {
    IndicatorId id;
    double base;
    double drive;          // coupling to its driver
    int driver;            // 0 = season (temp/dew), 1 = wind, 2 = pollution
    double pattern_amp;
    double noise_amp;
    double fire_feedback;  // x yesterday's burning fraction (trailing only)
};

// Leading channels respond to weather drivers; trailing (air-quality)
// channels additionally pick up smoke from the previous day's fires.
constexpr ChannelModel kChannels[] = {
    {IndicatorId::temperature, 24.0, 7.0, 0, 2.0, 0.3, 0.0},
    {IndicatorId::dew_point, 12.0, -8.0, 0, 1.0, 0.3, 0.0},
    {IndicatorId::wind_speed, 9.0, 2.5, 1, 1.5, 0.6, 0.0},
    {IndicatorId::pm25, 12.0, 4.0, 2, 2.0, 1.0, 6.0},
    {IndicatorId::pm10, 22.0, 6.0, 2, 3.0, 1.4, 9.0},
    {IndicatorId::co, 0.5, 0.15, 2, 0.1, 0.05, 0.5},
    {IndicatorId::no2, 16.0, 5.0, 2, 2.5, 1.1, 8.0},
};

}  // namespace

FrameSet synth_dataset(const SynthOptions& opt) {
    if (opt.rows < 4 || opt.cols < 4)
        throw std::invalid_argument("synth_dataset: grid must be at least 4x4");
    if (opt.days < opt.rule.consecutive_days + 1)
        throw std::invalid_argument("synth_dataset: too few days for the rule history");
    if (!(opt.rule.temp_quantile > 0.0 && opt.rule.temp_quantile < 1.0) ||
        !(opt.rule.dew_quantile > 0.0 && opt.rule.dew_quantile < 1.0))
        throw std::invalid_argument("synth_dataset: rule quantiles must lie in (0,1)");
    if (opt.rule.consecutive_days < 1)
        throw std::invalid_argument("synth_dataset: rule needs at least 1 consecutive day");
    if (!(opt.season_period_days > 0))
        throw std::invalid_argument("synth_dataset: season period must be positive");

    // Box sized so cells are ~1.4 miles on the chosen dims.
    const double cell = 1.4;
    const double lat_min = 36.0;
    const double lat_max = lat_min + static_cast<double>(opt.rows) * cell / kMilesPerDegreeLat;
    const double mid = 0.5 * (lat_min + lat_max);
    const double lon_min = -120.0;
    const double lon_max =
        lon_min + static_cast<double>(opt.cols) * cell /
                      (kMilesPerDegreeLat * std::cos(mid * std::numbers::pi / 180.0));
    FrameSet data;
    data.spec = GridSpec::with_dims(lat_min, lat_max, lon_min, lon_max, cell, opt.rows, opt.cols);

    std::mt19937_64 rng(opt.seed);
    const std::size_t cells = data.spec.cell_count();
    const std::size_t days = opt.days;

    // 1. static fields
    {
        auto elev_pat = smooth_pattern(rng, opt.rows, opt.cols);
        auto ndvi_pat = smooth_pattern(rng, opt.rows, opt.cols);
        RasterFrame elev = blank_frame(data.spec, IndicatorId::elevation, opt.start_date);
        RasterFrame ndvi = blank_frame(data.spec, IndicatorId::ndvi, opt.start_date);
        for (std::size_t i = 0; i < cells; ++i) {
            elev.values[i] = static_cast<float>(std::max(0.0, 600.0 + 250.0 * elev_pat[i]));
            ndvi.values[i] = static_cast<float>(std::clamp(0.55 + 0.25 * ndvi_pat[i], 0.0, 1.0));
        }
        data.static_frames[IndicatorId::elevation] = std::move(elev);
        data.static_frames[IndicatorId::ndvi] = std::move(ndvi);
    }

    // 2. per-channel spatial patterns, in table order
    std::vector<std::vector<double>> patterns;
    for (const auto& ch : kChannels) {
        (void)ch;
        patterns.push_back(smooth_pattern(rng, opt.rows, opt.cols));
    }

    // 3. drivers: season driver (sinusoid + AR(1)) and two AR(1) wobbles
    std::vector<double> season(days), wind_drv(days), poll_drv(days);
    {
        const double phase = uniform01(rng) * 2.0 * std::numbers::pi;
        const double rho_s = 0.85, sd_s = 0.35;
        const double rho = 0.8, sd = 1.0;
        double ar_s = 0.0, ar_w = 0.0, ar_p = 0.0;
        for (std::size_t d = 0; d < days; ++d) {
            if (d > 0) {
                ar_s = rho_s * ar_s + sd_s * std::sqrt(1.0 - rho_s * rho_s) * normal(rng);
                ar_w = rho * ar_w + sd * std::sqrt(1.0 - rho * rho) * normal(rng);
                ar_p = rho * ar_p + sd * std::sqrt(1.0 - rho * rho) * normal(rng);
            }
            season[d] = opt.season_amplitude *
                            std::sin(2.0 * std::numbers::pi * static_cast<double>(d) /
                                         opt.season_period_days +
                                     phase) +
                        ar_s;
            wind_drv[d] = ar_w;
            poll_drv[d] = ar_p;
        }
    }
    const std::vector<double>* drivers[3] = {&season, &wind_drv, &poll_drv};

    // 4. leading channels (no fire feedback), channel-major draw order
    for (std::size_t ci = 0; ci < 3; ++ci) {
        const auto& ch = kChannels[ci];
        for (std::size_t d = 0; d < days; ++d) {
            const Date date = opt.start_date.plus_days(static_cast<std::int64_t>(d));
            RasterFrame f = blank_frame(data.spec, ch.id, date);
            const double drv = (*drivers[ch.driver])[d];
            for (std::size_t i = 0; i < cells; ++i) {
                const double v = ch.base + ch.drive * drv + ch.pattern_amp * patterns[ci][i] +
                                 ch.noise_amp * normal(rng);
                f.values[i] = static_cast<float>(std::max(0.0, v));
            }
            data.frames[date][ch.id] = std::move(f);
        }
    }

    // 5. labels from the rule over pooled quantile thresholds
    std::vector<float> pooled_temp, pooled_dew;
    pooled_temp.reserve(days * cells);
    pooled_dew.reserve(days * cells);
    for (const auto& [date, by_ind] : data.frames) {
        const auto& tv = by_ind.at(IndicatorId::temperature).values;
        const auto& dv = by_ind.at(IndicatorId::dew_point).values;
        pooled_temp.insert(pooled_temp.end(), tv.begin(), tv.end());
        pooled_dew.insert(pooled_dew.end(), dv.begin(), dv.end());
    }
    const double temp_thr = pooled_quantile(std::move(pooled_temp), opt.rule.temp_quantile);
    const double dew_thr = pooled_quantile(std::move(pooled_dew), opt.rule.dew_quantile);

    std::vector<std::vector<char>> cond(days, std::vector<char>(cells, 0));
    for (std::size_t d = 0; d < days; ++d) {
        const Date date = opt.start_date.plus_days(static_cast<std::int64_t>(d));
        const auto& tv = data.frames.at(date).at(IndicatorId::temperature).values;
        const auto& dv = data.frames.at(date).at(IndicatorId::dew_point).values;
        for (std::size_t i = 0; i < cells; ++i)
            cond[d][i] = (tv[i] > temp_thr && dv[i] < dew_thr) ? 1 : 0;
    }
    std::vector<double> fire_frac(days, 0.0);
    const std::size_t k = opt.rule.consecutive_days;
    for (std::size_t d = 0; d < days; ++d) {
        const Date date = opt.start_date.plus_days(static_cast<std::int64_t>(d));
        RasterFrame label = blank_frame(data.spec, IndicatorId::fire_label, date);
        std::size_t burning = 0;
        if (d >= k) {
            for (std::size_t i = 0; i < cells; ++i) {
                bool all = true;
                for (std::size_t back = 1; back <= k && all; ++back) all = cond[d - back][i] != 0;
                if (all) {
                    label.values[i] = 1.f;
                    ++burning;
                }
            }
        }
        fire_frac[d] = static_cast<double>(burning) / static_cast<double>(cells);
        data.labels[date] = std::move(label);
    }

    // 6. FRP weights for burning cells, day-ascending / row-major draws
    for (std::size_t d = 0; d < days; ++d) {
        const Date date = opt.start_date.plus_days(static_cast<std::int64_t>(d));
        const RasterFrame& label = data.labels.at(date);
        RasterFrame weight = blank_frame(data.spec, IndicatorId::fire_label, date);
        weight.transform_applied = Transform::fourth_root;
        for (std::size_t i = 0; i < cells; ++i)
            if (label.values[i] == 1.f) {
                const double frp = 25.0 + 15.0 * uniform01(rng);
                weight.values[i] = static_cast<float>(std::pow(frp, 0.25));
            }
        data.weights[date] = std::move(weight);
    }

    // 7. trailing channels, fed by yesterday's burning fraction
    for (std::size_t ci = 3; ci < std::size(kChannels); ++ci) {
        const auto& ch = kChannels[ci];
        for (std::size_t d = 0; d < days; ++d) {
            const Date date = opt.start_date.plus_days(static_cast<std::int64_t>(d));
            RasterFrame f = blank_frame(data.spec, ch.id, date);
            const double drv = (*drivers[ch.driver])[d];
            const double smoke = ch.fire_feedback * (d > 0 ? fire_frac[d - 1] : 0.0);
            for (std::size_t i = 0; i < cells; ++i) {
                const double v = ch.base + ch.drive * drv + smoke +
                                 ch.pattern_amp * patterns[ci][i] + ch.noise_amp * normal(rng);
                f.values[i] = static_cast<float>(std::max(0.0, v));
            }
            data.frames[date][ch.id] = std::move(f);
        }
    }

    return data;
}

}  // namespace firecast
