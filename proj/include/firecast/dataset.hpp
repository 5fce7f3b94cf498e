#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "firecast/dates.hpp"
#include "firecast/grid.hpp"

namespace firecast {

/// A pile of aligned rasters: per-day dynamic indicator frames, per-day
/// fire labels (and optional FRP weights), plus static channels shared by
/// every day. The unit the training pipeline consumes and the ingest /
/// synth paths produce.
struct FrameSet {
    GridSpec spec;
    std::map<Date, std::map<IndicatorId, RasterFrame>> frames;
    std::map<IndicatorId, RasterFrame> static_frames;  // elevation, ndvi
    std::map<Date, RasterFrame> labels;                // values in {0,1}
    std::map<Date, RasterFrame> weights;               // optional, fourth-root FRP

    /// Every frame shares `spec`; labels are strictly binary.
    void validate() const;
};

/// One supervised example: a T-day window of C-channel frames ending
/// `horizon` days before the target, the target-day label, and optional
/// per-cell loss weights.
struct SequenceSample {
    GridSpec spec;
    Date target_date;
    std::vector<std::vector<RasterFrame>> window;  // [T][C], oldest day first
    std::vector<RasterFrame> static_channels;
    RasterFrame label;
    std::optional<RasterFrame> weight;
};

/// What build_windows skipped and why.
struct WindowReport {
    std::size_t emitted = 0;
    std::vector<std::string> skipped;  // "2021-06-10: missing pm25 on 2021-06-04"
};

/// Assembles one sample per label date whose full (channel x day) window
/// exists. Incomplete dates are skipped and reported, never imputed.
std::pair<std::vector<SequenceSample>, WindowReport> build_windows(
    const FrameSet& data, const std::vector<IndicatorId>& channels, std::size_t window_days,
    std::size_t horizon_days);

/// Directory layout:
///   dataset.json                     manifest (schema wfdataset-v1)
///   frames/<indicator>/<date>.grid   dynamic channels
///   static/<indicator>.grid          static channels
///   labels/<date>.grid               binary fire labels
///   weights/<date>.grid              optional FRP weights
void save_dataset(const FrameSet& data, const std::string& dir);
FrameSet load_dataset(const std::string& dir);

}  // namespace firecast
