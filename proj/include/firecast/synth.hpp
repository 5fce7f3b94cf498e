#pragma once

#include <cstdint>

#include "firecast/dataset.hpp"

namespace firecast {

/// Fire-ignition rule for the synthetic world: a cell burns on day d when
/// its temperature sat above the pooled temperature quantile AND its dew
/// point sat below the pooled dew-point quantile on every one of the
/// `consecutive_days` days d-k..d-1.
struct SynthRule {
    double temp_quantile = 0.85;  // temperature must exceed this pooled quantile
    double dew_quantile = 0.15;   // dew point must fall below this pooled quantile
    std::size_t consecutive_days = 3;
};

struct SynthOptions {
    std::size_t rows = 32;
    std::size_t cols = 32;
    std::size_t days = 120;
    std::uint64_t seed = 42;
    Date start_date{2020, 1, 1};
    SynthRule rule;
    /// Fire-season forcing shared by temperature (positive) and dew point
    /// (negative): a sinusoid of this period plus an AR(1) weather wobble.
    double season_period_days = 36.0;
    double season_amplitude = 1.0;
};

/// Deterministic synthetic corpus: smooth leading/trailing indicator
/// fields, static elevation/NDVI, and labels from the temporal rule.
/// Values are raw physical units (transforms are the caller's business).
/// Bit-reproducible for a given option set on a given build.
FrameSet synth_dataset(const SynthOptions& opt);

}  // namespace firecast
