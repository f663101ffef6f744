#pragma once

#include <string>
#include <vector>

#include "misim/proxy.hpp"

namespace misim {

struct ThresholdRow {
    double mask_eps;
    double clip_eps_low;
    double clip_eps_high;
    int gap;
    bool loglinear;
    EffectiveBounds bounds;
};

// The standard grid: four (mask, clip) threshold settings crossed with
// version gaps 1..3, each under both interpolation schemes. 24 rows.
std::vector<ThresholdRow> build_threshold_table();

// fixed-width text rendering, 4-decimal intervals
std::string render_threshold_table(const std::vector<ThresholdRow>& rows);

}  // namespace misim
