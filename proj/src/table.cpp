#include "misim/table.hpp"

#include <cstdio>

namespace misim {

std::vector<ThresholdRow> build_threshold_table() {
    struct Block {
        double mask_eps, clip_lo, clip_hi;
    };
    const Block blocks[] = {
        {0.010, 0.003, 0.004},
        {0.005, 0.003, 0.004},
        {0.010, 0.004, 0.006},
        {0.020, 0.003, 0.004},
    };
    std::vector<ThresholdRow> rows;
    for (const Block& b : blocks) {
        for (int n = 1; n <= 3; ++n) {
            const double alpha = alpha_from_gap(n);
            for (bool loglin : {false, true}) {
                ThresholdRow r;
                r.mask_eps = b.mask_eps;
                r.clip_eps_low = b.clip_lo;
                r.clip_eps_high = b.clip_hi;
                r.gap = n;
                r.loglinear = loglin;
                r.bounds = loglin ? effective_bounds_loglinear(b.mask_eps, b.clip_lo,
                                                               b.clip_hi, alpha)
                                  : effective_bounds_arithmetic(b.mask_eps, b.clip_lo,
                                                                b.clip_hi, alpha);
                rows.push_back(r);
            }
        }
    }
    return rows;
}

std::string render_threshold_table(const std::vector<ThresholdRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-17s %-17s %-3s %-10s %-19s %-19s\n",
                  "original mask", "original clip", "n", "interp", "mask on total",
                  "clip on total");
    out += line;
    for (const ThresholdRow& r : rows) {
        std::snprintf(line, sizeof line,
                      "[%.3f,%.3f]   [%.3f,%.3f]   %-3d %-10s [%.4f,%.4f]     [%.4f,%.4f]\n",
                      1.0 - r.mask_eps, 1.0 + r.mask_eps, 1.0 - r.clip_eps_low,
                      1.0 + r.clip_eps_high, r.gap,
                      r.loglinear ? "loglinear" : "linear", r.bounds.mask_lo,
                      r.bounds.mask_hi, r.bounds.clip_lo_neg, r.bounds.clip_hi_pos);
        out += line;
    }
    return out;
}

}  // namespace misim
