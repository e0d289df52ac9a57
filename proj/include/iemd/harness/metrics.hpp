#pragma once

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "iemd/errors.hpp"

namespace iemd::harness {

/** Axis-aligned box, top-left origin (OTB convention). */
struct Box
{
    double x = 0, y = 0, w = 0, h = 0;

    double area() const { return w * h; }
    double center_x() const { return x + 0.5 * w; }
    double center_y() const { return y + 0.5 * h; }

    void validate() const
    {
        if (!(w > 0 && h > 0)) throw DegenerateBox("box width and height must be positive");
    }
};

/** Intersection over union; 0 for disjoint boxes. */
inline double relative_overlap(const Box& a, const Box& b)
{
    a.validate();
    b.validate();
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    if (inter == 0) return 0.0;
    // Areas from the same edge differences, so identical boxes give exactly 1.
    const double area_a = ((a.x + a.w) - a.x) * ((a.y + a.h) - a.y);
    const double area_b = ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
    return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

struct EvalResult
{
    std::vector<double> overlaps;
    double average = 0;
    std::vector<std::pair<double, double>> curve;   // (threshold, fraction with overlap > threshold)
};

/** 0.00, 0.01, ..., 1.00 */
inline std::vector<double> default_thresholds()
{
    std::vector<double> t(101);
    for (int i = 0; i <= 100; ++i) t[i] = i / 100.0;
    return t;
}

inline EvalResult success_curve(const std::vector<double>& overlaps,
                                const std::vector<double>& thresholds = default_thresholds())
{
    EvalResult out;
    out.overlaps = overlaps;
    const double n = static_cast<double>(overlaps.size());
    out.average = overlaps.empty() ? 0.0 : std::accumulate(overlaps.begin(), overlaps.end(), 0.0) / n;
    for (double t : thresholds) {
        const auto above = std::count_if(overlaps.begin(), overlaps.end(), [t](double o) { return o > t; });
        out.curve.emplace_back(t, overlaps.empty() ? 0.0 : above / n);
    }
    return out;
}

}   // namespace iemd::harness
