#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "iemd/errors.hpp"

namespace iemd {

/** Grayscale image in [0, 1], indexed (row, col) = (y, x). */
using GrayImage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Point2 = Eigen::Vector2d;

/**
 * Interleaved 8-bit RGB to luma 0.299 R + 0.587 G + 0.114 B, scaled to [0, 1].
 */
inline GrayImage luma_from_rgb(std::span<const std::uint8_t> rgb, int width, int height)
{
    if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw DimensionMismatch("rgb buffer does not match image size");
    GrayImage img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
            img(y, x) = (0.299 * rgb[k] + 0.587 * rgb[k + 1] + 0.114 * rgb[k + 2]) / 255.0;
        }
    return img;
}

/**
 * Bilinear sample at continuous coordinates where pixel (x, y) covers
 * [x, x+1) x [y, y+1); sampling at (x + 0.5, y + 0.5) returns the pixel
 * exactly. Coordinates outside the image clamp to the border.
 */
inline double sample_bilinear(const GrayImage& img, double u, double v)
{
    const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(img.cols() - 1));
    const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(img.rows() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min<int>(x0 + 1, static_cast<int>(img.cols() - 1));
    const int y1 = std::min<int>(y0 + 1, static_cast<int>(img.rows() - 1));
    const double ax = x - x0, ay = y - y0;
    const double top = (1 - ax) * img(y0, x0) + ax * img(y0, x1);
    const double bottom = (1 - ax) * img(y1, x0) + ax * img(y1, x1);
    return (1 - ay) * top + ay * bottom;
}

/**
 * Resamples the box (center, width, height) of `img` to an out_w x out_h
 * window by bilinear interpolation.
 */
inline GrayImage resample_window(const GrayImage& img, const Point2& center, double width, double height,
                                 int out_w, int out_h)
{
    GrayImage out(out_h, out_w);
    const double sx = width / out_w, sy = height / out_h;
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c)
            out(r, c) = sample_bilinear(img, center.x() + (c + 0.5 - 0.5 * out_w) * sx,
                                        center.y() + (r + 0.5 - 0.5 * out_h) * sy);
    return out;
}

inline bool contains(const GrayImage& img, const Point2& p)
{
    return p.x() >= 0 && p.y() >= 0 && p.x() < img.cols() && p.y() < img.rows();
}

}   // namespace iemd
