#pragma once

// Image file access through OpenCV. Only this header (and dataset.hpp) needs
// the iemd_io target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "iemd/appearance/image.hpp"
#include "iemd/errors.hpp"
#include "iemd/harness/metrics.hpp"

namespace iemd::harness {

struct ImageSize
{
    int width = 0, height = 0;
};

/** Decodes any OpenCV-readable file to luma in [0, 1]. */
inline GrayImage read_gray(const std::filesystem::path& path)
{
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw UnreadableImage("cannot decode image `" + path.string() + "`");
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    if (!rgb.isContinuous()) rgb = rgb.clone();
    return luma_from_rgb(std::span<const std::uint8_t>(rgb.data, rgb.total() * 3), rgb.cols, rgb.rows);
}

inline cv::Mat to_mat8(const GrayImage& img)
{
    cv::Mat out(static_cast<int>(img.rows()), static_cast<int>(img.cols()), CV_8UC1);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.at<std::uint8_t>(r, c) =
                static_cast<std::uint8_t>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * 255.0));
    return out;
}

/** Writes an 8-bit grayscale image; the format follows the extension. */
inline void write_gray(const std::filesystem::path& path, const GrayImage& img)
{
    if (!cv::imwrite(path.string(), to_mat8(img)))
        throw UnreadableImage("cannot write image `" + path.string() + "`");
}

/** Frame with the tracked box (red) and, if given, the ground truth (green). */
inline void write_annotated(const std::filesystem::path& path, const GrayImage& frame, const Box& tracked,
                            const Box* truth = nullptr)
{
    cv::Mat color;
    cv::cvtColor(to_mat8(frame), color, cv::COLOR_GRAY2BGR);
    auto rect = [](const Box& b) {
        return cv::Rect(static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)),
                        static_cast<int>(std::lround(b.w)), static_cast<int>(std::lround(b.h)));
    };
    if (truth) cv::rectangle(color, rect(*truth), cv::Scalar(0, 200, 0), 1);
    cv::rectangle(color, rect(tracked), cv::Scalar(0, 0, 255), 2);
    if (!cv::imwrite(path.string(), color)) throw UnreadableImage("cannot write image `" + path.string() + "`");
}

}   // namespace iemd::harness
