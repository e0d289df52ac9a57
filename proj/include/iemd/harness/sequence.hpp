#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iemd/appearance/image.hpp"
#include "iemd/errors.hpp"
#include "iemd/gyro/gyro.hpp"
#include "iemd/harness/metrics.hpp"

namespace iemd::harness {

struct GyroData
{
    std::vector<gyro::GyroSample> samples;
    std::vector<std::pair<int, double>> frame_times;   // (frame index, seconds)
    gyro::CameraIntrinsics intrinsics;

    /** Timestamp of the frame with file index `index`. */
    double time_of(int index) const
    {
        for (const auto& [i, t] : frame_times)
            if (i == index) return t;
        throw MissingGroundTruth("no timestamp for frame " + std::to_string(index));
    }
};

struct Sequence
{
    std::string name;
    std::vector<std::filesystem::path> frame_paths;   // empty for in-memory sequences
    std::vector<int> frame_indices;                   // numeric file index of each frame (1-based in OTB)
    std::vector<GrayImage> frames;                    // in-memory frames, if any
    std::vector<Box> ground_truth;
    std::optional<GyroData> gyro;
    std::set<std::string> attributes;
    int image_width = 0, image_height = 0;

    std::function<GrayImage(const std::filesystem::path&)> reader;

    std::size_t size() const { return frames.empty() ? frame_paths.size() : frames.size(); }

    GrayImage frame(std::size_t i) const
    {
        if (!frames.empty()) return frames.at(i);
        if (!reader) throw UnreadableImage("sequence has no frame reader");
        return reader(frame_paths.at(i));
    }

    void validate() const
    {
        if (size() == 0) throw MissingGroundTruth("sequence `" + name + "` has no frames");
        if (ground_truth.empty()) throw MissingGroundTruth("sequence `" + name + "` has no ground truth");
        if (ground_truth.size() > size())
            throw MissingGroundTruth("sequence `" + name + "` has more ground-truth boxes than frames");
        if (frame_indices.size() != size()) throw DimensionMismatch("frame index list does not match frames");
        for (const auto& b : ground_truth) b.validate();
    }
};

/**
 * Ground truth: one `x,y,w,h` box per line, separated by commas, tabs or
 * spaces. Blank lines are skipped.
 */
inline std::vector<Box> read_ground_truth(std::istream& in)
{
    std::vector<Box> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& ch : line)
            if (ch == ',' || ch == '\t' || ch == '\r' || ch == ';') ch = ' ';
        std::istringstream fields(line);
        std::vector<double> v;
        std::string tok;
        while (fields >> tok) {
            std::size_t used = 0;
            try {
                v.push_back(std::stod(tok, &used));
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size())
                throw ParseError("ground truth line " + std::to_string(lineno) + ": bad number `" + tok + "`");
        }
        if (v.empty()) continue;
        if (v.size() != 4) throw ParseError("ground truth line " + std::to_string(lineno) + ": expected x,y,w,h");
        Box b{v[0], v[1], v[2], v[3]};
        b.validate();
        out.push_back(b);
    }
    return out;
}

/** Whitespace- or comma-separated attribute tags (IV, SV, OCC, DEF, MB, FM, BC). */
inline std::set<std::string> read_attributes(std::istream& in)
{
    std::set<std::string> out;
    std::string tok;
    while (in >> tok) {
        std::stringstream parts(tok);
        std::string part;
        while (std::getline(parts, part, ','))
            if (!part.empty()) out.insert(part);
    }
    return out;
}

}   // namespace iemd::harness
