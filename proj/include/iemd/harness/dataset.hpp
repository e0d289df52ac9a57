#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "iemd/errors.hpp"
#include "iemd/gyro/io.hpp"
#include "iemd/harness/image_io.hpp"
#include "iemd/harness/sequence.hpp"

namespace iemd::harness {

namespace detail {

inline bool is_image_extension(std::string ext)
{
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".pgm" || ext == ".ppm";
}

inline bool all_digits(const std::string& s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

inline std::ifstream open_or_throw(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open `" + p.string() + "`");
    return in;
}

}   // namespace detail

/**
 * OTB layout: `img/<index>.jpg` (any common image extension) and
 * `groundtruth_rect.txt`. Optional `attrs.txt` with attribute tags, and the
 * gyro triple `gyro.csv`, `timestamps.csv`, `intrinsics.txt`. The first frame
 * is decoded to check it and record the image size.
 */
inline Sequence load_sequence(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw MissingGroundTruth("sequence directory `" + dir.string() + "` does not exist");

    Sequence seq;
    seq.name = fs::absolute(dir).lexically_normal().filename().string();
    if (seq.name.empty()) seq.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();

    std::vector<std::pair<int, fs::path>> found;
    if (fs::is_directory(dir / "img"))
        for (const auto& entry : fs::directory_iterator(dir / "img")) {
            const auto& p = entry.path();
            if (entry.is_regular_file() && detail::is_image_extension(p.extension().string()) &&
                detail::all_digits(p.stem().string()))
                found.emplace_back(std::stoi(p.stem().string()), p);
        }
    if (found.empty()) throw UnreadableImage("no frames under `" + (dir / "img").string() + "`");
    std::sort(found.begin(), found.end());
    for (auto& [index, path] : found) {
        seq.frame_indices.push_back(index);
        seq.frame_paths.push_back(path);
    }

    fs::path gt = dir / "groundtruth_rect.txt";
    if (!fs::exists(gt)) gt = dir / "groundtruth_rect.1.txt";
    if (!fs::exists(gt)) throw MissingGroundTruth("no groundtruth_rect.txt in `" + dir.string() + "`");
    auto gt_in = detail::open_or_throw(gt);
    seq.ground_truth = read_ground_truth(gt_in);

    if (fs::exists(dir / "attrs.txt")) {
        auto in = detail::open_or_throw(dir / "attrs.txt");
        seq.attributes = read_attributes(in);
    }
    if (fs::exists(dir / "gyro.csv") && fs::exists(dir / "timestamps.csv") && fs::exists(dir / "intrinsics.txt")) {
        GyroData g;
        auto gi = detail::open_or_throw(dir / "gyro.csv");
        g.samples = gyro::read_gyro_log(gi);
        auto ti = detail::open_or_throw(dir / "timestamps.csv");
        g.frame_times = gyro::read_frame_timestamps(ti);
        auto ki = detail::open_or_throw(dir / "intrinsics.txt");
        g.intrinsics = gyro::read_intrinsics(ki);
        seq.gyro = std::move(g);
    }

    seq.reader = [](const fs::path& p) { return read_gray(p); };
    const GrayImage first = seq.frame(0);
    seq.image_width = static_cast<int>(first.cols());
    seq.image_height = static_cast<int>(first.rows());
    seq.validate();
    return seq;
}

/** Writes an in-memory sequence in the layout `load_sequence` reads (PNG frames). */
inline void write_sequence(const Sequence& seq, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (seq.frames.empty()) throw UnreadableImage("only in-memory sequences can be written");
    fs::create_directories(dir / "img");
    char name[32];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof name, "%04d.png", seq.frame_indices.at(i));
        write_gray(dir / "img" / name, seq.frames[i]);
    }
    char line[160];
    std::ofstream gt(dir / "groundtruth_rect.txt");
    for (const auto& b : seq.ground_truth) {
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g\n", b.x, b.y, b.w, b.h);
        gt << line;
    }
    if (!seq.attributes.empty()) {
        std::ofstream attrs(dir / "attrs.txt");
        bool first = true;
        for (const auto& a : seq.attributes) {
            attrs << (first ? "" : ",") << a;
            first = false;
        }
        attrs << '\n';
    }
    if (seq.gyro) {
        std::ofstream g(dir / "gyro.csv");
        g << "timestamp_s,wx,wy,wz\n";
        gyro::write_gyro_log(g, seq.gyro->samples);
        std::ofstream t(dir / "timestamps.csv");
        t << "frame_index,timestamp_s\n";
        for (const auto& [i, s] : seq.gyro->frame_times) {
            std::snprintf(line, sizeof line, "%d,%.17g\n", i, s);
            t << line;
        }
        std::ofstream k(dir / "intrinsics.txt");
        const auto& K = seq.gyro->intrinsics.K;
        for (int r = 0; r < 3; ++r) {
            std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", K(r, 0), K(r, 1), K(r, 2));
            k << line;
        }
    }
}

}   // namespace iemd::harness
