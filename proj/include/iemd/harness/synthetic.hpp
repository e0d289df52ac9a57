#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "iemd/appearance/image.hpp"
#include "iemd/errors.hpp"
#include "iemd/gyro/gyro.hpp"
#include "iemd/harness/sequence.hpp"
#include "iemd/tracking/config.hpp"

namespace iemd::harness {

/**
 * A textured square on a textured background, seen by a camera that may
 * rotate at a constant body rate. Scene coordinates are the pixel
 * coordinates of the first frame; the square moves in the scene at
 * `velocity` px/frame and the image brightness is scaled by
 * 1 + brightness_drift * sin(2 pi k / brightness_period).
 */
struct SyntheticSpec
{
    std::string name = "synthetic";
    int width = 320, height = 240, frames = 100;
    double fps = 30;
    std::uint64_t seed = 7;

    double patch_size = 40;
    double patch_x = 60, patch_y = 80;   // top-left in the first frame
    double velocity_x = 2, velocity_y = 0;
    double brightness_drift = 0.1;
    double brightness_period = 20 * std::numbers::pi;

    int target_cells = 11;   // texture cells across the square
    double target_low = 0.15, target_high = 0.85;
    double background_cell = 8;   // px
    double background_low = 0.4, background_high = 0.6;

    Eigen::Vector3d rotation_deg_per_s = Eigen::Vector3d::Zero();   // about camera x, y, z
    double gyro_rate = 200;                                          // Hz
    double fx = 0, fy = 0;                                           // 0 selects the image width
    double cx = -1, cy = -1;                                         // negative selects the image center

    bool rotating() const { return !rotation_deg_per_s.isZero(); }
    Eigen::Vector3d rotation_rad_per_s() const { return rotation_deg_per_s * (std::numbers::pi / 180.0); }

    gyro::CameraIntrinsics intrinsics() const
    {
        return gyro::CameraIntrinsics::from_parameters(fx > 0 ? fx : width, fy > 0 ? fy : width,
                                                       cx >= 0 ? cx : 0.5 * width, cy >= 0 ? cy : 0.5 * height);
    }

    void validate() const
    {
        if (width < 1 || height < 1 || frames < 1) throw InvalidConfig("synthetic sizes must be positive");
        if (!(fps > 0) || !(gyro_rate > 0)) throw InvalidConfig("fps and gyro_rate must be positive");
        if (!(patch_size > 0) || target_cells < 1 || !(background_cell > 0))
            throw InvalidConfig("patch and texture sizes must be positive");
        if (!(brightness_period > 0) || !(brightness_drift >= 0 && brightness_drift < 1))
            throw InvalidConfig("brightness drift must lie in [0, 1) with a positive period");
        intrinsics();
    }
};

inline SyntheticSpec read_synthetic_spec(std::istream& in)
{
    using tracking::detail::parse_int;
    using tracking::detail::parse_real;
    using tracking::detail::trim;
    SyntheticSpec s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("spec line " + std::to_string(lineno) + " is not `key = value`");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key == "name") s.name = val;
        else if (key == "width") s.width = parse_int(key, val);
        else if (key == "height") s.height = parse_int(key, val);
        else if (key == "frames") s.frames = parse_int(key, val);
        else if (key == "fps") s.fps = parse_real(key, val);
        else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(key, val));
        else if (key == "patch_size") s.patch_size = parse_real(key, val);
        else if (key == "patch_x") s.patch_x = parse_real(key, val);
        else if (key == "patch_y") s.patch_y = parse_real(key, val);
        else if (key == "velocity_x") s.velocity_x = parse_real(key, val);
        else if (key == "velocity_y") s.velocity_y = parse_real(key, val);
        else if (key == "brightness_drift") s.brightness_drift = parse_real(key, val);
        else if (key == "brightness_period") s.brightness_period = parse_real(key, val);
        else if (key == "target_cells") s.target_cells = parse_int(key, val);
        else if (key == "target_low") s.target_low = parse_real(key, val);
        else if (key == "target_high") s.target_high = parse_real(key, val);
        else if (key == "background_cell") s.background_cell = parse_real(key, val);
        else if (key == "background_low") s.background_low = parse_real(key, val);
        else if (key == "background_high") s.background_high = parse_real(key, val);
        else if (key == "rate_x_deg") s.rotation_deg_per_s.x() = parse_real(key, val);
        else if (key == "rate_y_deg") s.rotation_deg_per_s.y() = parse_real(key, val);
        else if (key == "rate_z_deg") s.rotation_deg_per_s.z() = parse_real(key, val);
        else if (key == "gyro_rate") s.gyro_rate = parse_real(key, val);
        else if (key == "fx") s.fx = parse_real(key, val);
        else if (key == "fy") s.fy = parse_real(key, val);
        else if (key == "cx") s.cx = parse_real(key, val);
        else if (key == "cy") s.cy = parse_real(key, val);
        else throw ParseError("unknown spec key `" + key + "` on line " + std::to_string(lineno));
    }
    s.validate();
    return s;
}

namespace detail {

// Deterministic lattice value in [0, 1) for the background texture, so the
// background extends over the whole scene plane.
inline double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j)
{
    std::uint64_t z = seed ^ (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull) ^
                      (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4Full);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

class SceneTexture
{
    public:
        explicit SceneTexture(const SyntheticSpec& spec) : spec_(spec), grid_(spec.target_cells + 1, spec.target_cells + 1)
        {
            std::mt19937_64 rng(spec.seed);
            std::uniform_real_distribution<double> unit(spec.target_low, spec.target_high);
            for (Eigen::Index i = 0; i < grid_.size(); ++i) grid_.data()[i] = unit(rng);
        }

        // (u, v) in [0, 1]^2 across the square
        double target(double u, double v) const
        {
            const int n = spec_.target_cells;
            const double x = std::clamp(u, 0.0, 1.0) * n, y = std::clamp(v, 0.0, 1.0) * n;
            const int x0 = std::min(static_cast<int>(x), n - 1), y0 = std::min(static_cast<int>(y), n - 1);
            const double ax = x - x0, ay = y - y0;
            return (1 - ay) * ((1 - ax) * grid_(y0, x0) + ax * grid_(y0, x0 + 1)) +
                   ay * ((1 - ax) * grid_(y0 + 1, x0) + ax * grid_(y0 + 1, x0 + 1));
        }

        double background(double x, double y) const
        {
            const double gx = x / spec_.background_cell, gy = y / spec_.background_cell;
            const auto i = static_cast<std::int64_t>(std::floor(gx)), j = static_cast<std::int64_t>(std::floor(gy));
            const double ax = gx - i, ay = gy - j;
            const std::uint64_t s = spec_.seed * 0x2545F4914F6CDD1Dull + 1;
            auto at = [&](std::int64_t a, std::int64_t b) {
                return spec_.background_low + (spec_.background_high - spec_.background_low) * lattice_value(s, a, b);
            };
            return (1 - ay) * ((1 - ax) * at(i, j) + ax * at(i + 1, j)) +
                   ay * ((1 - ax) * at(i, j + 1) + ax * at(i + 1, j + 1));
        }

    private:
        const SyntheticSpec& spec_;
        Eigen::MatrixXd grid_;
};

}   // namespace detail

/** Camera orientation at time t for a constant body rate (exponential map). */
inline Eigen::Matrix3d synthetic_orientation(const SyntheticSpec& spec, double t)
{
    const Eigen::Vector3d w = spec.rotation_rad_per_s();
    const double speed = w.norm();
    if (speed == 0) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(speed * t, w / speed).toRotationMatrix();
}

/** Maps frame-k pixel coordinates to scene coordinates: K C_k K^-1. */
inline Eigen::Matrix3d frame_to_scene(const SyntheticSpec& spec, int k)
{
    const Eigen::Matrix3d K = spec.intrinsics().K;
    return K * synthetic_orientation(spec, k / spec.fps) * K.inverse();
}

/**
 * Renders the sequence with exact ground truth: the square's center mapped
 * into each frame, with its original size. Rotating specs also get a gyro
 * log sampled at `gyro_rate` and frame timestamps k / fps.
 */
inline Sequence make_synthetic_sequence(const SyntheticSpec& spec)
{
    spec.validate();
    const detail::SceneTexture texture(spec);
    Sequence seq;
    seq.name = spec.name;
    seq.image_width = spec.width;
    seq.image_height = spec.height;
    const double size = spec.patch_size;

    for (int k = 0; k < spec.frames; ++k) {
        const Eigen::Matrix3d to_scene = frame_to_scene(spec, k);
        const double ox = spec.patch_x + spec.velocity_x * k, oy = spec.patch_y + spec.velocity_y * k;

        const Point2 center = gyro::apply_homography(to_scene.inverse(), {ox + 0.5 * size, oy + 0.5 * size});
        const Box box{center.x() - 0.5 * size, center.y() - 0.5 * size, size, size};
        if (box.x < 0 || box.y < 0 || box.x + box.w > spec.width || box.y + box.h > spec.height)
            throw SpecOutOfBounds("target leaves the frame at frame " + std::to_string(k + 1));

        const double gain = 1 + spec.brightness_drift * std::sin(2 * std::numbers::pi * k / spec.brightness_period);
        GrayImage img(spec.height, spec.width);
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c) {
                const Point2 q = gyro::apply_homography(to_scene, {c + 0.5, r + 0.5});
                const double u = (q.x() - ox) / size, v = (q.y() - oy) / size;
                const bool inside = u >= 0 && u < 1 && v >= 0 && v < 1;
                const double value = inside ? texture.target(u, v) : texture.background(q.x(), q.y());
                img(r, c) = std::clamp(value * gain, 0.0, 1.0);
            }
        seq.frames.push_back(std::move(img));
        seq.frame_indices.push_back(k + 1);
        seq.ground_truth.push_back(box);
    }

    if (spec.rotating()) {
        GyroData g;
        g.intrinsics = spec.intrinsics();
        const double duration = (spec.frames - 1) / spec.fps;
        const int samples = static_cast<int>(std::ceil(duration * spec.gyro_rate)) + 1;
        for (int i = 0; i <= samples; ++i) g.samples.push_back({i / spec.gyro_rate, spec.rotation_rad_per_s()});
        for (int k = 0; k < spec.frames; ++k) g.frame_times.emplace_back(k + 1, k / spec.fps);
        seq.gyro = std::move(g);
    }
    return seq;
}

}   // namespace iemd::harness
