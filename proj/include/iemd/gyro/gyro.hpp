#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iemd/appearance/image.hpp"
#include "iemd/errors.hpp"

namespace iemd::gyro {

/** Scalar-first quaternion m + a i + b j + c k. */
struct Quaternion
{
    double m = 1, a = 0, b = 0, c = 0;

    static Quaternion identity() { return {}; }

    Eigen::Vector4d coeffs() const { return {m, a, b, c}; }
    double norm() const { return coeffs().norm(); }

    Quaternion normalized() const
    {
        const double n = norm();
        return {m / n, a / n, b / n, c / n};
    }
};

struct GyroSample
{
    double timestamp = 0;                         // seconds
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();   // rad/s about x, y, z
};

struct CameraIntrinsics
{
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();

    static CameraIntrinsics from_parameters(double fx, double fy, double cx, double cy, double skew = 0)
    {
        CameraIntrinsics out;
        out.K << fx, skew, cx, 0, fy, cy, 0, 0, 1;
        out.validate();
        return out;
    }

    void validate() const
    {
        if (!K.allFinite() || !(K(0, 0) > 0) || !(K(1, 1) > 0) || std::abs(K.determinant()) < 1e-12)
            throw SingularIntrinsics("intrinsic matrix must have positive focal lengths and be invertible");
    }
};

/** Accumulated homography and the predicted center (homogeneous, last entry 1). */
struct HomographyState
{
    Eigen::Matrix3d accumulated = Eigen::Matrix3d::Identity();
    Eigen::Vector3d center{0, 0, 1};

    static HomographyState at(const Point2& p) { return {Eigen::Matrix3d::Identity(), {p.x(), p.y(), 1.0}}; }
};

/** Omega(w) = [0, -w^T; w, -[w]x] acting on (m, a, b, c). */
inline Eigen::Matrix4d omega_matrix(const Eigen::Vector3d& w)
{
    Eigen::Matrix4d o;
    o << 0, -w.x(), -w.y(), -w.z(),
         w.x(), 0, w.z(), -w.y(),
         w.y(), -w.z(), 0, w.x(),
         w.z(), w.y(), -w.x(), 0;
    return o;
}

/** q + 1/2 Omega(w) q dt, renormalized. */
inline Quaternion integrate_step(const Quaternion& q, const Eigen::Vector3d& omega, double dt)
{
    const Eigen::Vector4d v = q.coeffs() + 0.5 * dt * omega_matrix(omega) * q.coeffs();
    return Quaternion{v[0], v[1], v[2], v[3]}.normalized();
}

/**
 * Rotation accumulated over [t0, t1] starting from the identity. Rates are
 * held constant from each sample to the next (zero-order hold); before the
 * first sample the first rate applies. One Euler step per sub-interval.
 */
inline Quaternion integrate_interval(const std::vector<GyroSample>& samples, double t0, double t1)
{
    if (samples.empty()) throw EmptyLog("gyro log has no samples");
    if (t1 < t0) throw InvalidConfig("integration interval ends before it starts");
    auto after = [&](double t) {
        return std::upper_bound(samples.begin(), samples.end(), t,
                                [](double v, const GyroSample& s) { return v < s.timestamp; });
    };
    Quaternion q;
    double t = t0;
    auto next = after(t0);
    while (t < t1) {
        const GyroSample& active = next == samples.begin() ? samples.front() : *(next - 1);
        const double end = next == samples.end() ? t1 : std::min(t1, next->timestamp);
        q = integrate_step(q, active.omega, end - t);
        t = end;
        if (next != samples.end() && next->timestamp <= t) ++next;
    }
    return q;
}

inline Eigen::Matrix3d quaternion_to_rotation(const Quaternion& q)
{
    if (std::abs(q.norm() - 1.0) > 1e-6) throw NonUnitQuaternion("rotation needs a unit quaternion");
    const double m = q.m, a = q.a, b = q.b, c = q.c;
    Eigen::Matrix3d r;
    r << 1 - 2 * b * b - 2 * c * c, 2 * a * b - 2 * c * m, 2 * a * c + 2 * b * m,
         2 * a * b + 2 * c * m, 1 - 2 * a * a - 2 * c * c, 2 * b * c - 2 * a * m,
         2 * a * c - 2 * b * m, 2 * b * c + 2 * a * m, 1 - 2 * a * a - 2 * b * b;
    return r;
}

/** K R K^-1. */
inline Eigen::Matrix3d gyro_homography(const CameraIntrinsics& intrinsics, const Eigen::Matrix3d& rotation)
{
    intrinsics.validate();
    return intrinsics.K * rotation * intrinsics.K.inverse();
}

/**
 * Accumulates H <- H H_gyro^-1 (or H H_gyro when `use_inverse` is false),
 * maps the stored center through it and returns the dehomogenized point.
 */
inline Point2 predict_center(HomographyState& state, const Eigen::Matrix3d& h_gyro, bool use_inverse = true)
{
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(h_gyro);
    if (use_inverse && !lu.isInvertible()) throw SingularIntrinsics("gyro homography is singular");
    state.accumulated = state.accumulated * (use_inverse ? Eigen::Matrix3d(lu.inverse()) : h_gyro);
    const Eigen::Vector3d p = state.accumulated * state.center;
    if (std::abs(p.z()) < 1e-12) throw PointAtInfinity("predicted center maps to infinity");
    return {p.x() / p.z(), p.y() / p.z()};
}

/** Applies a homography to a pixel point. */
inline Point2 apply_homography(const Eigen::Matrix3d& h, const Point2& p)
{
    const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < 1e-12) throw PointAtInfinity("point maps to infinity");
    return {q.x() / q.z(), q.y() / q.z()};
}

/**
 * Seed for frame k+1 from the tracked center of frame k: integrate the gyro
 * over [t_k, t_k+1], form H_gyro and map the center through a fresh state.
 */
inline Point2 predict_next_center(const std::vector<GyroSample>& samples, const CameraIntrinsics& intrinsics,
                                  double t_k, double t_next, const Point2& center, bool use_inverse = true)
{
    const Eigen::Matrix3d r = quaternion_to_rotation(integrate_interval(samples, t_k, t_next));
    HomographyState state = HomographyState::at(center);
    return predict_center(state, gyro_homography(intrinsics, r), use_inverse);
}

}   // namespace iemd::gyro
