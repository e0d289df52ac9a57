#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iemd/appearance/dictionary.hpp"
#include "iemd/appearance/sparse_code.hpp"
#include "iemd/errors.hpp"

namespace iemd::appearance {

struct SignatureBin
{
    double weight = 0.0;
    Eigen::VectorXd feature;   // L2-normalized patch pixels
    Point2 center{0, 0};       // relative to the window center
    int aligned = 0;           // dictionary patch position u this bin pools into
};

/** Weighted bins carrying a feature vector and a spatial center each. */
struct Signature
{
    std::vector<SignatureBin> bins;
    int positions = 0;   // number of aligned indices; 0 means one per bin

    int size() const { return static_cast<int>(bins.size()); }
    int aligned_count() const { return positions > 0 ? positions : size(); }

    Eigen::VectorXd weights() const
    {
        Eigen::VectorXd w(size());
        for (int i = 0; i < size(); ++i) w[i] = bins[i].weight;
        return w;
    }

    bool is_normalized(double tol = 1e-9) const
    {
        double sum = 0.0;
        for (const auto& b : bins) {
            if (!(b.weight >= 0)) return false;
            sum += b.weight;
        }
        return std::abs(sum - 1.0) <= tol;
    }
};

/**
 * Ground-distance and kernel parameters. Spatial offsets are divided by
 * `spatial_scale` before squaring; the tracker sets it to the window
 * diagonal so feature and spatial terms are both O(1).
 */
struct GroundParams
{
    double alpha = 0.5;
    double bandwidth = 1.0;       // h
    double spatial_scale = 1.0;

    void validate() const
    {
        if (!(alpha > 0 && alpha < 1)) throw InvalidConfig("alpha must lie in (0, 1)");
        if (!(bandwidth > 0)) throw InvalidConfig("kernel bandwidth must be positive");
        if (!(spatial_scale > 0)) throw InvalidConfig("spatial scale must be positive");
    }
};

/**
 * Sparse-coding histogram of a window: every patch of the encoding grid is
 * L2-normalized, encoded against the dictionary and max-alignment pooled.
 * Bin r keeps the pooled weight, its aligned dictionary position, the
 * normalized patch and its center. Weights are L1-normalized.
 */
inline Signature build_histogram(const GrayImage& window, const Dictionary& dict, double lambda,
                                 const LassoOptions& options = {})
{
    const PatchScheme& scheme = dict.scheme();
    if (window.rows() != scheme.window_height || window.cols() != scheme.window_width)
        throw DimensionMismatch("window does not match the patch scheme");
    const int k = scheme.patch_count();
    const int j = scheme.encode_count();
    Signature sig;
    sig.positions = k;
    sig.bins.resize(static_cast<std::size_t>(j));
    Eigen::MatrixXd patches(scheme.feature_size(), j);
    for (int r = 0; r < j; ++r) {
        SignatureBin& bin = sig.bins[r];
        bin.feature = extract_patch_at(window, scheme, scheme.encode_origin(r));
        bin.center = scheme.encode_center(r);
        if (const double norm = bin.feature.norm(); norm > 0) bin.feature /= norm;
        patches.col(r) = bin.feature;
    }
    const Eigen::MatrixXd correlations = dict.unit_atoms().transpose() * patches;
    double total = 0.0;
    for (int r = 0; r < j; ++r) {
        SignatureBin& bin = sig.bins[r];
        if (bin.feature.isZero(0.0)) continue;
        const SparseCode code = solve_nonneg_lasso_gram(dict.gram(), correlations.col(r), lambda, options);
        const PooledWeight pooled = max_alignment_pool(code.coefficients, dict.templates(), k);
        bin.weight = pooled.weight;
        bin.aligned = pooled.patch_index;
        total += bin.weight;
    }
    if (!(total > 0))
        throw NormalizationDegenerate("all pooled histogram weights are zero");
    for (auto& bin : sig.bins) bin.weight /= total;
    return sig;
}

/** Epanechnikov profile 1 - ||offset / h||^2, clamped at zero. */
inline double epanechnikov(const Point2& offset, double h)
{
    return std::max(0.0, 1.0 - offset.squaredNorm() / (h * h));
}

/** sum_r k((c_r - y) / h) |p_r| accumulated into each bin's aligned index (gamma not applied). */
inline Eigen::VectorXd unnormalized_kernel_weights(const Signature& sig, const Point2& y, const GroundParams& params)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sig.aligned_count());
    for (const auto& bin : sig.bins) {
        if (bin.aligned < 0 || bin.aligned >= sig.aligned_count())
            throw DimensionMismatch("bin aligned index outside the signature");
        out[bin.aligned] += epanechnikov(bin.center - y, params.bandwidth) * std::abs(bin.weight);
    }
    return out;
}

/** Kernel-weighted bin weights at displacement y, scaled by gamma to sum to one. */
inline Eigen::VectorXd kernel_weights(const Signature& sig, const Point2& y, const GroundParams& params)
{
    Eigen::VectorXd w = unnormalized_kernel_weights(sig, y, params);
    const double total = w.sum();
    if (!(total > 0))
        throw NormalizationDegenerate("every kernel contribution is zero");
    return w / total;
}

/**
 * d/dy of the unnormalized kernel sums: sum_r 2 (c_r - y) / h^2 |p_r| over
 * patches inside the kernel support, per aligned bin. Gamma is held fixed.
 */
inline std::vector<Point2> kernel_weight_gradient(const Signature& sig, const Point2& y, const GroundParams& params)
{
    std::vector<Point2> grad(static_cast<std::size_t>(sig.aligned_count()), Point2::Zero());
    const double h2 = params.bandwidth * params.bandwidth;
    for (const auto& bin : sig.bins) {
        if (bin.aligned < 0 || bin.aligned >= sig.aligned_count())
            throw DimensionMismatch("bin aligned index outside the signature");
        const Point2 offset = bin.center - y;
        if (offset.squaredNorm() >= h2) continue;
        grad[bin.aligned] += 2.0 * offset / h2 * std::abs(bin.weight);
    }
    return grad;
}

/**
 * The model used in the transport problem: bin u carries the kernel weight
 * w_u(y) together with the normalized dictionary-grid patch u of `window` and
 * its center.
 */
inline Signature weighted_signature(const Signature& histogram, const GrayImage& window, const PatchScheme& scheme,
                                    const Point2& y, const GroundParams& params)
{
    if (histogram.aligned_count() != scheme.patch_count())
        throw DimensionMismatch("histogram positions do not match the patch scheme");
    const Eigen::VectorXd w = kernel_weights(histogram, y, params);
    Signature out;
    out.bins.resize(static_cast<std::size_t>(scheme.patch_count()));
    for (int u = 0; u < scheme.patch_count(); ++u) {
        SignatureBin& bin = out.bins[u];
        bin.weight = w[u];
        bin.feature = extract_patch(window, scheme, u);
        if (const double n = bin.feature.norm(); n > 0) bin.feature /= n;
        bin.center = scheme.patch_center(u);
        bin.aligned = u;
    }
    return out;
}

/** d_uv = alpha ||e_u - e_v||^2 + (1 - alpha) ||(c_u - c_v) / spatial_scale||^2. */
inline Eigen::MatrixXd ground_distance_matrix(const Signature& target, const Signature& candidate,
                                              const GroundParams& params)
{
    params.validate();
    Eigen::MatrixXd d(target.size(), candidate.size());
    for (int u = 0; u < target.size(); ++u) {
        const auto& tb = target.bins[u];
        for (int v = 0; v < candidate.size(); ++v) {
            const auto& cb = candidate.bins[v];
            if (tb.feature.size() != cb.feature.size())
                throw FeatureDimMismatch("target and candidate features differ in length");
            const double feature = (tb.feature - cb.feature).squaredNorm();
            const double spatial = ((tb.center - cb.center) / params.spatial_scale).squaredNorm();
            d(u, v) = params.alpha * feature + (1 - params.alpha) * spatial;
        }
    }
    return d;
}

}   // namespace iemd::appearance
