#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iemd/appearance/dictionary.hpp"
#include "iemd/errors.hpp"

namespace iemd::appearance {

struct LassoOptions
{
    int max_iterations = 1000;   // active-set changes
    double kkt_tolerance = 1e-6;
};

struct SparseCode
{
    Eigen::VectorXd coefficients;   // a_r, length L K, all >= 0
    int iterations = 0;
    double kkt_violation = 0.0;
};

namespace detail {

inline double kkt_violation_from_gradient(const Eigen::VectorXd& g, const Eigen::VectorXd& a)
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
        worst = std::max(worst, a[k] > 0 ? std::abs(g[k]) : std::max(0.0, -g[k]));
    return worst;
}

}   // namespace detail

/**
 * Largest violation of the optimality conditions of
 *
 *     min ||x - Phi a||^2 + lambda ||a||_1   s.t. a >= 0
 *
 * given G = Phi^T Phi and b = Phi^T x. With g = 2 (G a - b) + lambda, a_k > 0
 * needs g_k = 0 and a_k = 0 needs g_k >= 0.
 */
inline double nonneg_lasso_kkt_violation(const Eigen::MatrixXd& gram, const Eigen::VectorXd& correlation,
                                         double lambda, const Eigen::VectorXd& a)
{
    const Eigen::VectorXd g = 2.0 * (gram * a - correlation).array() + lambda;
    return detail::kkt_violation_from_gradient(g, a);
}

namespace detail {

inline Eigen::MatrixXd sub_gram(const Eigen::MatrixXd& gram, const std::vector<Eigen::Index>& support)
{
    const auto s = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd g_ss(s, s);
    for (Eigen::Index p = 0; p < s; ++p)
        for (Eigen::Index q = 0; q < s; ++q) g_ss(p, q) = gram(support[p], support[q]);
    return g_ss;
}

// Moves a toward target (both restricted to the support) as far as
// nonnegativity allows, then drops coefficients that reached zero.
inline void ratio_step(Eigen::VectorXd& a, std::vector<Eigen::Index>& support, const Eigen::VectorXd& target)
{
    double step = 1.0;
    for (std::size_t p = 0; p < support.size(); ++p) {
        const double cur = a[support[p]];
        if (target[p] < 0) step = std::min(step, cur / (cur - target[p]));
    }
    std::vector<Eigen::Index> kept;
    for (std::size_t p = 0; p < support.size(); ++p) {
        const Eigen::Index k = support[p];
        const double cur = a[k];
        a[k] = step == 1.0 ? target[p] : cur + step * (target[p] - cur);
        if (target[p] < 0 && cur / (cur - target[p]) <= step) a[k] = 0;
        if (a[k] > 0) kept.push_back(k);
        else a[k] = 0;
    }
    support.swap(kept);
}

}   // namespace detail

/**
 * Nonnegative LASSO in Gram form by an active-set method. While some
 * coefficient off the support has a negative gradient, the most negative one
 * enters along the direction that keeps the support stationary, cut back by a
 * ratio test; otherwise the support system is re-solved. Both moves decrease
 * the objective, so the method cannot cycle.
 */
inline SparseCode solve_nonneg_lasso_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& correlation,
                                          double lambda, const LassoOptions& options = {})
{
    const Eigen::Index n = correlation.size();
    if (gram.rows() != n || gram.cols() != n)
        throw DimensionMismatch("gram matrix does not match the correlation vector");
    if (!(lambda >= 0))
        throw InvalidConfig("lambda must be nonnegative");

    const double target = 0.1 * options.kkt_tolerance;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> support;   // exactly the nonzero coefficients
    int iteration = 0;
    int stalls = 0;

    // G a only touches the support columns.
    auto gram_times = [&](const Eigen::VectorXd& x, const std::vector<Eigen::Index>& on) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k : on) out.noalias() += x[k] * gram.col(k);
        return out;
    };
    auto objective = [&](const Eigen::VectorXd& x, const std::vector<Eigen::Index>& on) {
        double value = 0.0;
        const Eigen::VectorXd gx = gram_times(x, on);
        for (Eigen::Index k : on) value += x[k] * (gx[k] - 2.0 * correlation[k] + lambda);
        return value;
    };

    Eigen::VectorXd g = 2.0 * (-correlation).array() + lambda;
    double current = 0.0;
    while (iteration < options.max_iterations) {
        if (detail::kkt_violation_from_gradient(g, a) <= target) break;
        ++iteration;

        double support_residual = 0.0;
        for (Eigen::Index k : support) support_residual = std::max(support_residual, std::abs(g[k]));
        Eigen::Index enter = -1;
        for (Eigen::Index k = 0; k < n; ++k)
            if (a[k] == 0 && g[k] < -target && (enter < 0 || g[k] < g[enter])) enter = k;

        const double before = current;
        const Eigen::MatrixXd g_ss = detail::sub_gram(gram, support);
        const auto ldlt = g_ss.ldlt();

        if (enter >= 0 && (stalls > 0 || support_residual <= target)) {
            const auto s = static_cast<Eigen::Index>(support.size());
            Eigen::VectorXd coupling(s);
            for (Eigen::Index p = 0; p < s; ++p) coupling[p] = gram(support[p], enter);
            const Eigen::VectorXd dir = s ? Eigen::VectorXd(-ldlt.solve(coupling)) : Eigen::VectorXd();
            const double schur = gram(enter, enter) + coupling.dot(dir);
            double t = schur > 1e-14 ? -g[enter] / (2.0 * schur) : std::numeric_limits<double>::infinity();
            Eigen::Index leave = -1;
            for (Eigen::Index p = 0; p < s; ++p) {
                if (dir[p] < 0 && -a[support[p]] / dir[p] < t) {
                    t = -a[support[p]] / dir[p];
                    leave = p;
                }
            }
            if (!std::isfinite(t)) break;
            for (Eigen::Index p = 0; p < s; ++p) a[support[p]] = std::max(0.0, a[support[p]] + t * dir[p]);
            if (leave >= 0) a[support[leave]] = 0;
            a[enter] = t;
            std::vector<Eigen::Index> kept;
            for (Eigen::Index k : support)
                if (a[k] > 0) kept.push_back(k);
            if (a[enter] > 0) kept.push_back(enter);
            support.swap(kept);
        } else if (!support.empty()) {
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(support.size()));
            for (std::size_t p = 0; p < support.size(); ++p) rhs[p] = correlation[support[p]] - 0.5 * lambda;
            Eigen::VectorXd z = ldlt.solve(rhs);
            z += ldlt.solve(rhs - g_ss * z);
            if (!z.allFinite()) break;
            const Eigen::VectorXd saved = a;
            const auto saved_support = support;
            detail::ratio_step(a, support, z);
            if (objective(a, support) > before) {
                a = saved;
                support = saved_support;
            }
        } else {
            break;
        }
        current = objective(a, support);
        g = 2.0 * (gram_times(a, support) - correlation).array() + lambda;
        stalls = current < before ? 0 : stalls + 1;
        if (stalls > 2) break;
    }

    SparseCode code;
    code.kkt_violation = nonneg_lasso_kkt_violation(gram, correlation, lambda, a);
    code.iterations = iteration;
    if (code.kkt_violation > options.kkt_tolerance)
        throw NonConvergence("nonnegative lasso did not reach KKT tolerance (violation " +
                             std::to_string(code.kkt_violation) + ")");
    code.coefficients = std::move(a);
    return code;
}

/** Nonnegative LASSO against an explicit matrix Phi. */
inline SparseCode solve_nonneg_lasso(const Eigen::MatrixXd& phi, const Eigen::VectorXd& x, double lambda,
                                     const LassoOptions& options = {})
{
    if (phi.rows() != x.size())
        throw DimensionMismatch("signal length does not match the dictionary");
    return solve_nonneg_lasso_gram(phi.transpose() * phi, phi.transpose() * x, lambda, options);
}

/**
 * Sparse code of one patch against the dictionary's L2-normalized atoms.
 * The patch is used as given; build_histogram normalizes it first.
 */
inline SparseCode encode_patch(const Eigen::VectorXd& patch, const Dictionary& dict, double lambda,
                               const LassoOptions& options = {})
{
    if (patch.size() != dict.scheme().feature_size())
        throw DimensionMismatch("patch length does not match the dictionary atoms");
    return solve_nonneg_lasso_gram(dict.gram(), dict.unit_atoms().transpose() * patch, lambda, options);
}

struct PooledWeight
{
    double weight = 0.0;
    int patch_index = 0;   // 0-based dictionary patch position u
};

/**
 * Maximum-alignment pooling: abar_j = sum_i a_ij over the L templates, then
 * the infinity norm and its argmax (ties to the lowest j).
 */
inline PooledWeight max_alignment_pool(const Eigen::VectorXd& code, int templates, int patches)
{
    if (templates < 1 || patches < 1 || code.size() != static_cast<Eigen::Index>(templates) * patches)
        throw DimensionMismatch("sparse code length must be L * K");
    PooledWeight best;
    for (int j = 0; j < patches; ++j) {
        double sum = 0.0;
        for (int i = 0; i < templates; ++i) sum += code[static_cast<Eigen::Index>(i) * patches + j];
        if (std::abs(sum) > best.weight) {
            best.weight = std::abs(sum);
            best.patch_index = j;
        }
    }
    return best;
}

}   // namespace iemd::appearance
