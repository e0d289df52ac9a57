#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "iemd/appearance/dictionary.hpp"
#include "iemd/appearance/image.hpp"
#include "iemd/appearance/signature.hpp"
#include "iemd/appearance/sparse_code.hpp"
#include "iemd/emd/transport.hpp"
#include "iemd/errors.hpp"
#include "iemd/tracking/config.hpp"

namespace iemd::tracking {

/** Axis-aligned box in image pixels; `scale` is the product of accepted scale changes. */
struct BoundingBox
{
    Point2 center{0, 0};
    double width = 1;
    double height = 1;
    double scale = 1;

    Point2 top_left() const { return center - 0.5 * Point2(width, height); }

    static BoundingBox from_corner(double x, double y, double w, double h)
    {
        if (!(w > 0 && h > 0)) throw DegenerateBox("box width and height must be positive");
        return {Point2(x + 0.5 * w, y + 0.5 * h), w, h, 1.0};
    }
};

struct TrackerState
{
    BoundingBox box;
    appearance::Dictionary dictionary;
    GrayImage first_template;                   // normalized frame-1 window
    appearance::Signature target_signature;   // kernel-weighted target model
    double update_weight = 1.0;                 // omega of the latest dictionary template
    int frames_since_update = 0;                // delta i
    TrackerConfig config;
};

struct Seed
{
    Point2 center;
    double scale = 1;
};

/**
 * Seed 0 is `center`, followed by the first particle_count offsets (scaled
 * from window pixels to image pixels by `window_to_image`). Each seed is
 * expanded into scales 1, 1 - s, 1 + s, 1 - 2s, ... up to n_scal levels.
 */
inline std::vector<Seed> spawn_seeds(const Point2& center, const TrackerConfig& config,
                                     const Eigen::Vector2d& window_to_image = {1, 1})
{
    std::vector<double> scales{1.0};
    for (int k = 1; k <= config.n_scal / 2; ++k) {
        scales.push_back(1.0 - k * config.scale_step);
        scales.push_back(1.0 + k * config.scale_step);
    }
    std::vector<Point2> centers{center};
    for (int i = 0; i < config.particle_count; ++i)
        centers.push_back(center + config.particle_offsets[i].cwiseProduct(window_to_image));
    std::vector<Seed> seeds;
    for (const auto& c : centers)
        for (double s : scales) seeds.push_back({c, s});
    return seeds;
}

inline double template_update_weight(int frames_since_update, double emd, double gamma0)
{
    return std::pow(gamma0, frames_since_update) * std::exp(-emd);
}

/** Unit step toward the nearest of the 8 compass directions; zero for a zero vector. */
inline Eigen::Vector2i quantize_direction(const Point2& v)
{
    if (v.x() == 0 && v.y() == 0) return {0, 0};
    const double octant = std::round(std::atan2(v.y(), v.x()) / (std::numbers::pi / 4));
    const double angle = octant * std::numbers::pi / 4;
    return {static_cast<int>(std::lround(std::cos(angle))), static_cast<int>(std::lround(std::sin(angle)))};
}

inline appearance::Signature target_model(const GrayImage& first_template, const appearance::Dictionary& dict,
                                          const TrackerConfig& config)
{
    const auto hist = appearance::build_histogram(first_template, dict, config.lambda);
    return appearance::weighted_signature(hist, first_template, config.scheme, Point2::Zero(), config.ground());
}

struct CandidateEvaluation
{
    double emd = 0;
    Point2 gradient{0, 0};   // dD*/dy in image pixels
    GrayImage window;
};

/**
 * EMD between the target model and the candidate window (center, width,
 * height), plus its gradient with respect to the candidate displacement,
 * sum_v M_v dw_C,v/dy.
 */
inline CandidateEvaluation evaluate_candidate(const TrackerState& state, const GrayImage& image, const Point2& center,
                                              double width, double height)
{
    const TrackerConfig& cfg = state.config;
    const auto& scheme = cfg.scheme;
    const auto params = cfg.ground();

    CandidateEvaluation out;
    out.window = resample_window(image, center, width, height, scheme.window_width, scheme.window_height);
    const auto hist = appearance::build_histogram(out.window, state.dictionary, cfg.lambda);
    const Eigen::VectorXd raw = appearance::unnormalized_kernel_weights(hist, Point2::Zero(), params);
    const double total = raw.sum();
    if (!(total > 0)) throw NormalizationDegenerate("every kernel contribution is zero");
    const auto candidate = appearance::weighted_signature(hist, out.window, scheme, Point2::Zero(), params);

    emd::TransportProblem problem{state.target_signature.weights(), candidate.weights(),
                                  appearance::ground_distance_matrix(state.target_signature, candidate, params)};
    const auto flows = emd::solve_emd(problem);
    const auto form = emd::weight_linear_form(problem, flows);
    out.emd = flows.objective;

    // Quotient rule on w = raw / sum(raw): the derivative sums to zero, so the
    // result does not depend on where the dual potentials are pinned.
    const auto dw = appearance::kernel_weight_gradient(hist, Point2::Zero(), params);
    Point2 dw_total = Point2::Zero();
    for (const auto& d : dw) dw_total += d;
    const auto m = form.demand_part();
    const Eigen::VectorXd w = candidate.weights();
    Point2 g = Point2::Zero();
    for (int v = 0; v < candidate.size(); ++v) g += m[v] * (dw[v] - w[v] * dw_total);
    g /= total;
    out.gradient = {g.x() * scheme.window_width / width, g.y() * scheme.window_height / height};
    return out;
}

struct SeedTrace
{
    Seed seed;
    Point2 final_center;
    std::vector<double> emds;   // accepted EMD values, first is the seed's
};

struct TrackResult
{
    BoundingBox box;
    double emd = 0;
    int seed_index = 0;
    GrayImage window;   // normalized window of the returned box
    std::vector<SeedTrace> traces;
};

/**
 * One frame of the iterative EMD search. Each seed walks one pixel at a time
 * against the EMD gradient (8-direction quantized) while the EMD strictly
 * decreases, for at most n_iter steps. The smallest final EMD wins, ties to
 * the lowest seed index. Seeds centered outside the image are skipped.
 */
inline TrackResult track_frame(const TrackerState& state, const GrayImage& image, const Point2& initial_center)
{
    const TrackerConfig& cfg = state.config;
    const Eigen::Vector2d window_to_image(state.box.width / cfg.scheme.window_width,
                                          state.box.height / cfg.scheme.window_height);
    const auto seeds = spawn_seeds(initial_center, cfg, window_to_image);

    TrackResult best;
    bool found = false;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        const Seed& seed = seeds[si];
        SeedTrace trace{seed, seed.center, {}};
        if (!contains(image, seed.center)) {
            best.traces.push_back(trace);
            continue;
        }
        const double w = state.box.width * seed.scale, h = state.box.height * seed.scale;
        Point2 c = seed.center;
        CandidateEvaluation cur = evaluate_candidate(state, image, c, w, h);
        trace.emds.push_back(cur.emd);
        for (int n = 0; n < cfg.n_iter; ++n) {
            const Eigen::Vector2i step = quantize_direction(-cur.gradient);
            if (step.isZero()) break;
            const Point2 next_center = c + step.cast<double>();
            if (!contains(image, next_center)) break;
            CandidateEvaluation next = evaluate_candidate(state, image, next_center, w, h);
            if (!(next.emd < cur.emd)) break;
            c = next_center;
            cur = std::move(next);
            trace.emds.push_back(cur.emd);
        }
        trace.final_center = c;
        if (!found || cur.emd < best.emd) {
            found = true;
            best.emd = cur.emd;
            best.seed_index = static_cast<int>(si);
            best.box = {c, w, h, state.box.scale * seed.scale};
            best.window = std::move(cur.window);
        }
        best.traces.push_back(std::move(trace));
    }
    if (!found) throw OutOfFrame("every seed lies outside the image");
    return best;
}

/**
 * Reconstructs a normalized window from the dictionary: each patch is coded
 * over [Phi, I] and rebuilt from the dictionary coefficients alone, at the
 * patch's original norm and clipped to [0, 1]. Returns the K atom columns.
 */
inline Eigen::MatrixXd reconstruct_template(const appearance::Dictionary& dict, const GrayImage& window, double lambda)
{
    const auto& scheme = dict.scheme();
    const Eigen::MatrixXd& phi = dict.unit_atoms();
    const Eigen::Index d = phi.rows(), n = phi.cols();
    Eigen::MatrixXd gram(n + d, n + d);
    gram << dict.gram(), phi.transpose(), phi, Eigen::MatrixXd::Identity(d, d);

    Eigen::MatrixXd cols(d, scheme.patch_count());
    for (int j = 0; j < scheme.patch_count(); ++j) {
        const Eigen::VectorXd x = appearance::extract_patch(window, scheme, j);
        const double norm = x.norm();
        if (norm == 0) {
            cols.col(j).setZero();
            continue;
        }
        const Eigen::VectorXd xn = x / norm;
        Eigen::VectorXd corr(n + d);
        corr << phi.transpose() * xn, xn;
        const auto code = appearance::solve_nonneg_lasso_gram(gram, corr, lambda);
        cols.col(j) = (phi * code.coefficients.head(n) * norm).cwiseMax(0.0).cwiseMin(1.0);
    }
    return cols;
}

/**
 * Template update rule: the stored weight decays by gamma0^delta_i and is
 * compared with exp(-D*). When the candidate weight is smaller the latest
 * template is replaced by the reconstruction of `tracked_window` and the
 * target model is rebuilt. Returns whether the dictionary changed.
 */
inline bool maybe_update_template(TrackerState& state, const GrayImage& tracked_window, double emd)
{
    const TrackerConfig& cfg = state.config;
    const double candidate = template_update_weight(0, emd, cfg.gamma0);
    const double stored = state.update_weight * std::pow(cfg.gamma0, state.frames_since_update);
    if (!(candidate < stored)) {
        ++state.frames_since_update;
        return false;
    }
    const auto cols = reconstruct_template(state.dictionary, tracked_window, cfg.lambda);
    state.dictionary.replace_template(state.dictionary.templates() - 1, cols);
    state.update_weight = candidate;
    state.frames_since_update = 0;
    state.target_signature = target_model(state.first_template, state.dictionary, cfg);
    return true;
}

inline TrackerState initial_state(const GrayImage& first_frame, const BoundingBox& box, const TrackerConfig& config)
{
    config.validate();
    if (!(box.width > 0 && box.height > 0)) throw DegenerateBox("initial box must have positive size");
    if (!contains(first_frame, box.center)) throw OutOfFrame("initial box center lies outside the first frame");
    const auto& scheme = config.scheme;
    GrayImage window =
        resample_window(first_frame, box.center, box.width, box.height, scheme.window_width, scheme.window_height);
    std::vector<GrayImage> templates{window};
    auto dict = appearance::build_dictionary(templates, scheme);
    auto target = target_model(window, dict, config);
    return TrackerState{box, std::move(dict), std::move(window), std::move(target), 1.0, 0, config};
}

/**
 * Sequence driver. The dictionary starts from the frame-1 window and grows by
 * one tracked window per frame until it holds `templates` entries; from then
 * on the update rule may replace the latest template.
 */
class Tracker
{
    public:
        Tracker(const GrayImage& first_frame, const BoundingBox& box, const TrackerConfig& config)
            : state_(initial_state(first_frame, box, config))
        {}

        TrackResult track(const GrayImage& frame, std::optional<Point2> seed_center = std::nullopt)
        {
            TrackResult result = track_frame(state_, frame, seed_center.value_or(state_.box.center));
            state_.box = result.box;
            if (state_.dictionary.templates() < state_.config.templates) {
                state_.dictionary.append_template(appearance::template_atoms(result.window, state_.config.scheme));
                state_.target_signature = target_model(state_.first_template, state_.dictionary, state_.config);
            } else {
                maybe_update_template(state_, result.window, result.emd);
            }
            return result;
        }

        const TrackerState& state() const { return state_; }

    private:
        TrackerState state_;
};

}   // namespace iemd::tracking
