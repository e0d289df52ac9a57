#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "iemd/tracking/config.hpp"
#include "iemd/tracking/tracker.hpp"
#include "support/scenes.hpp"

using namespace iemd;
using namespace iemd::tracking;
using testing_support::Texture;
using testing_support::textured_square;

namespace {

double chessboard(const Point2& a, const Point2& b)
{
    return std::max(std::abs(a.x() - b.x()), std::abs(a.y() - b.y()));
}

}   // namespace

TEST(SpawnSeeds, SingleSeed)
{
    TrackerConfig cfg;
    cfg.particle_count = 0;
    cfg.n_scal = 1;
    const auto seeds = spawn_seeds({10, 20}, cfg);
    ASSERT_EQ(seeds.size(), 1u);
    EXPECT_EQ(seeds[0].center, Point2(10, 20));
    EXPECT_EQ(seeds[0].scale, 1.0);
}

TEST(SpawnSeeds, DefaultsGiveFifteenCandidates)
{
    const TrackerConfig cfg;
    const auto seeds = spawn_seeds({50, 50}, cfg);
    ASSERT_EQ(seeds.size(), 15u);
    EXPECT_EQ(seeds[0].scale, 1.0);
    EXPECT_DOUBLE_EQ(seeds[1].scale, 0.98);
    EXPECT_DOUBLE_EQ(seeds[2].scale, 1.02);
    EXPECT_EQ(seeds[3].center, Point2(55, 50));
    EXPECT_EQ(seeds[6].center, Point2(45, 50));
    EXPECT_EQ(seeds[9].center, Point2(50, 55));
    EXPECT_EQ(seeds[12].center, Point2(50, 45));
}

TEST(SpawnSeeds, OffsetsScaleWithTheBox)
{
    TrackerConfig cfg;
    cfg.n_scal = 1;
    const auto seeds = spawn_seeds({0, 0}, cfg, {2.0, 0.5});
    ASSERT_EQ(seeds.size(), 5u);
    EXPECT_EQ(seeds[1].center, Point2(10, 0));
    EXPECT_EQ(seeds[4].center, Point2(0, -2.5));
}

TEST(UpdateWeight, Examples)
{
    EXPECT_EQ(template_update_weight(0, 0.0, 0.95), 1.0);
    EXPECT_DOUBLE_EQ(template_update_weight(1, 0.0, 0.95), 0.95);
}

TEST(UpdateWeight, Monotone)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0.0, 5.0), g(0.01, 0.99);
    std::uniform_int_distribution<int> di(0, 50);
    for (int t = 0; t < 1000; ++t) {
        const double gamma = g(rng), e = d(rng);
        const int i = di(rng);
        EXPECT_GT(template_update_weight(i, e, gamma), template_update_weight(i, e + 0.1, gamma));
        EXPECT_GT(template_update_weight(i, e, gamma), template_update_weight(i + 1, e, gamma));
    }
}

TEST(QuantizeDirection, EightCompassPoints)
{
    EXPECT_EQ(quantize_direction({0, 0}), Eigen::Vector2i(0, 0));
    EXPECT_EQ(quantize_direction({3, 0.1}), Eigen::Vector2i(1, 0));
    EXPECT_EQ(quantize_direction({1, 1.2}), Eigen::Vector2i(1, 1));
    EXPECT_EQ(quantize_direction({-0.1, 2}), Eigen::Vector2i(0, 1));
    EXPECT_EQ(quantize_direction({-2, 1.9}), Eigen::Vector2i(-1, 1));
    EXPECT_EQ(quantize_direction({-1, -0.2}), Eigen::Vector2i(-1, 0));
    EXPECT_EQ(quantize_direction({-1, -1}), Eigen::Vector2i(-1, -1));
    EXPECT_EQ(quantize_direction({0.2, -5}), Eigen::Vector2i(0, -1));
    EXPECT_EQ(quantize_direction({4, -3.9}), Eigen::Vector2i(1, -1));
}

TEST(TrackFrame, StationaryFrameIsAFixedPoint)
{
    const Texture tex(11, 7);
    const GrayImage frame = textured_square(160, 140, tex, 50, 40, 64);
    const auto box = BoundingBox::from_corner(50, 40, 64, 64);
    for (int n_iter : {1, 5}) {
        TrackerConfig cfg;
        cfg.n_iter = n_iter;
        const auto state = initial_state(frame, box, cfg);
        const auto result = track_frame(state, frame, box.center);
        EXPECT_EQ(result.box.center, box.center);
        EXPECT_EQ(result.box.width, box.width);
        EXPECT_LT(result.emd, 1e-6);
    }
}

TEST(TrackFrame, RecoversSmallTranslation)
{
    const Texture tex(12, 7);
    const GrayImage first = textured_square(160, 140, tex, 50, 40, 64);
    const GrayImage second = textured_square(160, 140, tex, 52, 41, 64);
    const auto box = BoundingBox::from_corner(50, 40, 64, 64);
    const auto state = initial_state(first, box, TrackerConfig{});
    const auto result = track_frame(state, second, box.center);
    const Point2 moved = result.box.center - box.center;
    EXPECT_LE((moved - Point2(2, 1)).norm(), 1.0) << moved.transpose();
}

TEST(TrackFrame, SingleIterationMovesAtMostOnePixel)
{
    const Texture tex(13, 7);
    const GrayImage first = textured_square(160, 140, tex, 50, 40, 64);
    const GrayImage second = textured_square(160, 140, tex, 54, 43, 64);
    const auto box = BoundingBox::from_corner(50, 40, 64, 64);
    TrackerConfig cfg;
    cfg.n_iter = 1;
    const auto state = initial_state(first, box, cfg);
    const auto result = track_frame(state, second, box.center);
    ASSERT_EQ(result.traces.size(), 15u);
    for (const auto& trace : result.traces) {
        EXPECT_LE(chessboard(trace.final_center, trace.seed.center), 1.0);
        EXPECT_LE(trace.emds.size(), 2u);
    }
}

TEST(TrackFrame, AcceptedEmdsDecrease)
{
    const Texture tex(14, 6);
    const GrayImage first = textured_square(200, 160, tex, 60, 50, 48);
    const auto box = BoundingBox::from_corner(60, 50, 48, 48);
    TrackerConfig cfg;
    cfg.n_iter = 20;
    const auto state = initial_state(first, box, cfg);
    for (int shift = 1; shift <= 6; ++shift) {
        const GrayImage next = textured_square(200, 160, tex, 60 + shift, 50 - shift / 2.0, 48, 0.5, 1.05);
        const auto result = track_frame(state, next, box.center);
        for (const auto& trace : result.traces) {
            for (std::size_t i = 1; i < trace.emds.size(); ++i) EXPECT_LT(trace.emds[i], trace.emds[i - 1]);
            if (!trace.emds.empty()) {
                EXPECT_LE(result.emd, trace.emds.back());
            }
        }
    }
}

TEST(TrackFrame, Deterministic)
{
    const Texture tex(15, 7);
    const GrayImage first = textured_square(160, 140, tex, 50, 40, 64);
    const GrayImage second = textured_square(160, 140, tex, 53, 38, 64, 0.5, 0.93);
    const auto box = BoundingBox::from_corner(50, 40, 64, 64);
    const auto state = initial_state(first, box, TrackerConfig{});
    const auto a = track_frame(state, second, box.center);
    const auto b = track_frame(state, second, box.center);
    EXPECT_EQ(a.box.center, b.box.center);
    EXPECT_EQ(a.box.width, b.box.width);
    EXPECT_EQ(a.emd, b.emd);
    EXPECT_EQ(a.seed_index, b.seed_index);
}

TEST(TrackFrame, OutOfFrame)
{
    const Texture tex(16, 5);
    const GrayImage frame = textured_square(100, 100, tex, 30, 30, 40);
    const auto box = BoundingBox::from_corner(30, 30, 40, 40);
    TrackerConfig cfg;
    cfg.particle_count = 0;
    const auto state = initial_state(frame, box, cfg);
    EXPECT_THROW(track_frame(state, frame, Point2(-20, 50)), OutOfFrame);
    EXPECT_THROW(initial_state(frame, BoundingBox::from_corner(200, 10, 40, 40), cfg), OutOfFrame);
}

namespace {

TrackerState full_dictionary_state(std::uint64_t seed)
{
    const Texture tex(seed, 6);
    const GrayImage frame = textured_square(120, 120, tex, 30, 30, 48);
    TrackerConfig cfg;
    cfg.templates = 3;
    auto state = initial_state(frame, BoundingBox::from_corner(30, 30, 48, 48), cfg);
    for (int i = 1; i < 3; ++i) {
        const GrayImage shifted = textured_square(120, 120, tex, 30 + i, 30, 48);
        state.dictionary.append_template(appearance::template_atoms(
            resample_window(shifted, state.box.center, 48, 48, 32, 32), cfg.scheme));
    }
    return state;
}

}   // namespace

TEST(TemplateUpdate, PerfectMatchesNeverUpdate)
{
    auto state = full_dictionary_state(21);
    const Eigen::MatrixXd before = state.dictionary.atoms();
    for (int k = 0; k < 20; ++k) EXPECT_FALSE(maybe_update_template(state, state.first_template, 0.0));
    EXPECT_EQ(state.frames_since_update, 20);
    EXPECT_EQ(state.update_weight, 1.0);
    EXPECT_TRUE(state.dictionary.atoms() == before);
}

TEST(TemplateUpdate, FiresWhenCandidateWeightIsSmaller)
{
    auto state = full_dictionary_state(22);
    state.update_weight = 0.5;
    state.frames_since_update = 0;
    const Eigen::MatrixXd before = state.dictionary.atoms();
    const Texture other(99, 6);
    const GrayImage window = textured_square(32, 32, other, 0, 0, 32);
    EXPECT_TRUE(maybe_update_template(state, window, -std::log(0.3)));
    EXPECT_EQ(state.frames_since_update, 0);
    EXPECT_DOUBLE_EQ(state.update_weight, 0.3);

    const int k = state.dictionary.patches_per_template();
    const int kept = (state.dictionary.templates() - 1) * k;
    EXPECT_TRUE(state.dictionary.atoms().leftCols(kept) == before.leftCols(kept));
    EXPECT_FALSE(state.dictionary.atoms().rightCols(k) == before.rightCols(k));
    EXPECT_EQ(state.dictionary.atoms().cols(), before.cols());
    EXPECT_GE(state.dictionary.atoms().minCoeff(), 0.0);
    EXPECT_LE(state.dictionary.atoms().maxCoeff(), 1.0);
    EXPECT_TRUE(state.target_signature.is_normalized());
}

TEST(TemplateUpdate, NoFireKeepsCounting)
{
    auto state = full_dictionary_state(23);
    state.update_weight = 0.5;
    EXPECT_FALSE(maybe_update_template(state, state.first_template, -std::log(0.6)));
    EXPECT_EQ(state.frames_since_update, 1);
    EXPECT_EQ(state.update_weight, 0.5);
}

TEST(TemplateUpdate, ReconstructionOfDictionaryTemplateIsClose)
{
    auto state = full_dictionary_state(24);
    const auto cols = reconstruct_template(state.dictionary, state.first_template, 1e-4);
    const Eigen::MatrixXd original = appearance::template_atoms(state.first_template, state.config.scheme);
    EXPECT_LT((cols - original).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Tracker, BootstrapGrowsDictionaryThenHoldsSize)
{
    const Texture tex(31, 6);
    TrackerConfig cfg;
    cfg.templates = 4;
    Tracker tracker(textured_square(120, 120, tex, 30, 30, 48), BoundingBox::from_corner(30, 30, 48, 48), cfg);
    EXPECT_EQ(tracker.state().dictionary.templates(), 1);
    for (int k = 1; k <= 6; ++k) {
        tracker.track(textured_square(120, 120, tex, 30 + k, 30, 48));
        EXPECT_EQ(tracker.state().dictionary.templates(), std::min(1 + k, 4));
    }
    EXPECT_LE(std::abs(tracker.state().box.center.x() - (54 + 6)), 2.0);
}

TEST(Config, ParsesEveryKeyAndRoundTrips)
{
    std::istringstream in(R"(# tracker settings
n_iter = 7
n_scal = 5
scale_step = 0.03
particle_offsets = 4,0; -4,0   # two particles
lambda = 0.02
alpha = 0.4
bandwidth = 12
gamma0 = 0.9
templates = 6
patch_height = 8
patch_width = 8
patch_step = 4
window_height = 24
window_width = 24
gyro_inverse = false
)");
    const auto cfg = read_config(in);
    EXPECT_EQ(cfg.n_iter, 7);
    EXPECT_EQ(cfg.n_scal, 5);
    EXPECT_EQ(cfg.particle_count, 2);
    EXPECT_EQ(cfg.particle_offsets[1], Point2(-4, 0));
    EXPECT_EQ(cfg.scheme.patch_count(), 25);
    EXPECT_FALSE(cfg.gyro_inverse);
    EXPECT_EQ(spawn_seeds({0, 0}, cfg).size(), 15u);

    std::stringstream buf;
    write_config(buf, cfg);
    const auto back = read_config(buf);
    std::stringstream again;
    write_config(again, back);
    EXPECT_EQ(buf.str(), again.str());
}

TEST(Config, RejectsBadInput)
{
    std::istringstream unknown("n_itr = 3\n");
    EXPECT_THROW(read_config(unknown), ParseError);
    std::istringstream zero("n_iter = 0\n");
    EXPECT_THROW(read_config(zero), InvalidConfig);
    std::istringstream garbage("lambda = 0.1x\n");
    EXPECT_THROW(read_config(garbage), ParseError);
    std::istringstream too_many("particle_count = 5\n");
    EXPECT_THROW(read_config(too_many), InvalidConfig);
}
