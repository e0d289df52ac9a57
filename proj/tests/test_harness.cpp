#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "iemd/gyro/gyro.hpp"
#include "iemd/harness/benchmark.hpp"
#include "iemd/harness/dataset.hpp"
#include "iemd/harness/metrics.hpp"
#include "iemd/harness/synthetic.hpp"

using namespace iemd;
using namespace iemd::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("iemd_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

// OTB-style directory with `n` flat frames.
fs::path flat_sequence(const std::string& name, int n, int width, int height, const Box& box)
{
    const fs::path dir = scratch_dir(name);
    fs::create_directories(dir / "img");
    const GrayImage img = GrayImage::Constant(height, width, 0.5);
    std::ostringstream gt;
    char file[16];
    for (int i = 1; i <= n; ++i) {
        std::snprintf(file, sizeof file, "%04d.jpg", i);
        write_gray(dir / "img" / file, img);
        gt << box.x << ',' << box.y << ',' << box.w << ',' << box.h << '\n';
    }
    write_text(dir / "groundtruth_rect.txt", gt.str());
    return dir;
}

class GroundTruthTracker : public SequenceTracker
{
    public:
        void start(const Sequence&, const GrayImage&, const Box&) override {}
        TrackedFrame step(const Sequence& seq, std::size_t i, const GrayImage&) override
        {
            return {seq.ground_truth[i], 0.0};
        }
};

class FrozenTracker : public SequenceTracker
{
    public:
        void start(const Sequence&, const GrayImage&, const Box& initial) override { box_ = initial; }
        TrackedFrame step(const Sequence&, std::size_t, const GrayImage&) override { return {box_, 0.0}; }

    private:
        Box box_;
};

SyntheticSpec small_spec()
{
    SyntheticSpec s;
    s.width = 120;
    s.height = 90;
    s.frames = 6;
    s.patch_x = 30;
    s.patch_y = 25;
    s.patch_size = 30;
    return s;
}

}   // namespace

TEST(RelativeOverlap, Examples)
{
    const Box a{10, 20, 30, 40};
    EXPECT_DOUBLE_EQ(relative_overlap(a, a), 1.0);
    EXPECT_DOUBLE_EQ(relative_overlap(a, Box{100, 100, 5, 5}), 0.0);
    EXPECT_DOUBLE_EQ(relative_overlap(Box{0, 0, 1, 1}, Box{0.5, 0, 1, 1}), 1.0 / 3.0);
}

TEST(RelativeOverlap, TouchingBoxesDoNotOverlap)
{
    EXPECT_DOUBLE_EQ(relative_overlap(Box{0, 0, 2, 2}, Box{2, 0, 2, 2}), 0.0);
}

TEST(RelativeOverlap, SymmetricAndBounded)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> pos(-20, 20), len(0.1, 30);
    for (int i = 0; i < 1000; ++i) {
        const Box a{pos(rng), pos(rng), len(rng), len(rng)}, b{pos(rng), pos(rng), len(rng), len(rng)};
        const double ab = relative_overlap(a, b);
        EXPECT_EQ(ab, relative_overlap(b, a));
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_DOUBLE_EQ(relative_overlap(a, a), 1.0);
    }
}

TEST(RelativeOverlap, DegenerateBoxThrows)
{
    EXPECT_THROW(relative_overlap(Box{0, 0, 0, 1}, Box{0, 0, 1, 1}), DegenerateBox);
    EXPECT_THROW(relative_overlap(Box{0, 0, 1, 1}, Box{0, 0, 1, -2}), DegenerateBox);
}

TEST(SuccessCurve, ThresholdGrid)
{
    const auto t = default_thresholds();
    ASSERT_EQ(t.size(), 101u);
    EXPECT_EQ(t.front(), 0.0);
    EXPECT_EQ(t.back(), 1.0);
    EXPECT_DOUBLE_EQ(t[37], 0.37);
}

TEST(SuccessCurve, AllPerfect)
{
    const auto r = success_curve(std::vector<double>(10, 1.0));
    for (const auto& [t, f] : r.curve) EXPECT_EQ(f, t < 1.0 ? 1.0 : 0.0) << t;
    EXPECT_DOUBLE_EQ(r.average, 1.0);
}

TEST(SuccessCurve, CountsStrictlyAbove)
{
    const auto r = success_curve({0.2, 0.6}, {0.4, 0.6, 0.2});
    EXPECT_DOUBLE_EQ(r.curve[0].second, 0.5);
    EXPECT_DOUBLE_EQ(r.curve[1].second, 0.0);
    EXPECT_DOUBLE_EQ(r.curve[2].second, 0.5);
    EXPECT_DOUBLE_EQ(r.average, 0.4);
}

TEST(SuccessCurve, NonIncreasingAndZeroThresholdCountsPositiveOverlap)
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    std::bernoulli_distribution zero(0.2);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> o(1 + i % 50);
        for (double& v : o) v = zero(rng) ? 0.0 : u(rng);
        const auto r = success_curve(o);
        for (std::size_t k = 1; k < r.curve.size(); ++k) EXPECT_LE(r.curve[k].second, r.curve[k - 1].second);
        const double positive = std::count_if(o.begin(), o.end(), [](double v) { return v > 0; });
        EXPECT_DOUBLE_EQ(r.curve[0].second, positive / o.size());
    }
}

TEST(GroundTruth, ParsesCommaAndTabLines)
{
    std::istringstream in("100,50,30,60\n1\t2\t3\t4\n\n");
    const auto boxes = read_ground_truth(in);
    ASSERT_EQ(boxes.size(), 2u);
    EXPECT_EQ(boxes[0].x, 100);
    EXPECT_EQ(boxes[0].y, 50);
    EXPECT_EQ(boxes[0].w, 30);
    EXPECT_EQ(boxes[0].h, 60);
    EXPECT_EQ(boxes[1].h, 4);
}

TEST(GroundTruth, RejectsBadLines)
{
    std::istringstream three("1,2,3\n");
    EXPECT_THROW(read_ground_truth(three), ParseError);
    std::istringstream word("1,2,x,4\n");
    EXPECT_THROW(read_ground_truth(word), ParseError);
    std::istringstream empty_box("1,2,0,4\n");
    EXPECT_THROW(read_ground_truth(empty_box), DegenerateBox);
}

TEST(LoadSequence, ThreeFrames)
{
    const auto dir = flat_sequence("three", 3, 40, 30, {5, 6, 10, 12});
    write_text(dir / "attrs.txt", "IV,SV OCC\n");
    const Sequence seq = load_sequence(dir);
    EXPECT_EQ(seq.size(), 3u);
    EXPECT_EQ(seq.ground_truth.size(), 3u);
    EXPECT_EQ(seq.frame_indices, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(seq.image_width, 40);
    EXPECT_EQ(seq.image_height, 30);
    EXPECT_EQ(seq.attributes, (std::set<std::string>{"IV", "SV", "OCC"}));
    EXPECT_NEAR(seq.frame(2)(0, 0), 0.5, 1.0 / 255);
    EXPECT_FALSE(seq.gyro.has_value());
}

TEST(LoadSequence, SortsFramesByIndex)
{
    const auto dir = scratch_dir("order");
    fs::create_directories(dir / "img");
    for (const char* f : {"0010.png", "0002.png", "0001.png"})
        write_gray(dir / "img" / f, GrayImage::Constant(4, 4, 0.2));
    write_text(dir / "img" / "notes.txt", "not a frame");
    write_text(dir / "groundtruth_rect.txt", "0,0,2,2\n");
    const Sequence seq = load_sequence(dir);
    EXPECT_EQ(seq.frame_indices, (std::vector<int>{1, 2, 10}));
}

TEST(LoadSequence, Errors)
{
    const auto dir = flat_sequence("errors", 2, 8, 8, {1, 1, 2, 2});
    fs::remove(dir / "groundtruth_rect.txt");
    EXPECT_THROW(load_sequence(dir), MissingGroundTruth);
    EXPECT_THROW(load_sequence(dir / "absent"), MissingGroundTruth);

    write_text(dir / "groundtruth_rect.txt", "1,1,2,2\n1,1,2,2\n1,1,2,2\n");
    EXPECT_THROW(load_sequence(dir), MissingGroundTruth);   // more boxes than frames

    write_text(dir / "groundtruth_rect.txt", "1,1,2,2\n");
    write_text(dir / "img" / "0001.jpg", "garbage");
    EXPECT_THROW(load_sequence(dir), UnreadableImage);
}

TEST(LoadSequence, WalkingMetadata)
{
    const auto dir = flat_sequence("walking", 412, 768, 576, {692, 439, 24, 79});
    const Sequence seq = load_sequence(dir);
    EXPECT_EQ(seq.size(), 412u);
    EXPECT_EQ(seq.image_width, 768);
    EXPECT_EQ(seq.image_height, 576);
    EXPECT_EQ(seq.ground_truth[0].w, 24);
    EXPECT_EQ(seq.ground_truth[0].h, 79);
    EXPECT_EQ(seq.name, "iemd_test_walking");
}

TEST(Synthetic, ZeroMotionGivesIdenticalFrames)
{
    SyntheticSpec s = small_spec();
    s.velocity_x = s.velocity_y = 0;
    s.brightness_drift = 0;
    const Sequence seq = make_synthetic_sequence(s);
    ASSERT_EQ(seq.size(), 6u);
    for (std::size_t k = 1; k < seq.size(); ++k) {
        EXPECT_EQ(seq.frames[k], seq.frames[0]);
        EXPECT_EQ(seq.ground_truth[k].x, seq.ground_truth[0].x);
        EXPECT_EQ(seq.ground_truth[k].y, seq.ground_truth[0].y);
    }
    EXPECT_FALSE(seq.gyro.has_value());
}

TEST(Synthetic, TranslationGivesArithmeticCenters)
{
    SyntheticSpec s;
    s.frames = 30;
    s.velocity_x = 2;
    s.velocity_y = 1;
    const Sequence seq = make_synthetic_sequence(s);
    ASSERT_EQ(seq.ground_truth.size(), 30u);
    for (int k = 0; k < 30; ++k) {
        EXPECT_DOUBLE_EQ(seq.ground_truth[k].center_x(), s.patch_x + 20 + 2.0 * k);
        EXPECT_DOUBLE_EQ(seq.ground_truth[k].center_y(), s.patch_y + 20 + 1.0 * k);
        EXPECT_EQ(seq.ground_truth[k].w, 40);
    }
}

TEST(Synthetic, TargetPixelsFollowTheBox)
{
    SyntheticSpec s = small_spec();
    s.brightness_drift = 0;
    const Sequence seq = make_synthetic_sequence(s);
    // The square moves 2 px/frame: frame k shifted back by 2k matches frame 0 inside the square.
    for (int k = 1; k < 4; ++k)
        for (int r = 26; r < 54; ++r)
            for (int c = 31; c < 59; ++c) EXPECT_DOUBLE_EQ(seq.frames[k](r, c + 2 * k), seq.frames[0](r, c));
}

TEST(Synthetic, BrightnessDriftIsBounded)
{
    SyntheticSpec s = small_spec();
    s.frames = 40;
    s.velocity_x = 0;
    const Sequence seq = make_synthetic_sequence(s);
    SyntheticSpec flat = s;
    flat.brightness_drift = 0;
    const GrayImage base = make_synthetic_sequence(flat).frames[0];
    double lo = 10, hi = 0;
    for (const auto& f : seq.frames) {
        const double ratio = f.sum() / base.sum();
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    EXPECT_GT(lo, 0.899);
    EXPECT_LT(hi, 1.101);
    EXPECT_LT(lo, 0.95);
    EXPECT_GT(hi, 1.05);
}

TEST(Synthetic, RollFramesFollowGyroChain)
{
    SyntheticSpec s;
    s.width = 200;
    s.height = 160;
    s.frames = 8;
    s.patch_x = 120;
    s.patch_y = 50;
    s.velocity_x = s.velocity_y = 0;
    s.brightness_drift = 0;
    s.rotation_deg_per_s = {0, 0, 5};
    s.fx = s.fy = 180;
    s.gyro_rate = 200;
    const Sequence seq = make_synthetic_sequence(s);
    ASSERT_TRUE(seq.gyro.has_value());
    EXPECT_NEAR(seq.gyro->samples[1].timestamp - seq.gyro->samples[0].timestamp, 1.0 / 200, 1e-15);
    EXPECT_GE(seq.gyro->samples.back().timestamp, 7.0 / 30);

    for (int k = 0; k + 1 < s.frames; ++k) {
        const auto& g = *seq.gyro;
        const Eigen::Matrix3d r =
            gyro::quaternion_to_rotation(gyro::integrate_interval(g.samples, g.time_of(k + 1), g.time_of(k + 2)));
        const Eigen::Matrix3d h = gyro::gyro_homography(g.intrinsics, r);
        // Frame k+1 at p equals frame k at H_gyro p.
        double err = 0;
        int n = 0;
        for (int row = 20; row < s.height - 20; ++row)
            for (int col = 20; col < s.width - 20; ++col) {
                const Point2 q = gyro::apply_homography(h, {col + 0.5, row + 0.5});
                err += std::abs(seq.frames[k + 1](row, col) - sample_bilinear(seq.frames[k], q.x(), q.y()));
                ++n;
            }
        EXPECT_LT(err / n, 0.01) << "frame " << k + 1;

        // Ground-truth centers follow the same chain.
        gyro::HomographyState st = gyro::HomographyState::at(
            {seq.ground_truth[k].center_x(), seq.ground_truth[k].center_y()});
        const Point2 p = gyro::predict_center(st, h);
        EXPECT_NEAR(p.x(), seq.ground_truth[k + 1].center_x(), 1e-3);
        EXPECT_NEAR(p.y(), seq.ground_truth[k + 1].center_y(), 1e-3);
    }
}

TEST(Synthetic, TargetLeavingFrameThrows)
{
    SyntheticSpec s = small_spec();
    s.frames = 40;
    EXPECT_THROW(make_synthetic_sequence(s), SpecOutOfBounds);
}

TEST(Synthetic, SpecFile)
{
    std::istringstream in("# scene\nname = roll\nframes = 12\nrate_z_deg = 5\nfx = 400\nvelocity_x = 0\n");
    const auto s = read_synthetic_spec(in);
    EXPECT_EQ(s.name, "roll");
    EXPECT_EQ(s.frames, 12);
    EXPECT_DOUBLE_EQ(s.rotation_deg_per_s.z(), 5);
    EXPECT_DOUBLE_EQ(s.intrinsics().K(0, 0), 400);
    EXPECT_DOUBLE_EQ(s.intrinsics().K(1, 1), 320);
    std::istringstream bad("colour = red\n");
    EXPECT_THROW(read_synthetic_spec(bad), ParseError);
    std::istringstream invalid("frames = 0\n");
    EXPECT_THROW(read_synthetic_spec(invalid), InvalidConfig);
}

TEST(Synthetic, WriteAndLoadRoundTrip)
{
    SyntheticSpec s = small_spec();
    s.frames = 3;
    s.velocity_x = 0;
    s.rotation_deg_per_s = {1, 0, 2};
    s.fx = s.fy = 300;
    const Sequence seq = make_synthetic_sequence(s);
    const auto dir = scratch_dir("roundtrip");
    write_sequence(seq, dir);
    const Sequence back = load_sequence(dir);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_LE((back.frame(1) - seq.frames[1]).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
    EXPECT_NEAR(back.ground_truth[2].x, seq.ground_truth[2].x, 1e-6);
    ASSERT_TRUE(back.gyro.has_value());
    EXPECT_EQ(back.gyro->samples.size(), seq.gyro->samples.size());
    EXPECT_EQ(back.gyro->samples[3].omega, seq.gyro->samples[3].omega);
    EXPECT_EQ(back.gyro->frame_times, seq.gyro->frame_times);
    EXPECT_EQ(back.gyro->intrinsics.K, seq.gyro->intrinsics.K);
}

TEST(Benchmark, GroundTruthTrackerScoresOne)
{
    const Sequence seq = make_synthetic_sequence(small_spec());
    GroundTruthTracker t;
    const auto r = run_sequence(t, seq);
    EXPECT_DOUBLE_EQ(r.eval.average, 1.0);
    ASSERT_EQ(r.frames.size(), 6u);
    EXPECT_EQ(r.frames[0].frame, 1);
}

TEST(Benchmark, FrozenTrackerDecaysToZero)
{
    SyntheticSpec s;
    s.frames = 30;
    s.velocity_x = 2;
    s.velocity_y = 0;
    const Sequence seq = make_synthetic_sequence(s);
    FrozenTracker t;
    const auto r = run_sequence(t, seq);
    for (int k = 0; k < 30; ++k) {
        const double d = 2.0 * k, size = 40;
        const double expect = d < size ? (size - d) / (size + d) : 0.0;
        EXPECT_NEAR(*r.frames[k].overlap, expect, 1e-12) << k;
    }
    EXPECT_EQ(*r.frames.back().overlap, 0.0);
}

TEST(Benchmark, FramesPastGroundTruthAreNotScored)
{
    Sequence seq = make_synthetic_sequence(small_spec());
    seq.ground_truth.resize(4);
    FrozenTracker f;
    const auto r = run_sequence(f, seq);
    EXPECT_EQ(r.frames.size(), 6u);
    EXPECT_EQ(r.eval.overlaps.size(), 4u);
    EXPECT_FALSE(r.frames[5].overlap.has_value());
}

TEST(Benchmark, CsvFormats)
{
    const Sequence seq = make_synthetic_sequence(small_spec());
    FrozenTracker t;
    const auto r = run_sequence(t, seq);

    std::ostringstream frames, curve, summary, timed;
    write_frames_csv(frames, r);
    write_curve_csv(curve, r.eval);
    write_summary_csv(summary, {r});
    write_summary_csv(timed, {r}, true);

    EXPECT_EQ(frames.str().substr(0, frames.str().find('\n')), "frame,x,y,w,h,emd,overlap");
    EXPECT_NE(frames.str().find("\n1,30.000000,25.000000,30.000000,30.000000,0.000000000,1.000000\n"),
              std::string::npos);
    EXPECT_EQ(curve.str().substr(0, 33), "threshold,fraction\n0.00,1.000000\n");
    std::ostringstream expect;
    expect << "sequence,avg_overlap,frames,fps\nsynthetic," << detail::fixed(r.eval.average) << ",6,-\n";
    EXPECT_EQ(summary.str(), expect.str());
    EXPECT_EQ(timed.str().find(",-\n"), std::string::npos);

    std::istringstream in(frames.str());
    auto rows = read_frames_csv(in);
    ASSERT_EQ(rows.size(), 6u);
    const auto eval = evaluate_results(rows, seq.ground_truth);
    EXPECT_DOUBLE_EQ(eval.average, r.eval.average);
}

TEST(Benchmark, IemdRunIsDeterministic)
{
    SyntheticSpec s = small_spec();
    s.frames = 5;
    tracking::TrackerConfig cfg;
    cfg.n_scal = 1;
    cfg.particle_count = 0;
    const std::vector<Sequence> seqs{make_synthetic_sequence(s)};
    std::string out[2];
    for (auto& o : out) {
        const auto reports = run_benchmark(cfg, seqs);
        std::ostringstream csv;
        write_frames_csv(csv, reports[0]);
        write_summary_csv(csv, reports);
        o = csv.str();
    }
    EXPECT_EQ(out[0], out[1]);
}

TEST(Benchmark, GyroModeNeedsGyroData)
{
    const std::vector<Sequence> seqs{make_synthetic_sequence(small_spec())};
    EXPECT_THROW(run_benchmark(tracking::TrackerConfig{}, seqs, true), InvalidConfig);
}
