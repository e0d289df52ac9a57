#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iemd/errors.hpp"
#include "iemd/gyro/gyro.hpp"
#include "iemd/harness/metrics.hpp"
#include "iemd/harness/sequence.hpp"
#include "iemd/tracking/tracker.hpp"

namespace iemd::harness {

struct TrackedFrame
{
    Box box;
    double emd = 0;
};

/** Anything that can be run over a sequence: initialized on frame 1, then stepped. */
class SequenceTracker
{
    public:
        virtual ~SequenceTracker() = default;
        virtual void start(const Sequence& seq, const GrayImage& first, const Box& initial) = 0;
        virtual TrackedFrame step(const Sequence& seq, std::size_t index, const GrayImage& frame) = 0;
};

inline Box to_box(const tracking::BoundingBox& b)
{
    const Point2 tl = b.top_left();
    return {tl.x(), tl.y(), b.width, b.height};
}

inline tracking::BoundingBox to_bounding_box(const Box& b)
{
    return tracking::BoundingBox::from_corner(b.x, b.y, b.w, b.h);
}

/**
 * The iEMD tracker. With `use_gyro` each frame is seeded by the gyro
 * prediction from the previous tracked center (re-anchored every frame);
 * otherwise by the previous center.
 */
class IemdSequenceTracker : public SequenceTracker
{
    public:
        IemdSequenceTracker(tracking::TrackerConfig config, bool use_gyro)
            : config_(std::move(config)), use_gyro_(use_gyro)
        {
            config_.validate();
        }

        void start(const Sequence& seq, const GrayImage& first, const Box& initial) override
        {
            if (use_gyro_ && !seq.gyro) throw InvalidConfig("sequence `" + seq.name + "` has no gyro data");
            tracker_ = std::make_unique<tracking::Tracker>(first, to_bounding_box(initial), config_);
        }

        TrackedFrame step(const Sequence& seq, std::size_t index, const GrayImage& frame) override
        {
            std::optional<Point2> seed;
            if (use_gyro_) {
                const auto& g = *seq.gyro;
                const double t0 = g.time_of(seq.frame_indices.at(index - 1));
                const double t1 = g.time_of(seq.frame_indices.at(index));
                seed = gyro::predict_next_center(g.samples, g.intrinsics, t0, t1, tracker_->state().box.center,
                                                 config_.gyro_inverse);
                last_seed_ = *seed;
            }
            const auto result = tracker_->track(frame, seed);
            return {to_box(result.box), result.emd};
        }

        const std::optional<Point2>& last_seed() const { return last_seed_; }

    private:
        tracking::TrackerConfig config_;
        bool use_gyro_;
        std::unique_ptr<tracking::Tracker> tracker_;
        std::optional<Point2> last_seed_;
};

struct FrameRecord
{
    int frame = 0;   // file index
    Box box;
    double emd = 0;
    std::optional<double> overlap;   // absent past the ground truth
};

struct SequenceReport
{
    std::string name;
    std::vector<FrameRecord> frames;
    EvalResult eval;
    double seconds = 0;

    double fps() const { return seconds > 0 ? frames.size() / seconds : 0.0; }
};

using FrameCallback = std::function<void(const Sequence&, std::size_t, const GrayImage&, const FrameRecord&)>;

/**
 * Initializes on the first ground-truth box and runs to the last frame.
 * Frames beyond the ground truth are tracked but left out of the metrics.
 */
inline SequenceReport run_sequence(SequenceTracker& tracker, const Sequence& seq, const FrameCallback& on_frame = {})
{
    seq.validate();
    SequenceReport report;
    report.name = seq.name;
    std::vector<double> overlaps;
    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const GrayImage frame = seq.frame(i);
        FrameRecord rec;
        rec.frame = seq.frame_indices[i];
        if (i == 0) {
            tracker.start(seq, frame, seq.ground_truth[0]);
            rec.box = seq.ground_truth[0];
        } else {
            const TrackedFrame t = tracker.step(seq, i, frame);
            rec.box = t.box;
            rec.emd = t.emd;
        }
        if (i < seq.ground_truth.size()) {
            rec.overlap = relative_overlap(rec.box, seq.ground_truth[i]);
            overlaps.push_back(*rec.overlap);
        }
        if (on_frame) on_frame(seq, i, frame, rec);
        report.frames.push_back(rec);
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report.eval = success_curve(overlaps);
    return report;
}

inline std::vector<SequenceReport> run_benchmark(const tracking::TrackerConfig& config,
                                                 const std::vector<Sequence>& sequences, bool use_gyro = false,
                                                 const FrameCallback& on_frame = {})
{
    std::vector<SequenceReport> out;
    for (const auto& seq : sequences) {
        IemdSequenceTracker tracker(config, use_gyro);
        out.push_back(run_sequence(tracker, seq, on_frame));
    }
    return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}   // namespace detail

inline void write_frames_csv(std::ostream& out, const SequenceReport& report)
{
    using detail::fixed;
    out << "frame,x,y,w,h,emd,overlap\n";
    for (const auto& f : report.frames)
        out << f.frame << ',' << fixed(f.box.x) << ',' << fixed(f.box.y) << ',' << fixed(f.box.w) << ','
            << fixed(f.box.h) << ',' << fixed(f.emd, 9) << ',' << (f.overlap ? fixed(*f.overlap) : "") << '\n';
}

inline void write_curve_csv(std::ostream& out, const EvalResult& eval)
{
    out << "threshold,fraction\n";
    for (const auto& [t, f] : eval.curve) out << detail::fixed(t, 2) << ',' << detail::fixed(f) << '\n';
}

/** fps is written only with `timing`, so that reports stay byte-identical across runs. */
inline void write_summary_csv(std::ostream& out, const std::vector<SequenceReport>& reports, bool timing = false)
{
    out << "sequence,avg_overlap,frames,fps\n";
    for (const auto& r : reports)
        out << r.name << ',' << detail::fixed(r.eval.average) << ',' << r.frames.size() << ','
            << (timing ? detail::fixed(r.fps(), 2) : std::string("-")) << '\n';
}

/** Reads a per-frame CSV written by `write_frames_csv` (the overlap column is ignored). */
inline std::vector<FrameRecord> read_frames_csv(std::istream& in)
{
    std::vector<FrameRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (lineno == 1 && line.rfind("frame", 0) == 0)) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 6) throw ParseError("results line " + std::to_string(lineno) + ": expected frame,x,y,w,h,emd");
        FrameRecord r;
        try {
            r.frame = std::stoi(cells[0]);
            r.box = {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4])};
            r.emd = std::stod(cells[5]);
        } catch (const std::exception&) {
            throw ParseError("results line " + std::to_string(lineno) + ": bad number");
        }
        out.push_back(r);
    }
    return out;
}

/** Overlaps of result rows against ground truth by row order; rows past the ground truth are skipped. */
inline EvalResult evaluate_results(std::vector<FrameRecord>& rows, const std::vector<Box>& truth)
{
    std::vector<double> overlaps;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i >= truth.size()) {
            rows[i].overlap.reset();
            continue;
        }
        rows[i].overlap = relative_overlap(rows[i].box, truth[i]);
        overlaps.push_back(*rows[i].overlap);
    }
    return success_curve(overlaps);
}

}   // namespace iemd::harness
