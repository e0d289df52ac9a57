// Command-line front end: track, gyro-track, eval, solve-emd, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iemd/emd/io.hpp"
#include "iemd/emd/transport.hpp"
#include "iemd/gyro/io.hpp"
#include "iemd/harness/benchmark.hpp"
#include "iemd/harness/dataset.hpp"
#include "iemd/harness/image_io.hpp"
#include "iemd/harness/synthetic.hpp"
#include "iemd/tracking/config.hpp"

namespace fs = std::filesystem;
using namespace iemd;

namespace {

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open `" + path + "`");
    return in;
}

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write `" + path.string() + "`");
    return out;
}

tracking::TrackerConfig load_config(const std::string& path)
{
    if (path.empty()) return {};
    auto in = open_input(path);
    return tracking::read_config(in);
}

struct TrackOptions
{
    std::string seq, config, out = ".";
    bool annotate = false, timing = false;
};

void write_reports(const TrackOptions& opt, const harness::SequenceReport& report)
{
    const fs::path out = opt.out;
    auto frames = open_output(out / (report.name + "_frames.csv"));
    harness::write_frames_csv(frames, report);
    auto curve = open_output(out / (report.name + "_curve.csv"));
    harness::write_curve_csv(curve, report.eval);
    auto summary = open_output(out / "summary.csv");
    harness::write_summary_csv(summary, {report}, opt.timing);
    std::cout << report.name << ": average overlap " << harness::detail::fixed(report.eval.average, 4) << " over "
              << report.frames.size() << " frames";
    if (opt.timing) std::cout << ", " << harness::detail::fixed(report.fps(), 2) << " fps";
    std::cout << '\n';
}

int run_track(const TrackOptions& opt, std::optional<harness::GyroData> gyro)
{
    const auto config = load_config(opt.config);
    harness::Sequence seq = harness::load_sequence(opt.seq);
    const bool use_gyro = gyro.has_value();
    if (gyro) seq.gyro = std::move(gyro);

    harness::FrameCallback annotate;
    if (opt.annotate) {
        const fs::path dir = fs::path(opt.out) / (seq.name + "_annotated");
        fs::create_directories(dir);
        annotate = [dir](const harness::Sequence& s, std::size_t i, const GrayImage& frame,
                         const harness::FrameRecord& rec) {
            char name[32];
            std::snprintf(name, sizeof name, "%04d.png", rec.frame);
            const harness::Box* truth = i < s.ground_truth.size() ? &s.ground_truth[i] : nullptr;
            harness::write_annotated(dir / name, frame, rec.box, truth);
        };
    }
    harness::IemdSequenceTracker tracker(config, use_gyro);
    write_reports(opt, harness::run_sequence(tracker, seq, annotate));
    return 0;
}

}   // namespace

int main(int argc, char** argv)
{
    CLI::App app{"iEMD visual tracker"};
    app.require_subcommand(1);

    TrackOptions track_opt;
    auto* track = app.add_subcommand("track", "Track a sequence in OTB layout");
    track->add_option("--seq", track_opt.seq, "Sequence directory (img/ + groundtruth_rect.txt)")->required();
    track->add_option("--config", track_opt.config, "Tracker config file (key = value)");
    track->add_option("--out", track_opt.out, "Output directory")->capture_default_str();
    track->add_flag("--annotate", track_opt.annotate, "Write frames with the tracked box");
    track->add_flag("--timing", track_opt.timing, "Report frames per second");

    TrackOptions gyro_opt;
    std::string gyro_log, intrinsics, timestamps;
    auto* gtrack = app.add_subcommand("gyro-track", "Track a sequence with gyro-predicted seeds");
    gtrack->add_option("--seq", gyro_opt.seq, "Sequence directory")->required();
    gtrack->add_option("--gyro", gyro_log, "Gyro CSV: timestamp_s, wx, wy, wz")->required();
    gtrack->add_option("--intrinsics", intrinsics, "Nine reals, row-major K")->required();
    gtrack->add_option("--timestamps", timestamps, "Frame CSV: frame_index, timestamp_s")->required();
    gtrack->add_option("--config", gyro_opt.config, "Tracker config file");
    gtrack->add_option("--out", gyro_opt.out, "Output directory")->capture_default_str();
    gtrack->add_flag("--annotate", gyro_opt.annotate, "Write frames with the tracked box");
    gtrack->add_flag("--timing", gyro_opt.timing, "Report frames per second");

    std::string results, gt, eval_out, eval_name = "results";
    auto* eval = app.add_subcommand("eval", "Score a per-frame results CSV against ground truth");
    eval->add_option("--results", results, "CSV with frame,x,y,w,h,emd[,overlap]")->required();
    eval->add_option("--gt", gt, "Ground truth file (x,y,w,h per line)")->required();
    eval->add_option("--out", eval_out, "Output directory (default: print the summary only)");
    eval->add_option("--name", eval_name, "Sequence name in the summary")->capture_default_str();

    std::string emd_input, emd_out;
    auto* solve = app.add_subcommand("solve-emd", "Solve a transportation problem exactly");
    solve->add_option("--input", emd_input, "Problem file: N_T N_C, supplies, demands, costs")->required();
    solve->add_option("--out", emd_out, "Write the result here instead of stdout");

    std::string spec_file, synth_out;
    auto* synth = app.add_subcommand("synth", "Render a synthetic sequence in OTB layout");
    synth->add_option("--spec", spec_file, "Scene spec (key = value)")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*track) return run_track(track_opt, std::nullopt);

        if (*gtrack) {
            harness::GyroData g;
            auto gi = open_input(gyro_log);
            g.samples = gyro::read_gyro_log(gi);
            auto ki = open_input(intrinsics);
            g.intrinsics = gyro::read_intrinsics(ki);
            auto ti = open_input(timestamps);
            g.frame_times = gyro::read_frame_timestamps(ti);
            return run_track(gyro_opt, std::move(g));
        }

        if (*eval) {
            auto ri = open_input(results);
            auto rows = harness::read_frames_csv(ri);
            auto gi = open_input(gt);
            const auto truth = harness::read_ground_truth(gi);
            harness::SequenceReport report;
            report.name = eval_name;
            report.eval = harness::evaluate_results(rows, truth);
            report.frames = rows;
            if (!eval_out.empty()) {
                const fs::path out = eval_out;
                auto f = open_output(out / (eval_name + "_frames.csv"));
                harness::write_frames_csv(f, report);
                auto c = open_output(out / (eval_name + "_curve.csv"));
                harness::write_curve_csv(c, report.eval);
                auto s = open_output(out / "summary.csv");
                harness::write_summary_csv(s, {report});
            }
            harness::write_summary_csv(std::cout, {report});
            return 0;
        }

        if (*solve) {
            auto in = open_input(emd_input);
            const auto problem = emd::read_problem(in);
            const auto sol = emd::solve_emd(problem);
            const auto form = emd::weight_linear_form(problem, sol);
            std::ofstream file;
            if (!emd_out.empty()) file = open_output(emd_out);
            std::ostream& out = emd_out.empty() ? std::cout : file;
            out << "emd " << emd::format_real(sol.objective) << '\n' << "m_vector";
            for (double m : form.m_vector) out << ' ' << emd::format_real(m);
            out << '\n';
            emd::write_flows(out, sol);
            return 0;
        }

        if (*synth) {
            auto in = open_input(spec_file);
            const auto spec = harness::read_synthetic_spec(in);
            const auto seq = harness::make_synthetic_sequence(spec);
            harness::write_sequence(seq, synth_out);
            std::cout << "wrote " << seq.size() << " frames to " << synth_out << '\n';
            return 0;
        }
    } catch (const iemd::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
