#include "ego2front/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ego2front/inference.hpp"
#include "ego2front/synthgen.hpp"

namespace fs = std::filesystem;

namespace ego2front::evalh {

namespace {
constexpr double kMaxError = 441.67295593006372;  // 255 * sqrt(3)
}

double photometric_error(const Image& pred, const Image& gt) {
    require(pred.same_shape(gt) && pred.channels == 3, ErrorCode::ShapeMismatch,
            "photometric_error: frames must be RGB of equal size");
    double acc = 0.0;
    const size_t n = static_cast<size_t>(pred.w) * pred.h;
    for (size_t i = 0; i < n; ++i) {
        double dr = static_cast<double>(pred.data[3 * i]) - gt.data[3 * i];
        double dg = static_cast<double>(pred.data[3 * i + 1]) - gt.data[3 * i + 1];
        double db = static_cast<double>(pred.data[3 * i + 2]) - gt.data[3 * i + 2];
        acc += std::sqrt(dr * dr + dg * dg + db * db);
    }
    return acc / static_cast<double>(n);
}

PhotometricReport sequence_report(const std::vector<Image>& pred,
                                  const std::vector<Image>& gt) {
    require(pred.size() == gt.size(), ErrorCode::LengthMismatch,
            "sequence_report: sequence lengths differ");
    require(!pred.empty(), ErrorCode::LengthMismatch, "sequence_report: empty sequences");

    PhotometricReport rep;
    rep.heatmap_w = pred[0].w;
    rep.heatmap_h = pred[0].h;
    rep.heatmap.assign(static_cast<size_t>(rep.heatmap_w) * rep.heatmap_h, 0.0);

    for (size_t f = 0; f < pred.size(); ++f) {
        require(pred[f].same_shape(gt[f]) && pred[f].w == rep.heatmap_w &&
                    pred[f].h == rep.heatmap_h,
                ErrorCode::ShapeMismatch, "sequence_report: frame shape");
        rep.per_frame_error.push_back(photometric_error(pred[f], gt[f]));
        const size_t n = rep.heatmap.size();
        for (size_t i = 0; i < n; ++i) {
            double dr = static_cast<double>(pred[f].data[3 * i]) - gt[f].data[3 * i];
            double dg = static_cast<double>(pred[f].data[3 * i + 1]) - gt[f].data[3 * i + 1];
            double db = static_cast<double>(pred[f].data[3 * i + 2]) - gt[f].data[3 * i + 2];
            rep.heatmap[i] += std::sqrt(dr * dr + dg * dg + db * db);
        }
    }
    for (double& v : rep.heatmap) v /= static_cast<double>(pred.size());

    double sum = 0;
    for (double e : rep.per_frame_error) sum += e;
    rep.mean = sum / static_cast<double>(rep.per_frame_error.size());
    double var = 0;
    for (double e : rep.per_frame_error) var += (e - rep.mean) * (e - rep.mean);
    rep.stddev = std::sqrt(var / static_cast<double>(rep.per_frame_error.size()));
    return rep;
}

Image heatmap_to_image(const PhotometricReport& report) {
    Image img(report.heatmap_w, report.heatmap_h, 1);
    for (size_t i = 0; i < report.heatmap.size(); ++i) {
        double v = report.heatmap[i] / kMaxError * 255.0;
        img.data[i] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return img;
}

void write_report(const std::string& out_dir, const PhotometricReport& report) {
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir + "/per_frame_error.csv");
    require(csv.good(), ErrorCode::IoError, "cannot write report csv");
    csv << "frame,error\n";
    for (size_t i = 0; i < report.per_frame_error.size(); ++i)
        csv << i << "," << report.per_frame_error[i] << "\n";

    std::ofstream summary(out_dir + "/summary.txt");
    summary.precision(10);
    summary << "frames = " << report.per_frame_error.size() << "\n"
            << "mean_error = " << report.mean << "\n"
            << "std_error = " << report.stddev << "\n"
            << "heatmap_colormap = linear grayscale, 0 .. 441.673 -> 0 .. 255\n";
    if (!report.meta.empty()) summary << "meta = " << report.meta << "\n";

    save_png(out_dir + "/heatmap.png", heatmap_to_image(report));
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LatencyTable benchmark_latency(const train::TrainConfig& model_cfg,
                               const std::vector<int>& resolutions, int64_t frames,
                               int64_t repeats, int64_t sequences,
                               const std::string& work_dir) {
    require(frames >= 50, ErrorCode::UsageError, "benchmark_latency: frames must be >= 50");
    LatencyTable table;
    table.frames = frames;
    table.repeats = repeats;
    table.sequences = sequences;
    table.notes = "per-frame wall time of synthesize() including PNG read and write; "
                  "untrained weights (latency is parameter-value independent)";

    for (int res : resolutions) {
        train::TrainConfig cfg = model_cfg;
        cfg.resolution = res;
        nn::Generator<float> g(train::generator_config(cfg));
        Rng rng(cfg.seed, 1);
        g.init(rng);
        infer::WindowModel model = [&g](const Tensor<float>& in) { return g.forward(in); };

        std::vector<double> run_means;
        for (int64_t s = 0; s < sequences; ++s) {
            // materialize the input sequence on disk: reading is part of the cost
            std::string seq_dir = work_dir + "/bench_r" + std::to_string(res) + "_s" +
                                  std::to_string(s);
            synth::GenerateConfig gen;
            gen.length = frames;
            gen.resolution = res;
            gen.seed = 900 + static_cast<uint64_t>(s);
            gen.train_frames = frames / 2;
            gen.val_frames = frames / 4;
            synth::generate_sequence("seq", gen, seq_dir);
            std::string ego_dir = seq_dir + "/seq/ego";
            std::vector<RigidPose> poses = load_poses_csv(seq_dir + "/seq/poses.csv");
            std::string out_frames = seq_dir + "/out";
            fs::create_directories(out_frames);

            synth::SceneConfig scene;
            for (int64_t rep = 0; rep < repeats; ++rep) {
                ConditioningProvider cond_fn =
                    train::make_conditioning(cfg, scene, poses);  // fresh cache per run
                auto files = list_frame_files(ego_dir);
                auto t0 = std::chrono::steady_clock::now();
                std::vector<Image> ego;
                ego.reserve(files.size());
                for (const auto& f : files) ego.push_back(load_png(f));
                std::vector<Image> out = infer::synthesize_windows(
                    ego, cond_fn, cfg.n_frames, res, model, infer::FrameSelect::last);
                for (size_t i = 0; i < out.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof(name), "/%06zu.png", i);
                    save_png(out_frames + name, out[i]);
                }
                auto t1 = std::chrono::steady_clock::now();
                double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                run_means.push_back(ms / static_cast<double>(frames));
            }
        }
        LatencyRow row;
        row.resolution = res;
        double sum = 0;
        for (double v : run_means) sum += v;
        row.mean_ms = sum / static_cast<double>(run_means.size());
        row.median_ms = median_of(run_means);
        double var = 0;
        for (double v : run_means) var += (v - row.mean_ms) * (v - row.mean_ms);
        row.stddev_ms = std::sqrt(var / static_cast<double>(run_means.size()));
        row.realtime = row.mean_ms <= 40.0;
        table.rows.push_back(row);
    }
    return table;
}

std::string format_latency_table(const LatencyTable& table) {
    std::ostringstream s;
    s << "resolution,mean_ms,median_ms,std_ms,realtime_40ms\n";
    char buf[128];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.3f,%.3f,%.3f,%s\n", r.resolution, r.mean_ms,
                      r.median_ms, r.stddev_ms, r.realtime ? "yes" : "no");
        s << buf;
    }
    return s.str();
}

void write_latency_table(const std::string& path, const LatencyTable& table) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write latency table " + path);
    out << format_latency_table(table);
    out << "# frames=" << table.frames << " repeats=" << table.repeats
        << " sequences=" << table.sequences << "\n";
    out << "# " << table.notes << "\n";
}

}  // namespace ego2front::evalh
