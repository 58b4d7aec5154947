// ego2front: egocentric-to-frontal video translation pipeline.
//
// Subcommands: synth-data, sync, prepare, train, ablate, infer, eval, bench.
// Exit codes: 0 ok, 2 usage error, 3 data error, 4 runtime failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "ego2front/evalharness.hpp"
#include "ego2front/inference.hpp"
#include "ego2front/runconfig.hpp"
#include "ego2front/sync.hpp"
#include "ego2front/synthgen.hpp"

namespace fs = std::filesystem;
using namespace ego2front;

namespace {

std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

cfg::RunManifest base_manifest(const std::string& command, int argc, char** argv) {
    cfg::RunManifest m;
    m.command = command;
    for (int i = 0; i < argc; ++i) m.args.push_back(argv[i]);
    m.timestamp = now_iso8601();
    return m;
}

std::vector<Image> load_frames(const std::string& dir) {
    std::vector<Image> frames;
    for (const auto& f : list_frame_files(dir)) frames.push_back(load_png(f));
    require(!frames.empty(), ErrorCode::IoError, "no PNG frames in " + dir);
    return frames;
}

void apply_mask_inplace(Image& frame, const Image& mask) {
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x)
            if (mask.at(y, x) <= 127)
                for (int c = 0; c < frame.channels; ++c) frame.at(y, x, c) = 0;
}

void write_frames(const std::string& dir, const std::vector<Image>& frames) {
    fs::create_directories(dir);
    char name[32];
    for (size_t i = 0; i < frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        save_png(dir + "/" + name, frames[i]);
    }
}

struct TrainCliArgs {
    std::string config_path, data_dir, out_dir;
    // flag overrides; applied only when the flag was given
    int64_t epochs = 0, n_frames = 0, batch_size = 0, resolution = 0, train_frames = -1;
    uint64_t seed = 0;
    std::string cond_mode, extractor_id;
    double lr = 0;
};

train::TrainConfig resolve_train_config(const CLI::App* sub, const TrainCliArgs& a) {
    train::TrainConfig c;
    if (!a.config_path.empty()) c = cfg::train_config_from(cfg::load_config_file(a.config_path));
    if (sub->count("--epochs")) c.epochs = a.epochs;
    if (sub->count("--n-frames")) c.n_frames = a.n_frames;
    if (sub->count("--batch-size")) c.batch_size = a.batch_size;
    if (sub->count("--resolution")) c.resolution = a.resolution;
    if (sub->count("--seed")) c.seed = a.seed;
    if (sub->count("--cond")) c.cond_mode = a.cond_mode;
    if (sub->count("--extractor")) c.extractor_id = a.extractor_id;
    if (sub->count("--lr")) c.lr = a.lr;
    if (sub->count("--train-frames")) c.train_frames = a.train_frames;
    return c;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"egocentric-to-frontal video translation pipeline"};
    app.require_subcommand(1);

    // ---- synth-data ----
    auto* sd = app.add_subcommand("synth-data", "generate a synthetic paired sequence");
    std::string sd_out, sd_seq = "seq0";
    int64_t sd_length = 500, sd_train = 7500, sd_val = 2500;
    int sd_res = 64;
    uint64_t sd_seed = 1;
    double sd_pose_amp = 1.0, sd_expr_rate = 1.0;
    bool sd_static = false, sd_textured = false;
    sd->add_option("--out", sd_out, "dataset root directory")->required()
        ->envname("EGO2FRONT_DATA_ROOT");
    sd->add_option("--seq", sd_seq, "sequence name");
    sd->add_option("--length", sd_length, "number of frames")->required();
    sd->add_option("--resolution", sd_res, "frame resolution (64/128/256)");
    sd->add_option("--seed", sd_seed, "rng seed");
    sd->add_option("--train-frames", sd_train, "training split size");
    sd->add_option("--val-frames", sd_val, "validation split size");
    sd->add_option("--pose-amplitude", sd_pose_amp, "head pose swing scale");
    sd->add_option("--expression-rate", sd_expr_rate, "expression speed scale");
    sd->add_flag("--static-pose", sd_static, "freeze the head pose");
    sd->add_flag("--textured-bg", sd_textured, "world-anchored textured background");

    // ---- sync ----
    auto* sy = app.add_subcommand("sync", "transient-event alignment of two frame directories");
    std::string sy_a, sy_b, sy_out;
    double sy_threshold = 0.8;
    sy->add_option("--a", sy_a, "first frame directory")->required();
    sy->add_option("--b", sy_b, "second frame directory")->required();
    sy->add_option("--threshold", sy_threshold, "luminance threshold in (0,1)");
    sy->add_option("--out", sy_out, "output manifest path")->required();

    // ---- prepare ----
    auto* pr = app.add_subcommand("prepare", "crop and resize a frame directory");
    std::string pr_in, pr_out;
    std::vector<int> pr_crop;
    int pr_res = 256;
    pr->add_option("--in", pr_in, "input frame directory")->required();
    pr->add_option("--out", pr_out, "output frame directory")->required();
    pr->add_option("--crop", pr_crop, "crop box: x y w h")->expected(4)->required();
    pr->add_option("--res", pr_res, "output resolution");

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train the translation model on one sequence");
    TrainCliArgs ta;
    tr->add_option("--config", ta.config_path, "config file");
    tr->add_option("--data", ta.data_dir, "sequence directory")->required()
        ->envname("EGO2FRONT_DATA_ROOT");
    tr->add_option("--out", ta.out_dir, "checkpoint output directory")->required();
    tr->add_option("--epochs", ta.epochs, "override: epochs");
    tr->add_option("--n-frames", ta.n_frames, "override: window size N");
    tr->add_option("--batch-size", ta.batch_size, "override: batch size");
    tr->add_option("--resolution", ta.resolution, "override: resolution");
    tr->add_option("--seed", ta.seed, "override: seed");
    tr->add_option("--cond", ta.cond_mode, "override: conditioning mode");
    tr->add_option("--extractor", ta.extractor_id, "override: perceptual extractor id");
    tr->add_option("--lr", ta.lr, "override: learning rate");
    tr->add_option("--train-frames", ta.train_frames, "override: training split cap");

    // ---- ablate ----
    auto* ab = app.add_subcommand("ablate", "train with one design choice toggled");
    TrainCliArgs aa;
    std::string ab_mode;
    bool ab_dry = false;
    ab->add_option("--mode", ab_mode, "ablation mode or 'all' with --dry-run")->required();
    ab->add_option("--config", aa.config_path, "config file");
    ab->add_option("--data", aa.data_dir, "sequence directory")->envname("EGO2FRONT_DATA_ROOT");
    ab->add_option("--out", aa.out_dir, "output directory");
    ab->add_flag("--dry-run", ab_dry, "print the modified config without training");
    ab->add_option("--epochs", aa.epochs, "override: epochs");
    ab->add_option("--n-frames", aa.n_frames, "override: window size N");
    ab->add_option("--batch-size", aa.batch_size, "override: batch size");
    ab->add_option("--resolution", aa.resolution, "override: resolution");
    ab->add_option("--seed", aa.seed, "override: seed");
    ab->add_option("--cond", aa.cond_mode, "override: conditioning mode");
    ab->add_option("--extractor", aa.extractor_id, "override: perceptual extractor id");
    ab->add_option("--lr", aa.lr, "override: learning rate");
    ab->add_option("--train-frames", aa.train_frames, "override: training split cap");

    // ---- infer ----
    auto* in = app.add_subcommand("infer", "synthesize frontal frames from egocentric input");
    std::string in_ckpt, in_ego, in_cond = "gt", in_out, in_select = "last", in_poses;
    in->add_option("--ckpt", in_ckpt, "checkpoint file")->required();
    in->add_option("--ego", in_ego, "egocentric frame directory (<seq>/ego)")->required();
    in->add_option("--cond", in_cond, "gt | resample:<start> | static:<frame> | none");
    in->add_option("--out", in_out, "output frame directory")->required();
    in->add_option("--select", in_select, "window frame selection: last | middle");
    in->add_option("--poses", in_poses, "pose csv override (default <seq>/poses.csv)");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "photometric error report between two frame dirs");
    std::string ev_pred, ev_gt, ev_out = "eval_out", ev_gt_masks;
    ev->add_option("--pred", ev_pred, "predicted frame directory")->required();
    ev->add_option("--gt", ev_gt, "ground-truth frame directory")->required();
    ev->add_option("--out", ev_out, "report output directory");
    ev->add_option("--gt-masks", ev_gt_masks, "apply per-frame masks to gt before comparison");

    // ---- bench ----
    auto* be = app.add_subcommand("bench", "latency table over resolutions");
    std::string be_out = "bench_out";
    int64_t be_frames = 60, be_repeats = 5, be_sequences = 3, be_n = 3;
    std::vector<int> be_res = {128, 256};
    be->add_option("--out", be_out, "output directory");
    be->add_option("--frames", be_frames, "frames per sequence (>= 50)");
    be->add_option("--repeats", be_repeats, "repeats per sequence");
    be->add_option("--sequences", be_sequences, "number of sequences");
    be->add_option("--n-frames", be_n, "window size N of the benchmarked model");
    be->add_option("--resolutions", be_res, "resolutions to benchmark");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help for --help (exit 0) or the parse error
        return code == 0 ? 0 : 2;
    }

    if (*sd) {
        synth::GenerateConfig gen;
        gen.length = sd_length;
        gen.resolution = sd_res;
        gen.seed = sd_seed;
        gen.train_frames = sd_train;
        gen.val_frames = sd_val;
        gen.script.pose_amplitude = sd_pose_amp;
        gen.script.expression_rate = sd_expr_rate;
        gen.script.static_pose = sd_static;
        gen.scene.textured_background = sd_textured;
        gen.scene.background_seed = sd_seed;
        PairedSequence seq = synth::generate_sequence(sd_seq, gen, sd_out);
        double vis = synth::measure_ego_visibility(gen.scene, sd_res);
        std::printf("wrote %lld frames to %s/%s (splits %lld/%lld, ego sees %.0f%% of the head)\n",
                    static_cast<long long>(seq.length()), sd_out.c_str(), sd_seq.c_str(),
                    static_cast<long long>(seq.splits.train_end),
                    static_cast<long long>(seq.splits.val_end - seq.splits.train_end),
                    100.0 * vis);
        auto m = base_manifest("synth-data", argc, argv);
        m.seed = sd_seed;
        m.outputs = {sd_out + "/" + sd_seq};
        m.input_hashes[sd_out + "/" + sd_seq + "/manifest.json"] =
            hash_hex(hash_file(sd_out + "/" + sd_seq + "/manifest.json"));
        cfg::write_run_manifest(sd_out + "/" + sd_seq, m);
        return 0;
    }

    if (*sy) {
        std::vector<Image> a = load_frames(sy_a), b = load_frames(sy_b);
        sync::SyncOffset off = sync::align(a, b, sy_threshold);
        sync::AlignedRange range = sync::aligned_range(
            static_cast<int64_t>(a.size()), static_cast<int64_t>(b.size()), off.offset_frames);
        std::printf("offset_frames=%lld confidence=%.3f common=%lld\n",
                    static_cast<long long>(off.offset_frames), off.confidence,
                    static_cast<long long>(range.length));
        fs::create_directories(fs::path(sy_out).parent_path().empty()
                                   ? "."
                                   : fs::path(sy_out).parent_path().string());
        std::ofstream out(sy_out);
        require(out.good(), ErrorCode::IoError, "cannot write " + sy_out);
        out << "{\n  \"offset_frames\": " << off.offset_frames
            << ",\n  \"confidence\": " << off.confidence << ",\n  \"start_a\": " << range.start_a
            << ",\n  \"start_b\": " << range.start_b << ",\n  \"common\": " << range.length
            << "\n}\n";
        return 0;
    }

    if (*pr) {
        CropBox box{pr_crop[0], pr_crop[1], pr_crop[2], pr_crop[3]};
        auto files = list_frame_files(pr_in);
        fs::create_directories(pr_out);
        char name[32];
        for (size_t i = 0; i < files.size(); ++i) {
            Image out = crop_resize(load_png(files[i]), box, pr_res);
            std::snprintf(name, sizeof(name), "%06zu.png", i);
            save_png(pr_out + "/" + std::string(name), out);
        }
        std::printf("prepared %zu frames into %s\n", files.size(), pr_out.c_str());
        return 0;
    }

    auto run_training = [&](const CLI::App* sub, const TrainCliArgs& args,
                            const std::string& ablate_mode) {
        train::TrainConfig tc = resolve_train_config(sub, args);
        PairedSequence seq = load_sequence(args.data_dir);
        auto progress = [](const train::EpochStats& s) {
            std::printf("epoch %lld  loss_D %.4f  loss_G %.4f  val %.4f (content %.4f)\n",
                        static_cast<long long>(s.epoch), s.loss_d, s.loss_g, s.val_score,
                        s.val_content);
            std::fflush(stdout);
        };
        train::TrainResult res;
        std::string tag;
        if (ablate_mode.empty()) {
            res = train::train(seq, tc, args.out_dir, progress);
        } else {
            train::AblationPlan plan = train::ablate_config(tc, ablate_mode);
            tag = plan.tag;
            res = train::train(seq, plan.config, args.out_dir, progress);
            tc = plan.config;
        }
        std::printf("best epoch %lld, validation score %.6f%s\n",
                    static_cast<long long>(res.best.epoch), res.best.val_score,
                    tag.empty() ? "" : ("  [" + tag + "]").c_str());
        auto m = base_manifest(ablate_mode.empty() ? "train" : "ablate", argc, argv);
        m.seed = tc.seed;
        m.config_hash_hex = hash_hex(tc.config_hash());
        m.input_hashes[args.data_dir + "/manifest.json"] =
            hash_hex(hash_file(args.data_dir + "/manifest.json"));
        m.outputs = {args.out_dir + "/checkpoint.e2f", args.out_dir + "/train_log.csv"};
        cfg::write_run_manifest(args.out_dir, m);
    };

    if (*tr) {
        run_training(tr, ta, "");
        return 0;
    }

    if (*ab) {
        if (ab_dry) {
            train::TrainConfig base = resolve_train_config(ab, aa);
            std::vector<std::string> modes =
                ab_mode == "all" ? train::ablation_modes() : std::vector<std::string>{ab_mode};
            for (const auto& mode : modes) {
                train::AblationPlan plan = train::ablate_config(base, mode);
                std::printf("%s: hash %s\n", plan.tag.c_str(),
                            hash_hex(plan.config.config_hash()).c_str());
            }
            return 0;
        }
        require(!aa.data_dir.empty() && !aa.out_dir.empty(), ErrorCode::UsageError,
                "ablate: --data and --out are required unless --dry-run");
        run_training(ab, aa, ab_mode);
        return 0;
    }

    if (*in) {
        train::ModelCheckpoint ckpt = train::load_checkpoint(in_ckpt);
        std::vector<Image> ego = load_frames(in_ego);
        fs::path seq_dir = fs::path(in_ego).parent_path();
        std::string poses_path =
            in_poses.empty() ? (seq_dir / "poses.csv").string() : in_poses;

        if (ckpt.config.remove_ego_bg) {
            std::string mask_path = (seq_dir / "masks" / "ego" / "000000.png").string();
            require(fs::exists(mask_path), ErrorCode::MaskMissing,
                    "checkpoint was trained with ego background removal; mask not found at " +
                        mask_path);
            Image mask = load_png(mask_path);
            for (auto& f : ego) apply_mask_inplace(f, mask);
        }

        std::vector<Image> out_frames;
        if (in_cond == "none") {
            ConditioningProvider none;
            train::TrainConfig cfg_none = ckpt.config;
            require(cfg_none.cond_mode == "none", ErrorCode::ConfigMismatch,
                    "cond=none requested but checkpoint was trained with conditioning");
            out_frames = infer::synthesize(ego, none, ckpt, infer::select_from_string(in_select));
        } else {
            std::vector<RigidPose> poses = load_poses_csv(poses_path);
            require(!poses.empty(), ErrorCode::EmptyPoseSet, "no poses in " + poses_path);
            if (in_cond == "gt") {
                require(poses.size() >= ego.size(), ErrorCode::LengthMismatch,
                        "pose track shorter than the ego sequence");
                synth::SceneConfig scene;
                ConditioningProvider fn = train::make_conditioning(ckpt.config, scene, poses);
                out_frames = infer::synthesize(ego, fn, ckpt, infer::select_from_string(in_select));
            } else if (in_cond.rfind("resample:", 0) == 0) {
                int64_t start = std::stoll(in_cond.substr(9));
                out_frames = infer::synthesize_with_resampled_pose(
                    ego, poses, start, ckpt, infer::select_from_string(in_select));
            } else if (in_cond.rfind("static:", 0) == 0) {
                int64_t frame = std::stoll(in_cond.substr(7));
                std::vector<RigidPose> track = cond::static_pose_track(
                    poses, frame, static_cast<int64_t>(ego.size()));
                synth::SceneConfig scene;
                ConditioningProvider fn =
                    train::make_conditioning(ckpt.config, scene, std::move(track));
                out_frames = infer::synthesize(ego, fn, ckpt, infer::select_from_string(in_select));
            } else {
                raise(ErrorCode::UsageError, "infer: bad --cond value '" + in_cond + "'");
            }
        }
        write_frames(in_out, out_frames);
        std::printf("wrote %zu frames to %s\n", out_frames.size(), in_out.c_str());
        auto m = base_manifest("infer", argc, argv);
        m.seed = ckpt.config.seed;
        m.config_hash_hex = hash_hex(ckpt.config_hash);
        m.input_hashes[in_ckpt] = hash_hex(hash_file(in_ckpt));
        m.outputs = {in_out};
        cfg::write_run_manifest(in_out, m);
        return 0;
    }

    if (*ev) {
        std::vector<Image> pred = load_frames(ev_pred);
        std::vector<Image> gt = load_frames(ev_gt);
        if (!ev_gt_masks.empty()) {
            auto mask_files = list_frame_files(ev_gt_masks);
            require(mask_files.size() == gt.size(), ErrorCode::LengthMismatch,
                    "eval: mask count != gt frame count");
            for (size_t i = 0; i < gt.size(); ++i)
                apply_mask_inplace(gt[i], load_png(mask_files[i]));
        }
        evalh::PhotometricReport rep = evalh::sequence_report(pred, gt);
        evalh::write_report(ev_out, rep);
        std::printf("frames=%zu mean_error=%.6f std=%.6f\n", rep.per_frame_error.size(),
                    rep.mean, rep.stddev);
        auto m = base_manifest("eval", argc, argv);
        m.outputs = {ev_out + "/per_frame_error.csv", ev_out + "/summary.txt",
                     ev_out + "/heatmap.png"};
        cfg::write_run_manifest(ev_out, m);
        return 0;
    }

    if (*be) {
        train::TrainConfig model_cfg;
        model_cfg.n_frames = be_n;
        fs::create_directories(be_out);
        evalh::LatencyTable table = evalh::benchmark_latency(model_cfg, be_res, be_frames,
                                                             be_repeats, be_sequences, be_out);
        std::fputs(evalh::format_latency_table(table).c_str(), stdout);
        evalh::write_latency_table(be_out + "/latency.csv", table);
        auto m = base_manifest("bench", argc, argv);
        m.outputs = {be_out + "/latency.csv"};
        cfg::write_run_manifest(be_out, m);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("EGO2FRONT_THREADS")) {
        setenv("OPENBLAS_NUM_THREADS", threads, 0);
#ifdef _OPENMP
        omp_set_num_threads(std::max(1, std::atoi(threads)));
#endif
    }
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 4;
    }
}
