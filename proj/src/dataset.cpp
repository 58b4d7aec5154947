#include "ego2front/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace ego2front {

Splits compute_splits(int64_t length, int64_t train_frames, int64_t val_frames) {
    require(length >= 3, ErrorCode::LengthTooShort, "compute_splits: need at least 3 frames");
    if (length > train_frames + val_frames) {
        return {train_frames, train_frames + val_frames};
    }
    // too short for the requested counts: proportional 70/20/10 with at least
    // one frame per split
    int64_t train_end = std::max<int64_t>(1, (length * 7) / 10);
    int64_t val_end = std::max(train_end + 1, (length * 9) / 10);
    val_end = std::min(val_end, length - 1);
    train_end = std::min(train_end, val_end - 1);
    return {train_end, val_end};
}

void PairedSequence::validate() const {
    const int64_t L = length();
    require(static_cast<int64_t>(ego_frames.size()) == L &&
                static_cast<int64_t>(front_masks.size()) == L &&
                static_cast<int64_t>(poses.size()) == L,
            ErrorCode::LengthMismatch, "paired sequence: track lengths differ");
    require(splits.train_end > 0 && splits.train_end <= splits.val_end && splits.val_end <= L,
            ErrorCode::ConfigMismatch, "paired sequence: splits out of order");
}

namespace {

void mask_image(Image& frame, const Image& mask) {
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x) {
            if (mask.at(y, x) <= 127) {
                for (int c = 0; c < frame.channels; ++c) frame.at(y, x, c) = 0;
            }
        }
}

std::string frame_name(int64_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06lld.png", static_cast<long long>(index));
    return buf;
}

}  // namespace

PairedSequence apply_masks(const PairedSequence& seq, bool remove_ego_bg) {
    require(!seq.front_masks.empty() && seq.front_masks.size() == seq.front_frames.size(),
            ErrorCode::MaskMissing, "apply_masks: frontal masks missing");
    if (remove_ego_bg)
        require(seq.ego_mask.w > 0, ErrorCode::MaskMissing, "apply_masks: ego mask missing");

    PairedSequence out = seq;
    for (size_t i = 0; i < out.front_frames.size(); ++i)
        mask_image(out.front_frames[i], out.front_masks[i]);
    if (remove_ego_bg) {
        for (auto& f : out.ego_frames) mask_image(f, out.ego_mask);
    }
    return out;
}

std::vector<int64_t> window_starts(int64_t range_begin, int64_t range_end, int64_t n,
                                   int64_t stride) {
    require(n >= 1 && stride >= 1, ErrorCode::ConfigMismatch, "window_starts: n, stride >= 1");
    require(range_end - range_begin >= n, ErrorCode::SplitTooShort,
            "window_starts: split length " + std::to_string(range_end - range_begin) +
                " < window size " + std::to_string(n));
    std::vector<int64_t> starts;
    for (int64_t s = range_begin; s + n <= range_end; s += stride) starts.push_back(s);
    return starts;
}

WindowSampler::WindowSampler(const PairedSequence& seq, Split split, int64_t n,
                             ConditioningProvider cond, int64_t stride)
    : seq_(seq), n_(n), cond_(std::move(cond)) {
    auto [begin, end] = seq.split_range(split);
    starts_ = window_starts(begin, end, n, stride);
}

FrameWindow WindowSampler::window(int64_t index) const {
    require(index >= 0 && index < count(), ErrorCode::IndexOutOfRange,
            "window index " + std::to_string(index));
    return window_at_start(starts_[static_cast<size_t>(index)]);
}

FrameWindow WindowSampler::window_at_start(int64_t start) const {
    const int res = seq_.resolution;
    const int64_t plane = static_cast<int64_t>(res) * res * 3;
    FrameWindow w;
    w.start_index = start;
    w.ego_stack = Tensor<float>(1, 3 * n_, res, res);
    w.cond_stack = Tensor<float>(1, 3 * n_, res, res);
    w.target_stack = Tensor<float>(1, 3 * n_, res, res);
    for (int64_t i = 0; i < n_; ++i) {
        int64_t f = start + i;
        image_to_norm(seq_.ego_frames[static_cast<size_t>(f)], w.ego_stack.data.data() + i * plane);
        image_to_norm(seq_.front_frames[static_cast<size_t>(f)],
                      w.target_stack.data.data() + i * plane);
        Image cond = cond_ ? cond_(f) : Image(res, res, 3);
        require(cond.w == res && cond.h == res && cond.channels == 3, ErrorCode::ShapeMismatch,
                "conditioning frame shape mismatch");
        image_to_norm(cond, w.cond_stack.data.data() + i * plane);
    }
    return w;
}

void save_poses_csv(const std::string& path, const std::vector<RigidPose>& poses) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << "frame,yaw,pitch,roll,tx,ty,tz\n";
    char buf[256];
    for (size_t i = 0; i < poses.size(); ++i) {
        const RigidPose& p = poses[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, p.yaw,
                      p.pitch, p.roll, p.translation.x, p.translation.y, p.translation.z);
        out << buf;
    }
}

std::vector<RigidPose> load_poses_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot read " + path);
    std::vector<RigidPose> poses;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RigidPose p;
        long long frame = 0;
        if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg,%lg,%lg", &frame, &p.yaw, &p.pitch,
                        &p.roll, &p.translation.x, &p.translation.y, &p.translation.z) == 7) {
            poses.push_back(p);
        }
    }
    return poses;
}

namespace {

void save_states_csv(const std::string& path, const std::vector<ExpressionSample>& states) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << "frame,mouth_open,blink_left,blink_right,gaze_x,gaze_y,brow_raise\n";
    char buf[256];
    for (size_t i = 0; i < states.size(); ++i) {
        const ExpressionSample& s = states[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                      s.mouth_open, s.blink_left, s.blink_right, s.gaze_x, s.gaze_y,
                      s.brow_raise);
        out << buf;
    }
}

std::vector<ExpressionSample> load_states_csv(const std::string& path) {
    std::ifstream in(path);
    std::vector<ExpressionSample> states;
    if (!in.good()) return states;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ExpressionSample s;
        long long frame = 0;
        if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg,%lg,%lg", &frame, &s.mouth_open,
                        &s.blink_left, &s.blink_right, &s.gaze_x, &s.gaze_y,
                        &s.brow_raise) == 7) {
            states.push_back(s);
        }
    }
    return states;
}

}  // namespace

void save_sequence(const std::string& dir, const PairedSequence& seq,
                   const std::string& manifest_extra_json) {
    seq.validate();
    fs::create_directories(dir + "/ego");
    fs::create_directories(dir + "/front");
    fs::create_directories(dir + "/masks/ego");
    fs::create_directories(dir + "/masks/front");

    for (int64_t f = 0; f < seq.length(); ++f) {
        save_png(dir + "/ego/" + frame_name(f), seq.ego_frames[static_cast<size_t>(f)]);
        save_png(dir + "/front/" + frame_name(f), seq.front_frames[static_cast<size_t>(f)]);
        save_png(dir + "/masks/front/" + frame_name(f),
                 seq.front_masks[static_cast<size_t>(f)]);
    }
    save_png(dir + "/masks/ego/000000.png", seq.ego_mask);
    save_poses_csv(dir + "/poses.csv", seq.poses);
    if (!seq.states.empty()) save_states_csv(dir + "/states.csv", seq.states);

    nlohmann::json m;
    m["schema_version"] = 1;
    m["name"] = seq.name;
    m["length"] = seq.length();
    m["resolution"] = seq.resolution;
    m["train_end"] = seq.splits.train_end;
    m["val_end"] = seq.splits.val_end;
    m["seed"] = seq.seed;
    if (!manifest_extra_json.empty() && manifest_extra_json != "{}")
        m["extra"] = nlohmann::json::parse(manifest_extra_json);
    std::ofstream out(dir + "/manifest.json");
    require(out.good(), ErrorCode::IoError, "cannot write manifest in " + dir);
    out << m.dump(2) << "\n";
}

std::vector<std::string> list_frame_files(const std::string& dir) {
    require(fs::is_directory(dir), ErrorCode::IoError, "not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

PairedSequence load_sequence(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    require(mf.good(), ErrorCode::IoError, "cannot read manifest in " + dir);
    nlohmann::json m = nlohmann::json::parse(mf);

    PairedSequence seq;
    seq.name = m.value("name", fs::path(dir).filename().string());
    seq.resolution = m.value("resolution", 0);
    seq.seed = m.value("seed", 0);
    seq.splits.train_end = m.value("train_end", 0);
    seq.splits.val_end = m.value("val_end", 0);
    int64_t length = m.value("length", 0);

    for (int64_t f = 0; f < length; ++f) {
        seq.ego_frames.push_back(load_png(dir + "/ego/" + frame_name(f)));
        seq.front_frames.push_back(load_png(dir + "/front/" + frame_name(f)));
        seq.front_masks.push_back(load_png(dir + "/masks/front/" + frame_name(f)));
    }
    seq.ego_mask = load_png(dir + "/masks/ego/000000.png");
    seq.poses = load_poses_csv(dir + "/poses.csv");
    seq.states = load_states_csv(dir + "/states.csv");
    seq.validate();
    return seq;
}

}  // namespace ego2front
