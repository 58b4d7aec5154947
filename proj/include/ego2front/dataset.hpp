#pragma once

// Paired-sequence container, on-disk layout I/O, background-mask application
// and N-frame sliding-window sampling.
//
// Layout per sequence directory:
//   ego/%06d.png  front/%06d.png          8-bit RGB frames
//   masks/front/%06d.png                  8-bit gray, per frame
//   masks/ego/000000.png                  8-bit gray, one shared mask
//   poses.csv                             frame,yaw,pitch,roll,tx,ty,tz
//   states.csv                            ground-truth expression track
//   manifest.json                         length, splits, seed, cameras

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ego2front/geometry.hpp"
#include "ego2front/image.hpp"
#include "ego2front/tensor.hpp"

namespace ego2front {

struct Splits {
    int64_t train_end = 0;  // [0, train_end) train
    int64_t val_end = 0;    // [train_end, val_end) val, rest test
};

enum class Split { train, val, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

// 7500/2500/rest when the sequence is long enough, proportional otherwise
Splits compute_splits(int64_t length, int64_t train_frames = 7500, int64_t val_frames = 2500);

// ground-truth expression channels stored alongside poses for probing
struct ExpressionSample {
    double mouth_open = 0;
    double blink_left = 0, blink_right = 0;
    double gaze_x = 0, gaze_y = 0;
    double brow_raise = 0;
};

struct PairedSequence {
    std::string name;
    int resolution = 0;
    std::vector<Image> ego_frames;
    std::vector<Image> front_frames;
    Image ego_mask;                   // one shared mask (see masks/ego/000000.png)
    std::vector<Image> front_masks;   // per frame
    std::vector<RigidPose> poses;
    std::vector<ExpressionSample> states;  // optional, empty when unavailable
    Splits splits;
    uint64_t seed = 0;

    int64_t length() const { return static_cast<int64_t>(front_frames.size()); }

    std::pair<int64_t, int64_t> split_range(Split s) const {
        switch (s) {
            case Split::train: return {0, splits.train_end};
            case Split::val: return {splits.train_end, splits.val_end};
            default: return {splits.val_end, length()};
        }
    }

    void validate() const;
};

// pure transform: frontal background zeroed per frame; ego background zeroed
// with the single shared mask when remove_ego_bg is set
PairedSequence apply_masks(const PairedSequence& seq, bool remove_ego_bg);

// sliding-window plan: start indices of every window of length n inside
// [range_begin, range_end), stride 1 unless stated
std::vector<int64_t> window_starts(int64_t range_begin, int64_t range_end, int64_t n,
                                   int64_t stride = 1);

struct FrameWindow {
    Tensor<float> ego_stack;     // (1, 3N, H, W), normalized to [-1, 1]
    Tensor<float> cond_stack;    // (1, 3N, H, W)
    Tensor<float> target_stack;  // (1, 3N, H, W)
    int64_t start_index = 0;
};

// renders (or looks up) the conditioning image for one frame index
using ConditioningProvider = std::function<Image(int64_t frame)>;

class WindowSampler {
  public:
    WindowSampler(const PairedSequence& seq, Split split, int64_t n,
                  ConditioningProvider cond, int64_t stride = 1);

    int64_t count() const { return static_cast<int64_t>(starts_.size()); }
    const std::vector<int64_t>& starts() const { return starts_; }

    FrameWindow window(int64_t index) const;          // by position in the plan
    FrameWindow window_at_start(int64_t start) const;  // by absolute frame index

  private:
    const PairedSequence& seq_;
    int64_t n_;
    ConditioningProvider cond_;
    std::vector<int64_t> starts_;
};

// sequence directory I/O
void save_sequence(const std::string& dir, const PairedSequence& seq,
                   const std::string& manifest_extra_json = "{}");
PairedSequence load_sequence(const std::string& dir);
std::vector<RigidPose> load_poses_csv(const std::string& path);
void save_poses_csv(const std::string& path, const std::vector<RigidPose>& poses);

// frame-directory helpers shared with the CLI
std::vector<std::string> list_frame_files(const std::string& dir);

}  // namespace ego2front
