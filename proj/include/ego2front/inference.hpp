#pragma once

// Test-time synthesis: a sliding window of egocentric views runs through the
// generator; of each window's N predicted frames only the last one is kept
// (frames before N-1 come from the first window). Expressions follow the ego
// input while the head pose follows whatever conditioning track is supplied,
// which is how test-time pose control works.

#include <functional>
#include <vector>

#include "ego2front/conditioning.hpp"
#include "ego2front/dataset.hpp"
#include "ego2front/trainer.hpp"

namespace ego2front::infer {

enum class FrameSelect { last, middle };

FrameSelect select_from_string(const std::string& s);

// model callable: (1, 6N, H, W) input stack -> (1, 3N, H, W) prediction
using WindowModel = std::function<Tensor<float>(const Tensor<float>&)>;

// bookkeeping core, independent of the network implementation
std::vector<Image> synthesize_windows(const std::vector<Image>& ego,
                                      const ConditioningProvider& cond, int64_t n,
                                      int resolution, const WindowModel& model,
                                      FrameSelect select = FrameSelect::last);

// builds the generator from a checkpoint and runs the sliding window
std::vector<Image> synthesize(const std::vector<Image>& ego, const ConditioningProvider& cond,
                              const train::ModelCheckpoint& ckpt,
                              FrameSelect select = FrameSelect::last);

// pose control: conditioning follows a contiguous resample of the training
// pose track starting at start_frame
std::vector<Image> synthesize_with_resampled_pose(const std::vector<Image>& ego,
                                                  const std::vector<RigidPose>& training_poses,
                                                  int64_t start_frame,
                                                  const train::ModelCheckpoint& ckpt,
                                                  FrameSelect select = FrameSelect::last);

Image frame_from_stack(const Tensor<float>& stack, int64_t frame_index);

}  // namespace ego2front::infer
