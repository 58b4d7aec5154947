#pragma once

// Pose conditioning renderers. The conditioning image is a function of
// (mode, head model, rigid pose) only; the expression state of the subject
// never enters, which is what decouples pose from expression.

#include <cstdint>
#include <string>
#include <vector>

#include "ego2front/image.hpp"
#include "ego2front/synthgen.hpp"

namespace ego2front::cond {

enum class Mode { neutral_head, landmarks, contours, none };

Mode mode_from_string(const std::string& s);
const char* mode_to_string(Mode m);

struct ConditioningSpec {
    Mode mode = Mode::neutral_head;
    synth::SceneConfig scene;  // head geometry and frontal camera
    std::vector<RigidPose> pose_track;
};

// 68 fixed head-anchored keypoints in head-local coordinates (iBUG-style
// counts: 17 jaw, 2x5 brows, 9 nose, 2x6 eyes, 20 mouth)
std::vector<Vec3> landmark_points(const synth::HeadModel& head);

Image render_conditioning(const ConditioningSpec& spec, int64_t frame_index, int resolution);

// contiguous pose subsequence starting at start_frame; indices beyond the
// available range wrap by reflection
std::vector<RigidPose> resample_pose_track(const std::vector<RigidPose>& training_poses,
                                           int64_t start_frame, int64_t length);

// constant track holding the pose of one training frame
std::vector<RigidPose> static_pose_track(const std::vector<RigidPose>& training_poses,
                                         int64_t frame, int64_t length);

}  // namespace ego2front::cond
