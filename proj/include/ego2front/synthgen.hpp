#pragma once

// Procedural paired-data generator. An articulated 2.5D head (ellipsoid with
// parametric mouth/eye/brow features on its surface) is ray-cast into a
// frontal pinhole view and a head-mounted lateral fisheye view, producing
// exact masks and ground-truth rigid poses for every frame.

#include <cstdint>
#include <string>
#include <vector>

#include "ego2front/dataset.hpp"
#include "ego2front/geometry.hpp"
#include "ego2front/image.hpp"
#include "ego2front/rng.hpp"

namespace ego2front::synth {

struct FaceState {
    double mouth_open = 0;   // [0,1]
    double blink_left = 0;   // [0,1]
    double blink_right = 0;  // [0,1]
    double gaze_x = 0;       // [-1,1]
    double gaze_y = 0;       // [-1,1]
    double brow_raise = 0;   // [0,1]
    RigidPose rigid_pose;

    FaceState clamped(const Vec3& max_translation) const;

    ExpressionSample expression() const {
        return {mouth_open, blink_left, blink_right, gaze_x, gaze_y, brow_raise};
    }
};

// neutral-head geometry shared by synthgen and the pose-conditioning renderer
struct HeadModel {
    Vec3 semi_axes{0.78, 1.05, 0.92};
    // angular feature layout on the unit sphere (lat down-positive, lon 0 at
    // the face front)
    double eye_lon = 0.38, eye_lat = -0.21;
    double iris_radius = 0.10, pupil_radius = 0.042;
    double eye_half_height = 0.14;
    double gaze_shift = 0.07;
    double brow_lat = -0.42, brow_half_len = 0.17, brow_half_th = 0.045;
    double brow_raise_shift = 0.10;
    double nose_half_lon = 0.10, nose_lat_top = -0.05, nose_lat_tip = 0.16;
    double mouth_lat = 0.52;
    double mouth_half_lon = 0.28;
    double mouth_closed_half_lat = 0.065, mouth_open_half_lat = 0.14;

    Vec3 surface_point(double lat, double lon) const {
        double cl = std::cos(lat);
        return {semi_axes.x * cl * std::sin(lon), semi_axes.y * std::sin(lat),
                semi_axes.z * cl * std::cos(lon)};
    }
    Vec3 nose_tip() const { return surface_point(nose_lat_tip, 0.0); }
};

struct SceneConfig {
    HeadModel head;
    double head_distance = 6.0;        // frontal camera to head center
    double frontal_focal_scale = 1.6;  // focal = scale * resolution
    double fisheye_fov = 3.141592653589793;
    // camera-to-head mount; default gives a strongly distorted partial view
    // with roughly 40% of the head surface invisible to the egocentric camera
    RigidPose ego_mount{-1.046, -0.347, 0.0, {0.95, -0.15, 0.55}};
    Vec3 max_translation{0.8, 0.5, 1.0};
    bool textured_background = false;
    uint64_t background_seed = 11;
    // head-fixed light, so shading carries no pose information of its own
    Vec3 light_dir{0.35, -0.5, 0.8};
};

struct RenderedPair {
    Image ego, front;        // RGB
    Image ego_mask, front_mask;  // gray, 0 or 255
};

FisheyeCamera make_ego_camera(const SceneConfig& scene, int resolution);
PinholeCamera make_frontal_camera(const SceneConfig& scene, int resolution);

// deterministic; both views depict the identical FaceState
RenderedPair render_pair(const FaceState& state, const SceneConfig& scene, int resolution);

// conditioning-style render: expression frozen at neutral, flat albedo, no
// shading; used by the conditioning module
Image render_neutral_albedo(const RigidPose& pose, const SceneConfig& scene, int resolution);
Image render_head_mask_frontal(const RigidPose& pose, const SceneConfig& scene, int resolution);

// background color at a pixel (what a ray miss produces); exposed so tests can
// verify mask exactness against the exact background
void background_pixel(const SceneConfig& scene, const Vec3& world_dir, uint8_t rgb[3]);

// fraction of sampled head-surface points visible in the egocentric view
double measure_ego_visibility(const SceneConfig& scene, int resolution);

// procedural expression and pose schedule
struct ScriptConfig {
    double pose_amplitude = 1.0;     // scales the default yaw/pitch/roll swing
    double expression_rate = 1.0;    // scales expression frequencies
    bool static_pose = false;
    double max_delta = 0.35;         // per-frame state continuity bound
    double fps = 24.0;
};

class ExpressionScript {
  public:
    ExpressionScript(const ScriptConfig& cfg, const SceneConfig& scene, uint64_t seed);
    FaceState state_at(int64_t frame) const;  // continuity enforced internally

  private:
    struct Wave {
        double amp, freq, phase, bias;
        double eval(double t) const { return bias + amp * std::sin(freq * t + phase); }
    };
    ScriptConfig cfg_;
    Vec3 max_translation_;
    Wave mouth_a_, mouth_b_, gaze_x_, gaze_y_, brow_;
    Wave yaw_, pitch_, roll_, tx_, ty_, tz_;
    std::vector<double> blink_times_;
    double blink_dur_ = 0.30;

    FaceState raw_state(double t) const;
};

struct GenerateConfig {
    int64_t length = 0;
    int resolution = 64;
    uint64_t seed = 1;
    int64_t train_frames = 7500;
    int64_t val_frames = 2500;
    ScriptConfig script;
    SceneConfig scene;
};

// renders the full paired sequence and, when out_dir is nonempty, writes the
// on-disk dataset layout
PairedSequence generate_sequence(const std::string& name, const GenerateConfig& cfg,
                                 const std::string& out_dir = "");

}  // namespace ego2front::synth
