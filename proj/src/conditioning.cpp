#include "ego2front/conditioning.hpp"

#include <algorithm>
#include <cmath>

namespace ego2front::cond {

Mode mode_from_string(const std::string& s) {
    if (s == "neutral_head") return Mode::neutral_head;
    if (s == "landmarks") return Mode::landmarks;
    if (s == "contours") return Mode::contours;
    if (s == "none") return Mode::none;
    raise(ErrorCode::UnknownMode, "unknown conditioning mode '" + s + "'");
}

const char* mode_to_string(Mode m) {
    switch (m) {
        case Mode::neutral_head: return "neutral_head";
        case Mode::landmarks: return "landmarks";
        case Mode::contours: return "contours";
        default: return "none";
    }
}

std::vector<Vec3> landmark_points(const synth::HeadModel& hm) {
    std::vector<Vec3> pts;
    pts.reserve(68);
    auto sp = [&](double lat, double lon) { return hm.surface_point(lat, lon); };

    // 17 jaw points: arc from ear to ear through the chin
    for (int i = 0; i < 17; ++i) {
        double u = static_cast<double>(i) / 16.0;        // 0..1 across the face
        double lon = -1.15 + 2.30 * u;
        double lat = 0.18 + 0.72 * std::sin(3.14159265358979 * u);  // dips to the chin
        pts.push_back(sp(lat, lon));
    }
    // 2x5 brow points
    for (int side = -1; side <= 1; side += 2) {
        for (int i = 0; i < 5; ++i) {
            double u = static_cast<double>(i) / 4.0;
            double lon = side * (hm.eye_lon - hm.brow_half_len) +
                         side * 2.0 * hm.brow_half_len * u;
            double lat = hm.brow_lat - 0.02 * std::sin(3.14159265358979 * u);
            pts.push_back(sp(lat, lon));
        }
    }
    // 9 nose points: 4 down the bridge, 5 across the base
    for (int i = 0; i < 4; ++i) {
        double lat = hm.nose_lat_top + (hm.nose_lat_tip - hm.nose_lat_top) * i / 3.0;
        pts.push_back(sp(lat, 0.0));
    }
    for (int i = 0; i < 5; ++i) {
        double u = static_cast<double>(i) / 4.0;
        pts.push_back(sp(hm.nose_lat_tip + 0.03, -hm.nose_half_lon + 2 * hm.nose_half_lon * u));
    }
    // 2x6 eye points: hexagonal ring per eye
    for (int side = -1; side <= 1; side += 2) {
        for (int i = 0; i < 6; ++i) {
            double a = 2.0 * 3.14159265358979 * i / 6.0;
            double lon = side * hm.eye_lon + 0.13 * std::cos(a);
            double lat = hm.eye_lat + 0.8 * hm.eye_half_height * std::sin(a);
            pts.push_back(sp(lat, lon));
        }
    }
    // 20 mouth points: 12 outer ring, 8 inner ring (neutral, closed)
    for (int i = 0; i < 12; ++i) {
        double a = 2.0 * 3.14159265358979 * i / 12.0;
        pts.push_back(sp(hm.mouth_lat + hm.mouth_closed_half_lat * std::sin(a),
                         hm.mouth_half_lon * std::cos(a)));
    }
    for (int i = 0; i < 8; ++i) {
        double a = 2.0 * 3.14159265358979 * i / 8.0;
        pts.push_back(sp(hm.mouth_lat + 0.5 * hm.mouth_closed_half_lat * std::sin(a),
                         0.6 * hm.mouth_half_lon * std::cos(a)));
    }
    return pts;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

void splat_dot(Image& img, double px, double py, uint8_t value) {
    int cx = static_cast<int>(std::lround(px));
    int cy = static_cast<int>(std::lround(py));
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= img.w || y >= img.h) continue;
            for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = value;
        }
}

Image render_landmarks(const ConditioningSpec& spec, const RigidPose& pose, int resolution) {
    Image img(resolution, resolution, 3);
    PinholeCamera cam = synth::make_frontal_camera(spec.scene, resolution);
    Mat3 r0 = Mat3::rot_y(kPi);
    Transform head{r0 * pose.rotation(),
                   Vec3{0, 0, spec.scene.head_distance} + pose.translation};
    // world-visible points only: the landmark must face the camera
    for (const Vec3& p_local : landmark_points(spec.scene.head)) {
        Vec3 p = head.apply(p_local);
        const auto& ax = spec.scene.head.semi_axes;
        Vec3 n_local{p_local.x / (ax.x * ax.x), p_local.y / (ax.y * ax.y),
                     p_local.z / (ax.z * ax.z)};
        Vec3 n = head.apply_dir(n_local).normalized();
        Vec3 view = (Vec3{0, 0, 0} - p).normalized();
        if (n.dot(view) <= 0.0) continue;  // back-facing
        if (p.z <= 1e-6) continue;
        Vec2 px = cam.project(p);
        if (px.x < 0 || px.y < 0 || px.x >= resolution || px.y >= resolution) continue;
        splat_dot(img, px.x, px.y, 255);
    }
    return img;
}

Image render_contours(const ConditioningSpec& spec, const RigidPose& pose, int resolution) {
    Image mask = synth::render_head_mask_frontal(pose, spec.scene, resolution);
    Image img(resolution, resolution, 3);
    // silhouette polyline: mask pixels with at least one off neighbor
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            if (mask.at(y, x) < 128) continue;
            bool edge = (y == 0 || x == 0 || y == resolution - 1 || x == resolution - 1);
            if (!edge) {
                edge = mask.at(y - 1, x) < 128 || mask.at(y + 1, x) < 128 ||
                       mask.at(y, x - 1) < 128 || mask.at(y, x + 1) < 128;
            }
            if (edge)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = 255;
        }
    return img;
}

}  // namespace

Image render_conditioning(const ConditioningSpec& spec, int64_t frame_index, int resolution) {
    if (spec.mode == Mode::none) return Image(resolution, resolution, 3);
    require(frame_index >= 0 &&
                frame_index < static_cast<int64_t>(spec.pose_track.size()),
            ErrorCode::IndexOutOfRange,
            "render_conditioning: frame " + std::to_string(frame_index) + " outside pose track");
    const RigidPose& pose = spec.pose_track[static_cast<size_t>(frame_index)];
    switch (spec.mode) {
        case Mode::neutral_head:
            return synth::render_neutral_albedo(pose, spec.scene, resolution);
        case Mode::landmarks:
            return render_landmarks(spec, pose, resolution);
        case Mode::contours:
            return render_contours(spec, pose, resolution);
        default:
            return Image(resolution, resolution, 3);
    }
}

namespace {

// reflection (mirror) indexing over [0, n-1]
int64_t reflect_index(int64_t i, int64_t n) {
    if (n == 1) return 0;
    int64_t period = 2 * (n - 1);
    int64_t m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

}  // namespace

std::vector<RigidPose> resample_pose_track(const std::vector<RigidPose>& training_poses,
                                           int64_t start_frame, int64_t length) {
    require(!training_poses.empty(), ErrorCode::EmptyPoseSet, "resample_pose_track: no poses");
    require(length >= 0, ErrorCode::UsageError, "resample_pose_track: negative length");
    std::vector<RigidPose> track;
    track.reserve(static_cast<size_t>(length));
    const int64_t n = static_cast<int64_t>(training_poses.size());
    for (int64_t i = 0; i < length; ++i)
        track.push_back(training_poses[static_cast<size_t>(reflect_index(start_frame + i, n))]);
    return track;
}

std::vector<RigidPose> static_pose_track(const std::vector<RigidPose>& training_poses,
                                         int64_t frame, int64_t length) {
    require(!training_poses.empty(), ErrorCode::EmptyPoseSet, "static_pose_track: no poses");
    const int64_t n = static_cast<int64_t>(training_poses.size());
    require(frame >= 0 && frame < n, ErrorCode::IndexOutOfRange, "static_pose_track: frame");
    return std::vector<RigidPose>(static_cast<size_t>(length),
                                  training_poses[static_cast<size_t>(frame)]);
}

}  // namespace ego2front::cond
