#include "ego2front/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace ego2front::synth {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

constexpr double kPi = 3.14159265358979323846;

struct Rgb {
    double r, g, b;
    Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
};

const Rgb kSkin = {205, 170, 148};
const Rgb kLips = {155, 70, 75};
const Rgb kMouthInterior = {60, 20, 25};
const Rgb kSclera = {236, 232, 226};
const Rgb kIris = {62, 94, 132};
const Rgb kPupil = {16, 16, 19};
const Rgb kBrow = {74, 52, 40};

// world transform of the head for a given rigid pose: the neutral head faces
// the frontal camera (rotated half a turn about +y), offset by head_distance
Transform head_to_world(const RigidPose& pose, const SceneConfig& scene) {
    Mat3 r0 = Mat3::rot_y(kPi);
    Transform t;
    t.rot = r0 * pose.rotation();
    t.t = Vec3{0, 0, scene.head_distance} + pose.translation;
    return t;
}

struct ShadeResult {
    Rgb color;
    bool hit;
};

// classify a head-local surface point into feature regions and shade it
Rgb shade_surface(const Vec3& p, const FaceState& state, const SceneConfig& scene,
                  bool flat_albedo) {
    const HeadModel& hm = scene.head;
    Vec3 s{p.x / hm.semi_axes.x, p.y / hm.semi_axes.y, p.z / hm.semi_axes.z};
    double lat = std::asin(std::clamp(s.y, -1.0, 1.0));
    double lon = std::atan2(s.x, s.z);

    Rgb color = kSkin;
    if (!flat_albedo) {
        double tex = 1.0 + 0.05 * std::sin(7.0 * lat) * std::sin(9.0 * lon);
        color = color * tex;
    }

    bool classified = false;

    // eyes (lon > 0 is the head's left eye)
    for (int side = -1; side <= 1 && !classified; side += 2) {
        double socket_lon = side * hm.eye_lon;
        double dlon = lon - socket_lon;
        double dlat = lat - hm.eye_lat;
        double socket = (dlon / 0.16) * (dlon / 0.16) +
                        (dlat / hm.eye_half_height) * (dlat / hm.eye_half_height);
        if (socket > 1.0) continue;
        double blink = (side > 0) ? state.blink_left : state.blink_right;
        double lid_edge = hm.eye_lat - hm.eye_half_height + 2.0 * hm.eye_half_height * blink;
        if (lat <= lid_edge) {
            color = kSkin * 0.93;  // eyelid
            classified = true;
            break;
        }
        double ilon = socket_lon + state.gaze_x * hm.gaze_shift;
        double ilat = hm.eye_lat + state.gaze_y * hm.gaze_shift;
        double d2 = (lon - ilon) * (lon - ilon) + (lat - ilat) * (lat - ilat);
        if (d2 <= hm.pupil_radius * hm.pupil_radius) {
            color = kPupil;
        } else if (d2 <= hm.iris_radius * hm.iris_radius) {
            color = kIris;
        } else {
            color = kSclera;
        }
        classified = true;
    }

    // brows
    if (!classified) {
        double brow_lat = hm.brow_lat - hm.brow_raise_shift * state.brow_raise;
        for (int side = -1; side <= 1; side += 2) {
            if (std::abs(lon - side * hm.eye_lon) <= hm.brow_half_len &&
                std::abs(lat - brow_lat) <= hm.brow_half_th) {
                color = kBrow;
                classified = true;
                break;
            }
        }
    }

    // nose, tapering toward the bridge
    if (!classified && lat >= hm.nose_lat_top && lat <= hm.nose_lat_tip) {
        double span = (lat - hm.nose_lat_top) / (hm.nose_lat_tip - hm.nose_lat_top);
        double half = hm.nose_half_lon * (0.35 + 0.65 * span);
        if (std::abs(lon) <= half) {
            color = color * 0.90;
            classified = true;
        }
    }

    // mouth
    if (!classified) {
        double half_lat = hm.mouth_closed_half_lat + hm.mouth_open_half_lat * state.mouth_open;
        double dlon = lon / hm.mouth_half_lon;
        double dlat = (lat - hm.mouth_lat) / half_lat;
        if (dlon * dlon + dlat * dlat <= 1.0) {
            color = kLips;
            if (state.mouth_open > 0.03) {
                double ilat = (lat - hm.mouth_lat) /
                              (0.02 + 0.75 * hm.mouth_open_half_lat * state.mouth_open);
                double ilon = lon / (0.7 * hm.mouth_half_lon);
                if (ilon * ilon + ilat * ilat <= 1.0) color = kMouthInterior;
            }
            classified = true;
        }
    }

    if (!flat_albedo) {
        Vec3 n = Vec3{p.x / (hm.semi_axes.x * hm.semi_axes.x),
                      p.y / (hm.semi_axes.y * hm.semi_axes.y),
                      p.z / (hm.semi_axes.z * hm.semi_axes.z)}
                     .normalized();
        double lambert = std::max(0.0, n.dot(scene.light_dir.normalized()));
        color = color * (0.35 + 0.65 * lambert);
    }
    return color;
}

// nearest ray-ellipsoid intersection in head-local coordinates
bool intersect_head(const Vec3& origin, const Vec3& dir, const HeadModel& hm, Vec3* hit) {
    Vec3 o{origin.x / hm.semi_axes.x, origin.y / hm.semi_axes.y, origin.z / hm.semi_axes.z};
    Vec3 d{dir.x / hm.semi_axes.x, dir.y / hm.semi_axes.y, dir.z / hm.semi_axes.z};
    double a = d.dot(d);
    double b = 2.0 * o.dot(d);
    double c = o.dot(o) - 1.0;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return false;
    double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (t < 1e-9) t = (-b + sq) / (2.0 * a);
    if (t < 1e-9) return false;
    *hit = origin + dir * t;
    return true;
}

uint8_t to_u8(double v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

enum class ViewKind { frontal, egocentric };

void render_view(ViewKind kind, const FaceState& state, const SceneConfig& scene,
                 int resolution, bool flat_albedo, bool black_background, Image* rgb,
                 Image* mask) {
    Transform t_hw = head_to_world(state.rigid_pose, scene);
    Transform t_wh = t_hw.inverse();

    Transform t_cw;  // camera-to-world
    FisheyeCamera fisheye = make_ego_camera(scene, resolution);
    PinholeCamera pinhole = make_frontal_camera(scene, resolution);
    if (kind == ViewKind::egocentric) {
        t_cw = Transform::from_pose(scene.ego_mount).then(t_hw);
    } else {
        t_cw = Transform{Mat3::identity(), Vec3{0, 0, 0}};
    }

    *rgb = Image(resolution, resolution, 3);
    *mask = Image(resolution, resolution, 1);
    const double max_theta = scene.fisheye_fov / 2.0;

#pragma omp parallel for schedule(static)
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            Vec3 dir_cam;
            bool in_lens = true;
            if (kind == ViewKind::egocentric) {
                Vec2 px{static_cast<double>(x), static_cast<double>(y)};
                double dx = px.x - fisheye.principal_point.x;
                double dy = px.y - fisheye.principal_point.y;
                double r = std::sqrt(dx * dx + dy * dy);
                if (r / fisheye.focal >= max_theta) {
                    in_lens = false;
                } else {
                    dir_cam = fisheye_unproject(px, fisheye);
                }
            } else {
                dir_cam = pinhole.unproject({static_cast<double>(x), static_cast<double>(y)});
            }

            Vec3 world_dir = in_lens ? t_cw.apply_dir(dir_cam) : Vec3{0, 0, 1};
            Vec3 hit;
            bool got = false;
            if (in_lens) {
                Vec3 o_local = t_wh.apply(t_cw.t);
                Vec3 d_local = t_wh.apply_dir(world_dir);
                got = intersect_head(o_local, d_local, scene.head, &hit);
            }
            if (got) {
                Rgb c = shade_surface(hit, state, scene, flat_albedo);
                rgb->at(y, x, 0) = to_u8(c.r);
                rgb->at(y, x, 1) = to_u8(c.g);
                rgb->at(y, x, 2) = to_u8(c.b);
                mask->at(y, x) = 255;
            } else {
                uint8_t bg[3] = {0, 0, 0};
                if (!black_background && in_lens) background_pixel(scene, world_dir, bg);
                rgb->at(y, x, 0) = bg[0];
                rgb->at(y, x, 1) = bg[1];
                rgb->at(y, x, 2) = bg[2];
                mask->at(y, x) = 0;
            }
        }
    }
}

}  // namespace

FaceState FaceState::clamped(const Vec3& max_translation) const {
    FaceState s = *this;
    s.mouth_open = clamp01(s.mouth_open);
    s.blink_left = clamp01(s.blink_left);
    s.blink_right = clamp01(s.blink_right);
    s.gaze_x = std::clamp(s.gaze_x, -1.0, 1.0);
    s.gaze_y = std::clamp(s.gaze_y, -1.0, 1.0);
    s.brow_raise = clamp01(s.brow_raise);
    s.rigid_pose.yaw = std::clamp(s.rigid_pose.yaw, -kPi / 2, kPi / 2);
    s.rigid_pose.pitch = std::clamp(s.rigid_pose.pitch, -kPi / 2, kPi / 2);
    s.rigid_pose.roll = std::clamp(s.rigid_pose.roll, -kPi / 2, kPi / 2);
    s.rigid_pose.translation.x =
        std::clamp(s.rigid_pose.translation.x, -max_translation.x, max_translation.x);
    s.rigid_pose.translation.y =
        std::clamp(s.rigid_pose.translation.y, -max_translation.y, max_translation.y);
    s.rigid_pose.translation.z =
        std::clamp(s.rigid_pose.translation.z, -max_translation.z, max_translation.z);
    return s;
}

FisheyeCamera make_ego_camera(const SceneConfig& scene, int resolution) {
    FisheyeCamera cam;
    cam.fov_diagonal = scene.fisheye_fov;
    // the image diagonal spans the full fov: r(fov/2) = half-diagonal
    double half_diag = resolution * std::sqrt(2.0) / 2.0;
    cam.focal = half_diag / (cam.fov_diagonal / 2.0);
    cam.principal_point = {(resolution - 1) / 2.0, (resolution - 1) / 2.0};
    cam.mount_offset = scene.ego_mount;
    cam.validate();
    return cam;
}

PinholeCamera make_frontal_camera(const SceneConfig& scene, int resolution) {
    PinholeCamera cam;
    cam.focal = scene.frontal_focal_scale * resolution;
    cam.principal_point = {(resolution - 1) / 2.0, (resolution - 1) / 2.0};
    return cam;
}

void background_pixel(const SceneConfig& scene, const Vec3& world_dir, uint8_t rgb[3]) {
    if (!scene.textured_background) {
        rgb[0] = rgb[1] = rgb[2] = 0;
        return;
    }
    Rng seed_rng(scene.background_seed, 17);
    double p1 = seed_rng.uniform(0, 2 * kPi);
    double p2 = seed_rng.uniform(0, 2 * kPi);
    double p3 = seed_rng.uniform(0, 2 * kPi);
    Vec3 d = world_dir.normalized();
    rgb[0] = to_u8(128 + 85 * std::sin(4.0 * d.x + 2.3 * d.z + p1));
    rgb[1] = to_u8(128 + 85 * std::sin(3.1 * d.y + 1.9 * d.x + p2));
    rgb[2] = to_u8(128 + 85 * std::sin(2.7 * d.z + 3.7 * d.y + p3));
}

RenderedPair render_pair(const FaceState& raw_state, const SceneConfig& scene, int resolution) {
    require(resolution == 64 || resolution == 128 || resolution == 256,
            ErrorCode::ConfigMismatch, "render_pair: resolution must be 64, 128 or 256");
    FaceState state = raw_state.clamped(scene.max_translation);
    RenderedPair out;
    render_view(ViewKind::egocentric, state, scene, resolution, false,
                !scene.textured_background, &out.ego, &out.ego_mask);
    render_view(ViewKind::frontal, state, scene, resolution, false,
                !scene.textured_background, &out.front, &out.front_mask);
    return out;
}

Image render_neutral_albedo(const RigidPose& pose, const SceneConfig& scene, int resolution) {
    FaceState neutral;
    neutral.rigid_pose = pose;
    Image rgb, mask;
    render_view(ViewKind::frontal, neutral.clamped(scene.max_translation), scene, resolution,
                /*flat_albedo=*/true, /*black_background=*/true, &rgb, &mask);
    return rgb;
}

Image render_head_mask_frontal(const RigidPose& pose, const SceneConfig& scene, int resolution) {
    FaceState neutral;
    neutral.rigid_pose = pose;
    Image rgb, mask;
    render_view(ViewKind::frontal, neutral.clamped(scene.max_translation), scene, resolution,
                true, true, &rgb, &mask);
    return mask;
}

double measure_ego_visibility(const SceneConfig& scene, int resolution) {
    FisheyeCamera cam = make_ego_camera(scene, resolution);
    Transform t_ch = Transform::from_pose(scene.ego_mount);  // camera-to-head
    Transform t_hc = t_ch.inverse();
    const HeadModel& hm = scene.head;

    // fibonacci sphere sampling of the head surface
    const int n = 4000;
    int visible = 0;
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double a = kPi * (1.0 + std::sqrt(5.0)) * i;
        Vec3 s{r * std::cos(a), r * std::sin(a), z};
        Vec3 p{s.x * hm.semi_axes.x, s.y * hm.semi_axes.y, s.z * hm.semi_axes.z};

        Vec3 p_cam = t_hc.apply(p);
        bool ok = p_cam.z > 0;
        if (ok) {
            double theta = std::atan2(std::hypot(p_cam.x, p_cam.y), p_cam.z);
            ok = theta < cam.fov_diagonal / 2;
        }
        if (ok) {
            Vec2 px = fisheye_project(p_cam, cam);
            ok = px.x >= 0 && px.x < resolution && px.y >= 0 && px.y < resolution;
        }
        if (ok) {
            // self-occlusion: the first intersection along the view ray must be p
            Vec3 origin = t_ch.t;
            Vec3 dir = (p - origin).normalized();
            Vec3 hit;
            ok = intersect_head(origin, dir, hm, &hit) && (hit - p).norm() < 1e-6 * 1e3;
            if (ok) ok = (hit - p).norm() < 1e-3;
        }
        if (ok) ++visible;
    }
    return static_cast<double>(visible) / n;
}

ExpressionScript::ExpressionScript(const ScriptConfig& cfg, const SceneConfig& scene,
                                   uint64_t seed)
    : cfg_(cfg), max_translation_(scene.max_translation) {
    Rng rng(seed, 23);
    const double tau = 2 * kPi;
    double rate = cfg.expression_rate;
    // worst-case per-frame wave delta is amp*freq/fps; parameters below keep
    // every channel within max_delta for rate <= 3
    mouth_a_ = {0.45, tau * rng.uniform(0.40, 0.80) * rate, rng.uniform(0, tau), 0.50};
    mouth_b_ = {0.22, tau * rng.uniform(1.00, 1.50) * rate, rng.uniform(0, tau), 0.0};
    gaze_x_ = {rng.uniform(0.4, 0.8), tau * rng.uniform(0.05, 0.20) * rate, rng.uniform(0, tau), 0.0};
    gaze_y_ = {rng.uniform(0.3, 0.6), tau * rng.uniform(0.05, 0.20) * rate, rng.uniform(0, tau), 0.0};
    brow_ = {0.30, tau * rng.uniform(0.10, 0.30) * rate, rng.uniform(0, tau), 0.35};

    double a = cfg.static_pose ? 0.0 : cfg.pose_amplitude;
    yaw_ = {0.35 * a, tau * rng.uniform(0.06, 0.14), rng.uniform(0, tau), 0.0};
    pitch_ = {0.20 * a, tau * rng.uniform(0.06, 0.14), rng.uniform(0, tau), 0.0};
    roll_ = {0.12 * a, tau * rng.uniform(0.05, 0.10), rng.uniform(0, tau), 0.0};
    tx_ = {0.30 * a * max_translation_.x, tau * rng.uniform(0.04, 0.10), rng.uniform(0, tau), 0.0};
    ty_ = {0.25 * a * max_translation_.y, tau * rng.uniform(0.04, 0.10), rng.uniform(0, tau), 0.0};
    tz_ = {0.30 * a * max_translation_.z, tau * rng.uniform(0.03, 0.08), rng.uniform(0, tau), 0.0};

    blink_dur_ = std::max(0.30, 2.2 / (cfg.max_delta * cfg.fps));
    double t = rng.uniform(0.5, 2.5);
    const double horizon = 7200.0;
    while (t < horizon) {
        blink_times_.push_back(t);
        t += rng.uniform(1.5, 4.0);
    }
}

FaceState ExpressionScript::raw_state(double t) const {
    FaceState s;
    s.mouth_open = clamp01(mouth_a_.eval(t) + mouth_b_.eval(t));
    s.gaze_x = gaze_x_.eval(t);
    s.gaze_y = gaze_y_.eval(t);
    s.brow_raise = clamp01(brow_.eval(t));

    double blink = 0.0;
    auto it = std::upper_bound(blink_times_.begin(), blink_times_.end(), t);
    if (it != blink_times_.begin()) {
        double te = *(it - 1);
        double u = (t - te) / blink_dur_;
        if (u >= 0 && u <= 1) blink = 1.0 - std::abs(2.0 * u - 1.0);
    }
    s.blink_left = s.blink_right = blink;

    s.rigid_pose.yaw = yaw_.eval(t);
    s.rigid_pose.pitch = pitch_.eval(t);
    s.rigid_pose.roll = roll_.eval(t);
    s.rigid_pose.translation = {tx_.eval(t), ty_.eval(t), tz_.eval(t)};
    return s;
}

FaceState ExpressionScript::state_at(int64_t frame) const {
    return raw_state(static_cast<double>(frame) / cfg_.fps).clamped(max_translation_);
}

PairedSequence generate_sequence(const std::string& name, const GenerateConfig& cfg,
                                 const std::string& out_dir) {
    require(cfg.length >= 1, ErrorCode::LengthTooShort,
            "generate_sequence: length must be >= 1");

    ExpressionScript script(cfg.script, cfg.scene, cfg.seed);
    PairedSequence seq;
    seq.name = name;
    seq.resolution = cfg.resolution;
    seq.seed = cfg.seed;
    seq.splits = compute_splits(cfg.length, cfg.train_frames, cfg.val_frames);

    Image ego_union;
    for (int64_t f = 0; f < cfg.length; ++f) {
        FaceState state = script.state_at(f);
        RenderedPair rp = render_pair(state, cfg.scene, cfg.resolution);
        if (f == 0) {
            ego_union = rp.ego_mask;
        } else {
            for (size_t i = 0; i < ego_union.data.size(); ++i)
                ego_union.data[i] = std::max(ego_union.data[i], rp.ego_mask.data[i]);
        }
        seq.ego_frames.push_back(std::move(rp.ego));
        seq.front_frames.push_back(std::move(rp.front));
        seq.front_masks.push_back(std::move(rp.front_mask));
        seq.poses.push_back(state.rigid_pose);
        seq.states.push_back(state.expression());
    }
    seq.ego_mask = std::move(ego_union);
    seq.validate();

    if (!out_dir.empty()) {
        nlohmann::json extra;
        FisheyeCamera ego_cam = make_ego_camera(cfg.scene, cfg.resolution);
        PinholeCamera front_cam = make_frontal_camera(cfg.scene, cfg.resolution);
        extra["scene"] = {
            {"head_distance", cfg.scene.head_distance},
            {"textured_background", cfg.scene.textured_background},
            {"fisheye", {{"focal", ego_cam.focal},
                         {"fov_diagonal", ego_cam.fov_diagonal},
                         {"principal_point", {ego_cam.principal_point.x, ego_cam.principal_point.y}},
                         {"mount", {ego_cam.mount_offset.yaw, ego_cam.mount_offset.pitch,
                                    ego_cam.mount_offset.roll, ego_cam.mount_offset.translation.x,
                                    ego_cam.mount_offset.translation.y,
                                    ego_cam.mount_offset.translation.z}}}},
            {"frontal", {{"focal", front_cam.focal},
                         {"principal_point", {front_cam.principal_point.x, front_cam.principal_point.y}}}},
        };
        extra["script"] = {{"pose_amplitude", cfg.script.pose_amplitude},
                           {"expression_rate", cfg.script.expression_rate},
                           {"static_pose", cfg.script.static_pose},
                           {"max_delta", cfg.script.max_delta},
                           {"fps", cfg.script.fps}};
        save_sequence(out_dir + "/" + name, seq, extra.dump());
    }
    return seq;
}

}  // namespace ego2front::synth
