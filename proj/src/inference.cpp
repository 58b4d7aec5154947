#include "ego2front/inference.hpp"

#include <algorithm>

namespace ego2front::infer {

FrameSelect select_from_string(const std::string& s) {
    if (s == "last") return FrameSelect::last;
    if (s == "middle") return FrameSelect::middle;
    raise(ErrorCode::UnknownMode, "unknown frame selection '" + s + "'");
}

Image frame_from_stack(const Tensor<float>& stack, int64_t frame_index) {
    const int64_t plane = 3 * stack.h * stack.w;
    require(frame_index >= 0 && (frame_index + 1) * plane <= stack.numel(),
            ErrorCode::IndexOutOfRange, "frame_from_stack");
    return norm_to_image(stack.data.data() + frame_index * plane, static_cast<int>(stack.h),
                         static_cast<int>(stack.w));
}

namespace {

Tensor<float> assemble_input(const std::vector<Image>& ego, const ConditioningProvider& cond,
                             int64_t start, int64_t n, int resolution) {
    Tensor<float> input(1, 6 * n, resolution, resolution);
    const int64_t plane = 3LL * resolution * resolution;
    for (int64_t i = 0; i < n; ++i) {
        const Image& e = ego[static_cast<size_t>(start + i)];
        require(e.w == resolution && e.h == resolution && e.channels == 3,
                ErrorCode::ConfigMismatch, "ego frame resolution mismatch");
        image_to_norm(e, input.data.data() + i * plane);
        Image c = cond ? cond(start + i) : Image(resolution, resolution, 3);
        require(c.w == resolution && c.h == resolution && c.channels == 3,
                ErrorCode::ConfigMismatch, "conditioning frame resolution mismatch");
        image_to_norm(c, input.data.data() + (n + i) * plane);
    }
    return input;
}

}  // namespace

std::vector<Image> synthesize_windows(const std::vector<Image>& ego,
                                      const ConditioningProvider& cond, int64_t n,
                                      int resolution, const WindowModel& model,
                                      FrameSelect select) {
    const int64_t length = static_cast<int64_t>(ego.size());
    require(length >= n, ErrorCode::SequenceTooShort,
            "synthesize: sequence length " + std::to_string(length) + " < window size " +
                std::to_string(n));

    std::vector<Image> out(static_cast<size_t>(length));
    const int64_t pick = (select == FrameSelect::last) ? n - 1 : n / 2;

    for (int64_t start = 0; start + n <= length; ++start) {
        Tensor<float> pred = model(assemble_input(ego, cond, start, n, resolution));
        require(pred.c == 3 * n && pred.h == resolution && pred.w == resolution,
                ErrorCode::ShapeMismatch, "model output shape " + pred.shape_str());
        out[static_cast<size_t>(start + pick)] = frame_from_stack(pred, pick);
        if (start == 0) {
            // boundary rule: the first window also fills everything before its
            // selected frame
            for (int64_t i = 0; i < pick; ++i)
                out[static_cast<size_t>(i)] = frame_from_stack(pred, i);
        }
        if (start + n == length) {
            // (middle selection only) the final window fills the tail
            for (int64_t i = pick + 1; i < n; ++i)
                out[static_cast<size_t>(start + i)] = frame_from_stack(pred, i);
        }
    }
    return out;
}

namespace {

WindowModel model_from_checkpoint(const train::ModelCheckpoint& ckpt,
                                  std::shared_ptr<nn::Generator<float>>& holder) {
    holder = std::make_shared<nn::Generator<float>>(train::generator_config(ckpt.config));
    train::load_generator(ckpt, *holder);
    auto g = holder;
    return [g](const Tensor<float>& input) { return g->forward(input); };
}

}  // namespace

std::vector<Image> synthesize(const std::vector<Image>& ego, const ConditioningProvider& cond,
                              const train::ModelCheckpoint& ckpt, FrameSelect select) {
    std::shared_ptr<nn::Generator<float>> g;
    WindowModel model = model_from_checkpoint(ckpt, g);
    return synthesize_windows(ego, cond, ckpt.config.n_frames,
                              static_cast<int>(ckpt.config.resolution), model, select);
}

std::vector<Image> synthesize_with_resampled_pose(const std::vector<Image>& ego,
                                                  const std::vector<RigidPose>& training_poses,
                                                  int64_t start_frame,
                                                  const train::ModelCheckpoint& ckpt,
                                                  FrameSelect select) {
    std::vector<RigidPose> track = cond::resample_pose_track(
        training_poses, start_frame, static_cast<int64_t>(ego.size()));
    synth::SceneConfig scene;
    ConditioningProvider cond_fn = train::make_conditioning(ckpt.config, scene, std::move(track));
    return synthesize(ego, cond_fn, ckpt, select);
}

}  // namespace ego2front::infer
