#include "ego2front/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ego2front::train {

void TrainConfig::validate() const {
    require(lr > 0 && beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1,
            ErrorCode::UsageError, "train config: bad optimizer hyperparameters");
    require(batch_size >= 1, ErrorCode::UsageError, "train config: batch_size >= 1");
    require(epochs >= 1, ErrorCode::UsageError, "train config: epochs >= 1");
    require(n_frames >= 1, ErrorCode::UsageError, "train config: n_frames >= 1");
    require(lambda1 >= 0 && lambda2 >= 0, ErrorCode::UsageError,
            "train config: loss weights must be nonnegative");
    require(train_frames >= 0, ErrorCode::UsageError, "train config: train_frames >= 0");
    cond::mode_from_string(cond_mode);
    nn::ExtractorConfig::by_id(extractor_id);
}

std::string TrainConfig::canonical_text() const {
    std::ostringstream s;
    s.precision(17);
    s << "batch_size = " << batch_size << "\n"
      << "beta1 = " << beta1 << "\n"
      << "beta2 = " << beta2 << "\n"
      << "cond_mode = " << cond_mode << "\n"
      << "d_base_channels = " << d_base_channels << "\n"
      << "d_depth = " << d_depth << "\n"
      << "epochs = " << epochs << "\n"
      << "extractor_id = " << extractor_id << "\n"
      << "lambda1 = " << lambda1 << "\n"
      << "lambda2 = " << lambda2 << "\n"
      << "lr = " << lr << "\n"
      << "n_frames = " << n_frames << "\n"
      << "remove_ego_bg = " << (remove_ego_bg ? 1 : 0) << "\n"
      << "resolution = " << resolution << "\n"
      << "seed = " << seed << "\n"
      << "train_frames = " << train_frames << "\n"
      << "use_perceptual = " << (use_perceptual ? 1 : 0) << "\n";
    return s.str();
}

uint64_t TrainConfig::config_hash() const { return hash_string(canonical_text()); }

nn::GeneratorConfig generator_config(const TrainConfig& cfg) {
    return nn::GeneratorConfig::make(cfg.n_frames, cfg.resolution);
}

nn::DiscriminatorConfig discriminator_config(const TrainConfig& cfg) {
    nn::DiscriminatorConfig d;
    d.n_frames = cfg.n_frames;
    d.resolution = cfg.resolution;
    d.depth = cfg.d_depth;
    d.base_channels = cfg.d_base_channels;
    return d;
}

uint64_t ModelCheckpoint::params_hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : g_params) h = hash_span(t.data.data(), t.data.size(), h);
    for (const auto& t : d_params) h = hash_span(t.data.data(), t.data.size(), h);
    return h;
}

template <typename T>
void Adam<T>::step(const std::vector<nn::Parameter<T>*>& params) {
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T corr1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T corr2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T lr = static_cast<T>(lr_), eps = static_cast<T>(eps_);
    for (auto* p : params) {
        if (p->adam_m.numel() != p->value.numel()) {
            p->adam_m = Tensor<T>::zeros_like(p->value);
            p->adam_v = Tensor<T>::zeros_like(p->value);
        }
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            size_t j = static_cast<size_t>(i);
            T g = p->grad.data[j];
            p->adam_m.data[j] = b1 * p->adam_m.data[j] + (T(1) - b1) * g;
            p->adam_v.data[j] = b2 * p->adam_v.data[j] + (T(1) - b2) * g * g;
            T mhat = p->adam_m.data[j] / corr1;
            T vhat = p->adam_v.data[j] / corr2;
            p->value.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template class Adam<float>;
template class Adam<double>;

ConditioningProvider make_conditioning(const TrainConfig& cfg, const synth::SceneConfig& scene,
                                       std::vector<RigidPose> pose_track) {
    cond::Mode mode = cond::mode_from_string(cfg.cond_mode);
    auto spec = std::make_shared<cond::ConditioningSpec>();
    spec->mode = mode;
    spec->scene = scene;
    spec->pose_track = std::move(pose_track);
    auto cache = std::make_shared<std::vector<Image>>(spec->pose_track.size());
    int resolution = static_cast<int>(cfg.resolution);
    return [spec, cache, resolution](int64_t frame) -> Image {
        if (spec->mode == cond::Mode::none) return Image(resolution, resolution, 3);
        require(frame >= 0 && frame < static_cast<int64_t>(spec->pose_track.size()),
                ErrorCode::IndexOutOfRange, "conditioning frame index");
        Image& slot = (*cache)[static_cast<size_t>(frame)];
        if (slot.w == 0) slot = cond::render_conditioning(*spec, frame, resolution);
        return slot;
    };
}

namespace {

void assert_finite(double v, const std::string& what, int64_t epoch, int64_t batch) {
    if (!std::isfinite(v))
        raise(ErrorCode::NonFiniteLoss, "non-finite " + what + " at epoch " +
                                            std::to_string(epoch) + ", batch " +
                                            std::to_string(batch));
}

struct Batch {
    Tensor<float> input;    // (B, 6N, H, W): ego stack over cond stack
    Tensor<float> target;   // (B, 3N, H, W)
};

Batch assemble_batch(const WindowSampler& sampler, const std::vector<int64_t>& starts,
                     size_t first, size_t count) {
    Batch b;
    for (size_t i = 0; i < count; ++i) {
        FrameWindow w = sampler.window_at_start(starts[first + i]);
        if (i == 0) {
            b.input = Tensor<float>(static_cast<int64_t>(count), 2 * w.ego_stack.c,
                                    w.ego_stack.h, w.ego_stack.w);
            b.target = Tensor<float>(static_cast<int64_t>(count), w.target_stack.c,
                                     w.target_stack.h, w.target_stack.w);
        }
        const int64_t half = w.ego_stack.numel();
        std::copy(w.ego_stack.data.begin(), w.ego_stack.data.end(),
                  b.input.sample(static_cast<int64_t>(i)));
        std::copy(w.cond_stack.data.begin(), w.cond_stack.data.end(),
                  b.input.sample(static_cast<int64_t>(i)) + half);
        std::copy(w.target_stack.data.begin(), w.target_stack.data.end(),
                  b.target.sample(static_cast<int64_t>(i)));
    }
    return b;
}

std::vector<Tensor<float>> snapshot_values(const std::vector<nn::Parameter<float>*>& ps) {
    std::vector<Tensor<float>> out;
    out.reserve(ps.size());
    for (auto* p : ps) out.push_back(p->value);
    return out;
}

std::vector<Tensor<float>> snapshot_adam_m(const std::vector<nn::Parameter<float>*>& ps) {
    std::vector<Tensor<float>> out;
    for (auto* p : ps)
        out.push_back(p->adam_m.numel() ? p->adam_m : Tensor<float>::zeros_like(p->value));
    return out;
}

std::vector<Tensor<float>> snapshot_adam_v(const std::vector<nn::Parameter<float>*>& ps) {
    std::vector<Tensor<float>> out;
    for (auto* p : ps)
        out.push_back(p->adam_v.numel() ? p->adam_v : Tensor<float>::zeros_like(p->value));
    return out;
}

}  // namespace

EvalObjective evaluate_objective(nn::Generator<float>& g, nn::Discriminator<float>& d,
                                 nn::FeatureExtractor<float>* extractor,
                                 const WindowSampler& sampler, const TrainConfig& cfg) {
    EvalObjective out;
    const auto& starts = sampler.starts();
    int64_t total_windows = 0;
    for (size_t off = 0; off < starts.size(); off += static_cast<size_t>(cfg.batch_size)) {
        size_t count = std::min(static_cast<size_t>(cfg.batch_size), starts.size() - off);
        Batch batch = assemble_batch(sampler, starts, off, count);
        Tensor<float> fake = g.forward(batch.input);
        Tensor<float> fake_logits = d.forward(concat_channels(batch.input, fake));
        float adv_g = nn::adversarial_losses(fake_logits, fake_logits).loss_g;
        float c = nn::content_loss(fake, batch.target);
        float p = 0.0f;
        if (cfg.use_perceptual && extractor) {
            p = nn::perceptual_loss(nn::stack_as_frames(fake), nn::stack_as_frames(batch.target),
                                    *extractor);
        }
        double obj = adv_g + cfg.lambda1 * c + (cfg.use_perceptual ? cfg.lambda2 * p : 0.0);
        out.total += obj * static_cast<double>(count);
        out.content_only += static_cast<double>(c) * static_cast<double>(count);
        total_windows += static_cast<int64_t>(count);
    }
    if (total_windows > 0) {
        out.total /= static_cast<double>(total_windows);
        out.content_only /= static_cast<double>(total_windows);
    }
    return out;
}

TrainResult train(const PairedSequence& raw_seq, const TrainConfig& cfg,
                  const std::string& out_dir, const ProgressFn& progress) {
    cfg.validate();
    require(raw_seq.resolution == cfg.resolution, ErrorCode::ConfigMismatch,
            "train: sequence resolution " + std::to_string(raw_seq.resolution) +
                " != config resolution " + std::to_string(cfg.resolution));

    PairedSequence seq = apply_masks(raw_seq, cfg.remove_ego_bg);
    if (cfg.train_frames > 0 && cfg.train_frames < seq.splits.train_end)
        seq.splits.train_end = cfg.train_frames;  // paper-style training-size ablation

    synth::SceneConfig scene;  // default head geometry; poses come from the data
    ConditioningProvider cond_fn = make_conditioning(cfg, scene, seq.poses);

    WindowSampler train_sampler(seq, Split::train, cfg.n_frames, cond_fn);
    WindowSampler val_sampler(seq, Split::val, cfg.n_frames, cond_fn);
    require(train_sampler.count() >= 1 && val_sampler.count() >= 1, ErrorCode::DatasetTooSmall,
            "train: not enough windows in train/val splits");

    nn::Generator<float> g(generator_config(cfg));
    nn::Discriminator<float> d(discriminator_config(cfg));
    Rng init_rng(cfg.seed, 1);
    g.init(init_rng);
    d.init(init_rng);
    std::unique_ptr<nn::FeatureExtractor<float>> extractor;
    if (cfg.use_perceptual)
        extractor = std::make_unique<nn::FeatureExtractor<float>>(
            nn::ExtractorConfig::by_id(cfg.extractor_id));

    Adam<float> adam_g(cfg.lr, cfg.beta1, cfg.beta2);
    Adam<float> adam_d(cfg.lr, cfg.beta1, cfg.beta2);

    auto g_params = g.params();
    auto d_params = d.params();

    TrainResult result;
    result.best.config = cfg;
    result.best.config_hash = cfg.config_hash();
    double best_val = std::numeric_limits<double>::infinity();

    std::ofstream log;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        log.open(out_dir + "/train_log.csv");
        log << "epoch,loss_d,loss_g,val_score,val_content\n";
    }

    std::vector<int64_t> order = train_sampler.starts();
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(cfg.seed, 100 + static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_ld = 0, epoch_lg = 0;
        int64_t batches = 0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            size_t count = std::min(static_cast<size_t>(cfg.batch_size), order.size() - off);
            Batch batch = assemble_batch(train_sampler, order, off, count);

            Tensor<float> fake = g.forward(batch.input);

            // discriminator step (generator output detached: no G backward)
            d.zero_grad();
            Tensor<float> real_logits = d.forward(concat_channels(batch.input, batch.target));
            d.backward(nn::d_loss_grad_real(real_logits));
            Tensor<float> fake_logits = d.forward(concat_channels(batch.input, fake));
            auto both = nn::adversarial_losses(real_logits, fake_logits);
            d.backward(nn::d_loss_grad_fake(fake_logits));
            assert_finite(both.loss_d, "discriminator loss", epoch, batches);
            adam_d.step(d_params);

            // generator step against the updated discriminator
            g.zero_grad();
            d.zero_grad();  // gradients below flow through D but are discarded
            Tensor<float> fake_logits2 = d.forward(concat_channels(batch.input, fake));
            float adv_g = nn::adversarial_losses(fake_logits2, fake_logits2).loss_g;
            Tensor<float> g_d_in = d.backward(nn::g_loss_grad_fake(fake_logits2));
            Tensor<float> g_cond_part, g_fake;
            split_channels(g_d_in, batch.input.c, g_cond_part, g_fake);

            float content = nn::content_loss(fake, batch.target);
            Tensor<float> g_content = nn::content_loss_backward(
                fake, batch.target, static_cast<float>(cfg.lambda1));
            g_fake.add_(g_content);

            float perc = 0.0f;
            if (extractor) {
                auto [p, gp] = nn::perceptual_loss_with_grad(
                    nn::stack_as_frames(fake), nn::stack_as_frames(batch.target), *extractor,
                    static_cast<float>(cfg.lambda2));
                perc = p;
                // frame view shares the stack's memory order
                gp.b = g_fake.b;
                gp.c = g_fake.c;
                g_fake.add_(gp);
            }
            double loss_g_total = adv_g + cfg.lambda1 * content +
                                  (extractor ? cfg.lambda2 * perc : 0.0);
            assert_finite(loss_g_total, "generator loss", epoch, batches);
            g.backward(g_fake);
            adam_g.step(g_params);

            epoch_ld += both.loss_d;
            epoch_lg += loss_g_total;
            ++batches;
        }

        EvalObjective val = evaluate_objective(g, d, extractor.get(), val_sampler, cfg);
        assert_finite(val.total, "validation score", epoch, -1);

        EpochStats stats{epoch, epoch_ld / std::max<int64_t>(1, batches),
                         epoch_lg / std::max<int64_t>(1, batches), val.total, val.content_only};
        result.history.push_back(stats);
        if (log.is_open()) {
            log << stats.epoch << "," << stats.loss_d << "," << stats.loss_g << ","
                << stats.val_score << "," << stats.val_content << "\n";
            log.flush();
        }
        if (progress) progress(stats);

        if (val.total < best_val) {
            best_val = val.total;
            result.best.epoch = epoch;
            result.best.val_score = val.total;
            result.best.g_params = snapshot_values(g_params);
            result.best.d_params = snapshot_values(d_params);
            result.best.g_adam_m = snapshot_adam_m(g_params);
            result.best.g_adam_v = snapshot_adam_v(g_params);
            result.best.d_adam_m = snapshot_adam_m(d_params);
            result.best.d_adam_v = snapshot_adam_v(d_params);
            result.best.adam_step_g = adam_g.step_count();
            result.best.adam_step_d = adam_d.step_count();
        }
    }

    if (!out_dir.empty()) save_checkpoint(out_dir + "/checkpoint.e2f", result.best);
    return result;
}

const std::vector<std::string>& ablation_modes() {
    static const std::vector<std::string> modes = {
        "no_pose_cond",    "pose_cond_no_ego_bg_removal",
        "no_perceptual",   "extractor_swap",
        "landmarks_cond",  "contours_cond",
        "train_size_5000", "train_size_2500",
        "single_frame_no_cond"};
    return modes;
}

AblationPlan ablate_config(const TrainConfig& base, const std::string& mode) {
    TrainConfig cfg = base;
    if (mode == "no_pose_cond") {
        cfg.cond_mode = "none";
    } else if (mode == "pose_cond_no_ego_bg_removal") {
        cfg.remove_ego_bg = false;
    } else if (mode == "no_perceptual") {
        cfg.use_perceptual = false;
    } else if (mode == "extractor_swap") {
        cfg.extractor_id = "generic_features";
    } else if (mode == "landmarks_cond") {
        cfg.cond_mode = "landmarks";
    } else if (mode == "contours_cond") {
        cfg.cond_mode = "contours";
    } else if (mode == "train_size_5000") {
        cfg.train_frames = 5000;
    } else if (mode == "train_size_2500") {
        cfg.train_frames = 2500;
    } else if (mode == "single_frame_no_cond") {
        cfg.n_frames = 1;
        cfg.cond_mode = "none";
    } else {
        raise(ErrorCode::UnknownMode, "unknown ablation mode '" + mode + "'");
    }
    return {cfg, mode};
}

TrainResult ablate(const PairedSequence& seq, const TrainConfig& base, const std::string& mode,
                   const std::string& out_dir, const ProgressFn& progress) {
    AblationPlan plan = ablate_config(base, mode);
    return train(seq, plan.config, out_dir, progress);
}

}  // namespace ego2front::train
