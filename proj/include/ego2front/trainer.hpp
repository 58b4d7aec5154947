#pragma once

// Alternating adversarial optimization with validation-based checkpoint
// selection. One discriminator step and one generator step per batch, Adam
// with first-moment decay 0.5; after each epoch the generator objective is
// evaluated on the validation split against the current frozen discriminator
// and the lowest-scoring epoch's parameters are returned.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ego2front/conditioning.hpp"
#include "ego2front/dataset.hpp"
#include "ego2front/losses.hpp"
#include "ego2front/model.hpp"

namespace ego2front::train {

struct TrainConfig {
    double lr = 0.0002;
    double beta1 = 0.5;   // first moment decay
    double beta2 = 0.999;
    int64_t batch_size = 12;
    int64_t epochs = 100;
    int64_t n_frames = 11;
    int64_t resolution = 256;
    std::string cond_mode = "neutral_head";
    bool remove_ego_bg = true;
    bool use_perceptual = true;
    std::string extractor_id = "face_features";
    uint64_t seed = 1;
    int64_t train_frames = 7500;  // cap on the training split; 0 = whole split
    double lambda1 = 10.0;
    double lambda2 = 0.0025;
    int64_t d_depth = 4;
    int64_t d_base_channels = 64;

    void validate() const;
    std::string canonical_text() const;  // stable key=value dump used for hashing
    uint64_t config_hash() const;
};

nn::GeneratorConfig generator_config(const TrainConfig& cfg);
nn::DiscriminatorConfig discriminator_config(const TrainConfig& cfg);

struct ModelCheckpoint {
    int version = 1;
    TrainConfig config;
    uint64_t config_hash = 0;
    int64_t epoch = -1;
    double val_score = 0;
    std::vector<Tensor<float>> g_params;
    std::vector<Tensor<float>> d_params;
    // optimizer state at the selected epoch
    std::vector<Tensor<float>> g_adam_m, g_adam_v;
    std::vector<Tensor<float>> d_adam_m, d_adam_v;
    int64_t adam_step_g = 0, adam_step_d = 0;

    uint64_t params_hash() const;
};

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::string& path);

// copies checkpoint parameters into freshly built models
void load_generator(const ModelCheckpoint& ckpt, nn::Generator<float>& g);
void load_discriminator(const ModelCheckpoint& ckpt, nn::Discriminator<float>& d);

template <typename T>
class Adam {
  public:
    Adam(double lr, double beta1, double beta2, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<nn::Parameter<T>*>& params);
    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }

  private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

struct EpochStats {
    int64_t epoch = 0;
    double loss_d = 0;
    double loss_g = 0;       // full generator objective, training mean
    double val_score = 0;    // generator objective on the validation split
    double val_content = 0;  // content-only validation error, diagnostic
};

struct TrainResult {
    ModelCheckpoint best;
    std::vector<EpochStats> history;
};

using ProgressFn = std::function<void(const EpochStats&)>;

// conditioning provider for a pose track under the given config
ConditioningProvider make_conditioning(const TrainConfig& cfg, const synth::SceneConfig& scene,
                                       std::vector<RigidPose> pose_track);

TrainResult train(const PairedSequence& raw_seq, const TrainConfig& cfg,
                  const std::string& out_dir = "", const ProgressFn& progress = nullptr);

// single-toggle ablations of the training configuration
struct AblationPlan {
    TrainConfig config;
    std::string tag;
};
AblationPlan ablate_config(const TrainConfig& base, const std::string& mode);
const std::vector<std::string>& ablation_modes();

TrainResult ablate(const PairedSequence& seq, const TrainConfig& base, const std::string& mode,
                   const std::string& out_dir = "", const ProgressFn& progress = nullptr);

// generator objective (and content-only error) on a window sampler without
// touching any parameter
struct EvalObjective {
    double total = 0;
    double content_only = 0;
};
EvalObjective evaluate_objective(nn::Generator<float>& g, nn::Discriminator<float>& d,
                                 nn::FeatureExtractor<float>* extractor,
                                 const WindowSampler& sampler, const TrainConfig& cfg);

}  // namespace ego2front::train
