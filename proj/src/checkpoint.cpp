#include <cstring>
#include <fstream>

#include "ego2front/trainer.hpp"
#include "json.hpp"

namespace ego2front::train {

// Checkpoint file: 8-byte magic, u32 JSON header length, JSON header (config,
// hashes, tensor table), then raw little-endian float32 tensor data.
namespace {

constexpr char kMagic[8] = {'E', '2', 'F', 'C', 'K', 'P', 'T', '\x01'};

nlohmann::json config_to_json(const TrainConfig& c) {
    return {
        {"lr", c.lr},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"batch_size", c.batch_size},
        {"epochs", c.epochs},
        {"n_frames", c.n_frames},
        {"resolution", c.resolution},
        {"cond_mode", c.cond_mode},
        {"remove_ego_bg", c.remove_ego_bg},
        {"use_perceptual", c.use_perceptual},
        {"extractor_id", c.extractor_id},
        {"seed", c.seed},
        {"train_frames", c.train_frames},
        {"lambda1", c.lambda1},
        {"lambda2", c.lambda2},
        {"d_depth", c.d_depth},
        {"d_base_channels", c.d_base_channels},
    };
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lr = j.at("lr");
    c.beta1 = j.at("beta1");
    c.beta2 = j.at("beta2");
    c.batch_size = j.at("batch_size");
    c.epochs = j.at("epochs");
    c.n_frames = j.at("n_frames");
    c.resolution = j.at("resolution");
    c.cond_mode = j.at("cond_mode");
    c.remove_ego_bg = j.at("remove_ego_bg");
    c.use_perceptual = j.at("use_perceptual");
    c.extractor_id = j.at("extractor_id");
    c.seed = j.at("seed");
    c.train_frames = j.at("train_frames");
    c.lambda1 = j.at("lambda1");
    c.lambda2 = j.at("lambda2");
    c.d_depth = j.at("d_depth");
    c.d_base_channels = j.at("d_base_channels");
    return c;
}

nlohmann::json tensor_table(const std::vector<Tensor<float>>& ts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : ts) arr.push_back({t.b, t.c, t.h, t.w});
    return arr;
}

void write_tensors(std::ofstream& out, const std::vector<Tensor<float>>& ts) {
    for (const auto& t : ts)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

std::vector<Tensor<float>> read_tensors(std::ifstream& in, const nlohmann::json& table) {
    std::vector<Tensor<float>> ts;
    for (const auto& shape : table) {
        Tensor<float> t(shape[0].get<int64_t>(), shape[1].get<int64_t>(),
                        shape[2].get<int64_t>(), shape[3].get<int64_t>());
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        require(in.good(), ErrorCode::IoError, "checkpoint: truncated tensor data");
        ts.push_back(std::move(t));
    }
    return ts;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
    nlohmann::json header;
    header["version"] = ckpt.version;
    header["config"] = config_to_json(ckpt.config);
    header["config_hash"] = hash_hex(ckpt.config_hash);
    header["epoch"] = ckpt.epoch;
    header["val_score"] = ckpt.val_score;
    header["adam_step_g"] = ckpt.adam_step_g;
    header["adam_step_d"] = ckpt.adam_step_d;
    header["g_params"] = tensor_table(ckpt.g_params);
    header["d_params"] = tensor_table(ckpt.d_params);
    header["g_adam_m"] = tensor_table(ckpt.g_adam_m);
    header["g_adam_v"] = tensor_table(ckpt.g_adam_v);
    header["d_adam_m"] = tensor_table(ckpt.d_adam_m);
    header["d_adam_v"] = tensor_table(ckpt.d_adam_v);
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write checkpoint " + path);
    out.write(kMagic, 8);
    uint32_t len = static_cast<uint32_t>(hs.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_tensors(out, ckpt.g_params);
    write_tensors(out, ckpt.d_params);
    write_tensors(out, ckpt.g_adam_m);
    write_tensors(out, ckpt.g_adam_v);
    write_tensors(out, ckpt.d_adam_m);
    write_tensors(out, ckpt.d_adam_v);
    require(out.good(), ErrorCode::IoError, "checkpoint write failed: " + path);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoError, "cannot read checkpoint " + path);
    char magic[8];
    in.read(magic, 8);
    require(in.good() && std::memcmp(magic, kMagic, 8) == 0, ErrorCode::ConfigMismatch,
            "not an ego2front checkpoint: " + path);
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string hs(len, '\0');
    in.read(hs.data(), len);
    require(in.good(), ErrorCode::IoError, "checkpoint: truncated header");
    nlohmann::json header = nlohmann::json::parse(hs);

    ModelCheckpoint ckpt;
    ckpt.version = header.at("version");
    require(ckpt.version == 1, ErrorCode::ConfigMismatch,
            "unsupported checkpoint version " + std::to_string(ckpt.version));
    ckpt.config = config_from_json(header.at("config"));
    uint64_t stored_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
    require(stored_hash == ckpt.config.config_hash(), ErrorCode::ConfigMismatch,
            "checkpoint config hash mismatch (file corrupted or config schema changed)");
    ckpt.config_hash = stored_hash;
    ckpt.epoch = header.at("epoch");
    ckpt.val_score = header.at("val_score");
    ckpt.adam_step_g = header.at("adam_step_g");
    ckpt.adam_step_d = header.at("adam_step_d");
    ckpt.g_params = read_tensors(in, header.at("g_params"));
    ckpt.d_params = read_tensors(in, header.at("d_params"));
    ckpt.g_adam_m = read_tensors(in, header.at("g_adam_m"));
    ckpt.g_adam_v = read_tensors(in, header.at("g_adam_v"));
    ckpt.d_adam_m = read_tensors(in, header.at("d_adam_m"));
    ckpt.d_adam_v = read_tensors(in, header.at("d_adam_v"));
    return ckpt;
}

namespace {

void copy_params(const std::vector<Tensor<float>>& src,
                 const std::vector<nn::Parameter<float>*>& dst, const std::string& what) {
    require(src.size() == dst.size(), ErrorCode::ConfigMismatch,
            "checkpoint " + what + ": parameter count mismatch");
    for (size_t i = 0; i < src.size(); ++i) {
        require(src[i].same_shape(dst[i]->value), ErrorCode::ConfigMismatch,
                "checkpoint " + what + ": shape mismatch at tensor " + std::to_string(i));
        dst[i]->value = src[i];
    }
}

}  // namespace

void load_generator(const ModelCheckpoint& ckpt, nn::Generator<float>& g) {
    copy_params(ckpt.g_params, g.params(), "generator");
}

void load_discriminator(const ModelCheckpoint& ckpt, nn::Discriminator<float>& d) {
    copy_params(ckpt.d_params, d.params(), "discriminator");
}

}  // namespace ego2front::train
